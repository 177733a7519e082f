import numpy as np
import pytest
import scipy.linalg
import sympy as sp
from hypothesis import given, settings, strategies as st

from conftest import (
    exact_singular_space,
    hamiltonian_from_exact,
    random_hamiltonian,
    random_real_symplectic,
    random_subspace,
    rational_hamiltonian,
    to_float,
)
from wfprop.subspaces import ConeSet, SubspaceBasis, principal_angles
from wfprop.symplectic import (
    InvalidHamiltonian,
    QuadraticHamiltonian,
    check_positive_symplectic,
    compose_relation,
    hamilton_map,
    kernel_imag,
    positivity_form,
    predict_wf_propagated,
    propagator_matrix,
    singular_space,
    symplectic_defect,
    symplectic_J,
    twisted_graph,
)

XI_AXIS = ConeSet.of(2, [SubspaceBasis.span([0.0, 1.0])])
X_AXIS = ConeSet.of(2, [SubspaceBasis.span([1.0, 0.0])])


# -- validation and Hamilton map ------------------------------------------------

def test_rejects_nonsymmetric_q():
    with pytest.raises(InvalidHamiltonian):
        QuadraticHamiltonian(1, np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_rejects_indefinite_real_part():
    with pytest.raises(InvalidHamiltonian):
        QuadraticHamiltonian(1, np.diag([1.0, -1e-6]))


def test_hamilton_map_examples():
    assert np.all(hamilton_map(QuadraticHamiltonian(1, np.zeros((2, 2)))).F == 0)
    F = hamilton_map(QuadraticHamiltonian.heat()).F
    np.testing.assert_array_equal(F, [[0, 1], [0, 0]])
    F = hamilton_map(QuadraticHamiltonian.harmonic_oscillator()).F
    np.testing.assert_allclose(F, 1j * symplectic_J(1))


def test_hamilton_map_invariants(rng):
    for d in (1, 2, 3):
        H = random_hamiltonian(rng, d)
        F = hamilton_map(H)
        np.testing.assert_allclose(F.F, F.J @ H.Q, atol=0)
        np.testing.assert_allclose(F.J @ F.F, -H.Q, atol=1e-14)


def test_json_roundtrip(rng):
    H = random_hamiltonian(rng, 2)
    H2 = QuadraticHamiltonian.from_json(H.to_json())
    np.testing.assert_array_equal(H.Q, H2.Q)


# -- singular space -------------------------------------------------------------

def test_singular_space_trivial_and_heat():
    S = singular_space(hamilton_map(QuadraticHamiltonian.harmonic_oscillator()))
    assert S.dim == 2
    S = singular_space(hamilton_map(QuadraticHamiltonian.heat()))
    assert S.same_as(SubspaceBasis.span([1.0, 0.0]))


def test_singular_space_d2_mixed():
    # q = xi1^2 + i (x2^2 + xi2^2); independent exact oracle over Q
    Qr = sp.diag(0, 0, 1, 0)
    Qi = sp.diag(0, 1, 0, 1)
    exact = to_float(exact_singular_space(Qr, Qi))
    S = singular_space(hamilton_map(hamiltonian_from_exact(Qr, Qi)))
    E = SubspaceBasis.span(exact)
    assert S.dim == E.dim == 3
    assert np.max(principal_angles(S, E)) <= 1e-8


@pytest.mark.parametrize("seed", range(6))
def test_singular_space_matches_rational_oracle(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 4))
    Qr, Qi = rational_hamiltonian(rng, d)
    exact = exact_singular_space(Qr, Qi)
    S = singular_space(hamilton_map(hamiltonian_from_exact(Qr, Qi)))
    assert S.dim == exact.shape[1]
    if S.dim:
        assert np.max(principal_angles(S, SubspaceBasis.span(to_float(exact)))) <= 1e-8


def test_flow_preserves_singular_space(rng):
    for _ in range(10):
        d = int(rng.integers(1, 4))
        Qr, Qi = rational_hamiltonian(rng, d)
        F = hamilton_map(hamiltonian_from_exact(Qr, Qi))
        S = singular_space(F)
        if S.dim == 0:
            continue
        for t in (0.3, 1.0):
            img = S.image(scipy.linalg.expm(2 * t * F.F.imag))
            assert img.same_as(S, 1e-8)


# -- propagator matrix ----------------------------------------------------------

def test_propagator_at_zero_is_exact_identity(rng):
    T = propagator_matrix(hamilton_map(random_hamiltonian(rng, 2)), 0.0).T
    assert np.array_equal(T, np.eye(4))


@pytest.mark.parametrize("t", [0.1, 0.5, 1.7])
def test_nilpotent_examples(t):
    # series terminates after the linear term
    T = propagator_matrix(hamilton_map(QuadraticHamiltonian.free_particle()), t).T
    np.testing.assert_allclose(T, [[1, 2 * t], [0, 1]], atol=1e-14)
    T = propagator_matrix(hamilton_map(QuadraticHamiltonian.heat()), t).T
    np.testing.assert_allclose(T, [[1, -2j * t], [0, 1]], atol=1e-14)


def test_harmonic_oscillator_is_rotation():
    F = hamilton_map(QuadraticHamiltonian.harmonic_oscillator())
    for t in (0.2, np.pi / 4, 1.3):
        c, s = np.cos(2 * t), np.sin(2 * t)
        np.testing.assert_allclose(propagator_matrix(F, t).T, [[c, s], [-s, c]], atol=1e-13)


def test_negative_time_rejected():
    with pytest.raises(ValueError):
        propagator_matrix(hamilton_map(QuadraticHamiltonian.heat()), -1.0)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10 ** 6), t=st.floats(0, 2), d=st.integers(1, 3))
def test_symplectic_invariant(seed, t, d):
    rng = np.random.default_rng(seed)
    T = propagator_matrix(hamilton_map(random_hamiltonian(rng, d)), t).T
    assert symplectic_defect(T) <= 1e-8


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10 ** 6), t1=st.floats(0, 1), t2=st.floats(0, 1))
def test_semigroup(seed, t1, t2):
    rng = np.random.default_rng(seed)
    F = hamilton_map(random_hamiltonian(rng, int(rng.integers(1, 4))))
    T12 = propagator_matrix(F, t1 + t2).T
    np.testing.assert_allclose(T12, propagator_matrix(F, t1).T @ propagator_matrix(F, t2).T, atol=1e-8)


# -- positivity -----------------------------------------------------------------

def test_positivity_of_real_symplectic_is_zero(rng):
    T = random_real_symplectic(rng, 2)
    rep = check_positive_symplectic(T)
    assert rep.is_symplectic and rep.is_positive
    assert abs(rep.min_eig) <= 1e-10


def test_heat_forward_positive_backward_not():
    F = hamilton_map(QuadraticHamiltonian.heat())
    T = propagator_matrix(F, 0.5).T
    # G by hand: T = [[1, -i], [0, 1]] gives G = diag(0, 2)
    np.testing.assert_allclose(positivity_form(T), np.diag([0, 2.0]), atol=1e-14)
    assert check_positive_symplectic(T).is_positive
    back = check_positive_symplectic(scipy.linalg.expm(2j * 0.5 * F.F))
    assert back.is_symplectic and not back.is_positive
    assert back.min_eig == pytest.approx(-2.0)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10 ** 6), t=st.floats(0, 2))
def test_random_propagators_are_positive(seed, t):
    rng = np.random.default_rng(seed)
    F = hamilton_map(random_hamiltonian(rng, int(rng.integers(1, 4))))
    rep = check_positive_symplectic(propagator_matrix(F, t))
    assert rep.is_symplectic and rep.min_eig >= -1e-10


def test_non_hermitian_form_is_reported():
    # a non-Hermitian form can only come from an indexing error; emulate one
    import wfprop.symplectic as sy
    orig = sy.positivity_form
    try:
        sy.positivity_form = lambda T: np.array([[0, 1.0], [0, 0]], dtype=complex)
        with pytest.raises(RuntimeError):
            sy.check_positive_symplectic(np.eye(2))
    finally:
        sy.positivity_form = orig


# -- kernels and predictions ----------------------------------------------------

def test_kernel_imag_examples():
    assert kernel_imag(np.eye(2)).dim == 2
    T = propagator_matrix(hamilton_map(QuadraticHamiltonian.heat()), 0.7)
    assert kernel_imag(T).same_as(SubspaceBasis.span([1.0, 0.0]))
    assert kernel_imag(propagator_matrix(hamilton_map(QuadraticHamiltonian.free_particle()), 0.7)).dim == 2


def test_predict_heat():
    F = hamilton_map(QuadraticHamiltonian.heat())
    p = predict_wf_propagated(F, 0.3, XI_AXIS)
    assert p.sharp.is_empty
    p = predict_wf_propagated(F, 0.3, X_AXIS)
    assert p.sharp.same_as(X_AXIS)
    assert p.coarse.same_as(X_AXIS)


def test_predict_oscillator_rotates(rng):
    F = hamilton_map(QuadraticHamiltonian.harmonic_oscillator())
    cone = ConeSet.of(2, [random_subspace(rng, 2, 1)])
    t = 0.4
    p = predict_wf_propagated(F, t, cone)
    assert p.S.dim == 2
    expect = cone.image(scipy.linalg.expm(2 * t * F.F.imag))
    assert p.sharp.same_as(expect)


def test_predict_rejects_bad_input():
    F = hamilton_map(QuadraticHamiltonian.heat())
    with pytest.raises(TypeError):
        predict_wf_propagated(F, 0.3, [np.array([0.0, 1.0])])
    with pytest.raises(ValueError):
        predict_wf_propagated(F, 0.0, X_AXIS)


def test_sharp_inside_coarse(rng):
    for _ in range(25):
        d = int(rng.integers(1, 4))
        Qr, Qi = rational_hamiltonian(rng, d)
        F = hamilton_map(hamiltonian_from_exact(Qr, Qi))
        cone = ConeSet.of(2 * d, [random_subspace(rng, 2 * d, int(rng.integers(1, 2 * d + 1))) for _ in range(2)])
        cone = cone.union(ConeSet.of(2 * d, [singular_space(F)]))
        p = predict_wf_propagated(F, float(rng.uniform(0.1, 1.5)), cone)
        assert p.coarse.contains_cone(p.sharp, 1e-7)


# -- relations ------------------------------------------------------------------

def test_compose_identity_graph(rng):
    for d in (1, 2):
        cone = ConeSet.of(2 * d, [random_subspace(rng, 2 * d, k) for k in range(1, 2 * d)])
        assert compose_relation(twisted_graph(np.eye(2 * d)), cone).same_as(cone)


def test_compose_twisted_graph(rng):
    for _ in range(10):
        d = int(rng.integers(1, 3))
        T = random_real_symplectic(rng, d)
        cone = ConeSet.of(2 * d, [random_subspace(rng, 2 * d, int(rng.integers(1, 2 * d)))])
        got = compose_relation(twisted_graph(T), cone)
        assert got.max_mismatch_angle(cone.image(T)) <= 1e-8


def test_compose_empty():
    assert compose_relation(ConeSet.empty(4), X_AXIS).is_empty
    assert compose_relation(twisted_graph(np.eye(2)), ConeSet.empty(2)).is_empty
