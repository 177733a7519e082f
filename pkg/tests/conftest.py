"""Shared oracles and generators.

The exact singular-space oracle works over the rationals with sympy, so it
shares no numerical code with the library.
"""

from __future__ import annotations

import numpy as np
import pytest
import sympy as sp

from wfprop.subspaces import SubspaceBasis
from wfprop.symplectic import QuadraticHamiltonian


def sym_J(d):
    return sp.Matrix(sp.BlockMatrix([[sp.zeros(d), sp.eye(d)], [-sp.eye(d), sp.zeros(d)]]))


def rational_symplectic(rng, d, n_factors=3):
    """Product of rational shears and unimodular dilations (exactly symplectic)."""
    chi = sp.eye(2 * d)
    for _ in range(n_factors):
        kind = rng.integers(3)
        if kind == 0:
            B = sp.Matrix(d, d, lambda i, j: 0)
            for i in range(d):
                for j in range(i, d):
                    v = sp.Rational(int(rng.integers(-3, 4)), int(rng.integers(1, 3)))
                    B[i, j] = B[j, i] = v
            f = sp.Matrix(sp.BlockMatrix([[sp.eye(d), B], [sp.zeros(d), sp.eye(d)]]))
        elif kind == 1:
            C = sp.Matrix(d, d, lambda i, j: 0)
            for i in range(d):
                for j in range(i, d):
                    v = sp.Rational(int(rng.integers(-3, 4)), int(rng.integers(1, 3)))
                    C[i, j] = C[j, i] = v
            f = sp.Matrix(sp.BlockMatrix([[sp.eye(d), sp.zeros(d)], [C, sp.eye(d)]]))
        else:
            A = sp.eye(d)
            if d > 1:
                i, j = rng.choice(d, 2, replace=False)
                A[i, j] = int(rng.integers(-2, 3))
            f = sp.Matrix(sp.BlockMatrix([[A, sp.zeros(d)], [sp.zeros(d), A.inv().T]]))
        chi = chi * f
    assert chi.T * sym_J(d) * chi == sym_J(d)
    return chi


def _rand_rat(rng, lo=-3, hi=4):
    return sp.Rational(int(rng.integers(lo, hi)), int(rng.integers(1, 4)))


def rational_hamiltonian(rng, d):
    """Exact (Q_re, Q_im) with Re Q PSD and a designed singular space.

    A symplectic block of dimension ``d_b`` carries a purely imaginary form
    (so it lies in S); the remaining block gets a random PSD real part of
    random rank. The whole form is then conjugated by a rational symplectic
    matrix.
    """
    d_b = int(rng.integers(0, d + 1))
    d_a = d - d_b
    n = 2 * d
    Qr = sp.zeros(n)
    Qi = sp.zeros(n)
    ia = [i for i in range(d_a)] + [d + i for i in range(d_a)]
    ib = [d_a + i for i in range(d_b)] + [d + d_a + i for i in range(d_b)]
    if d_a:
        k = int(rng.integers(0, 2 * d_a + 1))
        Am = sp.Matrix(k, 2 * d_a, lambda i, j: _rand_rat(rng))
        Ra = Am.T * Am
        Ia = sp.Matrix(2 * d_a, 2 * d_a, lambda i, j: 0)
        for i in range(2 * d_a):
            for j in range(i, 2 * d_a):
                Ia[i, j] = Ia[j, i] = _rand_rat(rng)
        for a, ii in enumerate(ia):
            for b, jj in enumerate(ia):
                Qr[ii, jj] = Ra[a, b]
                Qi[ii, jj] = Ia[a, b]
    if d_b:
        for a, ii in enumerate(ib):
            for b, jj in enumerate(ib):
                if a <= b:
                    v = _rand_rat(rng)
                    Qi[ii, jj] = Qi[jj, ii] = v
    chi = rational_symplectic(rng, d)
    return chi.T * Qr * chi, chi.T * Qi * chi


def exact_singular_space(Qr: sp.Matrix, Qi: sp.Matrix) -> sp.Matrix:
    """Basis (columns) of S over Q via sympy nullspace."""
    d = Qr.shape[0] // 2
    J = sym_J(d)
    Fr, Fi = J * Qr, J * Qi
    blocks = []
    P = sp.eye(2 * d)
    for _ in range(2 * d):
        blocks.append(Fr * P)
        P = Fi * P
    C = sp.Matrix.vstack(*blocks)
    ns = C.nullspace()
    if not ns:
        return sp.zeros(2 * d, 0)
    return sp.Matrix.hstack(*ns)


def to_float(M: sp.Matrix) -> np.ndarray:
    return np.array(M.tolist(), dtype=float).reshape(M.shape)


def hamiltonian_from_exact(Qr, Qi) -> QuadraticHamiltonian:
    R, I = to_float(Qr), to_float(Qi)
    return QuadraticHamiltonian(R.shape[0] // 2, R + 1j * I)


def random_hamiltonian(rng, d, norm=0.5, real_rank=None) -> QuadraticHamiltonian:
    """Float Q with Re Q PSD (random rank), symmetric Im Q, and ``||Q||_2 = norm``.

    The normalization keeps ``||exp(-2itF)|| <= exp(4 norm)`` on t in [0, 2],
    so absolute tolerances on the symplectic and positivity defects mean the
    same thing across the suite.
    """
    n = 2 * d
    k = int(rng.integers(0, n + 1)) if real_rank is None else real_rank
    A = rng.normal(size=(k, n))
    B = rng.normal(size=(n, n))
    Q = A.T @ A + 1j * (B + B.T) / 2
    return QuadraticHamiltonian(d, norm * Q / np.linalg.norm(Q, 2))


def random_real_symplectic(rng, d, n_factors=4) -> np.ndarray:
    """Product of random shears and dilations."""
    T = np.eye(2 * d)
    for _ in range(n_factors):
        S = rng.normal(size=(d, d))
        S = (S + S.T) / 2
        kind = rng.integers(3)
        if kind == 0:
            f = np.block([[np.eye(d), S], [np.zeros((d, d)), np.eye(d)]])
        elif kind == 1:
            f = np.block([[np.eye(d), np.zeros((d, d))], [S, np.eye(d)]])
        else:
            A = np.eye(d) + 0.3 * rng.normal(size=(d, d))
            f = np.block([[A, np.zeros((d, d))], [np.zeros((d, d)), np.linalg.inv(A).T]])
        T = T @ f
    return T


def random_subspace(rng, n, k) -> SubspaceBasis:
    return SubspaceBasis.span(rng.normal(size=(n, k)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)



# acceptance criterion number -> PASS/FAIL line, printed in the terminal summary
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
