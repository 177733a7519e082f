"""Hamilton maps, singular spaces and propagator matrices of quadratic forms.

Conventions: phase-space vectors are ordered ``(x, xi)``, the quadratic form
is ``q(X) = <X, Q X>`` with ``Q`` complex symmetric and ``Re Q >= 0``, the
Hamilton map is ``F = J Q`` and the propagator ``exp(-t q^w)`` corresponds
to the complex symplectic matrix ``T(t) = exp(-2 i t F)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .subspaces import RANK_TOL, ConeSet, SubspaceBasis, null_space, stack_kernel


class InvalidHamiltonian(ValueError):
    """Q is not symmetric or its real part is not positive semidefinite."""


def symplectic_J(d: int) -> np.ndarray:
    """The standard matrix ``[[0, I], [-I, 0]]`` of size 2d."""
    J = np.zeros((2 * d, 2 * d))
    J[:d, d:] = np.eye(d)
    J[d:, :d] = -np.eye(d)
    return J


def sigma(X, Y, J=None):
    """Bilinear symplectic form ``<J X, Y>`` (no conjugation)."""
    X, Y = np.asarray(X), np.asarray(Y)
    if J is None:
        J = symplectic_J(X.shape[0] // 2)
    return (J @ X) @ Y


@dataclass(frozen=True)
class QuadraticHamiltonian:
    d: int
    Q: np.ndarray

    def __post_init__(self):
        Q = np.asarray(self.Q, dtype=complex)
        if Q.shape != (2 * self.d, 2 * self.d):
            raise InvalidHamiltonian(f"Q must be {2 * self.d}x{2 * self.d}, got {Q.shape}")
        if np.max(np.abs(Q - Q.T)) > 1e-12:
            raise InvalidHamiltonian("Q is not symmetric")
        re = Q.real
        lam = np.linalg.eigvalsh((re + re.T) / 2)[0]
        if lam < -1e-10:
            raise InvalidHamiltonian(f"Re Q has eigenvalue {lam:.3e} < 0")
        Q.setflags(write=False)
        object.__setattr__(self, "Q", Q)

    @classmethod
    def from_parts(cls, Q_re, Q_im=None) -> "QuadraticHamiltonian":
        Q_re = np.asarray(Q_re, dtype=float)
        Q = Q_re + 1j * (np.zeros_like(Q_re) if Q_im is None else np.asarray(Q_im, dtype=float))
        return cls(Q.shape[0] // 2, Q)

    # common examples, d = 1
    @classmethod
    def heat(cls) -> "QuadraticHamiltonian":
        """q = xi^2."""
        return cls(1, np.diag([0.0, 1.0]))

    @classmethod
    def free_particle(cls) -> "QuadraticHamiltonian":
        """q = i xi^2."""
        return cls(1, np.diag([0.0, 1.0j]))

    @classmethod
    def harmonic_oscillator(cls) -> "QuadraticHamiltonian":
        """q = i (x^2 + xi^2)."""
        return cls(1, 1j * np.eye(2))

    def blocks(self):
        """``(Q_xx, Q_xxi, Q_xixi)``."""
        d = self.d
        return self.Q[:d, :d], self.Q[:d, d:], self.Q[d:, d:]

    def __call__(self, X):
        X = np.asarray(X)
        return X @ self.Q @ X

    def to_json(self) -> dict:
        return {"d": self.d, "Q_re": self.Q.real.tolist(), "Q_im": self.Q.imag.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "QuadraticHamiltonian":
        Q_re = np.asarray(obj["Q_re"], dtype=float)
        Q_im = np.asarray(obj.get("Q_im", np.zeros_like(Q_re)), dtype=float)
        d = int(obj["d"])
        if Q_re.shape != (2 * d, 2 * d) or Q_im.shape != Q_re.shape:
            raise InvalidHamiltonian("Q_re/Q_im shapes do not match d")
        return cls(d, Q_re + 1j * Q_im)


@dataclass(frozen=True)
class HamiltonMap:
    F: np.ndarray
    J: np.ndarray
    source: QuadraticHamiltonian

    @property
    def d(self) -> int:
        return self.source.d


def hamilton_map(H: QuadraticHamiltonian) -> HamiltonMap:
    """``F = J Q``."""
    J = symplectic_J(H.d)
    F = J @ H.Q
    return HamiltonMap(F, J, H)


def singular_space(F: HamiltonMap, tol: float = RANK_TOL) -> SubspaceBasis:
    """Real subspace ``S = cap_j Ker[Re F (Im F)^j]``, j = 0..2d-1.

    Each constraint block is normalized before stacking so that the growing
    powers of ``Im F`` do not swamp the relative threshold.
    """
    ReF, ImF = F.F.real, F.F.imag
    blocks, P = [], np.eye(ReF.shape[0])
    for _ in range(ReF.shape[0]):
        blocks.append(ReF @ P)
        P = ImF @ P
    return stack_kernel(blocks, tol)


@dataclass(frozen=True)
class PropagatorMatrix:
    T: np.ndarray
    t: float
    source: HamiltonMap


def propagator_matrix(F: HamiltonMap, t: float) -> PropagatorMatrix:
    """``T = exp(-2 i t F)`` (scaling and squaring, Pade 13 core)."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    n = F.F.shape[0]
    if t == 0:
        T = np.eye(n, dtype=complex)
    else:
        T = scipy.linalg.expm(-2j * t * F.F)
    return PropagatorMatrix(T, float(t), F)


def symplectic_defect(T, J=None) -> float:
    """``max |T^t J T - J|`` (complex bilinear, no conjugation)."""
    T = np.asarray(T)
    if J is None:
        J = symplectic_J(T.shape[0] // 2)
    return float(np.max(np.abs(T.T @ J @ T - J)))


@dataclass(frozen=True)
class PositivityReport:
    is_symplectic: bool
    is_positive: bool
    min_eig: float
    hermitian_defect: float


def positivity_form(T) -> np.ndarray:
    """Hermitian matrix G with ``X^H G X = i(sigma(conj(TX), TX) - sigma(conj X, X))``."""
    T = np.asarray(T, dtype=complex)
    J = symplectic_J(T.shape[0] // 2)
    return 1j * (T.conj().T @ J.T @ T - J.T)


def check_positive_symplectic(T, tol: float = 1e-10) -> PositivityReport:
    """Test symplecticity over C and positivity of the twisted graph of ``T``.

    Raises ``RuntimeError`` if the assembled form is not Hermitian, which
    can only come from an indexing error, never from ``T`` itself.
    """
    if isinstance(T, PropagatorMatrix):
        T = T.T
    T = np.asarray(T, dtype=complex)
    scale = max(1.0, float(np.linalg.norm(T, 2)) ** 2)
    G = positivity_form(T)
    herm = float(np.max(np.abs(G - G.conj().T)))
    if herm > tol * scale:
        raise RuntimeError(f"positivity form not Hermitian (defect {herm:.3e})")
    G = (G + G.conj().T) / 2
    lam = float(np.linalg.eigvalsh(G)[0])
    return PositivityReport(
        is_symplectic=symplectic_defect(T) <= 1e-8 * scale,
        is_positive=lam >= -tol,
        min_eig=lam,
        hermitian_defect=herm,
    )


def kernel_imag(T, tol: float = RANK_TOL) -> SubspaceBasis:
    """Real kernel of ``Im T``."""
    if isinstance(T, PropagatorMatrix):
        T = T.T
    T = np.asarray(T)
    ImT = T.imag if np.iscomplexobj(T) else np.zeros_like(T)
    return SubspaceBasis(T.shape[1], null_space(ImT, tol))


@dataclass(frozen=True)
class PropagatedCones:
    sharp: ConeSet
    coarse: ConeSet
    S: SubspaceBasis
    ker_im_T: SubspaceBasis


def predict_wf_propagated(F: HamiltonMap, t: float, cone: ConeSet) -> PropagatedCones:
    """Exact cones containing the wave front set of ``exp(-t q^w) u``.

    ``sharp = (exp(2t Im F)(cone & S)) & S`` and
    ``coarse = Re T (cone & Ker Im T)``; the first is contained in the second.
    """
    if not isinstance(cone, ConeSet):
        raise TypeError("an exact ConeSet is required for prediction")
    n = F.F.shape[0]
    if cone.n != n:
        raise ValueError(f"cone lives in R^{cone.n}, expected R^{n}")
    if t <= 0:
        raise ValueError("the propagation corollary is stated for t > 0")
    S = singular_space(F)
    flow = scipy.linalg.expm(2 * t * F.F.imag)
    sharp = cone.intersect(S).image(flow).intersect(S)
    T = propagator_matrix(F, t)
    K = kernel_imag(T)
    coarse = cone.intersect(K).image(T.T.real)
    return PropagatedCones(sharp=sharp, coarse=coarse, S=S, ker_im_T=K)


def twisted_graph(T) -> ConeSet:
    """``{(x, y, xi, -eta) : (x, xi) = T (y, eta)}`` for real ``T``."""
    T = np.asarray(T, dtype=float)
    d = T.shape[0] // 2
    basis = np.zeros((4 * d, 2 * d))
    TX, TXi = T[:d], T[d:]
    basis[:d] = TX
    basis[d:2 * d, :d] = np.eye(d)
    basis[2 * d:3 * d] = TXi
    basis[3 * d:, d:] = -np.eye(d)
    return ConeSet.of(4 * d, [SubspaceBasis.span(basis)])


def compose_relation(relation: ConeSet, cone: ConeSet) -> ConeSet:
    """``{(x, xi) : exists (y, eta) in cone with (x, y, xi, -eta) in relation}``.

    Relation vectors are ordered ``(x, y, xi, zeta)`` with ``zeta = -eta``.
    Cone members are treated as full subspaces, so kernel components with
    ``(y, eta) = 0`` are not filtered out.
    """
    d = cone.n // 2
    if relation.n != 4 * d:
        raise ValueError("relation must live in R^{4d} for a cone in R^{2d}")
    out = []
    for R in relation.members:
        Rb = R.B
        Rx, Ry, Rxi, Rz = Rb[:d], Rb[d:2 * d], Rb[2 * d:3 * d], Rb[3 * d:]
        for W in cone.members:
            Wy, Weta = W.B[:d], W.B[d:]
            # unknowns (a, c): Ry a = Wy c and Rz a = -Weta c
            C = np.block([[Ry, -Wy], [Rz, Weta]])
            N = null_space(C)
            if N.shape[1] == 0:
                continue
            a = N[:R.dim]
            img = np.vstack([Rx @ a, Rxi @ a])
            out.append(SubspaceBasis.span(img))
    return ConeSet.of(2 * d, out)
