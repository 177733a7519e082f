"""Oscillatory integrals with quadratic phase ``p(x, theta) = <(x, theta), P (x, theta)>``.

``u(x) = int exp(i p(x, theta)) d theta`` is well defined when ``Im P >= 0``
and the rows ``(P_theta_x  P_theta_theta)`` are linearly independent over C.
Its wave front set lies in the real points of the positive Lagrangian

    lambda = {(x, 2(P_xx x + P_x_theta theta)) : P_theta_x x + P_theta_theta theta = 0}.

Two routes compute those real points: directly from ``lambda``, and through
the canonical reduction ``p = <x, R x> + <L theta, x>`` obtained by Gaussian
integration of the theta-directions on which ``P_theta_theta`` is nondegenerate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .subspaces import RANK_TOL, ConeSet, SubspaceBasis, null_space, orth
from .symplectic import symplectic_J


class InvalidPhase(ValueError):
    """Phase matrix violates ``Im P >= 0`` or the rank condition."""


class RouteMismatchError(RuntimeError):
    """Canonical-reduction and direct-Lagrangian predictions disagree."""


@dataclass(frozen=True)
class QuadraticPhase:
    d: int
    N: int
    P: np.ndarray

    def __post_init__(self):
        P = np.atleast_2d(np.asarray(self.P, dtype=complex))
        m = self.d + self.N
        if self.d < 0 or self.N < 0 or P.shape != (m, m):
            raise InvalidPhase(f"P must be {m}x{m}")
        if np.max(np.abs(P - P.T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(P), initial=0.0)):
            raise InvalidPhase("P is not symmetric")
        P = (P + P.T) / 2
        P.setflags(write=False)
        object.__setattr__(self, "P", P)

    @property
    def Pxx(self):
        return self.P[:self.d, :self.d]

    @property
    def Pxt(self):
        return self.P[:self.d, self.d:]

    @property
    def Ptx(self):
        return self.P[self.d:, :self.d]

    @property
    def Ptt(self):
        return self.P[self.d:, self.d:]

    def to_json(self) -> dict:
        return {"d": self.d, "N": self.N, "P_re": self.P.real.tolist(), "P_im": self.P.imag.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "QuadraticPhase":
        d, N = int(obj["d"]), int(obj["N"])
        re = np.asarray(obj["P_re"], dtype=float).reshape(d + N, d + N)
        im = np.asarray(obj.get("P_im", np.zeros_like(re)), dtype=float).reshape(d + N, d + N)
        return cls(d, N, re + 1j * im)


@dataclass(frozen=True)
class PhaseDiagnostics:
    im_min_eig: float
    rank_margin: float
    positive: bool
    independent: bool

    @property
    def ok(self) -> bool:
        return self.positive and self.independent

    def to_json(self) -> dict:
        return {"im_min_eig": self.im_min_eig, "rank_margin": self.rank_margin,
                "condition_im_p_nonneg": self.positive, "condition_rank": self.independent}


def validate_phase(P: QuadraticPhase, tol: float = 1e-10) -> PhaseDiagnostics:
    """Margins for ``Im P >= 0`` and for the rank of ``(P_theta_x  P_theta_theta)``.

    The rank margin is the smallest singular value relative to the largest
    (``inf`` when N = 0, 0 when the rows vanish).
    """
    m = P.d + P.N
    lam = float(np.linalg.eigvalsh(P.P.imag)[0]) if m else 0.0
    if P.N == 0:
        margin = float("inf")
    else:
        s = np.linalg.svd(P.P[P.d:, :], compute_uv=False)
        margin = 0.0 if s[0] == 0 else float(s[-1] / s[0]) if s.size >= P.N else 0.0
    return PhaseDiagnostics(lam, margin, lam >= -tol, margin > tol)


@dataclass(frozen=True)
class CanonicalPhase:
    """``p(x, theta) = <x, R x> + <L theta, x>`` with ``R = Pi R Pi``, ``Pi`` the projector on ``Ker L^t``."""

    R: np.ndarray
    L: np.ndarray
    scale: complex = 1.0
    passes: int = 0

    def __post_init__(self):
        R = np.atleast_2d(np.asarray(self.R, dtype=complex))
        d = R.shape[0]
        L = np.asarray(self.L, dtype=float).reshape(d, -1)
        if L.shape[1] and np.linalg.matrix_rank(L) < L.shape[1]:
            raise InvalidPhase("L must be injective")
        if d and np.linalg.eigvalsh((R.imag + R.imag.T) / 2)[0] < -1e-10:
            raise InvalidPhase("Im R must be positive semidefinite")
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "L", L)

    @property
    def d(self) -> int:
        return self.R.shape[0]

    @property
    def N(self) -> int:
        return self.L.shape[1]


def _ker_projector(L: np.ndarray) -> np.ndarray:
    d = L.shape[0]
    if L.shape[1] == 0:
        return np.eye(d)
    K = null_space(L.T)
    return K @ K.T


def reduce_canonical(P: QuadraticPhase, tol: float = RANK_TOL) -> CanonicalPhase:
    """Eliminate theta-directions one per pass until ``P_theta_theta`` vanishes.

    Each pass rotates theta so its first coordinate is the eigenvector of
    ``Re P_tt`` or ``Im P_tt`` with largest ``|v^t P_tt v|``, completes the
    square in that coordinate and integrates it out:
    ``P <- P'' - w w^t / alpha``, scale ``*= sqrt(pi / (-i alpha))``.
    """
    diag = validate_phase(P)
    if not diag.ok:
        raise InvalidPhase(f"invalid phase: Im P min eig {diag.im_min_eig:.3e}, rank margin {diag.rank_margin:.3e}")
    d = P.d
    M = np.array(P.P)
    scale = 1.0 + 0j
    ref = max(1.0, float(np.max(np.abs(M), initial=0.0)))
    passes = 0
    while M.shape[0] > d:
        Ptt = M[d:, d:]
        if np.max(np.abs(Ptt)) <= tol * ref:
            break
        if passes >= P.d + P.N:
            raise InvalidPhase("reduction did not terminate; rank condition violated within tolerance")
        cands = np.hstack([np.linalg.eigh(Ptt.real)[1], np.linalg.eigh(Ptt.imag)[1]])
        vals = np.abs(np.einsum("ik,ij,jk->k", cands, Ptt, cands))
        v = cands[:, int(np.argmax(vals))]
        n_t = Ptt.shape[0]
        Q, _ = np.linalg.qr(np.column_stack([v, np.eye(n_t)]))
        V = Q[:, :n_t]
        V[:, 0] = v  # fix the sign chosen by QR
        Tm = np.eye(M.shape[0])
        Tm[d:, d:] = V
        M = Tm.T @ M @ Tm
        alpha = M[d, d]
        keep = [i for i in range(M.shape[0]) if i != d]
        w = M[keep, d]
        M = M[np.ix_(keep, keep)] - np.outer(w, w) / alpha
        M = (M + M.T) / 2
        scale *= np.sqrt(np.pi / (-1j * alpha))
        passes += 1
    Pxx, Pxt = M[:d, :d], M[:d, d:]
    if Pxt.size and np.max(np.abs(Pxt.imag)) > 1e-8 * ref:
        raise InvalidPhase("reduced cross block is not real; Im P >= 0 violated within tolerance")
    L = 2 * Pxt.real
    if L.shape[1]:
        L = orth(L)  # only Ran L matters; an orthonormal representative
        if L.shape[1] < Pxt.shape[1]:
            raise InvalidPhase("reduced L is not injective")
    Pi = _ker_projector(L)
    R = Pi @ Pxx @ Pi
    return CanonicalPhase((R + R.T) / 2, L, complex(scale), passes)


def lagrangian_of_phase(P: QuadraticPhase, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal complex basis (2d x d) of ``lambda``.

    Raises ``InvalidPhase`` if the dimension is not d or if ``i sigma(conj X, X)``
    is not positive semidefinite on ``lambda``.
    """
    d, N = P.d, P.N
    if N:
        Z = null_space(P.P[d:, :], tol)
    else:
        Z = np.eye(d, dtype=complex)
    Lam = np.vstack([Z[:d], 2 * (P.Pxx @ Z[:d] + P.Pxt @ Z[d:])])
    Lam = orth(Lam, tol)
    if Lam.shape[1] != d:
        raise InvalidPhase(f"lambda has dimension {Lam.shape[1]} != {d}")
    J = symplectic_J(d)
    G = 1j * Lam.conj().T @ J.T @ Lam
    G = (G + G.conj().T) / 2
    if d and np.linalg.eigvalsh(G)[0] < -1e-10:
        raise InvalidPhase("lambda is not positive")
    return Lam


def real_points(Lam: np.ndarray, tol: float = RANK_TOL) -> SubspaceBasis:
    """Real subspace ``Lam C^k cap R^n`` from the real nullspace of the imaginary parts."""
    Lr, Li = Lam.real, Lam.imag
    N = null_space(np.hstack([Li, Lr]), tol)
    n = Lam.shape[0]
    if N.shape[1] == 0:
        return SubspaceBasis.zero(n)
    return SubspaceBasis.span(np.hstack([Lr, -Li]) @ N, tol)


def real_lagrangian_intersection(c: CanonicalPhase, tol: float = RANK_TOL) -> ConeSet:
    """``{(x, 2 R_r x + L theta) : L^t x = 0, R_i x = 0}``.

    The constraint ``R_i x = 0`` expresses that the imaginary part of the
    fiber coordinate ``2 R x + L theta`` must vanish; with ``R = Pi R Pi``
    it cannot be compensated by ``L theta``.
    """
    d, N = c.d, c.N
    cons = [c.R.imag]
    if N:
        cons.append(c.L.T)
    K = null_space(np.vstack(cons), tol) if d else np.zeros((0, 0))
    cols = []
    if K.shape[1]:
        cols.append(np.vstack([K, 2 * c.R.real @ K]))
    if N:
        cols.append(np.vstack([np.zeros((d, N)), c.L]))
    if not cols:
        return ConeSet.empty(2 * d)
    return ConeSet.of(2 * d, [SubspaceBasis.span(np.hstack(cols), tol)])


def predict_wf_oscillatory(P: QuadraticPhase, angle_tol: float = 1e-8) -> ConeSet:
    """Canonical-route prediction, checked against the direct Lagrangian route."""
    diag = validate_phase(P)
    if not diag.ok:
        raise InvalidPhase(f"invalid phase: Im P min eig {diag.im_min_eig:.3e}, rank margin {diag.rank_margin:.3e}")
    canon = real_lagrangian_intersection(reduce_canonical(P))
    direct_sub = real_points(lagrangian_of_phase(P))
    direct = ConeSet.of(2 * P.d, [direct_sub])
    if not canon.same_as(direct, angle_tol) and canon.max_mismatch_angle(direct) > angle_tol:
        raise RouteMismatchError(
            f"canonical and direct routes disagree (angle {canon.max_mismatch_angle(direct):.3e})")
    return canon


def wf_pullback_surjective(cone: ConeSet, A) -> ConeSet:
    """``{(x, A^t xi) : (A x, xi) in cone} union (Ker A x {0})`` for surjective ``A``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    m, n = A.shape
    if cone.n != 2 * m:
        raise ValueError(f"cone must live in R^{2 * m}")
    if np.linalg.matrix_rank(A) < m:
        raise ValueError("A must have full row rank")
    out = []
    for W in cone.members:
        Wx, Wxi = W.B[:m], W.B[m:]
        Nsp = null_space(np.hstack([A, -Wx]))
        if Nsp.shape[1] == 0:
            continue
        x, cc = Nsp[:n], Nsp[n:]
        out.append(SubspaceBasis.span(np.vstack([x, A.T @ Wxi @ cc])))
    K = null_space(A)
    if K.shape[1]:
        out.append(SubspaceBasis.span(np.vstack([K, np.zeros((n, K.shape[1]))])))
    return ConeSet.of(2 * n, out)


def wf_tensor(coneU: ConeSet, coneV: ConeSet) -> ConeSet:
    """``((WF(u) u {0}) x (WF(v) u {0})) minus 0`` in ``((x', x''), (xi', xi''))`` order."""
    m, n = coneU.n // 2, coneV.n // 2
    us = list(coneU.members) + [SubspaceBasis.zero(2 * m)]
    vs = list(coneV.members) + [SubspaceBasis.zero(2 * n)]
    out = []
    for U in us:
        for V in vs:
            if U.dim == 0 and V.dim == 0:
                continue
            B = np.zeros((2 * (m + n), U.dim + V.dim))
            B[:m, :U.dim] = U.B[:m]
            B[m + n:2 * m + n, :U.dim] = U.B[m:]
            B[m:m + n, U.dim:] = V.B[:n]
            B[2 * m + n:, U.dim:] = V.B[n:]
            out.append(SubspaceBasis.span(B))
    return ConeSet.of(2 * (m + n), out)
