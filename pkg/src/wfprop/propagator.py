"""Engines for ``u(t) = exp(-t q^w(x, D)) u0``.

* ``propagate_gaussian``: exact transport of Gaussian-chirp terms by the
  action of ``T = exp(-2itF)`` on the graph of ``M``.
* ``propagate_splitstep``: Strang splitting on a periodic grid, for ``Q``
  without cross terms.
* ``propagate_metaplectic_1d``: the linear canonical transform of a real
  symplectic 2x2 matrix, via chirp - chirp-z transform - chirp.

For ``u = c exp(i(x.Mx/2 + b.x))`` substituted into ``u_t + q^w u = 0``:

    dM/dt = 2i (Qxx + Qxxi M + M Qxix + M Qxixi M)
    db/dt = 2i (Qxxi + M Qxixi) b
    dc/dt = c (i tr Qxxi + i tr(Qxixi M) - b.Qxixi b)

With ``[X; Y] = T [I; M0]`` these are solved by ``M = Y X^{-1}``,
``b = X^{-T} b0`` and ``c = c0 det(X)^{-1/2} exp(-int b.Qxixi b)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.signal

from .gabor import SampledField
from .states import Chirp, Delta, GaussianChirpState, GaussianTerm, PlaneWave
from .subspaces import ConeSet, SubspaceBasis
from .symplectic import HamiltonMap, QuadraticHamiltonian, hamilton_map, kernel_imag, propagator_matrix

COND_LIMIT = 1e12
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(6)


class CausticError(RuntimeError):
    """``A + B M`` became numerically singular along the path."""


class EngineSelectionError(ValueError):
    """No engine can handle the requested (Q, initial data) combination."""


@dataclass(frozen=True)
class PropagationResult:
    state: object
    engine: str
    t: float
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        expected = {"gaussian": GaussianChirpState, "splitstep": SampledField, "metaplectic": SampledField}
        kind = expected.get(self.engine)
        if kind is None or not isinstance(self.state, kind):
            raise ValueError(f"engine {self.engine!r} inconsistent with state {type(self.state).__name__}")


# -- exact Gaussian engine ----------------------------------------------------

def _as_hamilton(F) -> HamiltonMap:
    if isinstance(F, QuadraticHamiltonian):
        return hamilton_map(F)
    return F


def _T(F: HamiltonMap, tau: float) -> np.ndarray:
    return propagator_matrix(F, float(tau)).T


def _graph(T, M0, d):
    G = T @ np.vstack([np.eye(d), M0])
    return G[:d], G[d:]


def _transport_term(term: GaussianTerm, F: HamiltonMap, t: float, n: int):
    d = term.d
    Qxixi = F.source.blocks()[2]
    taus = np.linspace(0.0, t, n + 1)
    root = 1.0 + 0j
    max_cond = 1.0
    flips = 0
    prev_det = 1.0 + 0j
    integral = 0.0 + 0j
    need_b = bool(np.any(term.b != 0)) and bool(np.any(Qxixi != 0))
    for k in range(1, n + 1):
        X, Y = _graph(_T(F, taus[k]), term.M, d)
        cond = float(np.linalg.cond(X))
        max_cond = max(max_cond, cond)
        if not np.isfinite(cond) or cond > COND_LIMIT:
            raise CausticError(f"A + B M0 is singular at t = {taus[k]:.6g} (cond {cond:.3e})")
        det = complex(np.linalg.det(X))
        # continuity: a det phase jump above pi/2 between checkpoints is under-resolved
        if abs(np.angle(det / prev_det)) > np.pi / 2:
            return None
        cand = np.sqrt(det)
        if abs(cand - root) > abs(-cand - root):
            cand = -cand
        if cand != np.sqrt(det):
            flips += 1
        root, prev_det = cand, det
        if need_b:
            a, h = taus[k - 1], taus[k] - taus[k - 1]
            for node, wt in zip(_GL_NODES, _GL_WEIGHTS):
                Xn, _ = _graph(_T(F, a + h * (node + 1) / 2), term.M, d)
                bn = np.linalg.solve(Xn.T, term.b)
                integral += wt * h / 2 * (bn @ Qxixi @ bn)
    M = Y @ np.linalg.inv(X)
    M = (M + M.T) / 2
    b = np.linalg.solve(X.T, term.b)
    c = term.c / root * np.exp(-integral)
    return GaussianTerm(c, M, b), {"max_cond": max_cond, "branch_flips": flips}


def propagate_gaussian(u0: GaussianChirpState, F, t: float, n_checkpoints: int | None = None) -> PropagationResult:
    """Exact evolution of each Gaussian-chirp term.

    The ``det^{-1/2}`` branch is followed by continuity over at least 32
    checkpoints per unit time; the subdivision is doubled (up to 6 times)
    whenever the determinant turns by more than a quarter turn in one step.
    """
    F = _as_hamilton(F)
    if t < 0:
        raise ValueError("t must be nonnegative")
    if u0.d != F.d:
        raise ValueError("state and Hamiltonian dimensions differ")
    if t == 0:
        return PropagationResult(u0, "gaussian", 0.0, {"n_checkpoints": 0, "branch_flips": 0,
                                                       "max_cond": 1.0, "refinements": 0})
    n = max(int(n_checkpoints or 0), int(math.ceil(32 * t)), 1)
    terms, diag = [], {"n_checkpoints": n, "branch_flips": 0, "max_cond": 1.0, "refinements": 0}
    for term in u0.terms:
        m = n
        for refine in range(7):
            out = _transport_term(term, F, t, m)
            if out is not None:
                break
            m *= 2
        else:
            raise CausticError("determinant branch could not be resolved by refinement")
        new, info = out
        terms.append(new)
        diag["n_checkpoints"] = max(diag["n_checkpoints"], m)
        diag["refinements"] = max(diag["refinements"], refine)
        diag["branch_flips"] += info["branch_flips"]
        diag["max_cond"] = max(diag["max_cond"], info["max_cond"])
    return PropagationResult(GaussianChirpState(tuple(terms)), "gaussian", float(t), diag)


def riccati_rhs(Q: QuadraticHamiltonian, M: np.ndarray) -> np.ndarray:
    """Right-hand side ``2i (Qxx + Qxxi M + M Qxix + M Qxixi M)``."""
    Qxx, Qxxi, Qxixi = Q.blocks()
    return 2j * (Qxx + Qxxi @ M + M @ Qxxi.T + M @ Qxixi @ M)


# -- split-step engine --------------------------------------------------------

def _has_cross_terms(Q: QuadraticHamiltonian, tol: float = 1e-14) -> bool:
    return bool(np.max(np.abs(Q.blocks()[1]), initial=0.0) > tol)


def propagate_splitstep(f: SampledField, Q: QuadraticHamiltonian, t: float, n_steps: int = 512,
                        tail_tol: float = 1e-8) -> PropagationResult:
    """Strang splitting: half x-multiplier, Fourier multiplier, half x-multiplier."""
    if _has_cross_terms(Q):
        raise EngineSelectionError("split-step cannot handle Q_xxi != 0; use the gaussian engine")
    if Q.d != f.d:
        raise ValueError("field and Hamiltonian dimensions differ")
    if t < 0:
        raise ValueError("t must be nonnegative")
    tail0 = f.spectral_tail()
    if tail0 > tail_tol:
        raise ValueError(f"initial field under-resolved: spectral tail {tail0:.2e} > {tail_tol:.0e}")
    Qxx, _, Qxixi = Q.blocks()
    X = f.mesh()
    xi = f.freq_axis
    K = np.stack(np.meshgrid(*([xi] * f.d), indexing="ij"), axis=-1)
    qx = np.einsum("...i,ij,...j->...", X, Qxx, X)
    qk = np.einsum("...i,ij,...j->...", K, Qxixi, K)
    if t == 0:
        return PropagationResult(f, "splitstep", 0.0, {"n_steps": 0, "norms": [f.l2_norm()], "tail": tail0})
    dt = t / n_steps
    half = np.exp(-0.5 * dt * qx)
    full = np.exp(-dt * qk)
    u = np.array(f.values)
    h = f.step ** f.d
    norms = [float(np.sqrt(np.sum(np.abs(u) ** 2) * h))]
    for _ in range(n_steps):
        u = half * u
        u = np.fft.ifftn(full * np.fft.fftn(u))
        u = half * u
        norms.append(float(np.sqrt(np.sum(np.abs(u) ** 2) * h)))
    out = f.with_values(u)
    tail = out.spectral_tail()
    if tail > tail_tol:
        raise ValueError(f"propagated field under-resolved: spectral tail {tail:.2e} > {tail_tol:.0e}")
    return PropagationResult(out, "splitstep", float(t), {"n_steps": n_steps, "norms": norms, "tail": tail})


# -- metaplectic engine -------------------------------------------------------

def _trig_interp(f: SampledField, p: np.ndarray) -> np.ndarray:
    """Trigonometric interpolation of the periodic samples at points ``p``."""
    coef = np.fft.fft(f.values) / f.n
    xi = f.freq_axis
    out = np.zeros(p.shape, dtype=complex)
    inside = (p >= -f.L) & (p < f.L)
    for s in range(0, p.size, 1024):
        pp = p[s:s + 1024]
        E = np.exp(1j * np.outer(pp + f.L, xi))
        out[s:s + 1024] = E @ coef
    return np.where(inside, out, 0.0)


def propagate_metaplectic_1d(f: SampledField, chi) -> PropagationResult:
    """Apply ``mu(chi)`` for real symplectic ``chi = [[a, b], [c, d]]``, d = 1.

    Only magnitudes are meaningful; the output is rescaled to the input's
    L2 norm because the operator is fixed only up to a unimodular factor and
    the discretization loses a little mass at the grid edges.
    """
    if f.d != 1:
        raise ValueError("the metaplectic engine is one-dimensional")
    chi = np.asarray(chi, dtype=float)
    if chi.shape != (2, 2):
        raise ValueError("chi must be 2x2")
    if abs(np.linalg.det(chi) - 1) > 1e-10:
        raise ValueError(f"chi is not symplectic (det = {np.linalg.det(chi):.12g})")
    a, b, c, d = chi.ravel()
    x, h, L, n = f.axis, f.step, f.L, f.n
    diag = {}
    if abs(b) < 1e-8:
        if b != 0:
            warnings.warn("metaplectic: |b| < 1e-8, using the b = 0 factorization", RuntimeWarning, stacklevel=2)
            diag["near_degenerate"] = True
        vals = abs(a) ** -0.5 * np.exp(1j * c * x ** 2 / (2 * a)) * _trig_interp(f, x / a)
        diag["path"] = "scaling"
    else:
        if abs(a) * L / abs(b) > np.pi / h:
            warnings.warn("metaplectic: input chirp exceeds the grid Nyquist rate", RuntimeWarning, stacklevel=2)
        g = np.exp(1j * a * x ** 2 / (2 * b)) * f.values * np.exp(1j * L * np.arange(n) * h / b)
        W = np.exp(-1j * h * h / b)
        S = scipy.signal.czt(g, m=n, w=W, a=1.0)
        S = S * np.exp(-1j * L * L / b) * np.exp(1j * L * np.arange(n) * h / b)
        pref = (2j * np.pi * b) ** -0.5
        vals = pref * h * np.exp(1j * d * x ** 2 / (2 * b)) * S
        diag["path"] = "fourier"
    out = f.with_values(vals)
    nin, nout = f.l2_norm(), out.l2_norm()
    diag["raw_norm_ratio"] = nout / nin if nin > 0 else 1.0
    if nout > 0:
        out = out.with_values(vals * (nin / nout))
    return PropagationResult(out, "metaplectic", float("nan"), diag)


# -- kernel geometry ----------------------------------------------------------

def kernel_lagrangian(F, t: float) -> ConeSet:
    """Real points ``(x, y, xi, -eta)`` of the twisted graph of ``exp(-2itF)``."""
    F = _as_hamilton(F)
    d = F.d
    T = propagator_matrix(F, t).T
    K = kernel_imag(T).B
    if K.shape[1] == 0:
        return ConeSet.empty(4 * d)
    img = T.real @ K
    basis = np.vstack([img[:d], K[:d], img[d:], -K[d:]])
    return ConeSet.of(4 * d, [SubspaceBasis.span(basis)])


# -- initial data helpers and dispatch ----------------------------------------

def delta_approx(d: int = 1, L: float = 16.0, n: int = 4096, x0=None, width_steps: float = 4.0) -> GaussianChirpState:
    """Unit-mass Gaussian of width ``width_steps`` grid steps standing in for a delta."""
    sigma = width_steps * 2 * L / n
    g = GaussianChirpState.gaussian(d, sigma, x0=x0)
    return g.scaled((2 * np.pi * sigma ** 2) ** (-d / 2))


def as_gaussian_state(u, d: int | None = None, L: float = 16.0, n: int = 4096):
    """Gaussian-chirp representation of library data (delta as its grid approximation)."""
    if isinstance(u, GaussianChirpState):
        return u
    if isinstance(u, (Chirp, PlaneWave)):
        return u.as_gaussian()
    if isinstance(u, Delta):
        return delta_approx(u.d, L, n, x0=u.x0)
    return None


def sample_state(u: GaussianChirpState, L: float, n: int) -> SampledField:
    return SampledField.from_function(u, u.d, L, n)


def propagate(u0, Q: QuadraticHamiltonian, t: float, engine: str = "auto", L: float = 16.0, n: int = 4096,
              n_steps: int | None = None) -> PropagationResult:
    """Dispatch to an engine; ``auto`` prefers the exact Gaussian engine."""
    F = hamilton_map(Q)
    g = as_gaussian_state(u0, Q.d, L, n)
    if engine == "auto":
        if g is not None:
            engine = "gaussian"
        elif not _has_cross_terms(Q):
            engine = "splitstep"
        elif Q.d == 1 and np.max(np.abs(Q.Q.real)) == 0:
            engine = "metaplectic"
        else:
            raise EngineSelectionError(
                "sampled data with cross-term Q: no engine applies; supply Gaussian-chirp "
                "initial data (gaussian engine) or drop the x-xi coupling")
    if engine == "gaussian":
        if g is None:
            raise EngineSelectionError("gaussian engine needs Gaussian-chirp initial data")
        return propagate_gaussian(g, F, t)
    f = u0 if isinstance(u0, SampledField) else sample_state(g, L, n)
    if engine == "splitstep":
        steps = n_steps or max(512, int(math.ceil(1000 * t)))
        return propagate_splitstep(f, Q, t, steps)
    if engine == "metaplectic":
        T = propagator_matrix(F, t).T
        if np.max(np.abs(T.imag)) > 1e-12:
            raise EngineSelectionError("metaplectic engine needs a real propagator matrix (Re Q = 0)")
        res = propagate_metaplectic_1d(f, T.real)
        return PropagationResult(res.state, "metaplectic", float(t), res.diagnostics)
    raise EngineSelectionError(f"unknown engine {engine!r}")
