"""Short-time Fourier transform with a Gaussian window, and Gelfand-Shilov seminorms.

Fourier normalization: ``F f(xi) = int f(x) exp(-i <x, xi>) dx``. The window
is ``phi(x) = pi^{-d/4} exp(-|x|^2 / 2)`` and the transform is

    V u(x, xi) = int u(y) phi(y - x) exp(-i <y, xi>) dy,

so that ``(2 pi)^{-d} ||V u||^2 = ||u||^2``.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .states import Chirp, Delta, GaussianChirpState, GaussianTerm, LibraryDistribution, PlaneWave

#: Magnitudes at or below this count as underflow for closed-form evaluators.
ABS_FLOOR = 1e-300
#: Sampled evaluators treat values below this fraction of the peak as noise.
SAMPLED_REL_FLOOR = 1e-12


@dataclass(frozen=True)
class GaussianWindow:
    d: int = 1

    @property
    def normalization(self) -> str:
        return "pi^{-d/4} exp(-|x|^2/2)"

    def __call__(self, x):
        """Window at points of shape ``(..., d)`` (or ``(...)`` when d = 1)."""
        x = np.asarray(x, dtype=float)
        r2 = x ** 2 if self.d == 1 and (x.ndim == 0 or x.shape[-1] != 1) else np.sum(x ** 2, axis=-1)
        return np.pi ** (-self.d / 4) * np.exp(-r2 / 2)

    def grid_norm_sq(self, L: float, n: int) -> float:
        f = SampledField.from_function(self, self.d, L, n)
        return f.l2_norm() ** 2


@dataclass(frozen=True)
class SampledField:
    """Samples on the uniform grid ``[-L, L)^d`` with ``n`` points per axis."""

    d: int
    L: float
    n: int
    values: np.ndarray

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ValueError("sampled fields support d in {1, 2}")
        if self.n < 2 or self.n & (self.n - 1):
            raise ValueError("n must be a power of two")
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.n,) * self.d:
            raise ValueError(f"values must have shape {(self.n,) * self.d}, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def step(self) -> float:
        return 2 * self.L / self.n

    @property
    def axis(self) -> np.ndarray:
        return -self.L + self.step * np.arange(self.n)

    @property
    def freq_axis(self) -> np.ndarray:
        """Angular frequencies in FFT order."""
        return 2 * np.pi * np.fft.fftfreq(self.n, self.step)

    def mesh(self) -> np.ndarray:
        """Grid points, shape ``(n,)*d + (d,)``."""
        ax = self.axis
        return np.stack(np.meshgrid(*([ax] * self.d), indexing="ij"), axis=-1)

    @classmethod
    def from_function(cls, f, d: int, L: float, n: int) -> "SampledField":
        probe = cls(d, L, n, np.zeros((n,) * d))
        pts = probe.mesh()
        vals = f(pts[..., 0]) if d == 1 else f(pts)
        return cls(d, L, n, np.broadcast_to(vals, (n,) * d))

    def with_values(self, values) -> "SampledField":
        return SampledField(self.d, self.L, self.n, values)

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.step ** self.d))

    def spectral_tail(self, frac: float = 0.125) -> float:
        """Fraction of spectral energy in the outer ``frac`` of each frequency axis."""
        spec = np.abs(np.fft.fftn(self.values)) ** 2
        total = spec.sum()
        if total == 0:
            return 0.0
        k = np.abs(np.fft.fftfreq(self.n))  # in [0, 0.5]
        outer = k >= 0.5 * (1 - frac)
        mask = np.zeros(spec.shape, dtype=bool)
        for ax in range(self.d):
            shape = [1] * self.d
            shape[ax] = self.n
            mask |= outer.reshape(shape)
        return float(spec[mask].sum() / total)


# -- closed forms -------------------------------------------------------------

def _sqrt_det_product(A: np.ndarray) -> complex:
    """``det(A)^{1/2}`` as the product of principal roots of the eigenvalues.

    For complex symmetric ``A`` with positive definite real part all
    eigenvalues lie in the right half plane, and this is the branch continuous
    from ``A = I``.
    """
    lam = np.linalg.eigvals(A)
    return complex(np.prod(np.sqrt(lam.astype(complex))))


def _term_stft(term: GaussianTerm, X: np.ndarray, Xi: np.ndarray) -> np.ndarray:
    d = term.d
    A = np.eye(d) - 1j * term.M
    Ainv = np.linalg.inv(A)
    v = X + 1j * term.b - 1j * Xi
    quad = 0.5 * np.einsum("...i,ij,...j->...", v, Ainv, v) - 0.5 * np.sum(X ** 2, axis=-1)
    pref = term.c * np.pi ** (-d / 4) * (2 * np.pi) ** (d / 2) / _sqrt_det_product(A)
    with np.errstate(under="ignore", over="ignore"):
        return pref * np.exp(quad)


def _split(Z, d):
    Z = np.asarray(Z, dtype=float)
    if Z.shape[-1] != 2 * d:
        raise ValueError(f"phase-space points must have last axis 2d = {2 * d}")
    return Z[..., :d], Z[..., d:]


def stft_closed_form(u: LibraryDistribution, z) -> np.ndarray:
    """Exact STFT of a library distribution at phase-space point(s) ``z``.

    ``z`` has shape ``(..., 2d)``; the result has shape ``z.shape[:-1]``.
    """
    if isinstance(u, Delta):
        X, Xi = _split(z, u.d)
        phi = GaussianWindow(u.d)(u.x0 - X)
        return phi * np.exp(-1j * (Xi @ u.x0))
    if isinstance(u, (PlaneWave, Chirp)):
        u = u.as_gaussian()
    if isinstance(u, GaussianTerm):
        u = GaussianChirpState((u,))
    if not isinstance(u, GaussianChirpState):
        raise TypeError(f"no closed form for {type(u).__name__}")
    X, Xi = _split(z, u.d)
    out = np.zeros(X.shape[:-1], dtype=complex)
    for t in u.terms:
        out = out + _term_stft(t, X, Xi)
    return out


# -- evaluators ---------------------------------------------------------------

class STFTEvaluator:
    """Pointwise access to ``V u`` on phase space."""

    kind: str = "abstract"
    d: int = 1
    floor: float = ABS_FLOOR
    r_max_reliable: float = float("inf")

    def __call__(self, Z) -> np.ndarray:  # pragma: no cover - interface
        raise NotImplementedError

    def magnitude(self, Z) -> np.ndarray:
        return np.abs(self(Z))


class ClosedFormSTFT(STFTEvaluator):
    kind = "closed-form"

    def __init__(self, u: LibraryDistribution, window: GaussianWindow | None = None):
        self.u = u
        self.d = u.d
        self.window = window or GaussianWindow(self.d)
        if self.window.d != self.d:
            raise ValueError("window dimension mismatch")

    def __call__(self, Z):
        return stft_closed_form(self.u, Z)


class SampledSTFT(STFTEvaluator):
    """Direct trapezoidal quadrature on the sample grid at arbitrary points.

    The window is separable, so d = 2 reduces to two matrix products per chunk.
    """

    kind = "sampled-grid"

    def __init__(self, f: SampledField, window: GaussianWindow | None = None, chunk: int = 512):
        _check_window_fits(f)
        self.f = f
        self.d = f.d
        self.window = window or GaussianWindow(self.d)
        self.chunk = chunk
        self.r_max_reliable = f.L / 2
        peak = float(np.max(np.abs(f.values))) if f.values.size else 0.0
        # crude bound on |V| from the peak sample and the window mass
        self.floor = max(ABS_FLOOR, SAMPLED_REL_FLOOR * peak * (2 * np.pi ** 0.5) ** (self.d / 2))

    def __call__(self, Z):
        Z = np.asarray(Z, dtype=float)
        shape = Z.shape[:-1]
        Z = Z.reshape(-1, 2 * self.d)
        y = self.f.axis
        h = self.f.step
        c1 = np.pi ** (-0.25)
        out = np.empty(Z.shape[0], dtype=complex)
        vals = self.f.values
        for s in range(0, Z.shape[0], self.chunk):
            zc = Z[s:s + self.chunk]
            if self.d == 1:
                K = c1 * np.exp(-0.5 * (y[None, :] - zc[:, :1]) ** 2 - 1j * y[None, :] * zc[:, 1:2])
                out[s:s + len(zc)] = h * (K @ vals)
            else:
                K1 = c1 * np.exp(-0.5 * (y[None, :] - zc[:, 0:1]) ** 2 - 1j * y[None, :] * zc[:, 2:3])
                K2 = c1 * np.exp(-0.5 * (y[None, :] - zc[:, 1:2]) ** 2 - 1j * y[None, :] * zc[:, 3:4])
                out[s:s + len(zc)] = h * h * np.einsum("pi,pi->p", K1 @ vals, K2)
        return out.reshape(shape)


def _check_window_fits(f: SampledField) -> None:
    if np.exp(-f.L ** 2 / 2) >= 1e-12:
        raise ValueError(
            f"grid half-width L = {f.L} too small for the unit Gaussian window "
            "(need exp(-L^2/2) < 1e-12, i.e. L > 7.44)"
        )


def make_evaluator(u, window: GaussianWindow | None = None) -> STFTEvaluator:
    if isinstance(u, STFTEvaluator):
        return u
    if isinstance(u, SampledField):
        return SampledSTFT(u, window)
    return ClosedFormSTFT(u, window)


# -- grid transform -----------------------------------------------------------

@dataclass(frozen=True)
class STFTMap:
    """Complex STFT samples on a tensor grid of ``x`` positions and ``xi`` frequencies.

    ``values[i, k]`` (d = 1) or ``values[i1, i2, k1, k2]`` (d = 2) is
    ``V u(x_i, xi_k)``; axes are stored ascending.
    """

    kind: str
    window: GaussianWindow
    x: np.ndarray
    xi: np.ndarray
    values: np.ndarray
    evaluator: STFTEvaluator | None = field(default=None, compare=False, repr=False)

    @property
    def d(self) -> int:
        return self.window.d

    @property
    def magnitudes(self) -> np.ndarray:
        return np.abs(self.values)

    def l2_norm_sq(self) -> float:
        """``(2 pi)^{-d} * sum |V|^2 dx dxi`` on the stored grid."""
        dx = self.x[1] - self.x[0]
        dxi = self.xi[1] - self.xi[0]
        return float(np.sum(self.magnitudes ** 2) * (dx * dxi) ** self.d / (2 * np.pi) ** self.d)

    def rows(self):
        """Iterate ``(x..., xi..., |V|)`` tuples in C order."""
        mags = self.magnitudes
        for idx in np.ndindex(*mags.shape):
            xs = [self.x[i] for i in idx[:self.d]]
            xis = [self.xi[k] for k in idx[self.d:]]
            yield (*xs, *xis, mags[idx])


def stft_sampled(f: SampledField, w: GaussianWindow | None = None, x_stride: int = 1,
                 xi_stride: int = 1) -> STFTMap:
    """STFT of a sampled field at grid positions ``x`` and all FFT frequencies.

    Each row is ``h^d * exp(i <L, xi>) * FFT[f * phi(. - x)]``; the phase
    factor accounts for the grid starting at ``-L``.
    """
    w = w or GaussianWindow(f.d)
    if w.d != f.d:
        raise ValueError("window dimension mismatch")
    _check_window_fits(f)
    y, h, n = f.axis, f.step, f.n
    xs = y[::x_stride]
    xi_fft = f.freq_axis
    order = np.argsort(xi_fft)
    xi_sorted = xi_fft[order][::xi_stride]
    if f.d == 1:
        W = np.pi ** (-0.25) * np.exp(-0.5 * (y[None, :] - xs[:, None]) ** 2)
        G = np.fft.fft(W * f.values[None, :], axis=1)
        V = h * G * np.exp(1j * f.L * xi_fft)[None, :]
        V = V[:, order][:, ::xi_stride]
    else:
        phase = np.exp(1j * f.L * xi_fft)
        V = np.empty((xs.size, xs.size, xi_sorted.size, xi_sorted.size), dtype=complex)
        w1 = np.pi ** (-0.25) * np.exp(-0.5 * (y[None, :] - xs[:, None]) ** 2)
        for i, a in enumerate(w1):
            for j, b in enumerate(w1):
                G = np.fft.fft2(f.values * a[:, None] * b[None, :])
                G = h * h * G * phase[:, None] * phase[None, :]
                V[i, j] = G[np.ix_(order, order)][::xi_stride, ::xi_stride]
    return STFTMap("sampled-grid", w, xs, xi_sorted, V, SampledSTFT(f, w))


def translate_modulate(f, w):
    """``Pi(w) f(y) = exp(i <w_xi, y>) f(y - w_x)`` for a callable or GaussianChirpState."""
    w = np.asarray(w, dtype=float)
    d = w.size // 2
    wx, wxi = w[:d], w[d:]
    if isinstance(f, GaussianChirpState):
        terms = []
        for t in f.terms:
            # exp(i((y-a)M(y-a)/2 + b(y-a))) exp(i wxi y)
            b = t.b - t.M @ wx + wxi
            c = t.c * np.exp(1j * (wx @ t.M @ wx / 2 - t.b @ wx))
            terms.append(GaussianTerm(c, t.M, b))
        return GaussianChirpState(tuple(terms))

    def g(y):
        y = np.asarray(y, dtype=float)
        yy = y[..., None] if d == 1 and (y.ndim == 0 or y.shape[-1] != 1) else y
        return np.exp(1j * (yy @ wxi)) * f(np.squeeze(yy - wx, -1) if d == 1 else yy - wx)
    return g


# -- seminorms ----------------------------------------------------------------

@dataclass(frozen=True)
class SeminormResult:
    value: float
    argmax: np.ndarray
    on_boundary: bool = False
    divergent: bool = False
    witness: np.ndarray | None = None
    beta: tuple | None = None
    truncation_suspect: bool = False


def _check_s(s: float) -> None:
    if not s > 0.5:
        raise ValueError("Gelfand-Shilov index must satisfy s > 1/2 (the space is trivial otherwise)")


def _weighted_log(logabs, r, A, s):
    return A * r ** (1.0 / s) + logabs


def _cube(R: float, dim: int, n: int) -> np.ndarray:
    ax = np.linspace(-R, R, n)
    return np.stack(np.meshgrid(*([ax] * dim), indexing="ij"), axis=-1).reshape(-1, dim)


def _log_abs(vals):
    a = np.abs(vals)
    with np.errstate(divide="ignore"):
        return np.where(a > 0, np.log(np.where(a > 0, a, 1.0)), -np.inf)


def _sup_result(pts, logw, R, dim, edge: float = 0.0):
    i = int(np.argmax(logw))
    lv = logw[i]
    val = 0.0 if lv == -np.inf else float(np.exp(lv))
    on_b = bool(val > 0 and np.max(np.abs(pts[i])) >= R * (1 - 1e-12) - edge)
    return val, pts[i], on_b


def _sampled_cube_1d(f: SampledField, w: GaussianWindow, R: float, n_grid: int):
    """``|V f|`` on grid positions times zero-padded FFT frequencies inside ``[-R, R]^2``.

    Same quadrature as the pointwise evaluator, but each x row costs one FFT.
    Returns points, magnitudes and the coarser of the two spacings.
    """
    y, h = f.axis, f.step
    target = 2 * R / (n_grid - 1)
    stride = max(1, int(round(target / h)))
    xs = y[::stride]
    xs = xs[np.abs(xs) <= R]
    m = f.n
    while 2 * np.pi / (m * h) > target:
        m *= 2
    xi = 2 * np.pi * np.fft.fftfreq(m, h)
    keep = np.nonzero(np.abs(xi) <= R)[0]
    mags = np.empty((xs.size, keep.size))
    for a in range(0, xs.size, 64):
        xa = xs[a:a + 64]
        W = w(y[None, :] - xa[:, None])
        mags[a:a + 64] = h * np.abs(np.fft.fft(W * f.values[None, :], n=m, axis=1)[:, keep])
    X, XI = np.meshgrid(xs, xi[keep], indexing="ij")
    pts = np.column_stack([X.ravel(), XI.ravel()])
    return pts, mags.ravel(), max(stride * h, 2 * np.pi / (m * h))


def seminorm_sup(f, A: float, s: float, R: float, d: int = 1, n_grid: int | None = None) -> SeminormResult:
    """Grid sup of ``exp(A |x|^{1/s}) |f(x)|`` over ``[-R, R]^d``.

    Warns when the maximizer sits on the boundary of the box.
    """
    _check_s(s)
    n_grid = n_grid or (4001 if d == 1 else 401)
    pts = _cube(R, d, n_grid)
    vals = f(pts[:, 0]) if d == 1 else f(pts)
    logw = _weighted_log(_log_abs(np.broadcast_to(vals, pts.shape[:1])), np.linalg.norm(pts, axis=1), A, s)
    val, arg, on_b = _sup_result(pts, logw, R, d)
    if on_b:
        warnings.warn("seminorm_sup: maximizer on the boundary, R is too small for a reliable sup",
                      RuntimeWarning, stacklevel=2)
    return SeminormResult(val, arg, on_boundary=on_b)


def seminorm_stft(u, A: float, s: float, window: GaussianWindow | None = None, R: float = 8.0,
                  n_grid: int | None = None) -> SeminormResult:
    """Grid sup of ``exp(A |z|^{1/s}) |V u(z)|`` over ``[-R, R]^{2d}``.

    If the maximizer is on the boundary the supremand is compared with its
    value at twice the radius along the same ray; growth there flags the
    seminorm as divergent and reports the ray as witness.
    """
    _check_s(s)
    ev = make_evaluator(u, window)
    dim = 2 * ev.d
    n_grid = n_grid or (401 if dim == 2 else 31)
    edge = 0.0
    if isinstance(ev, SampledSTFT) and ev.d == 1:
        pts, mags, edge = _sampled_cube_1d(ev.f, ev.window, R, n_grid)
        mags = np.where(mags > ev.floor, mags, 0.0)
    else:
        pts = _cube(R, dim, n_grid)
        mags = ev.magnitude(pts)
    logw = _weighted_log(_log_abs(mags), np.linalg.norm(pts, axis=1), A, s)
    val, arg, on_b = _sup_result(pts, logw, R, dim, edge)
    if not on_b:
        return SeminormResult(val, arg)
    theta = arg / np.linalg.norm(arg)
    r = np.linspace(R, 2 * R, 33)
    ray = ev.magnitude(r[:, None] * theta[None, :])
    lw = _weighted_log(_log_abs(ray), r, A, s)
    if lw[-1] > lw[0] + 1e-9:
        return SeminormResult(float("inf"), arg, on_boundary=True, divergent=True, witness=theta)
    warnings.warn("seminorm_stft: maximizer on the boundary, R is too small for a reliable sup",
                  RuntimeWarning, stacklevel=2)
    return SeminormResult(val, arg, on_boundary=True)


def spectral_derivative(f: SampledField, beta) -> np.ndarray:
    """``d^beta f`` by Fourier multiplication with ``(i xi)^beta``."""
    beta = tuple(int(b) for b in np.atleast_1d(beta))
    if len(beta) != f.d:
        raise ValueError("multi-index length must equal d")
    F = np.fft.fftn(f.values)
    xi = f.freq_axis
    for ax, b in enumerate(beta):
        if b == 0:
            continue
        shape = [1] * f.d
        shape[ax] = f.n
        F = F * ((1j * xi) ** b).reshape(shape)
    return np.fft.ifftn(F)


def seminorm_derivatives(f: SampledField, A: float, s: float, beta_max: int,
                         R: float | None = None) -> SeminormResult:
    """Truncated ``sup_{|beta| <= beta_max} sup_x A^|beta| e^{A|x|^{1/s}} |D^beta f| / (beta!)^s``.

    Samples below the derivative's noise level are ignored. That level is the
    larger of ``1e-12`` of the peak and the FFT round-off, which grows like
    ``|xi|^|beta|`` and would otherwise be amplified by the weight.
    """
    _check_s(s)
    spec = np.abs(np.fft.fftn(f.values))
    if spec.max() > 0:
        k = np.abs(np.fft.fftfreq(f.n))
        edge = k >= 0.45
        tail = max(float(spec.take(np.nonzero(edge)[0], axis=ax).max()) for ax in range(f.d)) / spec.max()
        if tail > 1e-10:
            warnings.warn(f"seminorm_derivatives: spectral tail {tail:.2e} exceeds 1e-10, "
                          "derivatives are under-resolved", RuntimeWarning, stacklevel=2)
    Fmax = float(spec.max())
    pts = f.mesh().reshape(-1, f.d)
    r = np.linalg.norm(pts, axis=1)
    keep = np.ones(r.shape, dtype=bool) if R is None else r <= R
    best, best_beta, best_x, edge = -np.inf, (0,) * f.d, pts[0], False
    for order in range(beta_max + 1):
        for beta in _multi_indices(f.d, order):
            D = np.abs(spectral_derivative(f, beta)).reshape(-1)
            if D.max() == 0:
                continue
            mask = keep & (D > max(SAMPLED_REL_FLOOR * D.max(), _derivative_noise(f, beta, Fmax)))
            if not mask.any():
                continue
            logfact = sum(math.lgamma(b + 1) for b in beta)
            lw = (order * math.log(A) if order else 0.0) + A * r[mask] ** (1 / s) + np.log(D[mask]) - s * logfact
            i = int(np.argmax(lw))
            if lw[i] > best:
                best, best_beta, best_x = float(lw[i]), beta, pts[mask][i]
                # maximizer on the rim of the resolved support: the sup lies further out
                edge = r[mask][i] >= r[mask].max() - 2 * f.step
    val = 0.0 if best == -np.inf else float(np.exp(best))
    beta_cut = bool(val > 0 and sum(best_beta) == beta_max)
    x_cut = bool(val > 0 and edge)
    if beta_cut:
        warnings.warn("seminorm_derivatives: maximizing |beta| equals beta_max, truncation suspect",
                      RuntimeWarning, stacklevel=2)
    if x_cut:
        warnings.warn("seminorm_derivatives: maximizer at the edge of the resolved support, "
                      "sup not captured by the grid", RuntimeWarning, stacklevel=2)
    return SeminormResult(val, best_x, on_boundary=x_cut, beta=best_beta,
                          truncation_suspect=beta_cut or x_cut)


def _derivative_noise(f: SampledField, beta, Fmax: float) -> float:
    # round-off of size eps * max|F| in every bin, multiplied by the symbol and
    # summed with random phases by the inverse FFT; 10x margin
    w = np.ones(1)
    for b in beta:
        w = np.multiply.outer(w, np.abs(f.freq_axis) ** (2 * b)).reshape(-1)
    return 10 * np.finfo(float).eps * Fmax * float(np.sqrt(w.sum())) / f.n ** f.d


def _multi_indices(d: int, order: int):
    if d == 1:
        yield (order,)
        return
    for combo in itertools.product(range(order + 1), repeat=d):
        if sum(combo) == order:
            yield combo


def hermite_function(k: int, x) -> np.ndarray:
    """Normalized Hermite function ``h_k`` by the stable three-term recurrence."""
    x = np.asarray(x, dtype=float)
    h0 = np.pi ** -0.25 * np.exp(-x ** 2 / 2)
    if k == 0:
        return h0
    h1 = np.sqrt(2.0) * x * h0
    for j in range(1, k):
        h0, h1 = h1, np.sqrt(2.0 / (j + 1)) * x * h1 - np.sqrt(j / (j + 1)) * h0
    return h1
