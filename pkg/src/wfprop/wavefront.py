"""Empirical wave front sets from directional STFT decay.

Along each phase-space direction ``theta`` the magnitude ``|V u(r theta)|``
is sampled on a radius window and fitted two ways:

* ``log|V| = c - A r^{1/s}`` (the single-rate model, giving ``A_hat``);
* ``log|V| = c - a r^{1/s} - kappa r^2`` (separating a Gaussian rate).

A direction is flagged singular when ``A_hat < A_min`` and the Gaussian
rate ``kappa`` is below ``kappa_tol``. The second test keeps directions a
few degrees off a singular line from being flagged: there the decay is
Gaussian with a small rate, which a single linear-rate fit on a bounded
window cannot tell apart from slow decay.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gabor import STFTEvaluator, make_evaluator
from .subspaces import ConeSet

DEFAULT_RADII = np.geomspace(2.0, 8.0, 16)
MIN_USABLE = 4


@dataclass(frozen=True)
class DecayProfile:
    theta: np.ndarray
    s: float
    A_hat: float
    intercept: float
    residual: float
    r_min: float
    r_max: float
    reliable: bool = True
    kappa: float = float("nan")
    n_used: int = 0

    def __post_init__(self):
        if not self.r_min < self.r_max:
            raise ValueError("r_min must be below r_max")
        if self.residual < 0:
            raise ValueError("residual must be nonnegative")


def _lstsq(cols, y):
    X = np.column_stack(cols)
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    return coef, float(np.sqrt(np.mean(resid ** 2)))


def directional_decay(V, theta, radii=DEFAULT_RADII, s: float = 1.0) -> DecayProfile:
    """Fit the decay of ``|V(r theta)|`` over the given radii.

    Radii are used in increasing order up to the first sample at or below
    the evaluator's floor. Fewer than four usable radii mark the profile
    unreliable, which callers treat as a strongly regular direction.
    """
    V = make_evaluator(V)
    theta = np.asarray(theta, dtype=float)
    theta = theta / np.linalg.norm(theta)
    radii = np.sort(np.asarray(radii, dtype=float))
    if radii.size < 8:
        raise ValueError("at least 8 radii are required")
    mags = V.magnitude(radii[:, None] * theta[None, :])
    bad = np.nonzero(~(mags > V.floor))[0]
    k = int(bad[0]) if bad.size else radii.size
    r, m = radii[:k], mags[:k]
    if k < MIN_USABLE:
        return DecayProfile(theta, s, float("inf"), float("nan"), 0.0, float(radii[0]), float(radii[-1]),
                            reliable=False, kappa=float("inf"), n_used=k)
    y = np.log(m)
    p = r ** (1.0 / s)
    (c, negA), res = _lstsq([np.ones_like(r), p], y)
    (_, _, negk), _ = _lstsq([np.ones_like(r), p, r ** 2], y)
    return DecayProfile(theta, s, float(-negA), float(c), res, float(r[0]), float(r[-1]),
                        reliable=True, kappa=float(-negk), n_used=k)


def direction_grid(d: int, n_dirs: int | None = None) -> np.ndarray:
    """Unit directions in R^{2d}: an equiangular circle for d = 1, a super-Fibonacci spiral on S^3 for d = 2."""
    if d == 1:
        n = n_dirs or 360
        if n < 90:
            raise ValueError("need at least 90 directions on the circle")
        a = 2 * np.pi * np.arange(n) / n
        return np.column_stack([np.cos(a), np.sin(a)])
    if d == 2:
        n = n_dirs or 2000
        phi, psi = np.sqrt(2.0), 1.533751168755204288118041
        i = np.arange(n) + 0.5
        r, R = np.sqrt(i / n), np.sqrt(1 - i / n)
        al, be = 2 * np.pi * i / phi, 2 * np.pi * i / psi
        return np.column_stack([r * np.sin(al), r * np.cos(al), R * np.sin(be), R * np.cos(be)])
    raise ValueError("direction grids exist for d in {1, 2}")


@dataclass(frozen=True)
class EmpiricalCone:
    """Scored directions; ``singular[i]`` marks ``profiles[i]`` as a singular direction."""

    n: int
    profiles: tuple
    singular: np.ndarray
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        for p in self.profiles:
            if abs(np.linalg.norm(p.theta) - 1) > 1e-10:
                raise ValueError("empirical directions must be unit vectors")
            if p.theta.size != self.n:
                raise ValueError("direction dimension mismatch")
        sing = np.asarray(self.singular, dtype=bool)
        if sing.shape != (len(self.profiles),):
            raise ValueError("singular mask must match the profiles")
        object.__setattr__(self, "singular", sing)

    @property
    def directions(self) -> np.ndarray:
        """Singular directions, shape ``(k, n)``."""
        if not self.profiles:
            return np.zeros((0, self.n))
        th = np.array([p.theta for p in self.profiles])
        return th[self.singular]

    @property
    def is_empty(self) -> bool:
        return not bool(self.singular.any())

    @classmethod
    def from_directions(cls, dirs, A_hat=None, residual=None) -> "EmpiricalCone":
        """Cone whose listed directions are all singular (no fit data)."""
        dirs = np.atleast_2d(np.asarray(dirs, dtype=float))
        if dirs.size == 0:
            return cls(dirs.shape[1] if dirs.ndim == 2 else 0, (), np.zeros(0, bool))
        dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
        A_hat = np.zeros(len(dirs)) if A_hat is None else np.asarray(A_hat, dtype=float)
        residual = np.zeros(len(dirs)) if residual is None else np.asarray(residual, dtype=float)
        profs = tuple(DecayProfile(t, 1.0, float(a), 0.0, float(e), 0.0, 1.0)
                      for t, a, e in zip(dirs, A_hat, residual))
        return cls(dirs.shape[1], profs, np.ones(len(dirs), bool))


def estimate_wf(V, s: float = 1.0, n_dirs: int | None = None, radii=None, A_min: float = 0.5,
                kappa_tol: float = 1e-3) -> EmpiricalCone:
    """Score every direction of the grid and flag the singular ones.

    For sampled evaluators the radius window is clamped to the reliable
    region (half the grid width).
    """
    V: STFTEvaluator = make_evaluator(V)
    radii = DEFAULT_RADII if radii is None else np.asarray(radii, dtype=float)
    k = radii.size
    if radii.max() > V.r_max_reliable:
        r_min = radii.min()
        r_max = V.r_max_reliable
        if r_max <= r_min:
            raise ValueError("sampled grid too small for the requested radii")
        radii = np.geomspace(r_min, r_max, k)
    dirs = direction_grid(V.d, n_dirs)
    profiles = tuple(directional_decay(V, th, radii, s) for th in dirs)
    sing = np.array([p.reliable and p.A_hat < A_min and p.kappa < kappa_tol for p in profiles])
    params = {"s": s, "n_dirs": len(dirs), "radii": [float(radii.min()), float(radii.max()), int(k)],
              "A_min": A_min, "kappa_tol": kappa_tol, "evaluator": V.kind}
    return EmpiricalCone(2 * V.d, profiles, sing, params)


@dataclass(frozen=True)
class WFReport:
    estimated: EmpiricalCone
    predicted: ConeSet
    margins_deg: np.ndarray
    holds: bool
    angular_tol: float
    unmatched_predicted: tuple = ()
    coarse: ConeSet | None = None

    @property
    def max_margin_deg(self) -> float:
        return float(self.margins_deg.max()) if self.margins_deg.size else 0.0

    def to_json(self) -> dict:
        out = {
            "verdict": "holds" if self.holds else "fails",
            "angular_tol_deg": self.angular_tol,
            "n_singular": int(self.margins_deg.size),
            "max_margin_deg": self.max_margin_deg,
            "singular_directions": self.estimated.directions.tolist(),
            "margins_deg": self.margins_deg.tolist(),
            "predicted": self.predicted.to_json(),
            "unmatched_predicted": list(self.unmatched_predicted),
            "params": self.estimated.params,
        }
        if self.coarse is not None:
            out["coarse"] = self.coarse.to_json()
        return out


def check_inclusion(est: EmpiricalCone, pred: ConeSet, angular_tol: float = 5.0,
                    coarse: ConeSet | None = None) -> WFReport:
    """Angular margins of the singular directions to the predicted union.

    ``unmatched_predicted`` lists indices of predicted subspaces that no
    singular direction comes within ``angular_tol`` of; that is a sharpness
    diagnostic only.
    """
    if est.n != pred.n:
        raise ValueError("estimated and predicted cones live in different spaces")
    dirs = est.directions
    margins = np.array([np.degrees(pred.distance_angle(v)) for v in dirs])
    holds = bool(np.all(margins <= angular_tol))
    unmatched = []
    for j, m in enumerate(pred.members):
        if not any(np.degrees(m.distance_angle(v)) <= angular_tol for v in dirs):
            unmatched.append(j)
    return WFReport(est, pred, margins, holds, angular_tol, tuple(unmatched), coarse)
