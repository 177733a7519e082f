"""Concrete distributions with closed-form STFTs.

``GaussianChirpState`` is the class that the exact propagator transports:
finite sums of ``c * exp(i(<x, M x>/2 + <b, x>))`` with ``Im M >= 0``.
The remaining types are the textbook examples whose wave front sets are
known exactly (delta, plane wave, real chirp).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .subspaces import ConeSet, SubspaceBasis, null_space


def _vec(v, d):
    a = np.zeros(d) if v is None else np.atleast_1d(np.asarray(v))
    if a.shape != (d,):
        raise ValueError(f"expected a vector of length {d}")
    return a


@dataclass(frozen=True)
class Delta:
    x0: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x0", np.atleast_1d(np.asarray(self.x0, dtype=float)))

    @property
    def d(self) -> int:
        return self.x0.size

    def wave_front(self) -> ConeSet:
        d = self.d
        return ConeSet.of(2 * d, [SubspaceBasis.span(np.vstack([np.zeros((d, d)), np.eye(d)]))])


@dataclass(frozen=True)
class PlaneWave:
    xi0: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "xi0", np.atleast_1d(np.asarray(self.xi0, dtype=float)))

    @property
    def d(self) -> int:
        return self.xi0.size

    def wave_front(self) -> ConeSet:
        d = self.d
        return ConeSet.of(2 * d, [SubspaceBasis.span(np.vstack([np.eye(d), np.zeros((d, d))]))])

    def as_gaussian(self) -> "GaussianChirpState":
        return GaussianChirpState.single(np.zeros((self.d, self.d)), b=self.xi0)


@dataclass(frozen=True)
class Chirp:
    """``exp(i <B x, x>/2)`` with ``B`` real symmetric."""

    B: np.ndarray

    def __post_init__(self):
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        if np.max(np.abs(B - B.T)) > 1e-12:
            raise ValueError("chirp matrix must be symmetric")
        object.__setattr__(self, "B", B)

    @property
    def d(self) -> int:
        return self.B.shape[0]

    def wave_front(self) -> ConeSet:
        return ConeSet.of(2 * self.d, [SubspaceBasis.span(np.vstack([np.eye(self.d), self.B]))])

    def as_gaussian(self) -> "GaussianChirpState":
        return GaussianChirpState.single(self.B.astype(complex))


@dataclass(frozen=True)
class GaussianTerm:
    c: complex
    M: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        M = np.atleast_2d(np.asarray(self.M, dtype=complex))
        d = M.shape[0]
        if np.max(np.abs(M - M.T)) > 1e-10 * max(1.0, np.max(np.abs(M))):
            raise ValueError("M must be complex symmetric")
        M = (M + M.T) / 2
        lam = np.linalg.eigvalsh(M.imag)[0] if d else 0.0
        if lam < -1e-10:
            raise ValueError(f"Im M has eigenvalue {lam:.3e} < 0 (not a tempered Gaussian)")
        b = np.atleast_1d(np.asarray(self.b, dtype=complex)).reshape(d)
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", complex(self.c))

    @property
    def d(self) -> int:
        return self.M.shape[0]

    def __call__(self, x):
        """Evaluate at points ``x`` of shape ``(..., d)``."""
        x = np.asarray(x, dtype=float)
        if self.d == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        quad = np.einsum("...i,ij,...j->...", x, self.M, x) / 2
        return self.c * np.exp(1j * (quad + x @ self.b))

    def l2_norm_sq(self) -> float:
        """Closed-form ``||term||^2``; infinite unless ``Im M`` is positive definite."""
        ImM = self.M.imag
        if np.linalg.eigvalsh(ImM)[0] <= 1e-14:
            return float("inf")
        # |u|^2 = |c|^2 exp(-x^t ImM x - 2 Im(b)^t x)
        K = 2 * ImM
        v = -2 * self.b.imag
        val = (2 * np.pi) ** (self.d / 2) / np.sqrt(np.linalg.det(K)) * np.exp(0.5 * v @ np.linalg.solve(K, v))
        return float(abs(self.c) ** 2 * val)


@dataclass(frozen=True)
class GaussianChirpState:
    terms: tuple = field(default_factory=tuple)

    def __post_init__(self):
        terms = tuple(self.terms)
        if terms and len({t.d for t in terms}) != 1:
            raise ValueError("all terms must share the dimension")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def single(cls, M, b=None, c=1.0) -> "GaussianChirpState":
        M = np.atleast_2d(np.asarray(M, dtype=complex))
        d = M.shape[0]
        return cls((GaussianTerm(c, M, _vec(b, d)),))

    @classmethod
    def gaussian(cls, d: int = 1, width: float = 1.0, x0=None, xi0=None, c=1.0) -> "GaussianChirpState":
        """``c * exp(-|x - x0|^2 / (2 width^2) + i <xi0, x>)`` as a chirp term."""
        x0 = _vec(x0, d).astype(float)
        xi0 = _vec(xi0, d).astype(float)
        a = 1.0 / width ** 2
        M = 1j * a * np.eye(d)
        # -a|x-x0|^2/2 = i(<x, iaI x>/2) + a<x0,x> - a|x0|^2/2
        b = xi0 - 1j * a * x0
        c = c * np.exp(-a * (x0 @ x0) / 2)
        return cls((GaussianTerm(c, M, b),))

    @property
    def d(self) -> int:
        return self.terms[0].d

    def __call__(self, x):
        out = 0
        for t in self.terms:
            out = out + t(x)
        return out

    def __add__(self, other: "GaussianChirpState") -> "GaussianChirpState":
        return GaussianChirpState(self.terms + other.terms)

    def scaled(self, a: complex) -> "GaussianChirpState":
        return GaussianChirpState(tuple(GaussianTerm(a * t.c, t.M, t.b) for t in self.terms))

    def wave_front(self) -> ConeSet:
        """Union over terms of ``{(x, Re M x) : Im M x = 0}`` (real points of the graph)."""
        d = self.d
        subs = []
        for t in self.terms:
            K = null_space(t.M.imag)
            if K.shape[1] == 0:
                continue
            subs.append(SubspaceBasis.span(np.vstack([K, t.M.real @ K])))
        return ConeSet.of(2 * d, subs)

    def to_json(self) -> dict:
        return {
            "kind": "gaussian_chirp",
            "terms": [
                {
                    "c_re": t.c.real, "c_im": t.c.imag,
                    "M_re": t.M.real.tolist(), "M_im": t.M.imag.tolist(),
                    "b_re": t.b.real.tolist(), "b_im": t.b.imag.tolist(),
                }
                for t in self.terms
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "GaussianChirpState":
        terms = []
        for tj in obj["terms"]:
            M = np.asarray(tj["M_re"], dtype=float) + 1j * np.asarray(tj.get("M_im", 0.0), dtype=float)
            M = np.atleast_2d(M)
            d = M.shape[0]
            b = np.asarray(tj.get("b_re", np.zeros(d)), dtype=float) + 1j * np.asarray(tj.get("b_im", np.zeros(d)), dtype=float)
            c = complex(tj.get("c_re", 1.0), tj.get("c_im", 0.0))
            terms.append(GaussianTerm(c, M, b))
        return cls(tuple(terms))


LibraryDistribution = Delta | PlaneWave | Chirp | GaussianChirpState


def library_from_json(obj: dict) -> LibraryDistribution:
    """Parse one of ``delta``, ``plane_wave``, ``chirp``, ``gaussian_chirp``."""
    kind = obj.get("type", obj.get("kind"))
    if kind == "delta":
        return Delta(obj.get("x0", [0.0]))
    if kind == "plane_wave":
        return PlaneWave(obj.get("xi0", [0.0]))
    if kind == "chirp":
        return Chirp(obj["B"])
    if kind == "gaussian_chirp":
        return GaussianChirpState.from_json(obj)
    raise ValueError(f"unknown distribution type {kind!r}")
