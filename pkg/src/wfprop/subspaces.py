"""Real linear subspaces and finite unions of them (conic sets).

Every exact cone produced by this package is a finite union of real linear
subspaces of phase space, with the origin removed implicitly. The helpers
here keep orthonormal bases and do all kernel, image and intersection work
through SVD thresholding.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

#: Relative singular-value threshold used for kernels and ranks.
RANK_TOL = 1e-10


def _as_real(M) -> np.ndarray:
    M = np.asarray(M)
    if np.iscomplexobj(M):
        if np.max(np.abs(M.imag), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(M), initial=0.0)):
            raise ValueError("expected a real matrix")
        M = M.real
    return np.asarray(M, dtype=float)


def orth(M, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis (columns) of the column span of ``M``."""
    M = np.atleast_2d(np.asarray(M))
    n = M.shape[0]
    if M.size == 0 or M.shape[1] == 0:
        return np.zeros((n, 0), dtype=M.dtype if np.iscomplexobj(M) else float)
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((n, 0), dtype=U.dtype)
    rank = int(np.sum(s > tol * s[0]))
    return U[:, :rank]


def null_space(M, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis of ``{v : M v = 0}``.

    Singular values below ``tol * sigma_max`` count as zero. A zero matrix
    has the full space as kernel.
    """
    M = np.atleast_2d(np.asarray(M))
    n = M.shape[1]
    if M.shape[0] == 0:
        return np.eye(n, dtype=M.dtype if np.iscomplexobj(M) else float)
    _, s, Vh = np.linalg.svd(M, full_matrices=True)
    smax = s[0] if s.size else 0.0
    if smax == 0.0:
        return np.eye(n, dtype=Vh.dtype)
    rank = int(np.sum(s > tol * smax))
    return Vh[rank:].conj().T


@dataclass(frozen=True)
class SubspaceBasis:
    """A real subspace of R^n given by an orthonormal basis ``B`` (n x k)."""

    n: int
    B: np.ndarray

    def __post_init__(self):
        B = _as_real(self.B).reshape(self.n, -1)
        k = B.shape[1]
        if k and np.max(np.abs(B.T @ B - np.eye(k))) > 1e-10:
            raise ValueError("basis columns are not orthonormal")
        B.setflags(write=False)
        object.__setattr__(self, "B", B)

    @classmethod
    def span(cls, vectors, tol: float = RANK_TOL) -> "SubspaceBasis":
        """Subspace spanned by the columns of ``vectors``."""
        V = _as_real(vectors)
        if V.ndim == 1:
            V = V[:, None]
        return cls(V.shape[0], orth(V, tol))

    @classmethod
    def kernel(cls, M, tol: float = RANK_TOL) -> "SubspaceBasis":
        M = _as_real(M)
        return cls(M.shape[1], null_space(M, tol))

    @classmethod
    def full(cls, n: int) -> "SubspaceBasis":
        return cls(n, np.eye(n))

    @classmethod
    def zero(cls, n: int) -> "SubspaceBasis":
        return cls(n, np.zeros((n, 0)))

    @property
    def dim(self) -> int:
        return self.B.shape[1]

    def projector(self) -> np.ndarray:
        return self.B @ self.B.T

    def complement(self) -> "SubspaceBasis":
        return SubspaceBasis(self.n, null_space(self.B.T) if self.dim else np.eye(self.n))

    def image(self, A, tol: float = RANK_TOL) -> "SubspaceBasis":
        """``A`` applied to the subspace (``A`` real, m x n)."""
        A = _as_real(A)
        if self.dim == 0:
            return SubspaceBasis.zero(A.shape[0])
        return SubspaceBasis(A.shape[0], orth(A @ self.B, tol))

    def intersect(self, other: "SubspaceBasis", tol: float = RANK_TOL) -> "SubspaceBasis":
        """Intersection via the nullspace of the stacked complement constraints."""
        _check_ambient(self, other)
        if self.dim == 0 or other.dim == 0:
            return SubspaceBasis.zero(self.n)
        C = np.vstack([self.complement().B.T, other.complement().B.T])
        if C.shape[0] == 0:
            return SubspaceBasis(self.n, self.B.copy())
        _, s, Vh = np.linalg.svd(C, full_matrices=True)
        # complement rows are orthonormal blockwise, so an absolute scale is meaningful
        rank = int(np.sum(s > 1e-8))
        return SubspaceBasis(self.n, Vh[rank:].T)

    def contains(self, other: "SubspaceBasis", tol: float = 1e-8) -> bool:
        """True if ``other`` lies inside this subspace (within ``tol``)."""
        _check_ambient(self, other)
        if other.dim == 0:
            return True
        if other.dim > self.dim:
            return False
        resid = other.B - self.B @ (self.B.T @ other.B)
        return float(np.linalg.norm(resid, 2)) <= tol

    def distance_angle(self, v) -> float:
        """Angle (radians) between the line through ``v`` and this subspace."""
        v = np.asarray(v, dtype=float)
        v = v / np.linalg.norm(v)
        if self.dim == 0:
            return np.pi / 2
        perp = v - self.B @ (self.B.T @ v)
        return float(np.arcsin(min(1.0, np.linalg.norm(perp))))

    def same_as(self, other: "SubspaceBasis", tol: float = 1e-8) -> bool:
        if self.dim != other.dim:
            return False
        return self.dim == 0 or float(np.max(principal_angles(self, other))) <= tol

    def to_json(self) -> dict:
        return {"ambient": self.n, "basis": self.B.T.tolist()}


def _check_ambient(a: SubspaceBasis, b: SubspaceBasis) -> None:
    if a.n != b.n:
        raise ValueError(f"ambient dimensions differ: {a.n} vs {b.n}")


def principal_angles(U: SubspaceBasis, V: SubspaceBasis) -> np.ndarray:
    """Principal angles in radians, ``min(dim U, dim V)`` of them.

    Uses the sine-based formula on the projection residual, which stays
    accurate for tiny angles where ``arccos`` of the cosines would not.
    """
    _check_ambient(U, V)
    k = min(U.dim, V.dim)
    if k == 0:
        return np.zeros(0)
    A, B = (U, V) if U.dim <= V.dim else (V, U)
    resid = A.B - B.B @ (B.B.T @ A.B)
    s = np.linalg.svd(resid, compute_uv=False)
    s = np.sort(np.clip(s, 0.0, 1.0))
    return np.arcsin(s[:k])


@dataclass(frozen=True)
class ConeSet:
    """Closed conic subset of R^n: a union of subspaces, origin understood removed.

    ``members`` empty means the empty cone.
    """

    n: int
    members: tuple = field(default_factory=tuple)

    def __post_init__(self):
        members = tuple(self.members)
        for m in members:
            if m.n != self.n:
                raise ValueError("all member subspaces must share the ambient dimension")
        object.__setattr__(self, "members", members)

    @classmethod
    def of(cls, n: int, subspaces: Iterable[SubspaceBasis]) -> "ConeSet":
        return cls(n, tuple(subspaces)).pruned()

    @classmethod
    def empty(cls, n: int) -> "ConeSet":
        return cls(n, ())

    @classmethod
    def full(cls, n: int) -> "ConeSet":
        return cls(n, (SubspaceBasis.full(n),))

    @property
    def is_empty(self) -> bool:
        return all(m.dim == 0 for m in self.members)

    def pruned(self, tol: float = 1e-8) -> "ConeSet":
        """Drop zero members and members contained in other members."""
        ms = sorted((m for m in self.members if m.dim > 0), key=lambda m: -m.dim)
        kept: list[SubspaceBasis] = []
        for m in ms:
            if not any(k.contains(m, tol) for k in kept):
                kept.append(m)
        return ConeSet(self.n, tuple(kept))

    def intersect(self, sub: SubspaceBasis) -> "ConeSet":
        return ConeSet.of(self.n, (m.intersect(sub) for m in self.members))

    def image(self, A) -> "ConeSet":
        A = _as_real(A)
        return ConeSet.of(A.shape[0], (m.image(A) for m in self.members))

    def union(self, other: "ConeSet") -> "ConeSet":
        if other.n != self.n:
            raise ValueError("ambient dimensions differ")
        return ConeSet.of(self.n, self.members + other.members)

    def distance_angle(self, v) -> float:
        """Angle (radians) from direction ``v`` to the nearest member."""
        if self.is_empty:
            return np.pi / 2
        return min(m.distance_angle(v) for m in self.members if m.dim > 0)

    def contains_cone(self, other: "ConeSet", tol: float = 1e-8) -> bool:
        """Every member of ``other`` sits inside some member of ``self``."""
        return all(any(k.contains(m, tol) for k in self.members) for m in other.pruned().members)

    def same_as(self, other: "ConeSet", tol: float = 1e-8) -> bool:
        return self.contains_cone(other, tol) and other.contains_cone(self, tol)

    def max_mismatch_angle(self, other: "ConeSet") -> float:
        """Largest principal angle needed to match members one to one (radians).

        Returns ``inf`` when member counts or dimensions cannot be paired.
        """
        a, b = self.pruned().members, other.pruned().members
        if len(a) != len(b):
            return float("inf")
        worst = 0.0
        used: set[int] = set()
        for m in a:
            best, best_j = float("inf"), -1
            for j, k in enumerate(b):
                if j in used or k.dim != m.dim:
                    continue
                ang = float(np.max(principal_angles(m, k))) if m.dim else 0.0
                if ang < best:
                    best, best_j = ang, j
            if best_j < 0:
                return float("inf")
            used.add(best_j)
            worst = max(worst, best)
        return worst

    def to_json(self) -> dict:
        return {"ambient": self.n, "bases": [m.B.T.tolist() for m in self.members]}

    @classmethod
    def from_json(cls, obj: dict) -> "ConeSet":
        n = int(obj["ambient"])
        subs = []
        for vecs in obj["bases"]:
            V = np.asarray(vecs, dtype=float).reshape(-1, n).T
            subs.append(SubspaceBasis.span(V))
        return cls.of(n, subs)


def stack_kernel(blocks: Sequence[np.ndarray], tol: float = RANK_TOL) -> SubspaceBasis:
    """Common real kernel of several matrices, each rescaled to unit norm first."""
    rows = []
    n = None
    for M in blocks:
        M = _as_real(M)
        n = M.shape[1]
        nrm = np.linalg.norm(M, 2)
        if nrm > 0:
            rows.append(M / nrm)
    if n is None:
        raise ValueError("no constraint blocks")
    if not rows:
        return SubspaceBasis.full(n)
    return SubspaceBasis(n, null_space(np.vstack(rows), tol))
