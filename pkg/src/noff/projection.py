"""Oblique projections and their associated subspaces."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DimensionMismatch, NotAProjection
from .spectral import DEFAULT_TOL, Tolerance, _readonly, is_projection

__all__ = ["Projection"]


@dataclass(frozen=True, eq=False)
class Projection:
    """An idempotent ``n x n`` real matrix ``P``.

    ``W = im P`` is spanned by :attr:`image_basis`, ``W* = im P.T`` by
    :attr:`coimage_basis` and ``ker P = (W*)^perp`` by :attr:`kernel_basis`.
    All three bases are orthonormal and come from one SVD of ``P``.  The zero
    matrix is a valid rank-0 projection.

    Construction validates idempotence against ``tol`` unless ``check`` is
    false.
    """

    matrix: np.ndarray
    tol: Tolerance = DEFAULT_TOL
    check: bool = True

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise DimensionMismatch(f"expected a non-empty square matrix, got shape {m.shape}")
        object.__setattr__(self, "matrix", _readonly(m))
        if self.check:
            ok, res = is_projection(m, self.tol)
            if not ok:
                raise NotAProjection(f"||P^2 - P||_F = {res:.3g} exceeds tolerance")

    # -- constructors -------------------------------------------------------
    @classmethod
    def zero(cls, n: int) -> "Projection":
        return cls(np.zeros((n, n)), check=False)

    @classmethod
    def identity(cls, n: int) -> "Projection":
        return cls(np.eye(n), check=False)

    @classmethod
    def orthogonal(cls, basis, dim: int | None = None) -> "Projection":
        """Orthogonal projection onto the span of the (linearly independent) columns."""
        b = np.asarray(basis, dtype=float)
        if b.ndim == 1:
            b = b[:, None]
        if b.shape[1] == 0:
            return cls.zero(dim if dim is not None else b.shape[0])
        q, _ = np.linalg.qr(b)
        return cls(q @ q.T)

    @classmethod
    def onto_along(cls, image, kernel) -> "Projection":
        """Projection onto ``span(image)`` along ``span(kernel)``.

        The two column sets must together form a basis of ``R^n``.
        """
        w = np.asarray(image, dtype=float)
        k = np.asarray(kernel, dtype=float)
        n = w.shape[0]
        if w.shape[1] == 0:
            return cls.zero(n)
        basis = np.hstack([w, k])
        if basis.shape != (n, n):
            raise DimensionMismatch("image and kernel dimensions must add up to n")
        coeffs = np.linalg.solve(basis, np.eye(n))[: w.shape[1]]
        return cls(w @ coeffs)

    # -- derived data -------------------------------------------------------
    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def _svd(self):
        return np.linalg.svd(self.matrix)

    @cached_property
    def rank(self) -> int:
        s = self._svd[1]
        if s.size == 0 or s[0] == 0.0:
            return 0
        # nonzero singular values of a projection are >= 1
        return int(np.count_nonzero(s > self.tol.zero_threshold(s[0])))

    @property
    def image_basis(self) -> np.ndarray:
        return self._svd[0][:, : self.rank]

    @property
    def coimage_basis(self) -> np.ndarray:
        return self._svd[2][: self.rank].T

    @property
    def kernel_basis(self) -> np.ndarray:
        return self._svd[2][self.rank :].T

    @cached_property
    def gram(self) -> np.ndarray:
        """``P.T @ P``."""
        g = self.matrix.T @ self.matrix
        return _readonly((g + g.T) / 2.0)

    @property
    def hs_norm_sq(self) -> float:
        return float(np.sum(self.matrix**2))

    def is_orthogonal(self, atol: float = 1e-10) -> bool:
        return bool(np.linalg.norm(self.matrix - self.matrix.T) <= atol * max(1.0, self.rank))

    def is_transversal(self) -> bool:
        """``(W*)^perp`` and ``W`` intersect only in zero."""
        stacked = np.hstack([self.kernel_basis, self.image_basis])
        if stacked.shape[1] == 0:
            return True
        s = np.linalg.svd(stacked, compute_uv=False)
        return bool(stacked.shape[1] == self.dim and s[-1] > 1e-10)

    def conjugate(self, g) -> "Projection":
        """``g.T @ P @ g`` for an orthogonal matrix ``g``."""
        g = np.asarray(g, dtype=float)
        return Projection(g.T @ self.matrix @ g, tol=self.tol)

    def __add__(self, other: "Projection") -> "Projection":
        return Projection(self.matrix + np.asarray(other.matrix), tol=self.tol)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)

    def __repr__(self):
        return f"Projection(dim={self.dim}, rank={self.rank})"
