"""Symmetric eigendecomposition, numerical rank and orthonormal completion.

Everything else in the package is built on these few primitives.  All
computation is over the reals and all values are immutable once built.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DimensionMismatch, InputNotOrthonormal, TargetTooLarge

__all__ = [
    "Tolerance",
    "DEFAULT_TOL",
    "SymmetricOperator",
    "SpectralDecomposition",
    "as_operator",
    "spectral_decompose",
    "numerical_rank",
    "complete_orthonormal",
    "is_projection",
    "fix_signs",
]

# residual below which a Gram-Schmidt candidate is considered dependent
_GS_SKIP = 1e-8


@dataclass(frozen=True)
class Tolerance:
    """Relative thresholds shared by every operation.

    Parameters
    ----------
    rank_rel : float
        Eigenvalues (or singular values) at or below
        ``rank_rel * max(1, scale)`` count as zero.
    residual_rel : float
        Relative residual accepted for identities such as ``P @ P == P``.
        It also sets the width of the bands used to decide that an
        eigenvalue "equals" 1 or 2.
    """

    rank_rel: float = 1e-10
    residual_rel: float = 1e-8

    def __post_init__(self):
        if not (self.rank_rel > 0 and self.residual_rel > 0):
            raise ValueError("tolerances must be strictly positive")

    def zero_threshold(self, scale: float) -> float:
        return self.rank_rel * max(1.0, abs(scale))

    def band(self, scale: float) -> float:
        """Half-width of the band around an exact eigenvalue such as 1 or 2."""
        return self.residual_rel * max(1.0, abs(scale))

    def residual_bound(self, scale: float) -> float:
        return self.residual_rel * max(1.0, abs(scale))

    @classmethod
    def from_env(cls, var: str = "NOFF_DEFAULT_TOL") -> "Tolerance":
        """Read defaults from ``var``.

        Accepted forms are ``"<rank_rel>,<residual_rel>"`` or a single number,
        which then replaces ``residual_rel`` only.
        """
        raw = os.environ.get(var, "").strip()
        if not raw:
            return cls()
        parts = [p.strip() for p in raw.split(",") if p.strip()]
        if len(parts) == 1:
            return cls(residual_rel=float(parts[0]))
        if len(parts) == 2:
            return cls(rank_rel=float(parts[0]), residual_rel=float(parts[1]))
        raise ValueError(f"cannot parse {var}={raw!r}")


DEFAULT_TOL = Tolerance()


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SymmetricOperator:
    """Real symmetric ``n x n`` matrix.

    The constructor symmetrizes its input, ``A <- (A + A.T) / 2``, so the
    stored matrix is exactly symmetric.  The spectral decomposition is
    computed on first access and cached.
    """

    entries: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise DimensionMismatch(f"expected a non-empty square matrix, got shape {a.shape}")
        object.__setattr__(self, "entries", _readonly((a + a.T) / 2.0))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @cached_property
    def spectral(self) -> "SpectralDecomposition":
        return spectral_decompose(self)

    @classmethod
    def zeros(cls, n: int) -> "SymmetricOperator":
        return cls(np.zeros((n, n)))

    @classmethod
    def identity(cls, n: int) -> "SymmetricOperator":
        return cls(np.eye(n))

    @classmethod
    def diag(cls, values) -> "SymmetricOperator":
        return cls(np.diag(np.asarray(values, dtype=float)))

    @classmethod
    def from_eigen(cls, eigenvalues, eigenvectors) -> "SymmetricOperator":
        q = np.asarray(eigenvectors, dtype=float)
        return cls((q * np.asarray(eigenvalues, dtype=float)) @ q.T)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    def __repr__(self):
        return f"SymmetricOperator(dim={self.dim})"


def as_operator(a) -> SymmetricOperator:
    """Coerce a matrix-like value to a :class:`SymmetricOperator`."""
    if isinstance(a, SymmetricOperator):
        return a
    return SymmetricOperator(np.asarray(a, dtype=float))


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Eigenvalues in non-increasing order with paired orthonormal columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    rank: int

    def __post_init__(self):
        object.__setattr__(self, "eigenvalues", _readonly(self.eigenvalues))
        object.__setattr__(self, "eigenvectors", _readonly(self.eigenvectors))

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def reconstruct(self) -> np.ndarray:
        q = self.eigenvectors
        return (q * self.eigenvalues) @ q.T


def fix_signs(q: np.ndarray) -> np.ndarray:
    """Flip columns so that each column's largest-magnitude entry is positive.

    Ties in magnitude resolve to the lowest row index.
    """
    q = np.array(q, dtype=float, copy=True)
    if q.size == 0:
        return q
    rows = np.argmax(np.abs(q), axis=0)
    signs = np.where(q[rows, np.arange(q.shape[1])] < 0, -1.0, 1.0)
    return q * signs


def spectral_decompose(a, tol: Tolerance = DEFAULT_TOL) -> SpectralDecomposition:
    """Eigendecomposition of a real symmetric matrix.

    Eigenvalues are returned in non-increasing order.  Each eigenvector is
    normalised so that its largest-magnitude entry is positive.  Diagonal
    input bypasses LAPACK: the eigenvectors are then exactly the standard
    basis vectors, ordered by decreasing diagonal value with ties broken by
    index.
    """
    op = as_operator(a)
    m = op.entries
    n = op.dim
    if np.count_nonzero(m - np.diag(np.diag(m))) == 0:
        d = np.diag(m)
        order = np.argsort(-d, kind="stable")
        vals = d[order]
        vecs = np.eye(n)[:, order]
    else:
        w, v = np.linalg.eigh(m)
        vals = w[::-1]
        vecs = fix_signs(v[:, ::-1])
    scale = np.max(np.abs(vals)) if n else 0.0
    rank = int(np.count_nonzero(np.abs(vals) > tol.zero_threshold(scale)))
    return SpectralDecomposition(vals, vecs, rank)


def numerical_rank(d: SpectralDecomposition, tol: Tolerance = DEFAULT_TOL) -> int:
    """Number of eigenvalues with ``|lambda| > rank_rel * max(1, lambda_1)``."""
    vals = np.asarray(d.eigenvalues)
    if vals.size == 0:
        return 0
    lead = np.max(np.abs(vals))
    return int(np.count_nonzero(np.abs(vals) > tol.zero_threshold(lead)))


def complete_orthonormal(partial, target_count: int, dim: int | None = None) -> np.ndarray:
    """Extend an orthonormal set to ``target_count`` orthonormal vectors.

    Parameters
    ----------
    partial : array_like, shape (n, p)
        Orthonormal columns; may have ``p == 0`` in which case ``dim`` is
        required.  A sequence of vectors is also accepted.
    target_count : int
        Number of columns in the result.
    dim : int, optional
        Ambient dimension when it cannot be read from ``partial``.

    Returns
    -------
    ndarray, shape (n, target_count)
        The input columns unchanged, followed by new columns obtained by
        Gram-Schmidt on the standard basis vectors taken in index order.
        Candidates whose residual norm falls below 1e-8 are skipped and each
        new column has its largest-magnitude entry made positive.
    """
    q = _as_columns(partial, dim)
    n, p = q.shape
    if target_count > n:
        raise TargetTooLarge(f"cannot fit {target_count} orthonormal vectors in R^{n}")
    if target_count < p:
        raise ValueError(f"target_count {target_count} is smaller than the input size {p}")
    if p and np.max(np.abs(q.T @ q - np.eye(p))) > 1e-10:
        raise InputNotOrthonormal("input vectors are not orthonormal within 1e-10")
    cols = [q[:, j] for j in range(p)]
    basis = np.eye(n)
    for i in range(n):
        if len(cols) >= target_count:
            break
        v = basis[:, i].copy()
        # two passes of classical Gram-Schmidt keep the result orthogonal to 1e-16
        for _ in range(2):
            for c in cols:
                v -= (c @ v) * c
        r = np.linalg.norm(v)
        if r < _GS_SKIP:
            continue
        cols.append(fix_signs((v / r)[:, None])[:, 0])
    out = np.column_stack(cols) if cols else np.zeros((n, 0))
    return out


def _as_columns(partial, dim: int | None) -> np.ndarray:
    if isinstance(partial, np.ndarray) and partial.ndim == 2:
        q = np.asarray(partial, dtype=float)
    else:
        vecs = [np.asarray(v, dtype=float).ravel() for v in partial]
        if vecs:
            q = np.column_stack(vecs)
        else:
            if dim is None:
                raise ValueError("dim is required when the partial set is empty")
            q = np.zeros((dim, 0))
    if dim is not None and q.shape[0] != dim:
        raise DimensionMismatch(f"vectors have length {q.shape[0]}, expected {dim}")
    return q


def is_projection(m, tol: Tolerance = DEFAULT_TOL) -> tuple[bool, float]:
    """Check idempotence.

    Returns ``(flag, residual)`` with ``residual = ||M @ M - M||_F`` and
    ``flag`` true when the residual is at most
    ``residual_rel * max(1, ||M||_F)``.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    residual = float(np.linalg.norm(m @ m - m))
    return residual <= tol.residual_bound(np.linalg.norm(m)), residual
