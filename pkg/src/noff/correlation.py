"""Correlation of operator families: simplex bound and equiangular families.

A tight frame with bound ``lam`` yields the POVM ``T_i = v_i^2 P_i.T P_i / lam``.
For PSD families normalized to total trace ``n`` the largest pairwise
Hilbert-Schmidt inner product is at least
``(n - sum_i <T_i, T_i>) / (m (m - 1))``, with equality exactly for
equiangular families that sum to the identity.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import DimensionMismatch, NeedAtLeastTwo, NotPositive, NotTight, ZeroTrace
from .frames import WeightedProjectionFrame, frame_bounds
from .spectral import DEFAULT_TOL, SymmetricOperator, Tolerance, as_operator

__all__ = [
    "Field",
    "PovmFamily",
    "SimplexReport",
    "povm_from_frame",
    "scale_trace",
    "hs_gram",
    "max_correlation",
    "simplex_bound",
    "equiangularity_check",
    "equiangular_count_bound",
    "linear_independence_check",
]

EQUALITY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class PovmFamily:
    """Finite family of positive semidefinite operators on ``R^dim``."""

    dim: int
    items: tuple[SymmetricOperator, ...]
    tol: Tolerance = DEFAULT_TOL

    def __post_init__(self):
        items = tuple(as_operator(t) for t in self.items)
        for t in items:
            if t.dim != self.dim:
                raise DimensionMismatch(f"operator of dimension {t.dim} in a family on R^{self.dim}")
            vals = t.spectral.eigenvalues
            if vals[-1] < -self.tol.zero_threshold(vals[0]):
                raise NotPositive(f"family member has eigenvalue {vals[-1]:.6g}")
        object.__setattr__(self, "items", items)

    @classmethod
    def of(cls, matrices: Iterable, tol: Tolerance = DEFAULT_TOL) -> "PovmFamily":
        items = tuple(as_operator(m) for m in matrices)
        if not items:
            raise ValueError("empty family; pass dim explicitly")
        return cls(items[0].dim, items, tol)

    @property
    def stack(self) -> np.ndarray:
        return np.array([t.entries for t in self.items]).reshape(len(self.items), self.dim, self.dim)

    @property
    def trace_total(self) -> float:
        return float(sum(np.trace(t.entries) for t in self.items))

    def total(self) -> np.ndarray:
        return self.stack.sum(axis=0)

    def __len__(self):
        return len(self.items)


def povm_from_frame(frame: WeightedProjectionFrame, tol: Tolerance = DEFAULT_TOL) -> PovmFamily:
    """Normalize a tight frame to a POVM, ``T_i = v_i^2 P_i.T P_i / lam``."""
    report = frame_bounds(frame, tol)
    if not report.is_tight:
        raise NotTight(f"frame bounds {report.lower:.6g}, {report.upper:.6g} differ")
    lam = float(np.trace(report.operator.entries)) / frame.dim
    items = tuple(SymmetricOperator(v * v * p.gram / lam) for v, p in frame.items)
    return PovmFamily(frame.dim, items, tol)


def scale_trace(family: PovmFamily) -> PovmFamily:
    """Rescale all members so the traces add up to ``n``."""
    total = family.trace_total
    if not total > 0:
        raise ZeroTrace("family has zero total trace")
    f = family.dim / total
    return PovmFamily(family.dim, tuple(SymmetricOperator(t.entries * f) for t in family.items), family.tol)


def hs_gram(family: PovmFamily) -> np.ndarray:
    """Gram matrix ``G_ij = trace(T_i.T T_j)``."""
    a = family.stack.reshape(len(family), -1)
    return a @ a.T


def _off_diagonal(g: np.ndarray) -> np.ndarray:
    i, j = np.triu_indices(g.shape[0], k=1)
    return g[i, j]


def max_correlation(family: PovmFamily) -> tuple[float, tuple[int, int]]:
    """Largest pairwise inner product and the first (lexicographic, 0-based) pair attaining it."""
    m = len(family)
    if m < 2:
        raise NeedAtLeastTwo("need at least two operators")
    g = hs_gram(family)
    best, pair = -np.inf, (0, 1)
    for i in range(m):
        for j in range(i + 1, m):
            if g[i, j] > best:
                best, pair = float(g[i, j]), (i, j)
    return best, pair


@dataclass(frozen=True)
class SimplexReport:
    max_corr: float
    bound: float
    equality: bool
    equiangular: bool
    resolves_identity: bool
    rescaled: bool

    @property
    def gap(self) -> float:
        return self.max_corr - self.bound

    @property
    def consistent(self) -> bool:
        """Equality flag agrees with the independent characterization."""
        return self.equality == (self.equiangular and self.resolves_identity)


def simplex_bound(family: PovmFamily, tol: Tolerance = DEFAULT_TOL) -> SimplexReport:
    """Compare the maximal correlation with the simplex lower bound.

    The family is first rescaled to total trace ``n`` when it is not already
    (``rescaled`` records this).  Equality is declared when
    ``|max_corr - bound| <= 1e-10 * max(1, |bound|)``.
    """
    m = len(family)
    if m < 2:
        raise NeedAtLeastTwo("need at least two operators")
    n = family.dim
    rescaled = abs(family.trace_total - n) > EQUALITY_TOL * n
    if rescaled:
        family = scale_trace(family)
    g = hs_gram(family)
    bound = (n - float(np.trace(g))) / (m * (m - 1))
    max_corr, _ = max_correlation(family)
    equality = abs(max_corr - bound) <= EQUALITY_TOL * max(1.0, abs(bound))
    equiangular, _ = equiangularity_check(family)
    resolves = bool(np.linalg.norm(family.total() - np.eye(n)) <= tol.residual_rel * np.sqrt(n))
    return SimplexReport(max_corr, bound, bool(equality), equiangular, resolves, bool(rescaled))


def equiangularity_check(family: PovmFamily, tol: Tolerance = DEFAULT_TOL) -> tuple[bool, float | None]:
    """Whether all pairwise inner products coincide; returns their mean if so."""
    if len(family) < 2:
        raise NeedAtLeastTwo("need at least two operators")
    off = _off_diagonal(hs_gram(family))
    mean = float(off.mean())
    flag = float(np.max(np.abs(off - mean))) <= EQUALITY_TOL * max(1.0, abs(mean))
    return bool(flag), (mean if flag else None)


class Field(str, enum.Enum):
    REAL = "real"
    COMPLEX = "complex"


def equiangular_count_bound(n: int, field: Field | str = Field.REAL) -> int:
    """Maximal size of an equiangular, equal-norm POVM on an ``n``-dimensional space.

    ``n (n + 1) / 2`` over the reals (dimension of the symmetric matrices),
    ``n^2`` over the complex numbers.
    """
    if n < 1:
        raise ValueError("n must be positive")
    field = Field(str(field).lower()) if not isinstance(field, Field) else field
    return n * (n + 1) // 2 if field is Field.REAL else n * n


def linear_independence_check(family: PovmFamily, tol: Tolerance = DEFAULT_TOL) -> bool:
    """True when the Gram matrix has smallest eigenvalue above ``1e-10 * lambda_max``."""
    if len(family) == 0:
        return True
    w = np.linalg.eigvalsh(hs_gram(family))
    return bool(w[-1] > 0 and w[0] > EQUALITY_TOL * w[-1])
