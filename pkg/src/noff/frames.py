"""Nonorthogonal fusion frames: frame operators, tight constructions and completions."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy.linalg import subspace_angles

from .errors import (
    CoverageImpossible,
    DimensionMismatch,
    DimensionTooSmall,
    InternalContradiction,
    RankTooLarge,
)
from .projection import Projection
from .spectral import DEFAULT_TOL, SymmetricOperator, Tolerance, spectral_decompose
from .synthesis import _Spectrum, _two

__all__ = [
    "WeightedProjectionFrame",
    "FrameReport",
    "TwoProjectionCase",
    "TwoProjectionClassification",
    "frame_operator",
    "frame_bounds",
    "construct_tight_with_ranks",
    "complete_to_tight",
    "complete_to_tight_low_rank",
    "classify_two_projection_tight",
]

# residual on principal angles when comparing W1 cap W1* with W2 cap W2*
CORE_ANGLE_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class WeightedProjectionFrame:
    """Finite sequence of ``(weight, projection)`` pairs on ``R^dim``."""

    dim: int
    items: tuple[tuple[float, Projection], ...] = ()

    def __post_init__(self):
        items = tuple((float(v), p) for v, p in self.items)
        for v, p in items:
            if not v > 0:
                raise ValueError(f"weights must be strictly positive, got {v}")
            if p.dim != self.dim:
                raise DimensionMismatch(f"projection of dimension {p.dim} in a frame on R^{self.dim}")
        object.__setattr__(self, "items", items)

    @classmethod
    def unweighted(cls, dim: int, projections: Iterable[Projection]) -> "WeightedProjectionFrame":
        return cls(dim, tuple((1.0, p) for p in projections))

    @property
    def projections(self) -> list[Projection]:
        return [p for _, p in self.items]

    @property
    def weights(self) -> list[float]:
        return [v for v, _ in self.items]

    def extended(self, projections: Sequence[Projection]) -> "WeightedProjectionFrame":
        return WeightedProjectionFrame(self.dim, self.items + tuple((1.0, p) for p in projections))

    def __len__(self):
        return len(self.items)


def frame_operator(frame: WeightedProjectionFrame) -> SymmetricOperator:
    """``S = sum_i v_i^2 P_i.T @ P_i``; the empty frame gives the zero operator."""
    s = np.zeros((frame.dim, frame.dim))
    for v, p in frame.items:
        s += v * v * p.gram
    return SymmetricOperator(s)


@dataclass(frozen=True, eq=False)
class FrameReport:
    operator: SymmetricOperator
    lower: float
    upper: float
    is_frame: bool
    is_tight: bool
    tightness_ratio: float


def frame_bounds(frame: WeightedProjectionFrame, tol: Tolerance = DEFAULT_TOL) -> FrameReport:
    """Optimal frame bounds, the extreme eigenvalues of the frame operator."""
    return _report(frame_operator(frame), tol)


def _report(s: SymmetricOperator, tol: Tolerance) -> FrameReport:
    vals = spectral_decompose(s, tol).eigenvalues
    upper, lower = float(vals[0]), float(vals[-1])
    is_frame = lower > tol.zero_threshold(upper)
    ratio = upper / lower - 1.0 if is_frame else math.inf
    return FrameReport(s, lower, upper, is_frame, ratio <= tol.residual_rel, ratio)


class TightFrame(NamedTuple):
    frame: WeightedProjectionFrame
    bound: float


def _cyclic_blocks(n: int, ranks: Sequence[int]) -> list[list[int]]:
    blocks, start = [], 0
    for r in ranks:
        blocks.append([(start + t) % n for t in range(r)])
        start = (start + r) % n
    return blocks


def construct_tight_with_ranks(n: int, ranks: Sequence[int], tol: Tolerance = DEFAULT_TOL) -> TightFrame:
    """Unit-weight tight frame on ``R^n`` whose projections have the given ranks.

    Requires ``sum(ranks) >= n`` and every rank at most ``n/2``.  Coordinate
    index blocks are handed out cyclically (block ``i`` continues where block
    ``i - 1`` stopped), so together they cover ``{0, ..., n-1}``.  With
    ``c_j`` the number of blocks containing index ``j``, projection ``i``
    realizes ``diag(max(c) / c_j : j in block i)`` and the frame operator is
    ``max(c) * I``.
    """
    ranks = [int(r) for r in ranks]
    if any(r < 0 for r in ranks):
        raise ValueError("ranks must be non-negative")
    if sum(ranks) < n:
        raise CoverageImpossible(f"ranks sum to {sum(ranks)} < n = {n}")
    too_big = [r for r in ranks if 2 * r > n]
    if too_big:
        raise RankTooLarge(f"ranks {too_big} exceed n/2 = {n / 2}")
    blocks = _cyclic_blocks(n, ranks)
    counts = np.zeros(n)
    for b in blocks:
        counts[b] += 1
    lam = float(counts.max())
    projections = []
    for b in blocks:
        d = np.zeros(n)
        d[b] = lam / counts[b]
        sp = _Spectrum.of(np.diag(d), tol)
        projections.append(sp.realize(sp.nonzero))
    return TightFrame(WeightedProjectionFrame.unweighted(n, projections), lam)


def complete_to_tight(frame: WeightedProjectionFrame, tol: Tolerance = DEFAULT_TOL) -> TightFrame:
    """Add two unit-weight projections so the frame becomes tight.

    With ``S`` the current frame operator and ``lam = lambda_max(S) + 1``,
    the operator ``lam I - S`` has all eigenvalues at least 1 and one equal
    to 1, so it splits into two projections.
    """
    n = frame.dim
    if n < 2:
        raise DimensionTooSmall("completion needs n >= 2")
    s = frame_operator(frame)
    lam = float(spectral_decompose(s, tol).eigenvalues[0]) + 1.0
    p1, p2 = _two(_Spectrum.of(lam * np.eye(n) - s.entries, tol))
    return TightFrame(frame.extended([p1, p2]), lam)


def complete_to_tight_low_rank(frame: WeightedProjectionFrame, k: int, tol: Tolerance = DEFAULT_TOL) -> TightFrame:
    """Tight completion using ``ceil(n/k)`` added projections of rank at most ``k``.

    The descending eigenbasis of ``S`` is cut into contiguous blocks of ``k``
    indices (the last one possibly shorter) and ``(lam I - S)`` restricted
    to each block is realized by one projection.
    """
    n = frame.dim
    if k < 1:
        raise ValueError("k must be positive")
    if 2 * k > n:
        raise RankTooLarge(f"k = {k} exceeds n/2 = {n / 2}")
    s = frame_operator(frame)
    d = spectral_decompose(s, tol)
    lam = float(d.eigenvalues[0]) + 1.0
    # keep the descending order of S, not of lam - S
    sp = _Spectrum(lam - d.eigenvalues, d.eigenvectors, tol, sort=False)
    added = [sp.realize(list(range(start, min(start + k, n)))) for start in range(0, n, k)]
    return TightFrame(frame.extended(added), lam)


class TwoProjectionCase(str, enum.Enum):
    EQUAL_RANKS_HALF_N = "EqualRanksHalfN"
    UNEQUAL_RANKS_LAMBDA_ONE = "UnequalRanksLambdaOne"
    STRICT_SUM_LAMBDA_TWO = "StrictSumLambdaTwo"
    NOT_TIGHT = "NotTight"


@dataclass(frozen=True)
class TwoProjectionClassification:
    case_tag: TwoProjectionCase
    lam: float
    ranks: tuple[int, int]
    shared_core_dim: int


def _core(p: Projection, tol: Tolerance) -> np.ndarray:
    """Orthonormal basis of ``W cap W*``, the unit eigenspace of ``P.T P``."""
    sp = _Spectrum.of(p.gram, tol)
    return sp.vecs[:, [j for j in range(sp.n) if sp.near(j, 1.0)]]


def _intersection_dim(a: np.ndarray, b: np.ndarray) -> int:
    if a.shape[1] == 0 or b.shape[1] == 0:
        return 0
    s = np.linalg.svd(a.T @ b, compute_uv=False)
    return int(np.count_nonzero(s >= 1.0 - CORE_ANGLE_TOL))


def classify_two_projection_tight(p1: Projection, p2: Projection, tol: Tolerance = DEFAULT_TOL) -> TwoProjectionClassification:
    """Classify a pair of projections by whether ``P1'P1 + P2'P2 = lam I``.

    For a tight pair the rank sum is at least ``n``.  With equality either
    the ranks differ, ``lam = 1`` and both projections are orthogonal, or
    both ranks are ``n/2`` and ``lam >= 1``.  A strictly larger rank sum
    forces equal ranks, ``lam = 2`` and ``W1 cap W1* = W2 cap W2*``.  A tight
    pair that breaks these rules raises :class:`InternalContradiction`.
    """
    if p1.dim != p2.dim:
        raise DimensionMismatch(f"dimensions {p1.dim} and {p2.dim} differ")
    n = p1.dim
    s = p1.gram + p2.gram
    lam = float(np.trace(s)) / n
    ranks = (p1.rank, p2.rank)
    c1, c2 = _core(p1, tol), _core(p2, tol)
    shared = _intersection_dim(c1, c2)
    tight = lam > tol.zero_threshold(lam) and np.linalg.norm(s / lam - np.eye(n)) <= tol.residual_rel * math.sqrt(n)
    if not tight:
        return TwoProjectionClassification(TwoProjectionCase.NOT_TIGHT, lam, ranks, shared)

    band = tol.band(lam)
    r1, r2 = ranks
    if r1 + r2 < n:
        raise InternalContradiction(f"tight pair with rank sum {r1 + r2} < n = {n}")
    if r1 + r2 == n:
        if r1 != r2:
            if abs(lam - 1.0) > band or not (p1.is_orthogonal(1e-8) and p2.is_orthogonal(1e-8)):
                raise InternalContradiction(f"unequal ranks {ranks} but lam = {lam} or oblique factors")
            return TwoProjectionClassification(TwoProjectionCase.UNEQUAL_RANKS_LAMBDA_ONE, lam, ranks, shared)
        if lam < 1.0 - band:
            raise InternalContradiction(f"equal ranks n/2 with lam = {lam} < 1")
        return TwoProjectionClassification(TwoProjectionCase.EQUAL_RANKS_HALF_N, lam, ranks, shared)

    if r1 != r2 or abs(lam - 2.0) > band:
        raise InternalContradiction(f"rank sum {r1 + r2} > n but ranks {ranks}, lam = {lam}")
    if c1.shape[1] != c2.shape[1] or (c1.shape[1] and np.max(subspace_angles(c1, c2)) > CORE_ANGLE_TOL):
        raise InternalContradiction("the unit eigenspaces W1 cap W1* and W2 cap W2* differ")
    return TwoProjectionClassification(TwoProjectionCase.STRICT_SUM_LAMBDA_TWO, lam, ranks, shared)
