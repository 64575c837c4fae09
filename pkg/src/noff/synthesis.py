"""Realize positive operators as ``P.T @ P`` for oblique projections ``P``.

The central construction: if ``T`` has rank ``k <= n/2`` and every nonzero
eigenvalue ``lambda_j >= 1`` with eigenvectors ``e_j``, then for any
orthonormal ``e_{k+1}, ..., e_{2k}`` orthogonal to ``im T`` the projection
onto ``span{e_j + sqrt(lambda_j - 1) e_{j+k}}`` along ``(im T)^perp``
satisfies ``P.T @ P == T``, and every such ``P`` arises this way.  The other
operations reduce larger ranks, weights, sums of two or three projections and
indefinite operators to that case.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import (
    DimensionMismatch,
    EigenvalueBelowOne,
    Infeasible,
    InfeasibleWeighted,
    NotConstructible,
    NotPositive,
    RankTooLarge,
    ZeroOperator,
)
from .projection import Projection
from .spectral import (
    DEFAULT_TOL,
    Tolerance,
    as_operator,
    complete_orthonormal,
    is_projection,
    spectral_decompose,
)

__all__ = [
    "FeasibilityReason",
    "FeasibilityReport",
    "WeightedProjection",
    "TwoWeighted",
    "IndefiniteDecomposition",
    "synthesize_projection",
    "sample_omega_member",
    "omega_membership",
    "split_unit_eigenspace",
    "feasibility_high_rank",
    "synthesize_single_high_rank",
    "synthesize_weighted",
    "synthesize_two_projections",
    "synthesize_two_weighted",
    "synthesize_three_projections",
    "decompose_indefinite",
]


class _Spectrum:
    """Eigen-data of a symmetric operator, sorted descending, with bands."""

    def __init__(self, vals, vecs, tol: Tolerance, sort: bool = True):
        vals = np.asarray(vals, dtype=float)
        vecs = np.asarray(vecs, dtype=float)
        order = np.argsort(-vals, kind="stable") if sort else np.arange(vals.shape[0])
        self.vals = vals[order]
        self.vecs = vecs[:, order]
        self.n = self.vals.shape[0]
        self.tol = tol
        self.lead = float(np.max(np.abs(self.vals))) if self.n else 0.0
        self.zero_thr = tol.zero_threshold(self.lead)
        self.band = tol.band(self.lead)

    @classmethod
    def of(cls, t, tol: Tolerance) -> "_Spectrum":
        d = spectral_decompose(as_operator(t), tol)
        return cls(d.eigenvalues, d.eigenvectors, tol)

    def scaled(self, factor: float) -> "_Spectrum":
        return _Spectrum(self.vals * factor, self.vecs, self.tol)

    def is_zero(self, j) -> bool:
        return abs(self.vals[j]) <= self.zero_thr

    def near(self, j, c: float) -> bool:
        return abs(self.vals[j] - c) <= self.band

    @property
    def nonzero(self) -> list[int]:
        return [j for j in range(self.n) if self.vals[j] > self.zero_thr]

    def require_positive(self):
        if self.n and self.vals[-1] < -self.zero_thr:
            raise NotPositive(f"smallest eigenvalue {self.vals[-1]:.6g} is negative")

    def require_at_least_one(self):
        for j in self.nonzero:
            if self.vals[j] < 1.0 - self.band:
                raise EigenvalueBelowOne(
                    f"nonzero eigenvalue {self.vals[j]:.6g} is below 1"
                )

    def coefficient(self, j) -> float:
        """``sqrt(lambda_j - 1)``, exactly zero inside the unit band."""
        if self.near(j, 1.0):
            return 0.0
        return float(np.sqrt(max(self.vals[j] - 1.0, 0.0)))

    def realize(self, idx, avoid=None, aux=None) -> Projection:
        """Projection with ``P.T P = sum_{j in idx} lambda_j e_j e_j^T``.

        Zero eigenvalues in ``idx`` are dropped.  Auxiliary directions are
        taken orthogonal to the used eigenvectors and to ``avoid``; they are
        deterministic unless ``aux`` is supplied.
        """
        idx = [j for j in idx if self.vals[j] > self.zero_thr]
        if not idx:
            return Projection.zero(self.n)
        e = self.vecs[:, idx]
        k = len(idx)
        if aux is None:
            fixed = e if avoid is None or avoid.shape[1] == 0 else np.hstack([e, avoid])
            aux = complete_orthonormal(fixed, fixed.shape[1] + k)[:, fixed.shape[1] :]
        c = np.array([self.coefficient(j) for j in idx])
        return Projection((e + aux * c) @ e.T, tol=self.tol)


# --------------------------------------------------------------------------
# single projection, rank <= n/2


def _low_rank_checks(sp: _Spectrum) -> list[int]:
    sp.require_positive()
    idx = sp.nonzero
    if 2 * len(idx) > sp.n:
        raise RankTooLarge(f"rank {len(idx)} exceeds n/2 = {sp.n / 2}")
    sp.require_at_least_one()
    return idx


def synthesize_projection(t, tol: Tolerance = DEFAULT_TOL) -> Projection:
    """Deterministic member of ``Omega(T) = {P : P^2 = P, P.T P = T}``.

    Requires ``T`` positive semidefinite with rank at most ``n/2`` and all
    nonzero eigenvalues at least 1.  The auxiliary orthonormal directions are
    chosen by :func:`~noff.spectral.complete_orthonormal`.

    Raises
    ------
    RankTooLarge, EigenvalueBelowOne, NotPositive
    """
    sp = _Spectrum.of(t, tol)
    idx = _low_rank_checks(sp)
    return sp.realize(idx)


def _haar_complement(e: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthonormal ``k``-frame inside ``span(e)^perp``."""
    n = e.shape[0]
    g = rng.standard_normal((n, k))
    for _ in range(2):
        g -= e @ (e.T @ g)
    q, r = np.linalg.qr(g)
    return q * np.where(np.diag(r) < 0, -1.0, 1.0)


def sample_omega_member(t, seed: int, tol: Tolerance = DEFAULT_TOL) -> Projection:
    """Random member of ``Omega(T)``.

    Same construction as :func:`synthesize_projection` but the auxiliary
    directions are a seeded Haar-random orthonormal set in ``(im T)^perp``.
    """
    sp = _Spectrum.of(t, tol)
    idx = _low_rank_checks(sp)
    if not idx:
        return Projection.zero(sp.n)
    rng = np.random.default_rng(seed)
    aux = _haar_complement(sp.vecs[:, idx], len(idx), rng)
    return sp.realize(idx, aux=aux)


def omega_membership(p, t, tol: Tolerance = DEFAULT_TOL) -> bool:
    """True when ``p`` is idempotent and ``p.T @ p`` matches ``t``."""
    pm = np.asarray(p, dtype=float)
    tm = np.asarray(as_operator(t).entries)
    if pm.shape != tm.shape:
        raise DimensionMismatch(f"projection shape {pm.shape} vs operator shape {tm.shape}")
    ok, _ = is_projection(pm, tol)
    if not ok:
        return False
    return bool(np.linalg.norm(pm.T @ pm - tm) <= tol.residual_bound(np.linalg.norm(tm)))


def split_unit_eigenspace(p: Projection, tol: Tolerance = DEFAULT_TOL) -> tuple[Projection, Projection]:
    """Split ``P = P' + pi`` where ``pi`` projects orthogonally onto ``W cap W*``.

    ``W cap W*`` is the eigenvalue-1 eigenspace of ``P.T @ P``; every nonzero
    eigenvalue of ``P'.T @ P'`` is then strictly above 1.
    """
    if not isinstance(p, Projection):
        p = Projection(p, tol=tol)
    sp = _Spectrum.of(p.gram, tol)
    unit = [j for j in range(sp.n) if sp.near(j, 1.0)]
    u = sp.vecs[:, unit]
    pi = u @ u.T
    return Projection(p.matrix - pi, tol=tol), Projection(pi, tol=tol)


# --------------------------------------------------------------------------
# rank > n/2


class FeasibilityReason(str, enum.Enum):
    FEASIBLE = "feasible"
    EIGENVALUE_BELOW_ONE = "eigenvalue_below_one"
    COUNT_CONDITION = "count_condition"


@dataclass(frozen=True)
class FeasibilityReport:
    """Outcome of the single-projection feasibility test.

    ``counts`` holds the number of eigenvalues above 1, equal to 1 and equal
    to 0 (band classified); ``below_one`` counts nonzero eigenvalues below
    the unit band.
    """

    feasible: bool
    counts: tuple[int, int, int]
    below_one: int
    reason: FeasibilityReason

    @property
    def n(self) -> int:
        return sum(self.counts) + self.below_one


def _classify(sp: _Spectrum) -> tuple[list[int], list[int], list[int], list[int]]:
    greater, unit, zero, below = [], [], [], []
    for j in range(sp.n):
        if sp.is_zero(j):
            zero.append(j)
        elif sp.near(j, 1.0):
            unit.append(j)
        elif sp.vals[j] > 1.0:
            greater.append(j)
        else:
            below.append(j)
    return greater, unit, zero, below


def _feasibility(sp: _Spectrum) -> FeasibilityReport:
    sp.require_positive()
    greater, unit, zero, below = _classify(sp)
    counts = (len(greater), len(unit), len(zero))
    if below:
        reason = FeasibilityReason.EIGENVALUE_BELOW_ONE
    elif len(greater) > len(zero):
        reason = FeasibilityReason.COUNT_CONDITION
    else:
        reason = FeasibilityReason.FEASIBLE
    return FeasibilityReport(reason is FeasibilityReason.FEASIBLE, counts, len(below), reason)


def feasibility_high_rank(t, tol: Tolerance = DEFAULT_TOL) -> FeasibilityReport:
    """Decide whether ``T = P.T @ P`` has a solution.

    Feasible exactly when every nonzero eigenvalue is at least 1 and the
    number of eigenvalues above 1 does not exceed the number of zero
    eigenvalues.  For rank at most ``n/2`` the count condition holds
    automatically.
    """
    return _feasibility(_Spectrum.of(t, tol))


def _single_high_rank(sp: _Spectrum) -> Projection:
    report = _feasibility(sp)
    if not report.feasible:
        raise Infeasible(f"no projection realizes this operator ({report.reason.value}, counts={report.counts})")
    greater, unit, _, _ = _classify(sp)
    e3 = sp.vecs[:, unit]
    # auxiliary directions must avoid the unit eigenspace so that P' pi = pi P' = 0
    p_prime = sp.realize(greater, avoid=e3)
    return Projection(p_prime.matrix + e3 @ e3.T, tol=sp.tol)


def synthesize_single_high_rank(t, tol: Tolerance = DEFAULT_TOL) -> Projection:
    """``P`` with ``P.T @ P = T`` for any feasible ``T``, including rank > n/2.

    The part of ``T`` on eigenvalues above 1 is realized by the low-rank
    construction and the orthogonal projection onto the eigenvalue-1
    eigenspace is added to it.
    """
    return _single_high_rank(_Spectrum.of(t, tol))


class WeightedProjection(NamedTuple):
    weight: float
    projection: Projection


def synthesize_weighted(t, tol: Tolerance = DEFAULT_TOL) -> WeightedProjection:
    """Find ``v > 0`` and ``P`` with ``v**2 * P.T @ P = T``.

    ``v`` is the square root of the smallest nonzero eigenvalue.  For rank
    above ``n/2`` this needs the number of eigenvalues exceeding the smallest
    nonzero one to be at most the number of zero eigenvalues.
    """
    sp = _Spectrum.of(t, tol)
    sp.require_positive()
    idx = sp.nonzero
    if not idx:
        raise ZeroOperator("the zero operator has no weighted factorization")
    lam_k = float(sp.vals[idx[-1]])
    scaled = sp.scaled(1.0 / lam_k)
    if 2 * len(idx) <= sp.n:
        return WeightedProjection(float(np.sqrt(lam_k)), scaled.realize(idx))
    try:
        p = _single_high_rank(scaled)
    except Infeasible as exc:
        raise InfeasibleWeighted(str(exc)) from None
    return WeightedProjection(float(np.sqrt(lam_k)), p)


# --------------------------------------------------------------------------
# sums of two or three projections


def _halves(idx: list[int]) -> tuple[list[int], list[int]]:
    h = (len(idx) + 1) // 2
    return idx[:h], idx[h:]


def _two(sp: _Spectrum) -> tuple[Projection, Projection]:
    sp.require_positive()
    sp.require_at_least_one()
    n = sp.n
    everything = list(range(n))
    if n % 2 == 0:
        first, second = _halves(everything)
        return sp.realize(first), sp.realize(second)

    zeros = [j for j in everything if sp.is_zero(j)]
    if zeros:
        j0 = zeros[-1]
        first, second = _halves([j for j in everything if j != j0])
        return sp.realize(first), sp.realize(second)

    units = [j for j in everything if sp.near(j, 1.0)]
    if units:
        j1 = units[-1]
        e = sp.vecs[:, [j1]]
        first, second = _halves([j for j in everything if j != j1])
        p1 = sp.realize(first)
        p2 = sp.realize(second, avoid=e)
        return p1, Projection(p2.matrix + e @ e.T, tol=sp.tol)

    twos = [j for j in everything if sp.near(j, 2.0)]
    if twos:
        j2 = twos[-1]
        e = sp.vecs[:, [j2]]
        pi = e @ e.T
        first, second = _halves([j for j in everything if j != j2])
        q1 = sp.realize(first, avoid=e)
        q2 = sp.realize(second, avoid=e)
        return Projection(q1.matrix + pi, tol=sp.tol), Projection(q2.matrix + pi, tol=sp.tol)

    raise NotConstructible(
        "n is odd and no eigenvalue lies in {0, 1, 2}; no two-projection construction is known"
    )


def synthesize_two_projections(t, tol: Tolerance = DEFAULT_TOL) -> tuple[Projection, Projection]:
    """Two projections with ``P1.T P1 + P2.T P2 = T``.

    Needs every nonzero eigenvalue at least 1, and for odd ``n`` an
    eigenvalue equal to 0, 1 or 2 (tried in that order).  Even ``n`` splits
    the descending eigenbasis into its first and second halves.
    """
    return _two(_Spectrum.of(t, tol))


class TwoWeighted(NamedTuple):
    weight: float
    first: Projection
    second: Projection


def _two_weighted(sp: _Spectrum) -> TwoWeighted:
    sp.require_positive()
    idx = sp.nonzero
    if not idx:
        raise ZeroOperator("the zero operator has no weighted factorization")
    lam_k = float(sp.vals[idx[-1]])
    # after rescaling the smallest nonzero eigenvalue is exactly 1
    p1, p2 = _two(sp.scaled(1.0 / lam_k))
    return TwoWeighted(float(np.sqrt(lam_k)), p1, p2)


def synthesize_two_weighted(t, tol: Tolerance = DEFAULT_TOL) -> TwoWeighted:
    """``v`` and ``P1, P2`` with ``v**2 (P1.T P1 + P2.T P2) = T`` for any nonzero PSD ``T``."""
    return _two_weighted(_Spectrum.of(t, tol))


def synthesize_three_projections(t, tol: Tolerance = DEFAULT_TOL) -> tuple[Projection, Projection, Projection]:
    """Three projections whose ``P.T @ P`` sum to ``T``.

    Even ``n`` reuses the two-projection construction with a zero third
    projection.  Odd ``n`` cuts the descending eigenbasis into three
    contiguous blocks of near-equal size, each smaller than ``n/2``.
    """
    sp = _Spectrum.of(t, tol)
    sp.require_positive()
    sp.require_at_least_one()
    n = sp.n
    if n % 2 == 0:
        p1, p2 = _two(sp)
        return p1, p2, Projection.zero(n)
    if n == 1:
        # only 0, 1, 2 or 3 copies of the identity are available in one dimension
        for count in range(4):
            if sp.near(0, float(count)) or (count == 0 and sp.is_zero(0)):
                ones = [Projection.identity(1)] * count + [Projection.zero(1)] * (3 - count)
                return tuple(ones)
        raise NotConstructible("in dimension 1 only T in {0, 1, 2, 3} is a sum of three")
    blocks = np.array_split(np.arange(n), 3)
    return tuple(sp.realize(list(b)) for b in blocks)


# --------------------------------------------------------------------------
# indefinite operators


class IndefiniteDecomposition(NamedTuple):
    v1: float
    p1: Projection
    p2: Projection
    v2: float
    p3: Projection
    p4: Projection

    def reconstruct(self) -> np.ndarray:
        pos = self.p1.gram + self.p2.gram
        neg = self.p3.gram + self.p4.gram
        return self.v1**2 * pos - self.v2**2 * neg


def decompose_indefinite(t, tol: Tolerance = DEFAULT_TOL) -> IndefiniteDecomposition:
    """Write a symmetric ``T`` as ``v1^2 (P1'P1 + P2'P2) - v2^2 (P3'P3 + P4'P4)``.

    The positive and negative spectral parts are realized separately by
    :func:`synthesize_two_weighted`; a vanishing part gets weight 0 and two
    zero projections.
    """
    sp = _Spectrum.of(t, tol)
    n = sp.n

    def side(sign: float) -> TwoWeighted:
        vals = np.where(sign * sp.vals > sp.zero_thr, sign * sp.vals, 0.0)
        if not np.any(vals):
            return TwoWeighted(0.0, Projection.zero(n), Projection.zero(n))
        return _two_weighted(_Spectrum(vals, sp.vecs, tol))

    pos, neg = side(1.0), side(-1.0)
    return IndefiniteDecomposition(pos.weight, pos.first, pos.second, neg.weight, neg.first, neg.second)
