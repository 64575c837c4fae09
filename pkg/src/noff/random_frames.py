"""Random nonorthogonal fusion frames.

A random projection is represented by a :class:`ProjectionSampler`.  Finite
discrete and deterministic samplers are evaluated exactly; the Haar-type
samplers are evaluated by Monte Carlo with standard errors attached.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    MalformedGroup,
    NeedSamples,
    NotTight,
    RankExceedsDim,
    SamplerNotTight,
    TooFewTrials,
    TrivialProjection,
)
from .frames import WeightedProjectionFrame
from .projection import Projection
from .spectral import DEFAULT_TOL, SymmetricOperator, Tolerance, spectral_decompose

__all__ = [
    "SamplerKind",
    "ProjectionSampler",
    "RandomFrameReport",
    "PotentialReport",
    "FiniteGroup",
    "OrbitFrame",
    "VarianceResult",
    "sample_random_projection",
    "exact_or_estimated_frame_operator",
    "tight_bound_trace_identity",
    "random_potential",
    "group_orbit_tighten",
    "variance_experiment",
]

# number of standard errors accepted when judging Monte-Carlo estimates
MC_Z = 5.0
GROUP_CAP = 10**6
GROUP_NOT_IRREDUCIBLE = "GroupNotIrreducible"


class SamplerKind(str, enum.Enum):
    DETERMINISTIC = "deterministic"
    FINITE_DISCRETE = "finite_discrete"
    HAAR_ORTHOGONAL = "haar_orthogonal"
    OBLIQUE_HAAR = "oblique_haar"


def _haar_frame(n: int, k: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Haar-random orthonormal ``k``-frame and an orthonormal basis of its complement."""
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    q = q * np.where(np.diag(r) < 0, -1.0, 1.0)
    return q[:, :k], q[:, k:]


class ProjectionSampler:
    """Distribution over projections on ``R^dim``.

    Use the ``deterministic``, ``finite_discrete``, ``haar_orthogonal`` and
    ``oblique_haar`` constructors.  The sampler owns a seeded generator which
    :meth:`draw` advances; pass an explicit ``rng`` to draw from another
    stream instead.  Samplers are not safe to share between threads.
    """

    def __init__(self, dim: int, kind: SamplerKind, *, support=(), rank: int = 0,
                 theta: float = 0.0, seed: int | None = None):
        self.dim = int(dim)
        self.kind = SamplerKind(kind)
        self.rank = int(rank)
        self.theta = float(theta)
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        probs = np.array([float(p) for p, _ in support])
        projections = tuple(p if isinstance(p, Projection) else Projection(p) for _, p in support)
        if self.kind in (SamplerKind.DETERMINISTIC, SamplerKind.FINITE_DISCRETE):
            if not projections:
                raise ValueError("exact samplers need at least one projection")
            if np.any(probs <= 0) or abs(probs.sum() - 1.0) > 1e-12:
                raise ValueError("probabilities must be positive and sum to 1")
            for p in projections:
                if p.dim != self.dim:
                    raise DimensionMismatch(f"projection of dimension {p.dim} in a sampler on R^{self.dim}")
        else:
            if not 0 <= self.rank <= self.dim:
                raise RankExceedsDim(f"rank {self.rank} outside [0, {self.dim}]")
            if not 0.0 <= self.theta < math.pi / 2:
                raise ValueError("theta must lie in [0, pi/2)")
        self.probabilities = probs
        self.projections = projections
        self._cumulative = np.cumsum(probs)
        self._grams = np.array([p.gram for p in projections]) if projections else None

    # -- constructors -------------------------------------------------------
    @classmethod
    def deterministic(cls, projection: Projection) -> "ProjectionSampler":
        return cls(projection.dim, SamplerKind.DETERMINISTIC, support=((1.0, projection),))

    @classmethod
    def finite_discrete(cls, support: Sequence[tuple[float, Projection]], seed: int | None = None) -> "ProjectionSampler":
        support = tuple(support)
        return cls(support[0][1].dim, SamplerKind.FINITE_DISCRETE, support=support, seed=seed)

    @classmethod
    def haar_orthogonal(cls, n: int, k: int, seed: int | None = None) -> "ProjectionSampler":
        return cls(n, SamplerKind.HAAR_ORTHOGONAL, rank=k, seed=seed)

    @classmethod
    def oblique_haar(cls, n: int, k: int, theta: float, seed: int | None = None) -> "ProjectionSampler":
        return cls(n, SamplerKind.OBLIQUE_HAAR, rank=k, theta=theta, seed=seed)

    @property
    def exact(self) -> bool:
        return self.kind in (SamplerKind.DETERMINISTIC, SamplerKind.FINITE_DISCRETE)

    # -- sampling -----------------------------------------------------------
    def draw(self, rng: np.random.Generator | None = None) -> Projection:
        rng = self.rng if rng is None else rng
        if self.exact:
            return self.projections[self._pick(rng)]
        return Projection(self._draw_matrix(rng))

    def draw_gram(self, rng: np.random.Generator | None = None) -> np.ndarray:
        """``P.T @ P`` of one draw."""
        rng = self.rng if rng is None else rng
        if self.exact:
            return self._grams[self._pick(rng)]
        m = self._draw_matrix(rng)
        return m.T @ m

    def _pick(self, rng: np.random.Generator) -> int:
        if len(self.projections) == 1:
            return 0
        i = int(np.searchsorted(self._cumulative, rng.random() * self._cumulative[-1], side="right"))
        return min(i, len(self.projections) - 1)

    def _draw_matrix(self, rng: np.random.Generator) -> np.ndarray:
        n, k = self.dim, self.rank
        if k == 0:
            return np.zeros((n, n))
        w, w_perp = _haar_frame(n, k, rng)
        if self.kind is SamplerKind.HAAR_ORTHOGONAL or self.theta == 0.0 or k == n:
            return w @ w.T
        # tilt kernel directions towards W; at most k of them can be tilted
        r = min(k, n - k)
        u, _ = _haar_frame(k, r, rng)
        tilt = np.zeros((n, n - k))
        tilt[:, :r] = w @ u
        kernel = math.cos(self.theta) * w_perp + math.sin(self.theta) * tilt
        return Projection.onto_along(w, kernel).matrix

    def __repr__(self):
        return f"ProjectionSampler(dim={self.dim}, kind={self.kind.value})"


def sample_random_projection(sampler: ProjectionSampler) -> Projection:
    """One draw from the sampler's own stream."""
    return sampler.draw()


@dataclass(frozen=True, eq=False)
class RandomFrameReport:
    """Exact or estimated frame operator of a random projection.

    ``standard_error`` is the largest entrywise standard error of the mean
    operator (zero for exact samplers); ``mean_trace`` estimates
    ``E trace(P.T P) = E ||P||_HS^2`` and ``mean_hs_sq`` estimates
    ``E ||P.T P||_HS^2``.
    """

    mean_operator: SymmetricOperator
    lower: float
    upper: float
    tight: bool
    samples_used: int
    standard_error: float
    entry_stderr: np.ndarray
    mean_trace: float
    trace_stderr: float
    mean_hs_sq: float
    mean_rank: float
    orthogonal_ae: bool
    exact: bool
    warnings: tuple[str, ...] = field(default=())

    @property
    def dim(self) -> int:
        return self.mean_operator.dim


def _exact_report(weights, projections, tol: Tolerance, warnings=()) -> RandomFrameReport:
    weights = np.asarray(weights, dtype=float)
    n = projections[0].dim
    grams = np.array([p.gram for p in projections])
    s = np.tensordot(weights, grams, axes=1)
    vals = spectral_decompose(s, tol).eigenvalues
    upper, lower = float(vals[0]), float(vals[-1])
    tight = lower > tol.zero_threshold(upper) and upper / lower - 1.0 <= tol.residual_rel
    return RandomFrameReport(
        mean_operator=SymmetricOperator(s),
        lower=lower,
        upper=upper,
        tight=bool(tight),
        samples_used=0,
        standard_error=0.0,
        entry_stderr=np.zeros((n, n)),
        mean_trace=float(weights @ np.trace(grams, axis1=1, axis2=2)),
        trace_stderr=0.0,
        mean_hs_sq=float(weights @ np.sum(grams**2, axis=(1, 2))),
        mean_rank=float(weights @ np.array([p.rank for p in projections])),
        orthogonal_ae=all(p.is_orthogonal(tol.residual_rel) for p in projections),
        exact=True,
        warnings=tuple(warnings),
    )


def _stderr(x: np.ndarray) -> np.ndarray:
    m = x.shape[0]
    if m < 2:
        return np.full(x.shape[1:], np.inf)
    return x.std(axis=0, ddof=1) / math.sqrt(m)


def exact_or_estimated_frame_operator(sampler: ProjectionSampler, m_samples: int | None = None,
                                      tol: Tolerance = DEFAULT_TOL) -> RandomFrameReport:
    """Frame operator ``S = E[P.T P]`` of a random projection.

    Exact samplers give the weighted sum and ignore ``m_samples``.  Generator
    samplers average ``m_samples`` draws from the sampler's stream; the
    estimate counts as tight when every entry of ``S - (trace S / n) I`` lies
    within five standard errors (or the residual tolerance) of zero.
    """
    if sampler.exact:
        return _exact_report(sampler.probabilities, sampler.projections, tol)
    if m_samples is None or m_samples < 1:
        raise NeedSamples("generator samplers need m_samples >= 1")
    n = sampler.dim
    mats = np.array([sampler._draw_matrix(sampler.rng) for _ in range(m_samples)])
    grams = np.einsum("sji,sjk->sik", mats, mats)
    s = grams.mean(axis=0)
    s = (s + s.T) / 2.0
    se = _stderr(grams)
    traces = np.trace(grams, axis1=1, axis2=2)
    vals = spectral_decompose(s, tol).eigenvalues
    a = float(np.trace(s)) / n
    dev = np.abs(s - a * np.eye(n))
    tight = a > 0 and bool(np.all(dev <= np.maximum(tol.residual_rel * a, MC_Z * se)))
    sym = np.abs(mats - mats.transpose(0, 2, 1)).max(axis=(1, 2))
    ranks = np.rint(np.trace(mats, axis1=1, axis2=2))
    return RandomFrameReport(
        mean_operator=SymmetricOperator(s),
        lower=float(vals[-1]),
        upper=float(vals[0]),
        tight=tight,
        samples_used=m_samples,
        standard_error=float(se.max()),
        entry_stderr=se,
        mean_trace=float(traces.mean()),
        trace_stderr=float(_stderr(traces[:, None])[0]),
        mean_hs_sq=float(np.sum(grams**2, axis=(1, 2)).mean()),
        mean_rank=float(ranks.mean()),
        orthogonal_ae=bool(np.all(sym <= tol.residual_rel)),
        exact=False,
    )


class TraceIdentity(NamedTuple):
    lhs: float
    rhs: float
    tolerance: float

    @property
    def holds(self) -> bool:
        return abs(self.lhs - self.rhs) <= self.tolerance


def tight_bound_trace_identity(report: RandomFrameReport) -> TraceIdentity:
    """Frame bound ``A`` against ``E trace(P.T P) / n`` for a tight random frame."""
    if not report.tight:
        raise NotTight("the trace identity only holds for tight random frames")
    n = report.dim
    return TraceIdentity(report.lower, report.mean_trace / n, max(1e-8, 3.0 * report.standard_error))


@dataclass(frozen=True)
class PotentialReport:
    """Random fusion frame potential ``R = trace(S^2)`` and its lower bounds."""

    potential: float
    mean_hs: float
    bound: float
    equality: bool
    mean_rank: float
    rank_bound: float
    rank_equality: bool
    orthogonal_ae: bool
    standard_error: float


def random_potential(sampler: ProjectionSampler, m_samples: int | None = None,
                     tol: Tolerance = DEFAULT_TOL) -> PotentialReport:
    """``R = trace(S^2)`` compared with ``M^2 / n``, ``M = E ||P||_HS^2``.

    Equality holds exactly for tight random projections.  The rank version
    replaces ``M`` by the mean rank; its equality additionally needs ``P``
    orthogonal almost everywhere.  Equality is judged at
    ``max(1e-8, 3 * propagated standard error)``.
    """
    rep = exact_or_estimated_frame_operator(sampler, m_samples, tol)
    return _potential(rep)


def _potential(rep: RandomFrameReport) -> PotentialReport:
    n = rep.dim
    s = rep.mean_operator.entries
    r = float(np.sum(s * s))
    m = rep.mean_trace
    bound = m * m / n
    se_r = 2.0 * float(np.sqrt(np.sum((s * rep.entry_stderr) ** 2)))
    se = math.hypot(se_r, 2.0 * m / n * rep.trace_stderr)
    thr = max(1e-8, 3.0 * se)
    rank_bound = rep.mean_rank**2 / n
    return PotentialReport(
        potential=r,
        mean_hs=m,
        bound=bound,
        equality=abs(r - bound) <= thr,
        mean_rank=rep.mean_rank,
        rank_bound=rank_bound,
        rank_equality=abs(r - rank_bound) <= thr,
        orthogonal_ae=rep.orthogonal_ae,
        standard_error=se,
    )


# --------------------------------------------------------------------------
# group orbits


def _key(g: np.ndarray) -> bytes:
    return (np.round(g, 8) + 0.0).tobytes()


class FiniteGroup:
    """Finite group of orthogonal ``n x n`` matrices, closed under products."""

    def __init__(self, elements: Sequence[np.ndarray]):
        self.elements = tuple(np.asarray(g, dtype=float) for g in elements)
        if not self.elements:
            raise MalformedGroup("a group has at least the identity")
        self.dim = self.elements[0].shape[0]
        keys = {_key(g) for g in self.elements}
        for g in self.elements:
            if g.shape != (self.dim, self.dim):
                raise MalformedGroup("elements must be square and of equal size")
            if np.linalg.norm(g.T @ g - np.eye(self.dim)) > 1e-10:
                raise MalformedGroup("element is not orthogonal")
        if _key(np.eye(self.dim)) not in keys:
            raise MalformedGroup("identity missing")
        for g in self.elements:
            for h in self.elements:
                if _key(g @ h) not in keys:
                    raise MalformedGroup("element set is not closed under products")

    @classmethod
    def generated_by(cls, generators: Sequence[np.ndarray], cap: int = GROUP_CAP) -> "FiniteGroup":
        gens = [np.asarray(g, dtype=float) for g in generators]
        if not gens:
            raise MalformedGroup("need at least one generator")
        n = gens[0].shape[0]
        for g in gens:
            if g.shape != (n, n) or np.linalg.norm(g.T @ g - np.eye(n)) > 1e-10:
                raise MalformedGroup("generators must be orthogonal matrices of equal size")
        found = {_key(np.eye(n)): np.eye(n)}
        frontier = [np.eye(n)]
        while frontier:
            nxt = []
            for h in frontier:
                for g in gens:
                    c = h @ g
                    k = _key(c)
                    if k not in found:
                        found[k] = c
                        nxt.append(c)
                        if len(found) > cap:
                            raise MalformedGroup(f"generators do not close within {cap} elements")
            frontier = nxt
        group = cls.__new__(cls)
        group.elements = tuple(found.values())
        group.dim = n
        return group

    @classmethod
    def cyclic_rotations(cls, order: int) -> "FiniteGroup":
        a = 2 * math.pi / order
        return cls.generated_by([np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])])

    @classmethod
    def trivial(cls, n: int) -> "FiniteGroup":
        return cls([np.eye(n)])

    @classmethod
    def signed_permutations(cls, n: int) -> "FiniteGroup":
        """Hyperoctahedral group; irreducible on ``R^n``."""
        gens = [np.diag([-1.0] + [1.0] * (n - 1))]
        if n > 1:
            gens.append(np.roll(np.eye(n), 1, axis=0))
            swap = np.eye(n)
            swap[[0, 1]] = swap[[1, 0]]
            gens.append(swap)
        return cls.generated_by(gens)

    def max_commutator(self, s) -> float:
        s = np.asarray(s, dtype=float)
        return max(float(np.linalg.norm(g @ s - s @ g)) for g in self.elements)

    def __len__(self):
        return len(self.elements)


class OrbitFrame(NamedTuple):
    frame: WeightedProjectionFrame
    report: RandomFrameReport


def _invariant_eigenspaces(s: np.ndarray, group: FiniteGroup, tol: Tolerance) -> list[int]:
    """Dimensions of proper eigenspaces of ``s`` that every group element preserves."""
    d = spectral_decompose(s, tol)
    vals, vecs = d.eigenvalues, d.eigenvectors
    band = tol.band(vals[0])
    dims, start = [], 0
    while start < len(vals):
        stop = start + 1
        while stop < len(vals) and vals[start] - vals[stop] <= band:
            stop += 1
        q = vecs[:, start:stop]
        pi = q @ q.T
        leak = max(float(np.linalg.norm(g @ q - pi @ g @ q)) for g in group.elements)
        if stop - start < len(vals) and leak <= 1e-8:
            dims.append(stop - start)
        start = stop
    return dims


def group_orbit_tighten(p: Projection, group: FiniteGroup, tol: Tolerance = DEFAULT_TOL) -> OrbitFrame:
    """Orbit frame ``{g.T P g : g in G}`` with weights ``1/sqrt(|G|)``.

    The frame operator is the orbit average of ``P.T P`` and commutes with
    every ``g``.  For an irreducible group it is a multiple of the identity.
    When it is not, the report carries a ``GroupNotIrreducible`` warning
    listing the invariant eigenspaces found.
    """
    if p.dim != group.dim:
        raise DimensionMismatch(f"projection on R^{p.dim}, group on R^{group.dim}")
    if p.rank == 0:
        raise TrivialProjection("the zero projection has a zero orbit")
    orbit = [p.conjugate(g) for g in group.elements]
    weight = 1.0 / math.sqrt(len(orbit))
    frame = WeightedProjectionFrame(p.dim, tuple((weight, q) for q in orbit))
    report = _exact_report(np.full(len(orbit), 1.0 / len(orbit)), orbit, tol)
    if not report.tight:
        dims = _invariant_eigenspaces(report.mean_operator.entries, group, tol)
        msg = f"{GROUP_NOT_IRREDUCIBLE}: orbit average is not a multiple of I; invariant subspace dims {dims}"
        report = _exact_report(np.full(len(orbit), 1.0 / len(orbit)), orbit, tol, warnings=(msg,))
    return OrbitFrame(frame, report)


# --------------------------------------------------------------------------
# variance of the sample frame operator


class VarianceResult(NamedTuple):
    empirical: float
    predicted: float
    stderr: float
    bounds: tuple[float, ...]
    mean_hs_sq: float


def _trial_values(samplers, a: float, seed: int, trials: range) -> np.ndarray:
    m = len(samplers)
    n = samplers[0].dim
    out = np.empty(len(trials))
    eye = a * np.eye(n)
    for pos, t in enumerate(trials):
        rng = np.random.default_rng([seed, t])
        s = sum(smp.draw_gram(rng) for smp in samplers)
        out[pos] = float(np.sum((s / m - eye) ** 2))
    return out


def variance_experiment(samplers: Sequence[ProjectionSampler], trials: int, seed: int = 0,
                        estimate_samples: int = 4000, workers: int = 1,
                        tol: Tolerance = DEFAULT_TOL) -> VarianceResult:
    """Monte-Carlo check of ``E ||S/m - A I||_HS^2 = (M - n A~) / m``.

    Each trial draws one projection from every sampler, with trial ``t``
    seeded by ``(seed, t)``; the result does not depend on ``workers``.
    ``A`` is the mean frame bound, ``A~`` the mean squared frame bound and
    ``M`` the mean of ``E ||P_i.T P_i||_HS^2``, exact for exact samplers and
    estimated from ``estimate_samples`` draws otherwise.
    """
    samplers = list(samplers)
    if not samplers:
        raise ValueError("need at least one sampler")
    if trials < 100:
        raise TooFewTrials(f"{trials} trials; at least 100 are required")
    n = samplers[0].dim
    if any(s.dim != n for s in samplers):
        raise DimensionMismatch("samplers act on different dimensions")
    bounds, hs = [], []
    for i, smp in enumerate(samplers):
        rep = exact_or_estimated_frame_operator(smp, estimate_samples, tol)
        if not rep.tight:
            raise SamplerNotTight(f"sampler {i} is not tight")
        bounds.append(rep.mean_trace / n)
        hs.append(rep.mean_hs_sq)
    m = len(samplers)
    a = float(np.mean(bounds))
    a_sq = float(np.mean(np.square(bounds)))
    big_m = float(np.mean(hs))
    predicted = (big_m - n * a_sq) / m

    if workers > 1:
        chunks = [range(lo, min(lo + 1000, trials)) for lo in range(0, trials, 1000)]
        with ThreadPoolExecutor(workers) as ex:
            values = np.concatenate(list(ex.map(lambda r: _trial_values(samplers, a, seed, r), chunks)))
    else:
        values = _trial_values(samplers, a, seed, range(trials))
    return VarianceResult(
        empirical=float(values.mean()),
        predicted=predicted,
        stderr=float(values.std(ddof=1) / math.sqrt(trials)),
        bounds=tuple(bounds),
        mean_hs_sq=big_m,
    )
