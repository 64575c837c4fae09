import numpy as np
import pytest

from noff.errors import (
    MalformedGroup,
    NeedSamples,
    NotTight,
    RankExceedsDim,
    SamplerNotTight,
    TooFewTrials,
    TrivialProjection,
)
from noff.frames import frame_bounds, frame_operator
from noff.projection import Projection
from noff.random_frames import (
    GROUP_NOT_IRREDUCIBLE,
    FiniteGroup,
    ProjectionSampler,
    exact_or_estimated_frame_operator,
    group_orbit_tighten,
    random_potential,
    sample_random_projection,
    tight_bound_trace_identity,
    variance_experiment,
)
from noff.spectral import is_projection

PX = Projection(np.diag([1.0, 0.0]))
PY = Projection(np.diag([0.0, 1.0]))
OBLIQUE = Projection(np.array([[1.0, 0.0], [1.0, 0.0]]))


def two_point(seed=None):
    return ProjectionSampler.finite_discrete([(0.5, PX), (0.5, PY)], seed=seed)


class TestSampler:
    def test_deterministic(self):
        s = ProjectionSampler.deterministic(PX)
        for _ in range(3):
            np.testing.assert_array_equal(sample_random_projection(s).matrix, PX.matrix)

    def test_haar_orthogonal(self):
        s = ProjectionSampler.haar_orthogonal(4, 2, seed=7)
        for _ in range(20):
            p = sample_random_projection(s)
            assert p.rank == 2
            assert is_projection(p.matrix)[1] <= 1e-9 * 4
            np.testing.assert_allclose(p.matrix, p.matrix.T, atol=1e-12)

    def test_oblique_zero_tilt_is_orthogonal(self):
        p = sample_random_projection(ProjectionSampler.oblique_haar(5, 2, 0.0, seed=1))
        np.testing.assert_allclose(p.matrix, p.matrix.T, atol=1e-12)

    @pytest.mark.parametrize("n, k", [(4, 2), (5, 3), (3, 1), (3, 3)])
    def test_oblique_draws_valid(self, n, k):
        s = ProjectionSampler.oblique_haar(n, k, 0.7, seed=3)
        for _ in range(20):
            p = s.draw()
            assert p.rank == k
            assert is_projection(p.matrix)[1] <= 1e-9 * n
            assert p.is_transversal()
        if k < n:
            assert not p.is_orthogonal(1e-6)

    def test_seeded_reproducible(self):
        a = ProjectionSampler.oblique_haar(4, 2, 0.4, seed=11).draw().matrix
        b = ProjectionSampler.oblique_haar(4, 2, 0.4, seed=11).draw().matrix
        np.testing.assert_array_equal(a, b)

    def test_validation(self):
        with pytest.raises(RankExceedsDim):
            ProjectionSampler.haar_orthogonal(2, 3)
        with pytest.raises(ValueError):
            ProjectionSampler.finite_discrete([(0.3, PX), (0.3, PY)])
        with pytest.raises(ValueError):
            ProjectionSampler.oblique_haar(3, 1, 2.0)

    def test_finite_discrete_frequencies(self):
        s = ProjectionSampler.finite_discrete([(0.25, PX), (0.75, PY)], seed=5)
        hits = sum(s.draw() is PX for _ in range(4000))
        assert abs(hits / 4000 - 0.25) < 5 * np.sqrt(0.25 * 0.75 / 4000)


class TestFrameOperator:
    def test_two_point_exact(self):
        r = exact_or_estimated_frame_operator(two_point())
        assert r.exact and r.tight and r.lower == 0.5 and r.standard_error == 0
        np.testing.assert_array_equal(r.mean_operator.entries, np.eye(2) / 2)

    def test_deterministic_identity(self):
        r = exact_or_estimated_frame_operator(ProjectionSampler.deterministic(Projection.identity(3)))
        assert r.tight and r.lower == 1

    def test_haar_estimate(self):
        r = exact_or_estimated_frame_operator(ProjectionSampler.haar_orthogonal(2, 1, seed=2), 10_000)
        assert not r.exact and r.tight
        dev = np.abs(r.mean_operator.entries - np.eye(2) / 2)
        assert np.all(dev <= 5 * r.entry_stderr)

    def test_needs_samples(self):
        with pytest.raises(NeedSamples):
            exact_or_estimated_frame_operator(ProjectionSampler.haar_orthogonal(2, 1, seed=2))

    def test_convergence_rate(self):
        def err(m, seed):
            r = exact_or_estimated_frame_operator(ProjectionSampler.haar_orthogonal(4, 1, seed=seed), m)
            return np.linalg.norm(r.mean_operator.entries - np.eye(4) / 4)

        small = np.mean([err(1000, s) for s in range(4)])
        large = np.mean([err(40_000, 100 + s) for s in range(4)])
        assert 3 <= small / large <= 10


class TestTraceIdentity:
    def test_two_point(self):
        ident = tight_bound_trace_identity(exact_or_estimated_frame_operator(two_point()))
        assert ident.lhs == 0.5 and ident.rhs == 0.5 and ident.holds

    def test_identity(self):
        r = exact_or_estimated_frame_operator(ProjectionSampler.deterministic(Projection.identity(3)))
        ident = tight_bound_trace_identity(r)
        assert (ident.lhs, ident.rhs) == (1, 1)

    def test_not_tight(self):
        with pytest.raises(NotTight):
            tight_bound_trace_identity(exact_or_estimated_frame_operator(ProjectionSampler.deterministic(PX)))

    def test_oblique_estimate(self):
        r = exact_or_estimated_frame_operator(ProjectionSampler.oblique_haar(3, 1, 0.6, seed=4), 20_000)
        assert r.tight
        assert tight_bound_trace_identity(r).holds


class TestPotential:
    def test_identity(self):
        for n in (1, 3, 5):
            p = random_potential(ProjectionSampler.deterministic(Projection.identity(n)))
            assert (p.potential, p.mean_hs, p.bound, p.equality) == (n, n, n, True)

    def test_rank_k(self):
        p = random_potential(ProjectionSampler.deterministic(Projection(np.diag([1.0, 1, 0, 0, 0]))))
        assert (p.potential, p.mean_hs) == (2, 2)
        assert p.bound == pytest.approx(4 / 5)
        assert not p.equality

    def test_two_point(self):
        p = random_potential(two_point())
        assert (p.potential, p.mean_hs, p.bound, p.equality) == (0.5, 1, 0.5, True)
        assert p.orthogonal_ae and p.rank_equality

    def test_oblique_breaks_rank_bound(self):
        s = ProjectionSampler.finite_discrete(
            [(0.5, OBLIQUE), (0.5, Projection(np.array([[0.0, 1.0], [0.0, 1.0]])))]
        )
        p = random_potential(s)
        assert p.equality and not p.orthogonal_ae
        assert p.potential > p.rank_bound


class TestGroups:
    def test_cyclic(self):
        g = FiniteGroup.cyclic_rotations(4)
        assert len(g) == 4
        assert len(FiniteGroup.signed_permutations(3)) == 48

    def test_malformed(self):
        with pytest.raises(MalformedGroup):
            FiniteGroup([np.array([[0.0, -1.0], [1.0, 0.0]])])
        with pytest.raises(MalformedGroup):
            FiniteGroup.generated_by([2 * np.eye(2)])
        a = 1.0  # irrational rotation never closes
        rot = np.array([[np.cos(a), -np.sin(a)], [np.sin(a), np.cos(a)]])
        with pytest.raises(MalformedGroup):
            FiniteGroup.generated_by([rot], cap=500)


class TestOrbit:
    def test_c4_axis(self):
        frame, report = group_orbit_tighten(PX, FiniteGroup.cyclic_rotations(4))
        assert report.tight and not report.warnings
        np.testing.assert_allclose(report.mean_operator.entries, np.eye(2) / 2, atol=1e-15)
        np.testing.assert_allclose(frame_operator(frame).entries, np.eye(2) / 2, atol=1e-15)

    def test_c4_oblique(self):
        frame, report = group_orbit_tighten(OBLIQUE, FiniteGroup.cyclic_rotations(4))
        assert report.tight and frame_bounds(frame).is_tight

    def test_trivial_group_warns(self):
        _, report = group_orbit_tighten(PX, FiniteGroup.trivial(2))
        assert not report.tight
        assert report.warnings and report.warnings[0].startswith(GROUP_NOT_IRREDUCIBLE)

    def test_zero_projection(self):
        with pytest.raises(TrivialProjection):
            group_orbit_tighten(Projection.zero(2), FiniteGroup.trivial(2))

    def test_commutes(self, rng):
        g = FiniteGroup.signed_permutations(3)
        p = ProjectionSampler.oblique_haar(3, 1, 0.8, seed=9).draw()
        _, report = group_orbit_tighten(p, g)
        s = report.mean_operator.entries
        assert g.max_commutator(s) <= 1e-9 * np.linalg.norm(s)
        assert report.tight


class TestVariance:
    def test_deterministic_identity(self):
        r = variance_experiment([ProjectionSampler.deterministic(Projection.identity(2))] * 3, 200)
        assert r.empirical == 0 and r.predicted == 0

    def test_two_point(self):
        m = 5
        r = variance_experiment([two_point() for _ in range(m)], 4000, seed=1)
        assert r.predicted == pytest.approx(1 / (2 * m))
        assert abs(r.empirical - r.predicted) <= 5 * r.stderr

    def test_worker_count_independent(self):
        samplers = [two_point() for _ in range(3)]
        a = variance_experiment(samplers, 2500, seed=4, workers=1)
        b = variance_experiment(samplers, 2500, seed=4, workers=3)
        assert a == b

    def test_errors(self):
        with pytest.raises(SamplerNotTight):
            variance_experiment([two_point(), ProjectionSampler.deterministic(PX)], 200)
        with pytest.raises(TooFewTrials):
            variance_experiment([two_point()], 10)

    def test_haar_samplers(self):
        samplers = [ProjectionSampler.haar_orthogonal(3, 1, seed=s) for s in range(4)]
        r = variance_experiment(samplers, 3000, seed=2, estimate_samples=4000)
        # rank-one orthogonal: M = 1, A = 1/3, predicted = (1 - 3/9)/4
        assert r.predicted == pytest.approx((1 - 1 / 3) / 4, rel=0.05)
        assert abs(r.empirical - r.predicted) <= 5 * r.stderr + 0.01
