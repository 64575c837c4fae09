import numpy as np
import pytest

from noff.errors import (
    EigenvalueBelowOne,
    Infeasible,
    InfeasibleWeighted,
    NotConstructible,
    NotPositive,
    RankTooLarge,
    ZeroOperator,
)
from noff.projection import Projection
from noff.spectral import SymmetricOperator, is_projection
from noff.synthesis import (
    FeasibilityReason,
    decompose_indefinite,
    feasibility_high_rank,
    omega_membership,
    sample_omega_member,
    split_unit_eigenspace,
    synthesize_projection,
    synthesize_single_high_rank,
    synthesize_three_projections,
    synthesize_two_projections,
    synthesize_two_weighted,
    synthesize_weighted,
)

from .conftest import operator_with_spectrum, random_low_rank_spectrum

D = SymmetricOperator.diag
OBLIQUE = np.array([[1.0, 0.0], [1.0, 0.0]])


def gram_sum(*ps):
    return sum(p.gram for p in ps)


class TestSynthesizeProjection:
    def test_diag_two_zero_exact(self):
        p = synthesize_projection(D([2, 0]))
        np.testing.assert_array_equal(p.matrix, OBLIQUE)

    def test_unit_is_orthogonal(self):
        np.testing.assert_array_equal(synthesize_projection(D([1, 0])).matrix, np.diag([1.0, 0.0]))

    def test_zero_operator(self):
        assert synthesize_projection(D([0, 0, 0])).rank == 0

    @pytest.mark.parametrize(
        "diag, err",
        [([0.5, 0], EigenvalueBelowOne), ([2, 2, 0], RankTooLarge), ([2, -1], NotPositive)],
    )
    def test_errors(self, diag, err):
        with pytest.raises(err):
            synthesize_projection(D(diag))

    def test_random(self, rng):
        for _ in range(50):
            n = int(rng.integers(2, 11))
            t = operator_with_spectrum(random_low_rank_spectrum(rng, n), rng)
            p = synthesize_projection(t)
            assert is_projection(p.matrix)[1] <= 1e-9 * n
            assert np.linalg.norm(p.gram - t) <= 1e-8 * np.linalg.norm(t)

    def test_kernel_is_complement_of_image_of_t(self, rng):
        t = operator_with_spectrum([3, 2, 0, 0, 0], rng)
        p = synthesize_projection(t)
        e = np.linalg.eigh(t)[1][:, :3]  # null space of t
        np.testing.assert_allclose(p.matrix @ e, 0, atol=1e-12)

    def test_images_of_eigenvectors_orthogonal(self, rng):
        t = operator_with_spectrum([4, 2, 1.5, 0, 0, 0, 0], rng)
        p = synthesize_projection(t)
        vals, vecs = np.linalg.eigh(p.gram)
        nz = vals > 1e-8
        pe = p.matrix @ vecs[:, nz]
        np.testing.assert_allclose(pe.T @ pe, np.diag(vals[nz]), atol=1e-8)


class TestOmega:
    def test_seeds_share_gram(self):
        a, b = sample_omega_member(D([2, 0]), 1), sample_omega_member(D([2, 0]), 2)
        assert omega_membership(a, D([2, 0])) and omega_membership(b, D([2, 0]))

    def test_unit_singleton(self):
        for seed in range(5):
            np.testing.assert_allclose(sample_omega_member(D([1, 0]), seed).matrix, np.diag([1, 0]), atol=1e-15)

    def test_sweep_three_dims(self):
        t = D([2, 0, 0])
        mats = [sample_omega_member(t, s) for s in range(1, 101)]
        assert all(omega_membership(p, t) for p in mats)
        # the classification is not a singleton here
        assert max(np.linalg.norm(p.matrix - mats[0].matrix) for p in mats) > 1e-3

    def test_membership_examples(self):
        assert omega_membership(OBLIQUE, D([2, 0]))
        assert not omega_membership(np.diag([1.0, 0.0]), D([2, 0]))
        assert omega_membership(np.diag([1.0, 0.0]), D([1, 0]))
        assert not omega_membership(np.diag([1.0, 0.5]), D([1.25, 0]))


class TestSplitUnit:
    def test_orthogonal(self):
        pp, pi = split_unit_eigenspace(Projection(np.diag([1.0, 0.0])))
        np.testing.assert_allclose(pp.matrix, 0, atol=1e-15)
        np.testing.assert_allclose(pi.matrix, np.diag([1, 0]), atol=1e-15)

    def test_oblique(self):
        pp, pi = split_unit_eigenspace(Projection(OBLIQUE))
        np.testing.assert_allclose(pp.matrix, OBLIQUE, atol=1e-15)
        assert pi.rank == 0

    def test_block(self):
        p = np.zeros((3, 3))
        p[0, 0] = 1
        p[1:, 1:] = OBLIQUE
        pp, pi = split_unit_eigenspace(Projection(p))
        expected = p.copy()
        expected[0, 0] = 0
        np.testing.assert_allclose(pp.matrix, expected, atol=1e-14)
        np.testing.assert_allclose(pi.matrix, np.diag([1, 0, 0]), atol=1e-14)

    def test_random_properties(self, rng):
        for seed in range(20):
            n = int(rng.integers(3, 9))
            vals = np.zeros(n)
            vals[0] = rng.uniform(1.5, 5)
            vals[1 : n - 1] = 1.0
            p = sample_omega_member(operator_with_spectrum(vals[: n // 2].tolist() + [0] * (n - n // 2), rng), seed)
            if seed % 2:
                p = synthesize_single_high_rank(operator_with_spectrum(vals, rng))
            pp, pi = split_unit_eigenspace(p)
            n = p.dim
            assert np.linalg.norm(pp.matrix + pi.matrix - p.matrix) <= 1e-10 * n
            assert np.linalg.norm(pp.matrix @ pi.matrix) <= 1e-10
            assert np.linalg.norm(pi.matrix @ pp.matrix) <= 1e-10
            vals = np.linalg.eigvalsh(pp.gram)
            assert np.all((vals < 1e-8) | (vals > 1 + 1e-10))


class TestFeasibility:
    @pytest.mark.parametrize(
        "diag, feasible, reason",
        [
            ([2, 1, 0], True, FeasibilityReason.FEASIBLE),
            ([2, 2, 1], False, FeasibilityReason.COUNT_CONDITION),
            ([1, 1], True, FeasibilityReason.FEASIBLE),
            ([2, 0.5, 0], False, FeasibilityReason.EIGENVALUE_BELOW_ONE),
        ],
    )
    def test_examples(self, diag, feasible, reason):
        r = feasibility_high_rank(D(diag))
        assert r.feasible is feasible
        assert r.reason is reason

    def test_not_positive(self):
        with pytest.raises(NotPositive):
            feasibility_high_rank(D([1, -1]))

    def test_few_unit_eigenvalues_infeasible(self, rng):
        for _ in range(30):
            n = int(rng.integers(2, 9))
            k = int(rng.integers(n // 2 + 1, n + 1))
            units = int(rng.integers(0, max(1, k - n // 2)))
            vals = [1.0] * units + list(rng.uniform(1.5, 5, size=k - units)) + [0.0] * (n - k)
            assert not feasibility_high_rank(operator_with_spectrum(vals, rng)).feasible


class TestHighRank:
    def test_diag_two_one_zero(self):
        p = synthesize_single_high_rank(D([2, 1, 0]))
        np.testing.assert_allclose(p.gram, np.diag([2, 1, 0]), atol=1e-14)
        # unit part is the orthogonal projection onto e2
        pp, pi = split_unit_eigenspace(p)
        np.testing.assert_allclose(pi.matrix, np.diag([0, 1, 0]), atol=1e-14)

    def test_identity(self):
        np.testing.assert_allclose(synthesize_single_high_rank(np.eye(4)).matrix, np.eye(4), atol=1e-15)

    def test_infeasible(self):
        with pytest.raises(Infeasible):
            synthesize_single_high_rank(D([2, 2, 1]))

    def test_random_feasible(self, rng):
        for _ in range(30):
            n = int(rng.integers(2, 10))
            big = int(rng.integers(0, n // 2 + 1))
            units = int(rng.integers(0, n - 2 * big + 1))
            vals = list(rng.uniform(1.5, 6, size=big)) + [1.0] * units + [0.0] * (n - big - units)
            t = operator_with_spectrum(vals, rng)
            p = synthesize_single_high_rank(t)
            assert omega_membership(p, t)


class TestWeighted:
    def test_half(self):
        v, p = synthesize_weighted(D([0.5, 0]))
        assert v == pytest.approx(np.sqrt(0.5))
        np.testing.assert_allclose(p.matrix, np.diag([1, 0]), atol=1e-15)

    def test_scale_then_factor(self):
        v, p = synthesize_weighted(D([3, 1.5, 0, 0]))
        assert v == pytest.approx(np.sqrt(1.5))
        np.testing.assert_allclose(v * v * p.gram, np.diag([3, 1.5, 0, 0]), atol=1e-13)

    def test_errors(self):
        with pytest.raises(ZeroOperator):
            synthesize_weighted(D([0, 0]))
        with pytest.raises(InfeasibleWeighted):
            synthesize_weighted(D([3, 2, 1]))


class TestTwo:
    def test_even(self):
        p1, p2 = synthesize_two_projections(D([2, 2]))
        np.testing.assert_array_equal(p1.matrix, OBLIQUE)
        np.testing.assert_array_equal(p2.matrix, [[0, 1], [0, 1]])

    def test_odd_unit(self):
        p1, p2 = synthesize_two_projections(D([2, 2, 1]))
        np.testing.assert_allclose(gram_sum(p1, p2), np.diag([2, 2, 1]), atol=1e-14)

    @pytest.mark.parametrize("diag", [[3, 2, 0], [3, 3, 2], [5, 4, 2, 2, 1]])
    def test_odd_subcases(self, diag):
        p1, p2 = synthesize_two_projections(D(diag))
        np.testing.assert_allclose(gram_sum(p1, p2), np.diag(diag), atol=1e-13)

    def test_not_constructible(self):
        with pytest.raises(NotConstructible):
            synthesize_two_projections(D([3, 3, 3]))

    def test_below_one(self):
        with pytest.raises(EigenvalueBelowOne):
            synthesize_two_projections(D([0.5, 2]))

    def test_weighted(self):
        v, p1, p2 = synthesize_two_weighted(D([3, 3, 3]))
        assert v == pytest.approx(np.sqrt(3))
        np.testing.assert_allclose(v * v * gram_sum(p1, p2), 3 * np.eye(3), atol=1e-13)
        v, p1, p2 = synthesize_two_weighted(D([2, 2]))
        assert v == pytest.approx(np.sqrt(2))
        np.testing.assert_allclose(p1.matrix, np.diag([1, 0]), atol=1e-15)
        np.testing.assert_allclose(p2.matrix, np.diag([0, 1]), atol=1e-15)
        with pytest.raises(ZeroOperator):
            synthesize_two_weighted(D([0, 0]))


class TestThree:
    def test_odd(self):
        ps = synthesize_three_projections(D([3, 3, 3]))
        assert [p.rank for p in ps] == [1, 1, 1]
        np.testing.assert_allclose(gram_sum(*ps), 3 * np.eye(3), atol=1e-13)

    def test_even(self):
        ps = synthesize_three_projections(D([2, 2]))
        assert ps[2].rank == 0
        np.testing.assert_array_equal(ps[0].matrix, OBLIQUE)

    def test_below_one(self):
        with pytest.raises(EigenvalueBelowOne):
            synthesize_three_projections(D([0.5, 0, 0]))

    def test_dimension_one(self):
        ps = synthesize_three_projections(D([2]))
        assert sum(p.rank for p in ps) == 2
        with pytest.raises(NotConstructible):
            synthesize_three_projections(D([1.5]))


class TestIndefinite:
    def test_plus_minus(self):
        d = decompose_indefinite(D([1, -1]))
        assert d.v1 == pytest.approx(1) and d.v2 == pytest.approx(1)
        np.testing.assert_allclose(d.reconstruct(), np.diag([1, -1]), atol=1e-14)

    def test_zero(self):
        d = decompose_indefinite(D([0, 0]))
        assert d.v1 == 0 and d.v2 == 0
        assert all(p.rank == 0 for p in (d.p1, d.p2, d.p3, d.p4))

    def test_mixed(self):
        t = np.diag([2.0, 3.0, -1.0, 0.0])
        d = decompose_indefinite(D(np.diag(t)))
        assert d.v1 == pytest.approx(np.sqrt(2))
        assert d.v2 == pytest.approx(1)
        np.testing.assert_allclose(d.reconstruct(), t, atol=1e-13)

    def test_random(self, rng):
        for _ in range(20):
            n = int(rng.integers(1, 9))
            t = operator_with_spectrum(rng.normal(scale=3, size=n), rng)
            d = decompose_indefinite(t)
            assert np.linalg.norm(d.reconstruct() - t) <= 1e-8 * max(1, np.linalg.norm(t))
