import numpy as np
import pytest

from cneigh.geometry import (
    DesignSample,
    NNIndex,
    SamplingMeasure,
    degrees,
    loo_cumulative_volumes,
    loo_neighbor_ids,
    nearest_excluding,
    unit_cube,
    unit_sphere,
    voronoi_summary,
    voronoi_volumes,
)
from conftest import (
    bf_degrees,
    bf_loo_cumvols_1d,
    bf_nearest_excluding,
    halfplane_cell_area,
)


def sample_1d(points, measure=None):
    return DesignSample(unit_cube(1), points, measure or SamplingMeasure.uniform())


class TestDomainsAndMeasures:
    def test_cube_contains(self):
        assert unit_cube(2).contains(np.array([[0.0, 1.0]]))
        assert not unit_cube(2).contains(np.array([[0.0, 1.1]]))

    def test_sphere_norm_checked(self):
        dom = unit_sphere(2)
        good = np.array([[1.0, 0.0, 0.0]])
        assert dom.contains(good)
        with pytest.raises(ValueError):
            DesignSample(dom, np.array([[1.0, 1.0, 0.0]]))

    def test_linear_measure_b_range(self):
        with pytest.raises(ValueError):
            SamplingMeasure.linear(2.0)
        m = SamplingMeasure.linear(0.5)
        t = np.linspace(0, 1, 11)
        assert np.allclose(m.density(t), 1 - 0.25 + 0.5 * t)
        assert np.allclose(m.cdf(m.ppf(t)), t, atol=1e-12)

    def test_tabulated_measure_normalizes(self):
        grid = np.linspace(0, 1, 51)
        m = SamplingMeasure.tabulated(grid, 2.0 + np.sin(3 * grid))
        dense = np.linspace(0, 1, 20001)
        assert abs(np.trapezoid(m.density(dense), dense) - 1.0) < 1e-6
        assert abs(m.cdf(1.0) - 1.0) < 1e-12
        u = np.linspace(0.01, 0.99, 37)
        assert np.allclose(m.cdf(m.ppf(u)), u, atol=1e-10)

    def test_tabulated_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            SamplingMeasure.tabulated([0.0, 0.5, 1.0], [1.0, 0.0, 1.0])

    def test_measure_sampling_matches_cdf(self, rng):
        m = SamplingMeasure.linear(0.8)
        draws = m.sample(rng, 200_000, unit_cube(1))[:, 0]
        # exceedance at a few thresholds against the closed-form CDF
        for q in (0.2, 0.5, 0.8):
            assert abs(np.mean(draws <= q) - m.cdf(q)) < 5e-3


class TestNearestExcluding:
    def test_only_candidate(self):
        idx = NNIndex(sample_1d([0.2, 0.8]))
        assert nearest_excluding(idx, [0.2], 0) == 1

    def test_tie_goes_lexicographically_smaller(self):
        idx = NNIndex(sample_1d([0.1, 0.5, 0.9]))
        assert idx.nearest_excluding([0.5], 1) == 0

    def test_insufficient_points(self):
        idx = NNIndex(sample_1d([0.4]))
        with pytest.raises(ValueError, match="insufficient points"):
            idx.nearest_excluding([0.4], 0)

    def test_matches_brute_force_2d(self, rng):
        pts = rng.random((200, 2))
        s = DesignSample(unit_cube(2), pts)
        idx = NNIndex(s)
        for t in rng.random((50, 2)):
            excl = int(rng.integers(200))
            assert idx.nearest_excluding(t, excl) == bf_nearest_excluding(pts, t, excl)

    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_brute_force_equivalence_per_dimension(self, d, rng):
        # 1000 random (sample, query) pairs per dimension
        for _ in range(1000):
            m = int(rng.integers(2, 40))
            pts = rng.random((m, d))
            idx = NNIndex(DesignSample(unit_cube(d), pts, validate=False))
            t = rng.random(d)
            excl = int(rng.integers(m))
            assert idx.nearest_excluding(t, excl) == bf_nearest_excluding(pts, t, excl)

    def test_duplicate_points_follow_index_rule(self):
        s = sample_1d([0.3, 0.3, 0.5])
        idx = NNIndex(s)
        # both copies are at distance 0.2; the earlier index wins
        assert idx.nearest_excluding([0.5], 2) == 0
        assert idx.nearest_excluding([0.3], 0) == 1

    def test_sphere_matches_brute_force(self, rng):
        z = rng.standard_normal((60, 3))
        pts = z / np.linalg.norm(z, axis=1, keepdims=True)
        s = DesignSample(unit_sphere(2), pts)
        idx = NNIndex(s)
        for _ in range(40):
            q = rng.standard_normal(3)
            q /= np.linalg.norm(q)
            excl = int(rng.integers(60))
            # chordal and geodesic orderings coincide
            assert idx.nearest_excluding(q, excl) == bf_nearest_excluding(pts, q, excl)


class TestDegrees:
    def test_three_point_example(self):
        assert degrees(sample_1d([0.1, 0.5, 0.9])).tolist() == [1, 2, 0]

    def test_mutual_pair(self):
        assert degrees(sample_1d([0.2, 0.8])).tolist() == [1, 1]

    def test_sum_is_m(self, rng):
        for _ in range(50):
            m = int(rng.integers(2, 200))
            d = int(rng.integers(1, 3))
            s = DesignSample(unit_cube(d), rng.random((m, d)), validate=False)
            assert degrees(s).sum() == m

    def test_1d_degree_bounded_by_two(self, rng):
        for _ in range(20):
            m = int(rng.integers(2, 300))
            assert degrees(sample_1d(rng.random(m))).max() <= 2

    def test_matches_brute_force(self, rng):
        for d in (1, 2):
            for _ in range(25):
                m = int(rng.integers(2, 30))
                pts = rng.random((m, d))
                s = DesignSample(unit_cube(d), pts, validate=False)
                assert np.array_equal(degrees(s), bf_degrees(pts))

    def test_loo_ids_match_per_point_queries(self, rng):
        pts = rng.random((80, 2))
        s = DesignSample(unit_cube(2), pts)
        ids = loo_neighbor_ids(s)
        idx = NNIndex(s)
        for m in range(80):
            assert ids[m] == idx.nearest_excluding(pts[m], m)

    def test_sphere_degrees_partition(self, rng):
        z = rng.standard_normal((40, 3))
        pts = z / np.linalg.norm(z, axis=1, keepdims=True)
        d = degrees(DesignSample(unit_sphere(2), pts))
        assert d.sum() == 40
        assert np.array_equal(d, bf_degrees(pts))

    def test_requires_two_points(self):
        with pytest.raises(ValueError):
            degrees(sample_1d([0.5]))


class TestVoronoiVolumes:
    def test_midpoint_partition(self):
        v = voronoi_volumes(sample_1d([0.1, 0.5, 0.9]))
        assert np.allclose(v, [0.3, 0.4, 0.3], atol=1e-15)

    def test_single_point_whole_domain(self):
        assert voronoi_volumes(sample_1d([0.37])).tolist() == [1.0]

    def test_symmetric_grid_quarters(self):
        pts = [[0.25, 0.25], [0.25, 0.75], [0.75, 0.25], [0.75, 0.75]]
        v = voronoi_volumes(DesignSample(unit_cube(2), pts))
        assert np.allclose(v, 0.25, atol=1e-14)

    def test_nonuniform_1d_uses_cdf(self):
        m = SamplingMeasure.linear(1.0)
        v = voronoi_volumes(sample_1d([0.1, 0.5, 0.9], m))
        # cell boundaries at 0.3 and 0.7 through F(t) = t/2 + t^2/2
        bnd = m.cdf(np.array([0.3, 0.7]))
        expect = [bnd[0], bnd[1] - bnd[0], 1 - bnd[1]]
        assert np.allclose(v, expect, atol=1e-15)

    def test_2d_exact_matches_halfplane_oracle(self, rng):
        for _ in range(15):
            m = int(rng.integers(2, 25))
            pts = rng.random((m, 2)) * 0.9 + 0.05
            v = voronoi_volumes(DesignSample(unit_cube(2), pts))
            oracle = [halfplane_cell_area(pts, i) for i in range(m)]
            assert np.allclose(v, oracle, atol=1e-12)
            assert abs(v.sum() - 1.0) < 1e-12

    def test_monte_carlo_converges(self):
        # fixed 20-point configuration, exact areas vs 1e6-draw Monte Carlo
        from cneigh.geometry import _volumes_mc

        pts = np.random.default_rng(99).random((20, 2)) * 0.9 + 0.05
        s = DesignSample(unit_cube(2), pts)
        exact = voronoi_volumes(s)
        mc = _volumes_mc(s, mc_draws=1_000_000, seed=1)
        assert np.abs(mc - exact).max() < 0.01

    def test_monte_carlo_path_3d(self, rng):
        pts = rng.random((15, 3))
        s = DesignSample(unit_cube(3), pts)
        v = voronoi_volumes(s, mc_draws=20_000, seed=2)
        assert abs(v.sum() - 1.0) < 1e-12
        assert np.all(v >= 0)

    def test_sphere_volumes_sum(self, rng):
        z = rng.standard_normal((12, 3))
        pts = z / np.linalg.norm(z, axis=1, keepdims=True)
        s = DesignSample(unit_sphere(2), pts)
        v = voronoi_volumes(s, mc_draws=20_000, seed=3)
        assert abs(v.sum() - 1.0) < 1e-12

    def test_boundary_point_falls_back_to_mc(self):
        pts = np.array([[0.0, 0.5], [0.6, 0.5], [0.3, 0.9]])
        s = DesignSample(unit_cube(2), pts)
        with pytest.warns(UserWarning, match="falling back to Monte Carlo"):
            v = voronoi_volumes(s, mc_draws=5_000, seed=4)
        assert abs(v.sum() - 1.0) < 1e-12


class TestLooCumulativeVolumes:
    def test_three_point_example(self):
        c = loo_cumulative_volumes(sample_1d([0.1, 0.5, 0.9]))
        assert np.allclose(c, [0.8, 1.4, 0.8], atol=1e-15)

    def test_two_points(self):
        assert np.allclose(
            loo_cumulative_volumes(sample_1d([0.2, 0.8])), [1.0, 1.0], atol=1e-15
        )

    def test_matches_deletion_oracle_1d(self, rng):
        m = SamplingMeasure.linear(0.7)
        for _ in range(10):
            t = rng.random(10)
            c = loo_cumulative_volumes(sample_1d(t, m))
            assert np.allclose(c, bf_loo_cumvols_1d(t, m.cdf), atol=1e-12)
            assert abs(c.sum() - 10) < 1e-12

    def test_d2_requires_expensive_flag(self, rng):
        s = DesignSample(unit_cube(2), rng.random((6, 2)))
        with pytest.raises(ValueError, match="expensive"):
            loo_cumulative_volumes(s)

    def test_d2_expensive_matches_halfplane_oracle(self, rng):
        pts = rng.random((7, 2)) * 0.9 + 0.05
        s = DesignSample(unit_cube(2), pts)
        c = loo_cumulative_volumes(s, expensive=True)
        oracle = np.zeros(7)
        for j in range(7):
            keep = [k for k in range(7) if k != j]
            sub = pts[keep]
            for pos, k in enumerate(keep):
                oracle[k] += halfplane_cell_area(sub, pos)
        assert np.allclose(c, oracle, atol=1e-10)

    def test_requires_two_points(self):
        with pytest.raises(ValueError):
            loo_cumulative_volumes(sample_1d([0.5]))


class TestSummaryIdentities:
    def test_partition_identities_exact(self, rng):
        for _ in range(40):
            m = int(rng.integers(2, 400))
            s = sample_1d(rng.random(m), SamplingMeasure.linear(rng.uniform(0, 1.9)))
            summ = voronoi_summary(s)
            assert abs(summ.std_volumes.sum() - 1.0) < 1e-12
            assert summ.degrees.sum() == m
            assert abs(summ.loo_cum_volumes.sum() - m) < 1e-12
            assert summ.volume_method == "exact-1d"

    def test_2d_summary_method_tag(self, rng):
        s = DesignSample(unit_cube(2), rng.random((30, 2)) * 0.9 + 0.05)
        summ = voronoi_summary(s)
        assert summ.volume_method == "exact-poly-2d"
        assert summ.loo_cum_volumes is None
        assert abs(summ.std_volumes.sum() - 1.0) < 1e-12
