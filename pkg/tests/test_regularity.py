import math

import numpy as np
import pytest

from cneigh.geometry import DesignSample, unit_cube
from cneigh.regularity import (
    Curve,
    CurveSet,
    estimate_local_regularity,
    select_beta,
)
from cneigh.simulate import Process1DConfig, gen_path_1d
from conftest import fbm_curves


def kl_curves(nu, n, M, rng, K=50):
    curves = []
    for _ in range(n):
        t = np.sort(rng.random(M))
        path = gen_path_1d(Process1DConfig(nu, K), rng=rng)
        curves.append(Curve(DesignSample(unit_cube(1), t, validate=False), path.evaluate(t)))
    return CurveSet(curves)


class TestSelectBeta:
    def test_direct_arithmetic(self):
        expect = 0.5 - 1.0 / math.log(100) ** 2
        assert select_beta(0.5, 100) == pytest.approx(expect, abs=1e-12)
        assert select_beta(0.5, 100) == pytest.approx(0.4529, abs=5e-4)

    def test_clamp_floor(self):
        assert select_beta(0.05, 10) == 0.01

    def test_monotone_in_m(self):
        betas = [select_beta(0.5, m) for m in (10, 100, 1000, 10_000)]
        assert betas == sorted(betas)

    def test_below_h_and_limits_to_h(self):
        assert select_beta(0.7, 500) < 0.7
        assert select_beta(0.7, 10**9) == pytest.approx(0.7, abs=5e-3)
        assert select_beta(0.7, 10**18) == pytest.approx(0.7, abs=6e-4)

    def test_requires_three_points(self):
        with pytest.raises(ValueError):
            select_beta(0.5, 2)


class TestLocalRegularity:
    def test_linear_curves_saturate_clamp(self, rng):
        # an equispaced design snaps both window endpoints onto the grid, so
        # the increment ratio is exactly 4: H = 1, clamped to 0.99
        t = np.linspace(0.0, 1.0, 201)
        curves = [
            Curve(DesignSample(unit_cube(1), t), a * t)
            for a in rng.uniform(0.5, 2.0, size=30)
        ]
        est = estimate_local_regularity(CurveSet(curves))
        assert np.allclose(est.H_t, 0.99)
        assert est.H_min == pytest.approx(0.99)

    def test_brownian_recovers_half(self, rng):
        est = estimate_local_regularity(fbm_curves(0.5, 150, 150, rng))
        assert abs(np.mean(est.H_t) - 0.5) < 0.07

    def test_rough_fbm_H09_with_wide_window(self, rng):
        est = estimate_local_regularity(fbm_curves(0.9, 400, 200, rng), delta=0.05)
        assert abs(np.mean(est.H_t) - 0.9) < 0.05

    @pytest.mark.parametrize("nu,h", [(1.6, 0.3), (2.4, 0.7)])
    def test_decay_exponent_maps_to_regularity(self, nu, h, rng):
        # nu = 1 + 2H for the series paths; the window sits above the
        # truncation scale of the 50-term representation
        est = estimate_local_regularity(kl_curves(nu, 300, 200, rng), delta=0.1)
        assert abs(np.mean(est.H_t) - h) < 0.07

    def test_lipschitz_series_saturates(self, rng):
        # dense design puts the default window inside the truncation scale,
        # where nu=3 paths are effectively smooth
        est = estimate_local_regularity(kl_curves(3.0, 80, 1000, rng))
        assert np.mean(est.H_t) >= 0.9

    def test_window_without_increments_errors(self):
        t = np.array([0.05, 0.06])
        c = Curve(DesignSample(unit_cube(1), t), np.array([0.0, 1.0]))
        with pytest.raises(ValueError, match="0.9"):
            estimate_local_regularity(CurveSet([c]), t_grid=[0.9], delta=0.01)

    def test_reported_constants_positive(self, rng):
        est = estimate_local_regularity(fbm_curves(0.5, 60, 80, rng))
        assert np.all(est.L_t >= 0)
        assert 0 < est.beta < est.H_min

    def test_beta_uses_reference_size(self, rng):
        cs = fbm_curves(0.5, 40, 60, rng)
        est = estimate_local_regularity(cs, m_ref=60)
        assert est.beta == pytest.approx(select_beta(est.H_min, 60), abs=1e-12)

    def test_curve_validation(self):
        with pytest.raises(ValueError, match="at least 2"):
            Curve(DesignSample(unit_cube(1), [0.5]), [1.0])
        with pytest.raises(ValueError, match="one curve"):
            CurveSet([])
