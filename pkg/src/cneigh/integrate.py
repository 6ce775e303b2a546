"""Point estimators of I(phi) = E[phi(T)] from values observed at design points."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from cneigh.geometry import DesignSample, loo_neighbor_ids, voronoi_volumes
from cneigh.weights import WeightSet, control_weights_nn, control_weights_unbiased


@dataclass
class IntegrandEvaluations:
    """Integrand values phi(T_m) at the design points, possibly noisy."""

    sample: DesignSample
    values: np.ndarray
    noisy: bool = False
    noise_scale: Optional[np.ndarray] = None

    def __post_init__(self):
        # contiguous storage keeps reductions bit-identical across callers
        self.values = np.ascontiguousarray(self.values, dtype=float)
        if self.values.shape != (self.sample.M,):
            raise ValueError(
                f"{self.values.shape[0] if self.values.ndim else 0} values for "
                f"{self.sample.M} design points"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("integrand values must be finite")
        if self.noise_scale is not None:
            self.noise_scale = np.ascontiguousarray(self.noise_scale, dtype=float)
            if self.noise_scale.shape != (self.sample.M,):
                raise ValueError("noise scale must have one entry per design point")

    @property
    def M(self):
        return self.sample.M


def integrate_mean(ev: IntegrandEvaluations) -> float:
    """Sample-mean estimate."""
    if ev.M < 1:
        raise ValueError("cannot average zero values")
    return float(np.mean(ev.values))


def integrate_trapezoid(ev: IntegrandEvaluations) -> float:
    """Trapezoidal rule on [0,1] with constant extension at the endpoints."""
    dom = ev.sample.domain
    if dom.kind != "unit-cube" or dom.d != 1:
        raise ValueError("trapezoid requires univariate domain")
    order = np.argsort(ev.sample.points[:, 0], kind="stable")
    t = np.concatenate([[0.0], ev.sample.points[order, 0], [1.0]])
    v = ev.values[order]
    v = np.concatenate([[v[0]], v, [v[-1]]])
    return float(np.sum((v[:-1] + v[1:]) / 2.0 * np.diff(t)))


def integrate_control(ev: IntegrandEvaluations, w: WeightSet) -> float:
    """Control-neighbor estimate: dot product of the weight rule with the values."""
    if len(w) != ev.M:
        raise ValueError(f"{len(w)} weights for {ev.M} values")
    return float(np.dot(w.weights, ev.values))


def integrate_control_threeterm(ev: IntegrandEvaluations, mc_draws=None, seed=0) -> float:
    """Three-term form of the nearest-neighbor variant estimate.

    mean(phi) - mean of the LOO-NN interpolant at the points + sum of values
    weighted by cell volumes; algebraically identical to ``integrate_control``
    with nn-variant weights.
    """
    if ev.M < 2:
        raise ValueError("control estimate requires at least 2 points")
    ids = loo_neighbor_ids(ev.sample)
    vols = voronoi_volumes(ev.sample, mc_draws=mc_draws, seed=seed)
    v = ev.values
    return float(np.mean(v) - np.mean(v[ids]) + np.dot(v, vols))


def default_control_estimate(ev: IntegrandEvaluations, mc_draws=None, seed=0) -> float:
    """Dimension-based default: unbiased LOO rule in 1-d, nn-variant above."""
    dom = ev.sample.domain
    if dom.kind == "unit-cube" and dom.d == 1:
        return integrate_control(ev, control_weights_unbiased(ev.sample))
    return integrate_control(ev, control_weights_nn(ev.sample, mc_draws=mc_draws, seed=seed))
