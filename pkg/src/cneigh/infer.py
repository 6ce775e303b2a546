"""Interval construction around the integral estimates.

Noiseless values get subsampling prediction intervals (M*-out-of-M without
replacement, rescaled by the estimator's convergence rate); noisy values get
CLT confidence intervals whose variance is driven by the weights and the
noise level rather than the integrand's regularity.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.stats import norm

from cneigh._rng import derive_rng
from cneigh.geometry import DesignSample
from cneigh.integrate import (
    IntegrandEvaluations,
    integrate_control,
    integrate_mean,
    integrate_trapezoid,
)
from cneigh.weights import control_weights_nn, control_weights_unbiased


@dataclass
class IntervalEstimate:
    """Point estimate with lower/upper bounds at a nominal level."""

    point: float
    lower: float
    upper: float
    level: float
    method: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 < self.level < 1.0:
            raise ValueError("level must lie in (0, 1)")
        if self.lower > self.upper:
            raise ValueError("interval bounds are reversed")

    @property
    def length(self):
        return self.upper - self.lower

    def covers(self, truth):
        return bool(self.lower <= truth <= self.upper)


@dataclass
class SubsampleConfig:
    """Parameters of the subsampling procedure.

    ``mstar`` defaults to floor(M/2), which maximizes the number of distinct
    subsamples; ``beta`` is the Holder exponent entering the rate exponent
    1/2 + beta/d.
    """

    beta: float
    B: int = 1000
    mstar: Optional[int] = None
    seed: int = 0

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.beta > 1.0:
            warnings.warn(
                f"beta={self.beta} exceeds the Holder cap of 1; the scaling is "
                "applied as requested"
            )
        if self.B < 2:
            raise ValueError("need at least 2 subsample replicates")


def empirical_quantile(sample, p):
    """Order statistics with linear interpolation at index h = (n-1)p + 1.

    Fixed convention so that identical multisets give bit-identical quantiles
    across implementations.
    """
    x = np.sort(np.asarray(sample, dtype=float))
    n = x.size
    if n == 0:
        raise ValueError("quantile of an empty sample")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    h = (n - 1) * p
    lo = min(int(math.floor(h)), n - 2) if n > 1 else 0
    if n == 1:
        return float(x[0])
    return float(x[lo] + (h - lo) * (x[lo + 1] - x[lo]))


ESTIMATORS = ("unbiased-loo", "nn-variant", "mean", "trapezoid", "auto")


def resolve_estimator(estimator) -> Callable[[IntegrandEvaluations], float]:
    """Turn a preset name (or pass a callable through) into an estimator."""
    if callable(estimator):
        return estimator
    if estimator == "unbiased-loo":
        return lambda ev: integrate_control(ev, control_weights_unbiased(ev.sample))
    if estimator == "nn-variant":
        return lambda ev: integrate_control(ev, control_weights_nn(ev.sample))
    if estimator == "mean":
        return integrate_mean
    if estimator == "trapezoid":
        return integrate_trapezoid
    if estimator == "auto":
        def _auto(ev):
            if ev.sample.domain.kind == "unit-cube" and ev.sample.domain.d == 1:
                return integrate_control(ev, control_weights_unbiased(ev.sample))
            return integrate_control(ev, control_weights_nn(ev.sample))

        return _auto
    raise ValueError(f"unknown estimator {estimator!r}; presets: {ESTIMATORS}")


def subsample_pi(ev: IntegrandEvaluations, estimator, cfg: SubsampleConfig, delta,
                 rate_exponent=None) -> IntervalEstimate:
    """Subsampling prediction interval for a noiseless integral estimate.

    Draws B subsamples of size M* without replacement, rescales the deviations
    by (M*)^a and maps their empirical quantiles back through M^(-a), with
    a = 1/2 + beta/d by default. ``rate_exponent`` overrides a for estimators
    with a different convergence rate (the sample mean uses 1/2, the
    trapezoidal rule beta). Subsample b draws from a stream keyed by
    (cfg.seed, b), so replicates are order-independent.
    """
    if ev.noisy:
        raise ValueError("subsampling prediction intervals assume noiseless values")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    m = ev.M
    mstar = cfg.mstar if cfg.mstar is not None else m // 2
    if mstar >= m:
        raise ValueError(f"subsample size {mstar} must be smaller than M={m}")
    if mstar < 2:
        raise ValueError("subsample size must be at least 2")
    est_fn = resolve_estimator(estimator)
    point = est_fn(ev)

    a = rate_exponent if rate_exponent is not None else 0.5 + cfg.beta / ev.sample.domain.d
    scale_sub = mstar**a
    deviations = np.empty(cfg.B)
    pts, vals = ev.sample.points, ev.values
    for b in range(cfg.B):
        ids = derive_rng(cfg.seed, b).choice(m, size=mstar, replace=False)
        sub = IntegrandEvaluations(
            DesignSample(ev.sample.domain, pts[ids], ev.sample.measure, validate=False),
            vals[ids],
        )
        deviations[b] = scale_sub * (est_fn(sub) - point)

    back = m ** (-a)
    lower = point + back * empirical_quantile(deviations, delta / 2.0)
    upper = point + back * empirical_quantile(deviations, 1.0 - delta / 2.0)
    return IntervalEstimate(
        point, lower, upper, 1.0 - delta, "subsample-pi",
        meta={"B": cfg.B, "mstar": mstar, "beta": cfg.beta, "rate_exponent": a,
              "seed": cfg.seed},
    )


def clt_ci(ev: IntegrandEvaluations, w, delta, mode="conditional") -> IntervalEstimate:
    """Gaussian-limit confidence interval for a noisy integral estimate.

    ``conditional`` uses s^2 = sum w_m^2 sigma^2(T_m); ``limit-1d`` replaces it
    with the unit-interval limit (5/2) M^-1 mean(sigma^2(T_m)), which frees the
    interval from the weights but only holds on [0,1].
    """
    if not ev.noisy or ev.noise_scale is None:
        raise ValueError("CLT interval needs noisy values with a per-point noise scale")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    dom = ev.sample.domain
    point = integrate_control(ev, w)
    if mode == "conditional":
        if dom.kind == "unit-sphere":
            warnings.warn(
                "the Gaussian limit on the sphere is conjectural; the interval "
                "is reported as requested"
            )
        s2 = float(np.sum(w.weights**2 * ev.noise_scale**2))
        method = "clt-ci-conditional"
    elif mode == "limit-1d":
        if dom.kind != "unit-cube" or dom.d != 1:
            raise ValueError("limit-1d variance is only valid on the unit interval")
        s2 = 2.5 / ev.M * float(np.mean(ev.noise_scale**2))
        method = "clt-ci-limit"
    else:
        raise ValueError(f"unknown mode {mode!r}")
    s = math.sqrt(s2)
    z = float(norm.ppf(1.0 - delta / 2.0))
    return IntervalEstimate(
        point, point - z * s, point + z * s, 1.0 - delta, method,
        meta={"s_M": s, "z": z},
    )
