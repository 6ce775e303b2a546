"""Functional-data applications of the control-neighbor integral.

Regression prediction, fPCA scores and integrated depths all reduce to a
weighted sum of an integrand built from injected evaluators (mean, slope,
basis, design density); the auxiliary quantities are taken as given and never
estimated here, except for the design density itself, for which a thresholded
cosine-series estimator is provided.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.stats import norm

from cneigh.geometry import DesignSample
from cneigh.infer import IntervalEstimate, SubsampleConfig, clt_ci, subsample_pi
from cneigh.integrate import IntegrandEvaluations, integrate_control
from cneigh.weights import WeightSet

DENSITY_FLOOR = 1e-3


def tabulated(grid, values):
    """Linear-interpolation evaluator from a (grid, values) table."""
    grid = np.asarray(grid, dtype=float)
    values = np.asarray(values, dtype=float)
    if grid.ndim != 1 or grid.shape != values.shape:
        raise ValueError("grid and values must be matching 1-d arrays")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    if not np.all(np.isfinite(values)):
        raise ValueError("tabulated values must be finite")

    def evaluate(t):
        return np.interp(np.asarray(t, dtype=float), grid, values)

    return evaluate


@dataclass
class LinkFunction:
    """Monotone invertible link g with its inverse."""

    g: Callable[[np.ndarray], np.ndarray]
    inverse: Callable[[np.ndarray], np.ndarray]


@dataclass
class RegressionModel:
    """Functional linear model: Y = alpha0 + <alpha, X> (+ link g outside)."""

    alpha0: float
    alpha: Callable
    K: int = 1
    link: Optional[LinkFunction] = None


@dataclass
class FPCAModel:
    """Mean and orthonormal basis evaluators (eigenvalues optional)."""

    mu: Callable
    psis: Sequence[Callable]
    lambdas: Optional[np.ndarray] = None

    def psi(self, j):
        """j-th basis evaluator, 1-based."""
        if not 1 <= j <= len(self.psis):
            raise ValueError(f"component {j} outside 1..{len(self.psis)}")
        return self.psis[j - 1]


@dataclass
class DepthSpec:
    """Pointwise depth, marginal-law accessor and weight function.

    ``marginal_cdf(t, x)`` returns the marginal distribution function of X(t)
    at x; the default depth is the univariate Tukey depth min(F, 1-F). The
    weight ``omega`` defaults to the design density itself, making the
    omega/f_T ratio identically one.
    """

    marginal_cdf: Callable[[np.ndarray, np.ndarray], np.ndarray]
    omega: Optional[Callable] = None
    depth: Optional[Callable] = None

    def pointwise_depth(self, t, x):
        if self.depth is not None:
            d = np.asarray(self.depth(t, x), dtype=float)
        else:
            f = np.asarray(self.marginal_cdf(t, x), dtype=float)
            d = np.minimum(f, 1.0 - f)
        if np.any(d < -1e-12) or np.any(d > 1.0 + 1e-12):
            raise ValueError("depth values must lie in [0, 1]")
        return np.clip(d, 0.0, 1.0)

    @staticmethod
    def gaussian(mu_fn, sd_fn, omega=None):
        """Gaussian marginals with the given mean and standard deviation."""

        def cdf(t, x):
            return norm.cdf((np.asarray(x, float) - mu_fn(t)) / sd_fn(t))

        return DepthSpec(cdf, omega=omega)

    @staticmethod
    def empirical(grid, curve_matrix, omega=None):
        """Pooled empirical marginals from curves tabulated on a common grid."""
        grid = np.asarray(grid, dtype=float)
        mat = np.asarray(curve_matrix, dtype=float)  # (n_curves, len(grid))
        if mat.ndim != 2 or mat.shape[1] != grid.size:
            raise ValueError("curve matrix must be n_curves x len(grid)")
        sorted_cols = np.sort(mat, axis=0)
        n = mat.shape[0]

        def cdf(t, x):
            t = np.asarray(t, dtype=float)
            x = np.asarray(x, dtype=float)
            cols = np.clip(np.searchsorted(grid, t), 0, grid.size - 1)
            out = np.empty(t.shape)
            for i, (c, xv) in enumerate(zip(cols, x)):
                out[i] = np.searchsorted(sorted_cols[:, c], xv, side="right") / n
            return out

        return DepthSpec(cdf, omega=omega)


def _coords(sample: DesignSample):
    """What evaluators receive: the scalar coordinate in 1-d, rows otherwise."""
    if sample.domain.kind == "unit-cube" and sample.domain.d == 1:
        return sample.points[:, 0]
    return sample.points


def _design_density(sample: DesignSample):
    f = np.asarray(sample.measure.density(sample.points), dtype=float)
    if np.any(f < DENSITY_FLOOR):
        raise ValueError("density floor violated")
    return f


def _eval_sigma(sigma, coords, values=None):
    if callable(sigma):
        s = sigma(coords) if values is None else sigma(coords, values)
    else:
        s = np.broadcast_to(np.asarray(sigma, dtype=float), coords.shape[:1]).copy()
    return np.asarray(s, dtype=float)


def _regression_integrand(model: RegressionModel, covariate, sample: DesignSample):
    cov = np.asarray(covariate, dtype=float)
    a = np.asarray(model.alpha(_coords(sample)), dtype=float)
    f = _design_density(sample)
    prod = np.sum(a * cov, axis=-1) if cov.ndim > 1 else a * cov
    return prod / f


def predict_flm(model: RegressionModel, covariate, sample: DesignSample,
                w: WeightSet) -> float:
    """Best-linear-prediction estimate alpha0 + sum w_m alpha(T_m)' X(T_m) / f(T_m)."""
    phi = _regression_integrand(model, covariate, sample)
    return model.alpha0 + integrate_control(IntegrandEvaluations(sample, phi), w)


def predict_flm_pi(model: RegressionModel, covariate, sample: DesignSample,
                   cfg: SubsampleConfig, delta, estimator="auto") -> IntervalEstimate:
    """Subsampling prediction interval for the regression prediction."""
    phi = _regression_integrand(model, covariate, sample)
    iv = subsample_pi(IntegrandEvaluations(sample, phi), estimator, cfg, delta)
    return IntervalEstimate(
        iv.point + model.alpha0, iv.lower + model.alpha0, iv.upper + model.alpha0,
        iv.level, iv.method, iv.meta,
    )


def predict_flm_ci_noisy(model: RegressionModel, noisy_covariate, sigma,
                         sample: DesignSample, w: WeightSet, delta,
                         mode="conditional") -> IntervalEstimate:
    """CLT confidence interval for the prediction under covariate noise.

    Restricted to scalar covariates (K = 1); ``sigma`` is the noise standard
    deviation as a scalar, a per-point array, or an evaluator of t.
    """
    if model.K != 1:
        raise ValueError("noisy-covariate intervals are defined for K = 1")
    coords = _coords(sample)
    z = np.asarray(noisy_covariate, dtype=float)
    a = np.asarray(model.alpha(coords), dtype=float)
    f = _design_density(sample)
    sig = _eval_sigma(sigma, coords)
    ev = IntegrandEvaluations(
        sample, a * z / f, noisy=True, noise_scale=np.abs(a) * sig / f
    )
    iv = clt_ci(ev, w, delta, mode=mode)
    return IntervalEstimate(
        iv.point + model.alpha0, iv.lower + model.alpha0, iv.upper + model.alpha0,
        iv.level, iv.method, iv.meta,
    )


def glm_transform_interval(iv: IntervalEstimate, link: LinkFunction) -> IntervalEstimate:
    """Image of an interval through a monotone link; endpoints swap if decreasing."""
    pt = float(link.g(np.asarray(iv.point)))
    a = float(link.g(np.asarray(iv.lower)))
    b = float(link.g(np.asarray(iv.upper)))
    lo, hi = (a, b) if a <= b else (b, a)
    return IntervalEstimate(pt, lo, hi, iv.level, iv.method, dict(iv.meta))


def _score_integrand(model: FPCAModel, j, values, sample: DesignSample):
    coords = _coords(sample)
    v = np.asarray(values, dtype=float)
    mu = np.asarray(model.mu(coords), dtype=float)
    psi = np.asarray(model.psi(j)(coords), dtype=float)
    f = _design_density(sample)
    return (v - mu) * psi / f, psi, f


def fpca_score(model: FPCAModel, j, values, sample: DesignSample, w: WeightSet) -> float:
    """Projection of a curve on the j-th basis function (1-based)."""
    phi, _, _ = _score_integrand(model, j, values, sample)
    return integrate_control(IntegrandEvaluations(sample, phi), w)


def fpca_score_pi(model: FPCAModel, j, values, sample: DesignSample,
                  cfg: SubsampleConfig, delta, estimator="auto") -> IntervalEstimate:
    """Subsampling prediction interval for a noiseless score."""
    phi, _, _ = _score_integrand(model, j, values, sample)
    return subsample_pi(IntegrandEvaluations(sample, phi), estimator, cfg, delta)


def fpca_score_ci(model: FPCAModel, j, noisy_values, sigma, sample: DesignSample,
                  w: WeightSet, delta, mode="conditional") -> IntervalEstimate:
    """CLT confidence interval for a score under observation noise.

    ``sigma`` may be a scalar, per-point array, or two-argument evaluator
    sigma(t, x) of the design point and the observed value.
    """
    coords = _coords(sample)
    phi, psi, f = _score_integrand(model, j, noisy_values, sample)
    sig = _eval_sigma(sigma, coords, np.asarray(noisy_values, dtype=float))
    ev = IntegrandEvaluations(
        sample, phi, noisy=True, noise_scale=np.abs(sig * psi) / f
    )
    return clt_ci(ev, w, delta, mode=mode)


def depth_mfd(spec: DepthSpec, values, sample: DesignSample, w: WeightSet) -> float:
    """Integrated functional depth of one curve against the marginal laws."""
    coords = _coords(sample)
    f = _design_density(sample)
    d = spec.pointwise_depth(coords, np.asarray(values, dtype=float))
    omega = np.asarray(spec.omega(coords), dtype=float) if spec.omega else f
    return integrate_control(IntegrandEvaluations(sample, d * omega / f), w)


def depth_mfd_pi(spec: DepthSpec, values, sample: DesignSample, delta,
                 cfg: Optional[SubsampleConfig] = None, estimator="auto") -> IntervalEstimate:
    """Prediction interval for the integrated depth.

    Common depths are Lipschitz in the curve values, so differentiable paths
    justify the default beta = 1.
    """
    if cfg is None:
        cfg = SubsampleConfig(beta=1.0)
    coords = _coords(sample)
    f = _design_density(sample)
    d = spec.pointwise_depth(coords, np.asarray(values, dtype=float))
    omega = np.asarray(spec.omega(coords), dtype=float) if spec.omega else f
    return subsample_pi(IntegrandEvaluations(sample, d * omega / f), estimator, cfg, delta)


@dataclass
class DensityFit:
    """Thresholded cosine-series density estimate of the design density."""

    coefficients: np.ndarray
    cutoff: int
    c_th: float
    c_k0: float
    c_k1: float
    floor: float
    _norm: float = field(default=1.0, repr=False)

    def raw(self, t):
        t = np.asarray(t, dtype=float)
        out = np.full(t.shape, self.coefficients[0])
        for k in range(1, self.coefficients.size):
            if self.coefficients[k] != 0.0:
                out += self.coefficients[k] * np.sqrt(2.0) * np.cos(np.pi * k * t)
        return out

    def density(self, t):
        """Clipped and renormalized density evaluator."""
        return np.maximum(self.raw(t), self.floor) / self._norm

    def __call__(self, t):
        return self.density(t)


def fit_density_threshold(point_sets, c_th=0.4, c_k0=3.0, c_k1=0.8,
                          floor=DENSITY_FLOOR) -> DensityFit:
    """Fit the design density from pooled curves by thresholded cosine series.

    Coefficients are pooled per-curve averages of the basis functions; the
    cutoff minimizes the cumulative unbiased risk 2 v_k - theta_k^2, and a
    coefficient survives only when theta_k^2 > c_th v_k. The fit is clipped at
    ``floor`` and renormalized to integrate to one.
    """
    sets = [np.asarray(p, dtype=float).ravel() for p in point_sets]
    n = len(sets)
    if n < 2:
        raise ValueError("need n >= 2 for variance")
    m_bar = sum(p.size for p in sets)
    if m_bar < 10:
        raise ValueError(f"need at least 10 pooled points, got {m_bar}")
    k_max = int(c_k0 + c_k1 * np.log(m_bar))

    # per-curve averages of each basis function
    avg = np.empty((n, k_max + 1))
    for i, pts in enumerate(sets):
        avg[i, 0] = 1.0
        for k in range(1, k_max + 1):
            avg[i, k] = np.mean(np.sqrt(2.0) * np.cos(np.pi * k * pts))
    theta = avg.mean(axis=0)
    v = np.var(avg, axis=0, ddof=1) / n

    risk = np.cumsum(2.0 * v - theta**2)
    cutoff = int(np.argmin(risk))
    coef = np.where(theta**2 > c_th * v, theta, 0.0)
    coef[cutoff + 1 :] = 0.0

    fit = DensityFit(coef, cutoff, c_th, c_k0, c_k1, floor)
    grid = np.linspace(0.0, 1.0, 200_001)
    fit._norm = float(np.trapezoid(np.maximum(fit.raw(grid), floor), grid))
    return fit
