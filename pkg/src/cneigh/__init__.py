"""Nearest-neighbor control-variate Monte Carlo integration for functional data."""

from cneigh.geometry import (
    DesignSample,
    Domain,
    NNIndex,
    SamplingMeasure,
    VoronoiSummary,
    degrees,
    loo_cumulative_volumes,
    nearest_excluding,
    unit_cube,
    unit_sphere,
    voronoi_summary,
    voronoi_volumes,
)
from cneigh.infer import (
    IntervalEstimate,
    SubsampleConfig,
    clt_ci,
    empirical_quantile,
    subsample_pi,
)
from cneigh.integrate import (
    IntegrandEvaluations,
    default_control_estimate,
    integrate_control,
    integrate_control_threeterm,
    integrate_mean,
    integrate_trapezoid,
)
from cneigh.weights import WeightSet, control_weights_nn, control_weights_unbiased

__version__ = "0.1.0"
