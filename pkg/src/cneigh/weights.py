"""Control-neighbor integration weights assembled from geometric summaries.

Two variants: the unbiased leave-one-out rule w_m = (1 + c_m - d_m)/M built
from degrees and LOO cumulative volumes, and the cheaper nearest-neighbor
variant w_m = (1 + M V_m - d_m)/M built from standard cell volumes. Both sum
to 1; individual weights may be negative and are kept as-is, since the
unbiasedness of the rule depends on them.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from cneigh.geometry import DesignSample, VoronoiSummary, voronoi_summary


@dataclass
class WeightSet:
    """Linear integration rule: estimate = sum(weights * values)."""

    weights: np.ndarray
    variant: str  # "unbiased-loo" or "nn-variant"
    source: VoronoiSummary

    def __len__(self):
        return self.weights.shape[0]


def control_weights_unbiased(sample: DesignSample, strict=False, expensive_loo=False,
                             mc_draws=None, seed=0) -> WeightSet:
    """Unbiased leave-one-out control-neighbor weights.

    The variance bound behind the method assumes M >= 4; smaller samples
    still define valid weights, so by default they only trigger a warning
    (subsamples drawn by the interval procedures can be small). ``strict=True``
    turns the warning into an error.
    """
    if sample.M < 2:
        raise ValueError("control weights require at least 2 points")
    if sample.M < 4:
        if strict:
            raise ValueError(f"strict mode requires M >= 4, got M={sample.M}")
        warnings.warn(f"M={sample.M} < 4: variance guarantees do not apply")
    summary = voronoi_summary(
        sample, include_loo=True, expensive_loo=expensive_loo,
        mc_draws=mc_draws, seed=seed,
    )
    w = (1.0 + summary.loo_cum_volumes - summary.degrees) / sample.M
    return WeightSet(w, "unbiased-loo", summary)


def control_weights_nn(sample: DesignSample, mc_draws=None, seed=0) -> WeightSet:
    """Nearest-neighbor variant weights from standard cell volumes.

    Needs a single Voronoi construction, so it is the recommended rule for
    d > 1; it carries a bias that vanishes at the same rate as the estimator
    error.
    """
    if sample.M < 2:
        raise ValueError("control weights require at least 2 points")
    summary = voronoi_summary(sample, include_loo=False, mc_draws=mc_draws, seed=seed)
    w = (1.0 + sample.M * summary.std_volumes - summary.degrees) / sample.M
    return WeightSet(w, "nn-variant", summary)
