"""Local regularity of sample paths and the data-driven Holder exponent.

The local exponent H_t is read off the ratio of mean squared increments at
two lag scales; the exponent fed to the interval procedures is H_min minus a
slowly vanishing log correction, so that it approaches H_min from below as
the design grows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from cneigh.geometry import DesignSample

H_CLAMP = (0.01, 0.99)
BETA_FLOOR = 0.01


@dataclass
class Curve:
    """One discretely observed curve: design points plus observed values."""

    sample: DesignSample
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.sample.M,):
            raise ValueError("one observed value per design point required")
        if self.sample.M < 2:
            raise ValueError("curves need at least 2 observation points")


@dataclass
class CurveSet:
    """Learning set of curves over a common 1-d domain."""

    curves: Sequence[Curve]

    def __post_init__(self):
        if len(self.curves) < 1:
            raise ValueError("need at least one curve")
        for c in self.curves:
            dom = c.sample.domain
            if dom.kind != "unit-cube" or dom.d != 1:
                raise ValueError("regularity estimation is univariate")

    @property
    def n(self):
        return len(self.curves)

    def median_spacing(self):
        """Median of the consecutive design spacings pooled across curves."""
        gaps = np.concatenate(
            [np.diff(np.sort(c.sample.points[:, 0])) for c in self.curves]
        )
        return float(np.median(gaps))

    def mean_size(self):
        return float(np.mean([c.sample.M for c in self.curves]))


@dataclass
class RegularityEstimate:
    """Local exponents and constants on a grid, plus the derived global values."""

    t_grid: np.ndarray
    H_t: np.ndarray
    L_t: np.ndarray
    H_min: float
    beta: float
    delta: float


def _clamped_window(t, half, lo=0.0, hi=1.0):
    # shift the window inward so both endpoints stay inside the domain
    u1, u2 = t - half, t + half
    if u1 < lo:
        return lo, min(lo + 2 * half, hi)
    if u2 > hi:
        return max(hi - 2 * half, lo), hi
    return u1, u2


def _mean_sq_increment(sorted_pts, sorted_vals, u1, u2):
    """Squared increment between the observed points nearest to u1 and u2.

    Returns None when both targets resolve to the same observation.
    """
    out = []
    for pts, vals in zip(sorted_pts, sorted_vals):
        i1 = _nearest_sorted(pts, u1)
        i2 = _nearest_sorted(pts, u2)
        if i1 == i2:
            continue
        out.append((vals[i2] - vals[i1]) ** 2)
    if not out:
        return None
    return float(np.mean(out))


def _nearest_sorted(pts, u):
    j = np.searchsorted(pts, u)
    if j == 0:
        return 0
    if j == pts.size:
        return pts.size - 1
    return j if pts[j] - u < u - pts[j - 1] else j - 1


def estimate_local_regularity(curves: CurveSet, t_grid=None, delta=None,
                              m_ref=None) -> RegularityEstimate:
    """Estimate the local exponent H_t and constant L_t on a grid.

    For each grid point, mean squared increments between the observations
    nearest to t +- a/2 are compared at lags a = delta and a = 2*delta:
    H_t = [log theta(t, 2 delta) - log theta(t, delta)] / (2 log 2), clamped
    to (0.01, 0.99). ``delta`` defaults to four median design spacings so that
    a window holds two to three observations per curve on average; curves
    whose two window endpoints resolve to the same observation are skipped.
    """
    if delta is None:
        delta = 4.0 * curves.median_spacing()
    if delta <= 0:
        raise ValueError("window spacing must be positive")
    if t_grid is None:
        pad = min(delta, 0.45)
        t_grid = np.linspace(pad, 1.0 - pad, 21)
    t_grid = np.asarray(t_grid, dtype=float)

    sorted_pts, sorted_vals = [], []
    for c in curves.curves:
        order = np.argsort(c.sample.points[:, 0], kind="stable")
        sorted_pts.append(c.sample.points[order, 0])
        sorted_vals.append(c.values[order])

    lo, hi = H_CLAMP
    H = np.empty(t_grid.size)
    L = np.empty(t_grid.size)
    bad = []
    for k, t in enumerate(t_grid):
        th = []
        for a in (delta, 2.0 * delta):
            u1, u2 = _clamped_window(t, a / 2.0)
            th.append(_mean_sq_increment(sorted_pts, sorted_vals, u1, u2))
        if th[0] is None or th[1] is None:
            bad.append(float(t))
            H[k] = L[k] = np.nan
            continue
        if th[0] <= 0.0:
            # locally constant at the finer lag: maximal smoothness
            H[k] = hi
        elif th[1] <= 0.0:
            H[k] = lo
        else:
            H[k] = min(max((math.log(th[1]) - math.log(th[0])) / (2 * math.log(2)), lo), hi)
        L[k] = math.sqrt(th[0] / delta ** (2 * H[k])) if th[0] > 0 else 0.0
    if bad:
        raise ValueError(f"no usable increments in the windows around t = {bad}")

    h_min = float(np.min(H))
    m = m_ref if m_ref is not None else curves.mean_size()
    return RegularityEstimate(t_grid, H, L, h_min, select_beta(h_min, m), float(delta))


def select_beta(h_min, m):
    """Holder exponent for the interval procedures: H_min - 1/log(M)^2.

    The correction accounts for the estimation error in H_min; it vanishes as
    the design grows, and the result is floored at 0.01.
    """
    m = float(m)
    if m < 3:
        raise ValueError("need M >= 3 so that log(M)^2 > 1")
    return min(max(h_min - 1.0 / math.log(m) ** 2, BETA_FLOOR), 1.0)
