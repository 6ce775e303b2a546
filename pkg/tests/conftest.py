"""Shared oracles: brute-force geometry and reference path simulators."""

import numpy as np
import pytest

from cneigh.geometry import DesignSample, unit_cube
from cneigh.regularity import Curve, CurveSet


def bf_nearest_excluding(points, t, excluded=None):
    """Full-scan LOO-NN with the lexicographic tie rule."""
    d2 = ((points - np.asarray(t, dtype=float)) ** 2).sum(axis=1)
    if excluded is not None:
        d2 = d2.copy()
        d2[excluded] = np.inf
    best = d2.min()
    ties = np.flatnonzero(d2 == best)
    return min(ties, key=lambda i: (tuple(points[i]), i))


def bf_degrees(points):
    m = points.shape[0]
    deg = np.zeros(m, dtype=int)
    for i in range(m):
        deg[bf_nearest_excluding(points, points[i], i)] += 1
    return deg


def halfplane_cell_area(pts, i, lo=0.0, hi=1.0):
    """Cell area by clipping the box against every bisector half-plane."""
    poly = [(lo, lo), (hi, lo), (hi, hi), (lo, hi)]
    p = pts[i]
    for j in range(len(pts)):
        if j == i:
            continue
        q = pts[j]
        a = 2.0 * (q - p)
        c = float(q @ q - p @ p)
        clipped = []
        n = len(poly)
        for k in range(n):
            va = np.array(poly[k])
            vb = np.array(poly[(k + 1) % n])
            fa = float(a @ va - c)
            fb = float(a @ vb - c)
            if fa <= 0:
                clipped.append(tuple(va))
            if (fa < 0) != (fb < 0) and fa != fb:
                t = fa / (fa - fb)
                clipped.append(tuple(va + t * (vb - va)))
        poly = clipped
        if not poly:
            return 0.0
    v = np.array(poly)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def bf_volumes_1d(sorted_t, cdf):
    mids = (sorted_t[:-1] + sorted_t[1:]) / 2.0
    bnd = cdf(np.concatenate([[0.0], mids, [1.0]]))
    return np.diff(bnd)


def bf_loo_cumvols_1d(t, cdf):
    """Delete each point in turn and re-partition from scratch."""
    m = t.shape[0]
    cum = np.zeros(m)
    for j in range(m):
        keep = np.delete(np.arange(m), j)
        ts = t[keep]
        order = np.argsort(ts)
        vols = bf_volumes_1d(ts[order], cdf)
        back = np.empty(m - 1)
        back[order] = vols
        cum[keep] += back
    return cum


def fbm_curves(H, n, M, rng):
    """Fractional Brownian paths on random designs, by covariance factorization."""
    curves = []
    for _ in range(n):
        t = np.sort(rng.random(M))
        s, u = np.meshgrid(t, t, indexing="ij")
        cov = 0.5 * (s ** (2 * H) + u ** (2 * H) - np.abs(s - u) ** (2 * H))
        chol = np.linalg.cholesky(cov + 1e-12 * np.eye(M))
        vals = chol @ rng.standard_normal(M)
        curves.append(Curve(DesignSample(unit_cube(1), t, validate=False), vals))
    return CurveSet(curves)


def takagi(t, beta, levels=14):
    """Triangle-wave series: beta-Holder at every point and every scale."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    for j in range(levels + 1):
        x = t * 2.0**j
        out += 2.0 ** (-j * beta) * np.abs(x - np.floor(x + 0.5))
    return out


def takagi_integral(beta, levels=14):
    return sum(2.0 ** (-j * beta) for j in range(levels + 1)) * 0.25


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
