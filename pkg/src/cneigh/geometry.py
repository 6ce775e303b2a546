"""Domains, sampling measures, nearest-neighbor queries and Voronoi summaries.

Coordinates live either in the unit cube [0,1]^d (Euclidean distance) or on
the unit sphere S^d embedded in R^{d+1} (geodesic distance). Nearest-neighbor
ties are broken by the lexicographically smallest coordinate vector, then by
the original point index, which makes every query deterministic.
"""

from __future__ import annotations

import warnings
from dataclasses import InitVar, dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial import QhullError, Voronoi, cKDTree

from cneigh.kernels import loo_cell_summary_sorted

SPHERE_NORM_TOL = 1e-9
EXACT_SUM_TOL = 1e-12


@dataclass(frozen=True)
class Domain:
    """Integration domain: ``unit-cube`` in dimension d or ``unit-sphere`` S^d."""

    kind: str
    d: int

    def __post_init__(self):
        if self.kind not in ("unit-cube", "unit-sphere"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.d < 1:
            raise ValueError("dimension must be >= 1")

    @property
    def ambient_dim(self):
        """Number of coordinates per point (d+1 on the sphere)."""
        return self.d if self.kind == "unit-cube" else self.d + 1

    def contains(self, points, tol=0.0):
        points = np.asarray(points, dtype=float)
        if self.kind == "unit-cube":
            return bool(np.all(points >= -tol) and np.all(points <= 1.0 + tol))
        norms = np.linalg.norm(points, axis=-1)
        return bool(np.all(np.abs(norms - 1.0) <= SPHERE_NORM_TOL))

    def distance(self, a, b):
        """Metric distance: Euclidean on the cube, geodesic on the sphere."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if self.kind == "unit-cube":
            return np.sqrt(((a - b) ** 2).sum(axis=-1))
        dots = np.clip((a * b).sum(axis=-1), -1.0, 1.0)
        return np.arccos(dots)


def unit_cube(d=1):
    return Domain("unit-cube", d)


def unit_sphere(d):
    return Domain("unit-sphere", d)


class SamplingMeasure:
    """Distribution of the design points.

    Kinds: ``uniform`` (any domain), ``linear-1d`` with density
    f(t) = 1 - b/2 + b t on [0,1], and ``tabulated-density`` (piecewise-linear
    density on a strictly increasing grid, renormalized to integrate to 1).
    """

    def __init__(self, kind, b=0.0, grid=None, values=None):
        self.kind = kind
        self.b = float(b)
        if kind == "linear-1d" and not 0.0 <= self.b < 2.0:
            raise ValueError("linear-1d requires b in [0, 2) to keep the density positive")
        if kind == "tabulated-density":
            grid = np.asarray(grid, dtype=float)
            values = np.asarray(values, dtype=float)
            if grid.ndim != 1 or grid.shape != values.shape or grid.size < 2:
                raise ValueError("tabulated density needs matching 1-d grid/values")
            if np.any(np.diff(grid) <= 0):
                raise ValueError("tabulated grid must be strictly increasing")
            if not np.all(np.isfinite(values)) or np.any(values <= 0):
                raise ValueError("tabulated density must be finite and positive")
            total = np.trapezoid(values, grid)
            values = values / total
            self.grid = grid
            self.values = values
            # CDF of the piecewise-linear density: quadratic inside each segment
            seg = np.diff(grid) * (values[:-1] + values[1:]) / 2.0
            self._cdf_knots = np.concatenate([[0.0], np.cumsum(seg)])
            self._cdf_knots[-1] = 1.0
        elif kind not in ("uniform", "linear-1d"):
            raise ValueError(f"unknown measure kind {kind!r}")

    @staticmethod
    def uniform():
        return SamplingMeasure("uniform")

    @staticmethod
    def linear(b):
        return SamplingMeasure("linear-1d", b=b)

    @staticmethod
    def tabulated(grid, values):
        return SamplingMeasure("tabulated-density", grid=grid, values=values)

    def density(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "uniform":
            return np.ones(x.shape[:1] if x.ndim > 1 else x.shape)
        if self.kind == "linear-1d":
            t = x[..., 0] if x.ndim > 1 else x
            return 1.0 - self.b / 2.0 + self.b * t
        t = x[..., 0] if x.ndim > 1 else x
        out = np.interp(t, self.grid, self.values)
        if not np.all(np.isfinite(out)):
            raise ValueError("non-finite density evaluation")
        return out

    def cdf(self, t):
        """CDF on [0,1]; only meaningful for 1-d kinds."""
        t = np.asarray(t, dtype=float)
        if self.kind == "uniform":
            return np.clip(t, 0.0, 1.0)
        if self.kind == "linear-1d":
            tc = np.clip(t, 0.0, 1.0)
            return (1.0 - self.b / 2.0) * tc + self.b * tc**2 / 2.0
        tc = np.clip(t, self.grid[0], self.grid[-1])
        i = np.clip(np.searchsorted(self.grid, tc, side="right") - 1, 0, self.grid.size - 2)
        dx = tc - self.grid[i]
        slope = (self.values[i + 1] - self.values[i]) / (self.grid[i + 1] - self.grid[i])
        return self._cdf_knots[i] + self.values[i] * dx + 0.5 * slope * dx**2

    def ppf(self, u):
        """Inverse CDF for 1-d kinds (inverse transform sampling)."""
        u = np.asarray(u, dtype=float)
        if self.kind == "uniform":
            return u
        if self.kind == "linear-1d":
            if self.b == 0.0:
                return u
            a = 1.0 - self.b / 2.0
            return (-a + np.sqrt(a * a + 2.0 * self.b * u)) / self.b
        i = np.clip(np.searchsorted(self._cdf_knots, u, side="right") - 1, 0, self.grid.size - 2)
        rem = u - self._cdf_knots[i]
        f0 = self.values[i]
        slope = (self.values[i + 1] - self.values[i]) / (self.grid[i + 1] - self.grid[i])
        with np.errstate(invalid="ignore", divide="ignore"):
            dx = np.where(
                np.abs(slope) > 1e-14,
                (-f0 + np.sqrt(np.maximum(f0 * f0 + 2.0 * slope * rem, 0.0))) / slope,
                rem / f0,
            )
        return self.grid[i] + dx

    def sample(self, rng, n, domain):
        """Draw n i.i.d. points from the measure on the given domain."""
        if domain.kind == "unit-sphere":
            if self.kind != "uniform":
                raise ValueError("only the uniform measure is supported on the sphere")
            z = rng.standard_normal((n, domain.ambient_dim))
            return z / np.linalg.norm(z, axis=1, keepdims=True)
        if self.kind == "uniform":
            return rng.random((n, domain.d))
        if domain.d != 1:
            raise ValueError(f"{self.kind} measure is univariate")
        return self.ppf(rng.random(n))[:, None]


@dataclass
class DesignSample:
    """M design points in a domain together with their sampling measure."""

    domain: Domain
    points: np.ndarray
    measure: SamplingMeasure = field(default_factory=SamplingMeasure.uniform)
    validate: InitVar[bool] = True

    def __post_init__(self, validate):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        self.points = np.ascontiguousarray(pts)
        if validate:
            if self.points.shape[0] < 1:
                raise ValueError("design sample needs at least one point")
            if self.points.shape[1] != self.domain.ambient_dim:
                raise ValueError(
                    f"points have {self.points.shape[1]} coordinates, domain expects "
                    f"{self.domain.ambient_dim}"
                )
            if not np.all(np.isfinite(self.points)):
                raise ValueError("design points must be finite")
            if not self.domain.contains(self.points):
                raise ValueError("design points fall outside the domain")

    @property
    def M(self):
        return self.points.shape[0]


@dataclass
class VoronoiSummary:
    """Degrees, standard cell volumes and optional LOO cumulative volumes."""

    degrees: np.ndarray
    std_volumes: np.ndarray
    loo_cum_volumes: Optional[np.ndarray]
    volume_method: str


def _lex_best(points, ids):
    """Tie-rule winner: lexicographically smallest coordinates, then index."""
    return min(ids, key=lambda i: (tuple(points[i]), i))


class NNIndex:
    """Exact nearest-neighbor index over a design sample.

    Backed by a k-d tree on the embedded coordinates; on the sphere the
    chordal distance is a monotone function of the geodesic one, so the
    argmins (and tie sets) coincide. Immutable after construction and safe
    for concurrent read queries.
    """

    def __init__(self, sample: DesignSample):
        self.sample = sample
        self._pts = sample.points
        self._tree = cKDTree(self._pts)

    @property
    def M(self):
        return self._pts.shape[0]

    def _sqdist(self, t, ids):
        diff = self._pts[ids] - t
        return (diff * diff).sum(axis=-1)

    def _resolve(self, t, candidates):
        d2 = self._sqdist(t, candidates)
        best = d2.min()
        ties = [candidates[j] for j in np.flatnonzero(d2 == best)]
        return _lex_best(self._pts, ties) if len(ties) > 1 else ties[0]

    def _query_excluding(self, t, excluded):
        m = self.M
        k = min(m, 3)
        while True:
            dist, idx = self._tree.query(t, k=k)
            idx = np.atleast_1d(idx)
            dist = np.atleast_1d(dist)
            cand = idx if excluded is None else idx[idx != excluded]
            if cand.size:
                best = self._sqdist(t, cand).min()
                # stop once the tree's farthest hit is strictly beyond the best
                if k == m or dist[-1] ** 2 > best * (1.0 + 1e-9):
                    break
            elif k == m:  # pragma: no cover - guarded by M >= 2
                break
            k = min(m, 2 * k)
        return self._resolve(t, cand)

    def nearest(self, t):
        """Index of the closest design point to t (ties by the lexicographic rule)."""
        t = np.asarray(t, dtype=float).ravel()
        return int(self._query_excluding(t, None))

    def nearest_excluding(self, t, excluded):
        """Closest design point to t among all points except ``excluded``."""
        if self.M < 2:
            raise ValueError("insufficient points for LOO query")
        if not 0 <= excluded < self.M:
            raise ValueError(f"excluded id {excluded} out of range")
        t = np.asarray(t, dtype=float).ravel()
        return int(self._query_excluding(t, excluded))

    def assign_nearest(self, queries):
        """Batch nearest ids for many query points (ties left to the tree)."""
        _, ids = self._tree.query(np.asarray(queries, dtype=float))
        return ids

    def loo_ids(self):
        """LOO nearest neighbor id of every design point, vectorized.

        A fast k=3 pass covers the generic position case; rows with duplicate
        coordinates or near-ties are re-resolved exactly against a full scan.
        """
        m = self.M
        if m < 2:
            raise ValueError("insufficient points for LOO query")
        pts = self._pts
        k = min(m, 3)
        dist, idx = self._tree.query(pts, k=k)
        out = np.empty(m, dtype=np.intp)
        rows = np.arange(m)
        self_pos = idx == rows[:, None]
        careful = ~self_pos.any(axis=1)  # duplicates: the point itself not returned
        # first candidate = nearest hit that is not the point itself
        first = np.where(self_pos[:, 0], idx[:, 1] if k > 1 else 0, idx[:, 0])
        out[:] = first
        if k >= 3:
            second = np.where(
                self_pos[:, 0], idx[:, 2], np.where(self_pos[:, 1], idx[:, 2], idx[:, 1])
            )
            d_first = self._rowwise_sqdist(first)
            d_second = self._rowwise_sqdist(second)
            careful |= d_second <= d_first * (1.0 + 1e-9)
        for r in np.flatnonzero(careful):
            d2 = ((pts - pts[r]) ** 2).sum(axis=1)
            d2[r] = np.inf
            best = d2.min()
            ties = np.flatnonzero(d2 == best)
            out[r] = _lex_best(pts, ties) if ties.size > 1 else ties[0]
        return out

    def _rowwise_sqdist(self, ids):
        diff = self._pts - self._pts[ids]
        return (diff * diff).sum(axis=1)


def nearest_excluding(index: NNIndex, t, excluded):
    """Functional form of :meth:`NNIndex.nearest_excluding`."""
    return index.nearest_excluding(t, excluded)


def _sorted_1d(sample):
    """(order, sorted coords) for a 1-d cube sample; stable in the point index."""
    t = sample.points[:, 0]
    order = np.argsort(t, kind="stable")
    return order, t[order]


def _is_1d_exact(sample):
    return sample.domain.kind == "unit-cube" and sample.domain.d == 1


def degrees(sample: DesignSample):
    """Number of points having each point as its leave-one-out nearest neighbor."""
    if sample.M < 2:
        raise ValueError("degrees require at least 2 points")
    if _is_1d_exact(sample):
        order, ts = _sorted_1d(sample)
        if np.all(np.diff(ts) > 0):
            deg_sorted = _sorted_degrees_1d(ts)
            out = np.empty(sample.M, dtype=np.int64)
            out[order] = deg_sorted
            return out
    ids = NNIndex(sample).loo_ids()
    return np.bincount(ids, minlength=sample.M).astype(np.int64)


def _sorted_degrees_1d(ts):
    m = ts.shape[0]
    gaps = np.diff(ts)
    dl = np.concatenate([[np.inf], gaps])
    dr = np.concatenate([gaps, [np.inf]])
    idx = np.arange(m)
    nn = np.where(dl <= dr, idx - 1, idx + 1)
    return np.bincount(nn, minlength=m).astype(np.int64)


def loo_neighbor_ids(sample: DesignSample):
    """LOO-NN id for every design point (original index order)."""
    if sample.M < 2:
        raise ValueError("insufficient points for LOO query")
    if _is_1d_exact(sample):
        order, ts = _sorted_1d(sample)
        if np.all(np.diff(ts) > 0):
            m = sample.M
            gaps = np.diff(ts)
            dl = np.concatenate([[np.inf], gaps])
            dr = np.concatenate([gaps, [np.inf]])
            idx = np.arange(m)
            nn_sorted = np.where(dl <= dr, idx - 1, idx + 1)
            out = np.empty(m, dtype=np.intp)
            out[order] = order[nn_sorted]
            return out
    return NNIndex(sample).loo_ids()


DEFAULT_MC_DRAWS = 100_000


def _mc_draw_count(sample, mc_draws):
    return int(mc_draws) if mc_draws else max(DEFAULT_MC_DRAWS, 100 * sample.M)


def _volumes_mc(sample, mc_draws, seed):
    n = _mc_draw_count(sample, mc_draws)
    rng = np.random.default_rng(seed)
    draws = sample.measure.sample(rng, n, sample.domain)
    ids = NNIndex(sample).assign_nearest(draws)
    return np.bincount(ids, minlength=sample.M) / float(n)


def _clipped_cell_areas_unit_square(pts):
    """Exact areas of the Voronoi cells clipped to [0,1]^2.

    Reflecting the points across all four box edges makes every original
    cell finite and equal to its clipped counterpart, so a single Voronoi
    construction yields the exact areas. Cells are convex, so ordering each
    cell's vertices by angle around its centroid and applying the shoelace
    formula is exact; the ordering and reduction run vectorized over all
    cells at once.
    """
    m = pts.shape[0]
    if m == 1:
        return np.array([1.0])
    refl = []
    for axis, bound in ((0, 0.0), (0, 1.0), (1, 0.0), (1, 1.0)):
        r = pts.copy()
        r[:, axis] = 2.0 * bound - r[:, axis]
        refl.append(r)
    vor = Voronoi(np.vstack([pts, *refl]))

    regions = [vor.regions[vor.point_region[i]] for i in range(m)]
    sizes = np.array([len(r) for r in regions])
    if np.any(sizes == 0):
        raise QhullError("empty cell for an interior point")
    flat = np.concatenate(regions)
    if np.any(flat < 0):
        raise QhullError("unbounded cell for an interior point")
    verts = vor.vertices[flat]
    starts = np.concatenate([[0], np.cumsum(sizes)[:-1]])
    cell = np.repeat(np.arange(m), sizes)

    centroids = np.add.reduceat(verts, starts, axis=0) / sizes[:, None]
    rel = verts - centroids[cell]
    order = np.lexsort((np.arctan2(rel[:, 1], rel[:, 0]), cell))
    v = verts[order]
    nxt = np.arange(flat.size) + 1
    nxt[np.cumsum(sizes) - 1] = starts
    cross = v[:, 0] * v[nxt, 1] - v[:, 1] * v[nxt, 0]
    return 0.5 * np.abs(np.add.reduceat(cross, starts))


def _has_duplicate_rows(pts):
    return np.unique(pts, axis=0).shape[0] != pts.shape[0]


def _volumes_with_method(sample, mc_draws=None, seed=0):
    pts = sample.points
    if _is_1d_exact(sample):
        order, ts = _sorted_1d(sample)
        mids = (ts[:-1] + ts[1:]) / 2.0
        bnd = sample.measure.cdf(np.concatenate([[0.0], mids, [1.0]]))
        if not np.all(np.isfinite(bnd)):
            raise ValueError("non-finite density evaluation")
        vols = np.empty(sample.M)
        vols[order] = np.diff(bnd)
        return vols, "exact-1d"
    if (
        sample.domain.kind == "unit-cube"
        and sample.domain.d == 2
        and sample.measure.kind == "uniform"
    ):
        interior = np.all(pts > 0.0) and np.all(pts < 1.0)
        if interior and not _has_duplicate_rows(pts):
            try:
                return _clipped_cell_areas_unit_square(pts), "exact-poly-2d"
            except QhullError:
                warnings.warn("degenerate 2-d configuration; falling back to Monte Carlo")
        else:
            warnings.warn(
                "boundary or duplicate points prevent exact 2-d cell areas; "
                "falling back to Monte Carlo"
            )
    return _volumes_mc(sample, mc_draws, seed), "monte-carlo"


def voronoi_volumes(sample: DesignSample, mc_draws=None, seed=0):
    """Sampling-measure volume of each standard Voronoi cell.

    Exact in 1-d (CDF at sorted midpoints) and for the uniform measure on the
    unit square (clipped polygon areas); Monte Carlo with ``mc_draws`` draws
    (default max(1e5, 100 M)) everywhere else.
    """
    vols, _ = _volumes_with_method(sample, mc_draws=mc_draws, seed=seed)
    return vols


def loo_cumulative_volumes(sample: DesignSample, expensive=False, mc_draws=None, seed=0):
    """Cumulative cell volumes over all single-point deletions.

    O(M log M) in 1-d, where deleting a sorted point only alters its two
    neighbors' cells. For d > 1 the exact definition needs M full Voronoi
    recomputations; that path must be requested with ``expensive=True``.
    """
    if sample.M < 2:
        raise ValueError("cumulative volumes require at least 2 points")
    if _is_1d_exact(sample):
        order, ts = _sorted_1d(sample)
        if np.all(np.diff(ts) > 0):
            _, _, cum_sorted = _summary_sorted_1d(sample, ts)
            out = np.empty(sample.M)
            out[order] = cum_sorted
            return out
        # duplicate coordinates: fall through to the recomputation path
        expensive = True
    if not expensive:
        raise ValueError(
            "exact LOO cumulative volumes for d > 1 require expensive=True "
            "(M Voronoi recomputations); consider the nn-variant weights instead"
        )
    return _loo_cumulative_recompute(sample, mc_draws, seed)


def _loo_cumulative_recompute(sample, mc_draws, seed):
    m = sample.M
    cum = np.zeros(m)
    keep_all = np.arange(m)
    for j in range(m):
        keep = np.delete(keep_all, j)
        sub = DesignSample(
            sample.domain, sample.points[keep], sample.measure, validate=False
        )
        vols, _ = _volumes_with_method(sub, mc_draws=mc_draws, seed=seed + j + 1)
        cum[keep] += vols
    return cum


def _summary_sorted_1d(sample, ts):
    m = ts.shape[0]
    mids = (ts[:-1] + ts[1:]) / 2.0
    bnd = sample.measure.cdf(np.concatenate([[0.0], mids, [1.0]]))
    skip = (
        sample.measure.cdf((ts[:-2] + ts[2:]) / 2.0) if m > 2 else np.empty(0)
    )
    if not np.all(np.isfinite(bnd)):
        raise ValueError("non-finite density evaluation")
    return loo_cell_summary_sorted(ts, bnd, skip)


def voronoi_summary(sample: DesignSample, include_loo=None, expensive_loo=False,
                    mc_draws=None, seed=0):
    """Degrees, standard volumes and (optionally) LOO cumulative volumes.

    ``include_loo`` defaults to True in 1-d and False otherwise; for d > 1 it
    additionally requires ``expensive_loo=True``.
    """
    if sample.M < 2:
        raise ValueError("summary requires at least 2 points")
    if include_loo is None:
        include_loo = _is_1d_exact(sample)
    if _is_1d_exact(sample):
        order, ts = _sorted_1d(sample)
        if np.all(np.diff(ts) > 0):
            deg_s, vol_s, cum_s = _summary_sorted_1d(sample, ts)
            deg = np.empty(sample.M, dtype=np.int64)
            vol = np.empty(sample.M)
            deg[order], vol[order] = deg_s, vol_s
            cum = None
            if include_loo:
                cum = np.empty(sample.M)
                cum[order] = cum_s
            return VoronoiSummary(deg, vol, cum, "exact-1d")
        # duplicates: generic degree path plus recomputed volumes
        deg = degrees(sample)
        vol, method = _volumes_with_method(sample, mc_draws=mc_draws, seed=seed)
        cum = _loo_cumulative_recompute(sample, mc_draws, seed) if include_loo else None
        return VoronoiSummary(deg, vol, cum, method)
    deg = degrees(sample)
    vol, method = _volumes_with_method(sample, mc_draws=mc_draws, seed=seed)
    cum = None
    if include_loo:
        if not expensive_loo:
            raise ValueError(
                "LOO cumulative volumes for d > 1 need expensive_loo=True "
                "(M Voronoi recomputations); the nn-variant weights avoid them"
            )
        cum = _loo_cumulative_recompute(sample, mc_draws, seed)
    return VoronoiSummary(deg, vol, cum, method)
