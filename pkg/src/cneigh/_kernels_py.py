"""Pure-numpy fallback for the sorted 1-d cell summary kernel."""

import numpy as np


def loo_cell_summary_sorted(t, boundary_cdf, skip_cdf):
    """Degrees, cell volumes and leave-one-out cumulative volumes in 1-d.

    Parameters
    ----------
    t : (M,) strictly increasing point coordinates.
    boundary_cdf : (M+1,) sampling-measure CDF at the cell boundaries
        ``[F(lo), F(mid(t0,t1)), ..., F(mid(t_{M-2},t_{M-1})), F(hi)]``.
    skip_cdf : (M-2,) CDF at the skip-one midpoints ``mid(t[j-1], t[j+1])``,
        one per interior deletion j = 1..M-2.

    Returns
    -------
    degrees : (M,) int64 -- how many points have each point as LOO-NN.
    volumes : (M,) measure of each standard cell.
    cumvols : (M,) cumulative volumes over all single-point deletions.
    """
    t = np.asarray(t, dtype=np.float64)
    boundary_cdf = np.asarray(boundary_cdf, dtype=np.float64)
    skip_cdf = np.asarray(skip_cdf, dtype=np.float64)
    m = t.shape[0]
    if m < 2:
        raise ValueError("kernel requires at least 2 points")

    volumes = np.diff(boundary_cdf)

    # LOO nearest neighbor of a sorted point is one of its two neighbors;
    # a distance tie goes left (lexicographically smaller coordinate).
    gaps = t[1:] - t[:-1]
    dl = np.empty(m)
    dl[0] = np.inf
    dl[1:] = gaps
    dr = np.empty(m)
    dr[-1] = np.inf
    dr[:-1] = gaps
    idx = np.arange(m)
    nn = np.where(dl <= dr, idx - 1, idx + 1)
    degrees = np.bincount(nn, minlength=m)

    # Deleting point j only alters the cells of its sorted neighbors, so the
    # cumulative volume is (almost M-1 copies of) the standard cell plus the
    # two enlarged cells that appear when an adjacent point is removed.
    n_unchanged = (m - 1.0) - (idx > 0) - (idx < m - 1)
    cumvols = n_unchanged * volumes
    # deletion of the left neighbor (exists for ell >= 1)
    left_bnd = np.empty(m - 1)
    if m > 2:
        left_bnd[1:] = skip_cdf
    left_bnd[0] = boundary_cdf[0]
    cumvols[1:] += boundary_cdf[2:] - left_bnd
    # deletion of the right neighbor (exists for ell <= M-2)
    right_bnd = np.empty(m - 1)
    if m > 2:
        right_bnd[:-1] = skip_cdf
    right_bnd[-1] = boundary_cdf[m]
    cumvols[:-1] += right_bnd - boundary_cdf[: m - 1]

    return degrees, volumes, cumvols
