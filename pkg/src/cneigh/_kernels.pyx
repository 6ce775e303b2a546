# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled sorted 1-d cell summary kernel (hot loop of the subsampling intervals)."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def loo_cell_summary_sorted(double[::1] t, double[::1] boundary_cdf, double[::1] skip_cdf):
    """Degrees, cell volumes and leave-one-out cumulative volumes in 1-d.

    Same contract as the pure-python fallback: ``t`` strictly increasing,
    ``boundary_cdf`` the measure CDF at the M+1 cell boundaries, ``skip_cdf``
    the CDF at the M-2 skip-one midpoints.
    """
    cdef Py_ssize_t m = t.shape[0]
    if m < 2:
        raise ValueError("kernel requires at least 2 points")
    if boundary_cdf.shape[0] != m + 1 or skip_cdf.shape[0] != m - 2:
        raise ValueError("boundary/skip arrays do not match point count")

    degrees_arr = np.zeros(m, dtype=np.int64)
    volumes_arr = np.empty(m, dtype=np.float64)
    cumvols_arr = np.empty(m, dtype=np.float64)
    cdef long long[::1] degrees = degrees_arr
    cdef double[::1] volumes = volumes_arr
    cdef double[::1] cumvols = cumvols_arr

    cdef Py_ssize_t i
    cdef double dl, dr, left_bnd, right_bnd, unchanged

    for i in range(m):
        volumes[i] = boundary_cdf[i + 1] - boundary_cdf[i]

    # ties go to the left neighbor (lexicographically smaller coordinate)
    degrees[1] += 1  # point 0 always picks its right neighbor
    degrees[m - 2] += 1  # point M-1 always picks its left neighbor
    for i in range(1, m - 1):
        dl = t[i] - t[i - 1]
        dr = t[i + 1] - t[i]
        if dl <= dr:
            degrees[i - 1] += 1
        else:
            degrees[i + 1] += 1

    for i in range(m):
        unchanged = (m - 1.0) - (i > 0) - (i < m - 1)
        cumvols[i] = unchanged * volumes[i]
        if i >= 1:
            # the left neighbor is deleted: the cell extends left
            left_bnd = boundary_cdf[0] if i == 1 else skip_cdf[i - 2]
            cumvols[i] += boundary_cdf[i + 1] - left_bnd
        if i <= m - 2:
            # the right neighbor is deleted: the cell extends right
            right_bnd = boundary_cdf[m] if i == m - 2 else skip_cdf[i]
            cumvols[i] += right_bnd - boundary_cdf[i]

    return degrees_arr, volumes_arr, cumvols_arr
