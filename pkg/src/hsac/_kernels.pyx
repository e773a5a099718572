# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled per-pixel inversion kernels.

Arithmetic order per pixel is fixed and identical to the pure-Python
fallback in _kernels_py.py, so both backends produce bit-identical planes.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


def invert_plane(cnp.ndarray[cnp.float64_t, ndim=2] l_toa,
                 double d_squared, double t_g_o3, double l_path,
                 double coupling_c, double s_atm,
                 double nodata, double eps):
    """rho_w plane from a TOA radiance plane.

    coupling_c = E_s * T_up / pi. Returns (plane, degenerate_count);
    degenerate pixels (|denominator| < eps) become nodata.
    """
    cdef Py_ssize_t rows = l_toa.shape[0]
    cdef Py_ssize_t cols = l_toa.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((rows, cols), dtype=np.float64)
    cdef Py_ssize_t i, j
    cdef long degenerate = 0
    cdef double l, y, denom
    with nogil:
        for i in range(rows):
            for j in range(cols):
                l = l_toa[i, j]
                if l == nodata:
                    out[i, j] = nodata
                    continue
                y = l * d_squared / t_g_o3 - l_path
                denom = coupling_c + s_atm * y
                if fabs(denom) < eps:
                    out[i, j] = nodata
                    degenerate += 1
                else:
                    out[i, j] = y / denom
    return out, degenerate


def forward_plane(cnp.ndarray[cnp.float64_t, ndim=2] rho_w,
                  double d_squared, double t_g_o3, double l_path,
                  double coupling_c, double s_atm,
                  double nodata, double eps):
    """TOA radiance plane from a rho_w plane (inverse of invert_plane).

    Returns (plane, singular_count); pixels with 1 - s_atm*rho within eps
    of zero become nodata.
    """
    cdef Py_ssize_t rows = rho_w.shape[0]
    cdef Py_ssize_t cols = rho_w.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((rows, cols), dtype=np.float64)
    cdef Py_ssize_t i, j
    cdef long singular = 0
    cdef double r, a, scale
    scale = t_g_o3 / d_squared
    with nogil:
        for i in range(rows):
            for j in range(cols):
                r = rho_w[i, j]
                if r == nodata:
                    out[i, j] = nodata
                    continue
                a = 1.0 - s_atm * r
                if fabs(a) < eps:
                    out[i, j] = nodata
                    singular += 1
                else:
                    out[i, j] = scale * (l_path + r * coupling_c / a)
    return out, singular
