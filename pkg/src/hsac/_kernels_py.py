"""Pure-numpy fallback for the compiled inversion kernels.

Expression ordering matches _kernels.pyx exactly so both backends produce
bit-identical planes.
"""

from __future__ import annotations

import numpy as np


def invert_plane(l_toa, d_squared, t_g_o3, l_path, coupling_c, s_atm, nodata, eps):
    nodata_mask = l_toa == nodata
    y = l_toa * d_squared / t_g_o3 - l_path
    denom = coupling_c + s_atm * y
    degenerate_mask = (np.abs(denom) < eps) & ~nodata_mask
    with np.errstate(divide="ignore", invalid="ignore"):
        out = y / denom
    out[degenerate_mask] = nodata
    out[nodata_mask] = nodata
    return out, int(np.count_nonzero(degenerate_mask))


def forward_plane(rho_w, d_squared, t_g_o3, l_path, coupling_c, s_atm, nodata, eps):
    nodata_mask = rho_w == nodata
    scale = t_g_o3 / d_squared
    a = 1.0 - s_atm * rho_w
    singular_mask = (np.abs(a) < eps) & ~nodata_mask
    with np.errstate(divide="ignore", invalid="ignore"):
        out = scale * (l_path + rho_w * coupling_c / a)
    out[singular_mask] = nodata
    out[nodata_mask] = nodata
    return out, int(np.count_nonzero(singular_mask))
