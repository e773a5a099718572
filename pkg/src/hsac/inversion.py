"""Pixel-wise radiative-transfer inversion: TOA radiance to rho_w and R_rs.

Per pixel, with y = L_TOA * d^2 / T_g_O3 - L_path:

    rho_w = y / (E_s * T_up / pi + S_atm * y)

Negative rho_w is preserved by default (it diagnoses overcorrection over
dark water); clipping is opt-in. The forward model ships in the library
because it doubles as the synthetic-scene generator for self-test mode.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .atmosphere import BandAtmParams
from .errors import LengthMismatch, OutOfRange, SingularCoupling
from .raster import RadianceCube

DENOMINATOR_EPS = 1e-12
ROW_TILE = 64

BAND_VALID = "valid"
BAND_MASKED_LOW_TG = "masked_low_tg"


@dataclass(frozen=True)
class MaskPolicy:
    """Band exclusion policy: mask when t_g_total < tg_threshold (strict)."""

    tg_threshold: float = 0.85
    clip_negative: bool = False

    def __post_init__(self):
        if not 0.0 < self.tg_threshold <= 1.0:
            raise OutOfRange(f"tg_threshold {self.tg_threshold} outside (0, 1]")


@dataclass
class InversionReport:
    negativity_rate: float = 0.0
    degenerate_pixels: int = 0
    masked_bands: dict[int, str] = field(default_factory=dict)
    valid_band_count: int = 0
    provider: str = ""
    kernel_backend: str = kernels.BACKEND


@dataclass
class ReflectanceProduct:
    """Per-band rho_w and R_rs planes with band validity mask and report.

    Masked band planes are filled with the nodata sentinel; R_rs is exactly
    rho_w / pi on valid pixels.
    """

    rho_w: np.ndarray  # (bands, rows, cols) float64
    r_rs: np.ndarray
    band_mask: list[str]  # BAND_VALID | BAND_MASKED_LOW_TG per band
    nodata_value: float
    report: InversionReport

    @property
    def valid_band_indices(self) -> list[int]:
        return [i for i, m in enumerate(self.band_mask) if m == BAND_VALID]


def invert_band_plane(
    l_toa_plane: np.ndarray,
    d_squared: float,
    params: BandAtmParams,
    nodata: float = -9999.0,
) -> tuple[np.ndarray, int]:
    """Invert one band plane; returns (rho_w plane, degenerate pixel count)."""
    if d_squared <= 0:
        raise OutOfRange(f"d_squared must be > 0, got {d_squared}")
    params.validate()
    coupling_c = params.e_s * params.t_up / math.pi
    plane = np.ascontiguousarray(l_toa_plane, dtype=np.float64)
    return kernels.invert_plane(
        plane,
        d_squared,
        params.t_g_o3,
        params.l_path,
        coupling_c,
        params.s_atm,
        nodata,
        DENOMINATOR_EPS,
    )


def forward_model_toa(
    rho_w,
    d_squared: float,
    params: BandAtmParams,
    nodata: float = -9999.0,
):
    """TOA radiance from rho_w (inverse of invert_band_plane).

    Accepts scalars or planes; raises SingularCoupling when every requested
    pixel hits S_atm * rho == 1.
    """
    if d_squared <= 0:
        raise OutOfRange(f"d_squared must be > 0, got {d_squared}")
    params.validate()
    coupling_c = params.e_s * params.t_up / math.pi
    scalar = np.isscalar(rho_w)
    plane = np.ascontiguousarray(
        np.atleast_2d(np.asarray(rho_w, dtype=np.float64))
    )
    out, singular = kernels.forward_plane(
        plane,
        d_squared,
        params.t_g_o3,
        params.l_path,
        coupling_c,
        params.s_atm,
        nodata,
        DENOMINATOR_EPS,
    )
    if scalar:
        if singular:
            raise SingularCoupling(f"S_atm * rho == 1 for rho = {rho_w}")
        return float(out[0, 0])
    return out


def mask_bands(params: list[BandAtmParams], policy: MaskPolicy) -> list[str]:
    """Per-band mask reason: strict-less comparison against the threshold."""
    return [
        BAND_MASKED_LOW_TG if p.t_g_total < policy.tg_threshold else BAND_VALID
        for p in params
    ]


def to_rrs(rho_w_planes: np.ndarray, nodata: float = -9999.0) -> np.ndarray:
    """Elementwise rho_w / pi with nodata propagation."""
    rho = np.asarray(rho_w_planes, dtype=np.float64)
    out = rho / math.pi
    out[rho == nodata] = nodata
    return out


def invert_cube(
    cube: RadianceCube,
    d_squared: float,
    params: list[BandAtmParams],
    policy: MaskPolicy | None = None,
    workers: int = 1,
    provider: str = "",
) -> ReflectanceProduct:
    """Invert every valid band of a cube; masked bands stay at the sentinel.

    Work is split into (band, row-tile) units; per-pixel arithmetic order is
    fixed, so results are bit-identical for any worker count.
    """
    policy = policy or MaskPolicy()
    if len(params) != cube.n_bands:
        raise LengthMismatch(
            f"{len(params)} parameter sets for {cube.n_bands} bands"
        )
    band_mask = mask_bands(params, policy)
    nodata = cube.nodata_value
    rho_w = np.full(cube.data.shape, nodata, dtype=np.float64)
    degenerate_counts: dict[tuple[int, int], int] = {}

    tasks = []
    for b, reason in enumerate(band_mask):
        if reason != BAND_VALID:
            continue
        for r0 in range(0, cube.n_rows, ROW_TILE):
            tasks.append((b, r0, min(r0 + ROW_TILE, cube.n_rows)))

    def run(task):
        b, r0, r1 = task
        plane, count = invert_band_plane(
            cube.data[b, r0:r1, :], d_squared, params[b], nodata
        )
        rho_w[b, r0:r1, :] = plane
        degenerate_counts[(b, r0)] = count

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, tasks))
    else:
        for task in tasks:
            run(task)

    valid = [i for i, m in enumerate(band_mask) if m == BAND_VALID]
    valid_planes = rho_w[valid] if valid else np.empty((0,) + cube.data.shape[1:])
    data_mask = valid_planes != nodata
    n_data = int(np.count_nonzero(data_mask))
    n_negative = int(np.count_nonzero(valid_planes[data_mask] < 0)) if n_data else 0

    if policy.clip_negative and n_data:
        for b in valid:
            plane = rho_w[b]
            plane[(plane != nodata) & (plane < 0)] = 0.0

    report = InversionReport(
        negativity_rate=(n_negative / n_data) if n_data else 0.0,
        degenerate_pixels=sum(degenerate_counts.values()),
        masked_bands={
            i: m for i, m in enumerate(band_mask) if m != BAND_VALID
        },
        valid_band_count=len(valid),
        provider=provider,
    )
    return ReflectanceProduct(
        rho_w=rho_w,
        r_rs=to_rrs(rho_w, nodata),
        band_mask=band_mask,
        nodata_value=nodata,
        report=report,
    )
