"""Spectral validation statistics: SAM, RMSE, Bias, Std.

Std uses population normalization (divide by n) so RMSE^2 == Bias^2 + Std^2
holds exactly. Reference spectra are resampled onto the derived wavelengths
(never the other way round) so the derived product stays untouched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NodataPixel, NoOverlap, OutOfBounds, ZeroVector
from .inversion import BAND_VALID, ReflectanceProduct
from .scene import BandDefinition


@dataclass(frozen=True)
class SpectrumSample:
    wavelengths: np.ndarray
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        if len(self.wavelengths) != len(self.values):
            raise NoOverlap("wavelength/value lengths differ")
        if np.any(np.diff(self.wavelengths) <= 0):
            raise NoOverlap("wavelengths must be strictly increasing")


@dataclass(frozen=True)
class ComparisonReport:
    sam_deg: float
    rmse: float
    bias: float
    std: float
    n: int
    window: tuple[float, float]

    def to_dict(self) -> dict:
        return {
            "sam_deg": self.sam_deg,
            "rmse": self.rmse,
            "bias": self.bias,
            "std": self.std,
            "n": self.n,
            "window": list(self.window),
        }


def spectral_angle(a: SpectrumSample, b: SpectrumSample) -> float:
    """Angle in degrees between two spectra sharing a wavelength grid."""
    if len(a.values) != len(b.values) or not np.allclose(
        a.wavelengths, b.wavelengths
    ):
        raise NoOverlap("spectra are not on a common wavelength grid; align first")
    va, vb = np.asarray(a.values, float), np.asarray(b.values, float)
    na, nb = np.linalg.norm(va), np.linalg.norm(vb)
    if na == 0 or nb == 0:
        raise ZeroVector("spectral angle undefined for a zero spectrum")
    if np.array_equal(va, vb):
        # exact identity must not pick up acos rounding noise
        return 0.0
    cos = float(np.dot(va, vb) / (na * nb))
    return math.degrees(math.acos(min(1.0, max(-1.0, cos))))


def error_stats(
    derived: SpectrumSample, reference: SpectrumSample, window=(float("-inf"), float("inf"))
) -> ComparisonReport:
    """RMSE / Bias / Std of derived minus reference on a shared grid."""
    if len(derived.values) != len(reference.values):
        raise NoOverlap("spectra must be aligned before computing statistics")
    n = len(derived.values)
    if n < 2:
        raise NoOverlap(f"need at least 2 shared samples, have {n}")
    e = np.asarray(derived.values, float) - np.asarray(reference.values, float)
    bias = float(np.mean(e))
    rmse = float(np.sqrt(np.mean(e * e)))
    std = float(np.sqrt(np.mean((e - bias) ** 2)))
    return ComparisonReport(
        sam_deg=spectral_angle(derived, reference),
        rmse=rmse,
        bias=bias,
        std=std,
        n=n,
        window=(float(window[0]), float(window[1])),
    )


def align_spectra(
    derived: SpectrumSample, reference: SpectrumSample, window: tuple[float, float]
) -> tuple[SpectrumSample, SpectrumSample]:
    """Resample the reference onto derived wavelengths inside the window.

    Pairs outside either spectrum's support or the window are dropped.
    """
    lo, hi = window
    if lo >= hi:
        raise NoOverlap(f"window start {lo} must be < stop {hi}")
    wl = np.asarray(derived.wavelengths, float)
    ref_wl = np.asarray(reference.wavelengths, float)
    keep = (wl >= lo) & (wl <= hi) & (wl >= ref_wl[0]) & (wl <= ref_wl[-1])
    if not np.any(keep):
        raise NoOverlap(
            f"no shared wavelengths in window [{lo}, {hi}]"
        )
    wl_out = wl[keep]
    ref_values = np.interp(wl_out, ref_wl, np.asarray(reference.values, float))
    return (
        SpectrumSample(wl_out, np.asarray(derived.values, float)[keep], derived.label),
        SpectrumSample(wl_out, ref_values, reference.label),
    )


def compare_spectra(
    derived: SpectrumSample, reference: SpectrumSample, window: tuple[float, float]
) -> ComparisonReport:
    d, r = align_spectra(derived, reference, window)
    return error_stats(d, r, window=window)


def extract_pixel_spectrum(
    product: ReflectanceProduct,
    bands: list[BandDefinition],
    row: int,
    col: int,
    quantity: str = "r_rs",
) -> SpectrumSample:
    """Spectrum over valid (unmasked) bands at one pixel."""
    planes = product.r_rs if quantity == "r_rs" else product.rho_w
    if not (0 <= row < planes.shape[1] and 0 <= col < planes.shape[2]):
        raise OutOfBounds(f"pixel ({row}, {col}) outside raster")
    wl, values = [], []
    for i, mask in enumerate(product.band_mask):
        if mask != BAND_VALID:
            continue
        v = planes[i, row, col]
        if v == product.nodata_value:
            raise NodataPixel(f"pixel ({row}, {col}) is nodata in band {i}")
        wl.append(bands[i].center_wavelength)
        values.append(v)
    if not wl:
        raise NoOverlap("no valid bands in product")
    return SpectrumSample(
        np.asarray(wl), np.asarray(values), label=f"pixel({row},{col})"
    )


def load_reference_spectrum(path: str) -> SpectrumSample:
    """CSV `wavelength_nm,value`; an optional `# label:` comment names it."""
    label = ""
    wl, values = [], []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if line[1:].strip().lower().startswith("label:"):
                    label = line.split(":", 1)[1].strip()
                continue
            if line.lower().startswith("wavelength"):
                continue
            w, v = line.split(",")
            wl.append(float(w))
            values.append(float(v))
    return SpectrumSample(np.asarray(wl), np.asarray(values), label=label)


def aggregate_reports(reports: list[ComparisonReport]) -> ComparisonReport:
    """Unweighted mean of each statistic across references."""
    if not reports:
        raise NoOverlap("nothing to aggregate")
    return ComparisonReport(
        sam_deg=float(np.mean([r.sam_deg for r in reports])),
        rmse=float(np.mean([r.rmse for r in reports])),
        bias=float(np.mean([r.bias for r in reports])),
        std=float(np.mean([r.std for r in reports])),
        n=int(sum(r.n for r in reports)),
        window=reports[0].window,
    )
