"""Simulation wavelength grid, spectral response functions and band convolution."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CoverageGap, GridMismatch, InvalidRange
from .scene import BandDefinition

DEFAULT_GRID_STEP = 2.5  # nm


@dataclass(frozen=True)
class SpectralGrid:
    """Uniform wavelength grid [start, stop] inclusive, step in nm."""

    start: float
    stop: float
    step: float = DEFAULT_GRID_STEP

    def __post_init__(self):
        if self.start >= self.stop:
            raise InvalidRange(f"start {self.start} must be < stop {self.stop}")
        if self.step <= 0:
            raise InvalidRange(f"step must be > 0, got {self.step}")
        n = (self.stop - self.start) / self.step
        if abs(n - round(n)) > 1e-9:
            raise InvalidRange(
                f"(stop - start)/step = {n} is not an integer point count"
            )

    @property
    def n_points(self) -> int:
        return int(round((self.stop - self.start) / self.step)) + 1

    @property
    def wavelengths(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.n_points)

    def index_of(self, wavelength: float) -> int:
        """Index of an on-grid wavelength; GridMismatch when off-grid."""
        pos = (wavelength - self.start) / self.step
        idx = int(round(pos))
        if abs(pos - idx) > 1e-6 or not 0 <= idx < self.n_points:
            raise GridMismatch(f"{wavelength} nm is not a grid point")
        return idx


def build_grid(start: float, stop: float, step: float = DEFAULT_GRID_STEP) -> SpectralGrid:
    return SpectralGrid(start=start, stop=stop, step=step)


@dataclass(frozen=True)
class SRF:
    """Sampled spectral response of one band, aligned to a grid sub-range."""

    band_index: int
    wavelengths: np.ndarray
    responses: np.ndarray

    def __post_init__(self):
        if len(self.wavelengths) != len(self.responses):
            raise GridMismatch("SRF wavelength/response lengths differ")
        if np.any(np.diff(self.wavelengths) <= 0):
            raise GridMismatch("SRF wavelengths must be strictly increasing")
        if np.any(self.responses < 0) or float(np.sum(self.responses)) <= 0:
            raise GridMismatch("SRF responses must be >= 0 with positive sum")


@dataclass(frozen=True)
class NyquistBandCheck:
    band_index: int
    fwhm: float
    threshold: float  # fwhm / 2
    satisfied: bool


@dataclass(frozen=True)
class NyquistReport:
    step: float
    bands: tuple[NyquistBandCheck, ...]
    overall: bool


def check_nyquist(bands: list[BandDefinition], step: float) -> NyquistReport:
    """Per-band check that the grid step is at most half the FWHM (inclusive)."""
    checks = tuple(
        NyquistBandCheck(
            band_index=b.index,
            fwhm=b.fwhm,
            threshold=b.fwhm / 2.0,
            satisfied=step <= b.fwhm / 2.0,
        )
        for b in bands
    )
    return NyquistReport(step=step, bands=checks, overall=all(c.satisfied for c in checks))


def gaussian_srf(band: BandDefinition, grid: SpectralGrid) -> SRF:
    """Gaussian fallback SRF truncated at center +/- 3*FWHM.

    Sampled on grid points; normalized so the largest sample is exactly 1
    (the grid point nearest the band center).
    """
    half_window = 3.0 * band.fwhm
    lo = max(grid.start, band.center_wavelength - half_window)
    hi = min(grid.stop, band.center_wavelength + half_window)
    i0 = int(math.ceil((lo - grid.start) / grid.step - 1e-9))
    i1 = int(math.floor((hi - grid.start) / grid.step + 1e-9))
    if i1 < i0:
        i0 = i1 = grid.index_of(
            grid.start + grid.step * round((band.center_wavelength - grid.start) / grid.step)
        )
    wl = grid.start + grid.step * np.arange(i0, i1 + 1)
    resp = np.exp(-4.0 * math.log(2.0) * (wl - band.center_wavelength) ** 2 / band.fwhm**2)
    resp = resp / resp.max()
    return SRF(band_index=band.index, wavelengths=wl, responses=resp)


def measured_srf(band: BandDefinition, grid: SpectralGrid) -> SRF:
    """Resample a measured SRF from metadata onto the grid by linear interpolation."""
    assert band.srf is not None
    wl_in = np.array([w for w, _ in band.srf])
    r_in = np.array([r for _, r in band.srf])
    lo = max(grid.start, wl_in[0])
    hi = min(grid.stop, wl_in[-1])
    i0 = int(math.ceil((lo - grid.start) / grid.step - 1e-9))
    i1 = int(math.floor((hi - grid.start) / grid.step + 1e-9))
    if i1 < i0:
        raise GridMismatch(
            f"band {band.index}: measured SRF support does not reach any grid point"
        )
    wl = grid.start + grid.step * np.arange(i0, i1 + 1)
    resp = np.interp(wl, wl_in, r_in)
    if resp.max() <= 0:
        raise GridMismatch(f"band {band.index}: resampled SRF is all zero")
    return SRF(band_index=band.index, wavelengths=wl, responses=resp)


def srf_for_band(band: BandDefinition, grid: SpectralGrid) -> tuple[SRF, str]:
    """SRF plus its provenance: measured SRFs take precedence over the Gaussian fallback."""
    if band.srf is not None:
        return measured_srf(band, grid), "measured"
    return gaussian_srf(band, grid), "gaussian"


def convolve_to_band(fine_spectrum: np.ndarray, srf: SRF, grid: SpectralGrid) -> float:
    """Response-weighted mean of a fine-grid spectrum over the SRF window."""
    i0 = grid.index_of(float(srf.wavelengths[0]))
    i1 = grid.index_of(float(srf.wavelengths[-1]))
    if i1 - i0 + 1 != len(srf.wavelengths):
        raise GridMismatch("SRF samples are not consecutive grid points")
    window = np.asarray(fine_spectrum)[i0 : i1 + 1]
    return float(np.dot(window, srf.responses) / np.sum(srf.responses))


def resample_reference_spectrum(
    reference: list[tuple[float, float]], grid: SpectralGrid
) -> np.ndarray:
    """Linear interpolation of a tabulated reference spectrum onto the grid."""
    wl = np.array([w for w, _ in reference], dtype=np.float64)
    values = np.array([v for _, v in reference], dtype=np.float64)
    if np.any(np.diff(wl) <= 0):
        raise InvalidRange("reference wavelengths must be strictly increasing")
    if grid.start < wl[0] - 1e-9 or grid.stop > wl[-1] + 1e-9:
        raise CoverageGap(
            f"grid [{grid.start}, {grid.stop}] exceeds reference support "
            f"[{wl[0]}, {wl[-1]}]"
        )
    return np.interp(grid.wavelengths, wl, values)
