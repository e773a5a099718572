"""Five-stage processing pipeline: ingest, configure, per-band RTM,
pixel-wise inversion, export.

Stage errors are tagged with the failing stage so the CLI can map them to
stable exit codes; a partial report naming the failure stage is still
written.
"""

from __future__ import annotations

import datetime
import glob
import json
import math
import os
import time
from dataclasses import dataclass, field
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .atmosphere import (
    AnalyticProvider,
    AtmosphericState,
    AuxCatalogue,
    Geometry,
    TableProvider,
    aerosol_model,
    data_dir,
    load_solar_irradiance,
    resolve_atmospheric_state,
    serialize_params_table,
)
from .errors import HsacError, IoFailure, MissingField, OutOfRange
from .inversion import (
    BAND_VALID,
    MaskPolicy,
    ReflectanceProduct,
    forward_model_toa,
    invert_cube,
)
from .metrics import (
    SpectrumSample,
    aggregate_reports,
    compare_spectra,
    load_reference_spectrum,
)
from .raster import RadianceCube, read_cube, write_cube
from .scene import (
    BandDefinition,
    SceneMetadata,
    compute_julian_day,
    earth_sun_distance,
    parse_scene_metadata,
)
from .spectral import build_grid, check_nyquist, resample_reference_spectrum, srf_for_band

STAGE_INGEST = "ingest"
STAGE_CONFIGURE = "configure"
STAGE_RTM = "rtm"
STAGE_INVERSION = "inversion"
STAGE_EXPORT = "export"


class StageError(HsacError):
    """Wraps a module error with the pipeline stage it occurred in."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class RunConfig:
    input_path: str = ""
    output_path: str = ""
    aerosol: str = "Continental"
    tg_threshold: float = 0.85
    clip_negative: bool = False
    provider: str = "analytic"  # analytic | table
    params_table_path: str | None = None
    aux_catalogue_path: str | None = None
    state_policy: str = "metadata_first"  # metadata_first | catalogue_first | override
    override_state: AtmosphericState | None = None
    worker_count: int = 0  # 0 = auto
    grid_step: float = 2.5
    self_test: bool = False
    divide_total_gas: bool = False  # optional extra-gas correction mode, off by default

    def __post_init__(self):
        if not 0.0 < self.tg_threshold <= 1.0:
            raise OutOfRange(f"tg_threshold {self.tg_threshold} outside (0, 1]")
        if self.provider == "table" and not self.params_table_path:
            raise MissingField("--params-table is required with --provider table")
        if self.worker_count < 0:
            raise OutOfRange("worker count must be positive or 0 (auto)")

    @property
    def workers(self) -> int:
        return self.worker_count or (os.cpu_count() or 1)


@dataclass
class ProcessingReport:
    scene_id: str = ""
    timings_ms: dict = field(default_factory=dict)
    worker_count: int = 0
    nyquist: dict = field(default_factory=dict)
    masked_bands: dict = field(default_factory=dict)
    negativity_rate: float = 0.0
    degenerate_pixels: int = 0
    atmospheric_state: dict = field(default_factory=dict)
    provider: str = ""
    kernel_backend: str = ""
    srf_sources: dict = field(default_factory=dict)
    failure_stage: str | None = None
    error: str | None = None
    version: str = __version__

    def to_dict(self) -> dict:
        return {
            "scene_id": self.scene_id,
            "timings_ms": self.timings_ms,
            "worker_count": self.worker_count,
            "nyquist": self.nyquist,
            "masked_bands": self.masked_bands,
            "negativity_rate": self.negativity_rate,
            "degenerate_pixels": self.degenerate_pixels,
            "atmospheric_state": self.atmospheric_state,
            "provider": self.provider,
            "kernel_backend": self.kernel_backend,
            "srf_sources": self.srf_sources,
            "failure_stage": self.failure_stage,
            "error": self.error,
            "version": self.version,
        }


def _find_one(directory: str, pattern: str, what: str) -> str:
    matches = sorted(glob.glob(os.path.join(directory, pattern)))
    if not matches:
        raise MissingField(f"no {what} matching {pattern} in {directory}")
    return matches[0]


def ingest_scene(input_path: str) -> tuple[SceneMetadata, RadianceCube]:
    xml_path = _find_one(input_path, "*.xml", "metadata XML")
    with open(xml_path, encoding="utf-8") as fh:
        metadata = parse_scene_metadata(fh.read())
    hdr_path = _find_one(input_path, "*.hdr", "raster header")
    cube = read_cube(hdr_path[: -len(".hdr")])
    return metadata, cube


def simulation_grid(bands: list[BandDefinition], step: float):
    """Grid anchored at 350 nm covering every band's SRF window."""
    lo = min(b.center_wavelength - 3.0 * b.fwhm for b in bands)
    hi = max(b.center_wavelength + 3.0 * b.fwhm for b in bands)
    start = 350.0 + step * math.floor((lo - 350.0) / step)
    stop = 350.0 + step * math.ceil((hi - 350.0) / step)
    start = max(start, 350.0)
    stop = min(stop, 350.0 + step * math.floor((2600.0 - 350.0) / step))
    return build_grid(start, stop, step)


def load_bundled_bands() -> list[BandDefinition]:
    path = os.path.join(data_dir(), "bands_228.csv")
    bands = []
    with open(path, encoding="utf-8") as fh:
        next(fh)
        for line in fh:
            idx, center, fwhm = line.strip().split(",")
            bands.append(
                BandDefinition(
                    index=int(idx),
                    center_wavelength=float(center),
                    fwhm=float(fwhm),
                )
            )
    return bands


def compute_all_band_params(provider, bands, srfs, workers: int):
    """Stage 3: one task per band; results ordered by band index."""
    def task(i):
        return provider.band_params(bands[i], srfs[i])

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(task, range(len(bands))))
    return [task(i) for i in range(len(bands))]


def _apply_extra_gas_division(params):
    """Optional mode: fold non-ozone gas absorption into the TOA division.

    Replaces t_g_o3 by t_g_total per band so moderate-absorption unmasked
    bands are corrected for water vapour and oxygen too.
    """
    from .atmosphere import BandAtmParams

    return [
        BandAtmParams(
            band_index=p.band_index,
            l_path=p.l_path,
            t_g_o3=p.t_g_total,
            t_g_total=p.t_g_total,
            t_up=p.t_up,
            s_atm=p.s_atm,
            e_s=p.e_s,
        )
        for p in params
    ]


def write_product(
    product: ReflectanceProduct,
    bands: list[BandDefinition],
    output_path: str,
    params=None,
    report: ProcessingReport | None = None,
) -> None:
    """Write rho_w/R_rs cubes (valid bands only), mask CSV, params CSV, report."""
    os.makedirs(output_path, exist_ok=True)
    valid = product.valid_band_indices
    wavelengths = tuple(bands[i].center_wavelength for i in valid)
    try:
        for name, planes in (("rho_w", product.rho_w), ("r_rs", product.r_rs)):
            cube = RadianceCube(
                data=planes[valid].astype(np.float32) if valid else
                np.empty((0,) + planes.shape[1:], dtype=np.float32),
                nodata_value=product.nodata_value,
                wavelengths=wavelengths,
            )
            write_cube(os.path.join(output_path, name), cube)

        tmp = os.path.join(output_path, "band_mask.csv.tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write("band_index,center_nm,status\n")
            for i, status in enumerate(product.band_mask):
                fh.write(f"{i},{bands[i].center_wavelength},{status}\n")
        os.replace(tmp, os.path.join(output_path, "band_mask.csv"))

        if params is not None:
            tmp = os.path.join(output_path, "band_params.csv.tmp")
            with open(tmp, "w", encoding="utf-8") as fh:
                fh.write(serialize_params_table(params))
            os.replace(tmp, os.path.join(output_path, "band_params.csv"))

        if report is not None:
            write_report(report, output_path)
    except OSError as exc:
        raise IoFailure(f"writing product to {output_path}: {exc}") from exc


def write_report(report: ProcessingReport, output_path: str) -> None:
    os.makedirs(output_path, exist_ok=True)
    tmp = os.path.join(output_path, "report.json.tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, os.path.join(output_path, "report.json"))


def run_pipeline(config: RunConfig) -> ProcessingReport:
    """Execute the five stages; raises StageError naming the failed stage
    (after writing a partial report when the output directory is known)."""
    report = ProcessingReport(worker_count=config.workers)
    try:
        return _run_pipeline(config, report)
    except StageError:
        raise
    except Exception as exc:  # tag and re-raise with partial report
        stage = getattr(exc, "_hsac_stage", STAGE_INGEST)
        report.failure_stage = stage
        report.error = str(exc)
        if config.output_path:
            try:
                write_report(report, config.output_path)
            except OSError:
                pass
        raise StageError(stage, exc) from exc


def _stage(report: ProcessingReport, name: str):
    class _Timer:
        def __enter__(self):
            self.t0 = time.perf_counter()
            return self

        def __exit__(self, exc_type, exc, tb):
            report.timings_ms[name] = (time.perf_counter() - self.t0) * 1000.0
            if exc is not None and not isinstance(exc, StageError):
                exc._hsac_stage = name
            return False

    return _Timer()


def _run_pipeline(config: RunConfig, report: ProcessingReport) -> ProcessingReport:
    # stage 1: ingest
    with _stage(report, STAGE_INGEST):
        if config.self_test:
            metadata, cube, rho_true = synthesize_scene(config)
        else:
            metadata, cube = ingest_scene(config.input_path)
            rho_true = None
        report.scene_id = metadata.scene_id
    bands = list(metadata.bands)

    # stage 2: configure
    with _stage(report, STAGE_CONFIGURE):
        geometry = Geometry.from_metadata(metadata)
        model = aerosol_model(config.aerosol)
        catalogue = (
            AuxCatalogue.from_file(config.aux_catalogue_path)
            if config.aux_catalogue_path
            else None
        )
        state = resolve_atmospheric_state(
            metadata,
            policy=config.state_policy,
            catalogue=catalogue,
            override=config.override_state,
        )
        grid = simulation_grid(bands, config.grid_step)
        nyquist = check_nyquist(bands, config.grid_step)
        report.nyquist = {
            "step": nyquist.step,
            "overall": nyquist.overall,
            "violations": [c.band_index for c in nyquist.bands if not c.satisfied],
        }
        if not nyquist.overall:
            import warnings

            warnings.warn(
                f"grid step {config.grid_step} nm violates the Nyquist criterion "
                f"for {len(report.nyquist['violations'])} bands"
            )
        e0_grid = resample_reference_spectrum(load_solar_irradiance(), grid)
        srf_pairs = [srf_for_band(b, grid) for b in bands]
        srfs = [p[0] for p in srf_pairs]
        report.srf_sources = {
            source: sum(1 for _, s in srf_pairs if s == source)
            for source in {s for _, s in srf_pairs}
        }
        d2 = earth_sun_distance(compute_julian_day(metadata.acquisition_date)).d_squared
        report.atmospheric_state = {
            "aod550": state.aod550,
            "tcwv": state.tcwv,
            "tco3": state.tco3,
            "source": state.source,
        }

    # stage 3: per-band RTM parameters
    with _stage(report, STAGE_RTM):
        if config.provider == "table":
            with open(config.params_table_path, encoding="utf-8") as fh:
                provider = TableProvider.from_csv(fh.read())
        else:
            provider = AnalyticProvider(grid, geometry, state, model, e0_grid)
        params = compute_all_band_params(provider, bands, srfs, config.workers)
        if config.divide_total_gas:
            params = _apply_extra_gas_division(params)
        report.provider = provider.provenance

    # stage 4: pixel-wise inversion
    with _stage(report, STAGE_INVERSION):
        policy = MaskPolicy(
            tg_threshold=config.tg_threshold, clip_negative=config.clip_negative
        )
        product = invert_cube(
            cube, d2, params, policy, workers=config.workers, provider=provider.provenance
        )
        report.masked_bands = {
            str(i): reason for i, reason in product.report.masked_bands.items()
        }
        report.negativity_rate = product.report.negativity_rate
        report.degenerate_pixels = product.report.degenerate_pixels
        report.kernel_backend = product.report.kernel_backend

    # stage 5: export
    with _stage(report, STAGE_EXPORT):
        if config.output_path:
            write_product(product, bands, config.output_path, params=params, report=report)
    if config.output_path:
        # rewrite once more so the report on disk includes the export timing
        write_report(report, config.output_path)

    report._product = product  # type: ignore[attr-defined]
    report._params = params  # type: ignore[attr-defined]
    report._rho_true = rho_true  # type: ignore[attr-defined]
    return report


# --- self-test ------------------------------------------------------------

SELF_TEST_NODATA = -9999.0


def synthesize_scene(config: RunConfig, size: int = 128, seed: int = 42):
    """Hermetic synthetic scene: bundled 228-band sensor, forward-modelled
    TOA radiance from a known reflectance cube."""
    bands = load_bundled_bands()
    metadata = SceneMetadata(
        acquisition_date=datetime.date(2024, 7, 24),
        acquisition_time=11 * 3600.0,
        sza=30.0,
        saa=145.0,
        vza=5.0,
        vaa=100.0,
        aod550=0.12,
        tcwv=2.0,
        tco3=300.0,
        bands=tuple(bands),
        scene_id="self-test",
    )
    geometry = Geometry.from_metadata(metadata)
    model = aerosol_model(config.aerosol)
    state = AtmosphericState(
        aod550=metadata.aod550, tcwv=metadata.tcwv, tco3=metadata.tco3, source="metadata"
    )
    grid = simulation_grid(bands, config.grid_step)
    e0_grid = resample_reference_spectrum(load_solar_irradiance(), grid)
    srfs = [srf_for_band(b, grid)[0] for b in bands]
    provider = AnalyticProvider(grid, geometry, state, model, e0_grid)
    params = compute_all_band_params(provider, bands, srfs, config.workers)
    d2 = earth_sun_distance(compute_julian_day(metadata.acquisition_date)).d_squared

    rng = np.random.default_rng(seed)
    rho_true = rng.uniform(0.001, 0.4, size=(len(bands), size, size))
    l_toa = np.empty_like(rho_true)
    for b, p in enumerate(params):
        l_toa[b] = forward_model_toa(rho_true[b], d2, p, nodata=SELF_TEST_NODATA)
    cube = RadianceCube(data=l_toa, nodata_value=SELF_TEST_NODATA)
    return metadata, cube, rho_true


def run_self_test(config: RunConfig, tolerance: float = 1e-10) -> tuple[bool, float, ProcessingReport]:
    """Full-pipeline round trip on the synthetic scene.

    Returns (passed, max relative error over valid bands, report)."""
    config.self_test = True
    report = run_pipeline(config)
    product: ReflectanceProduct = report._product  # type: ignore[attr-defined]
    rho_true = report._rho_true  # type: ignore[attr-defined]
    valid = product.valid_band_indices
    recovered = product.rho_w[valid]
    truth = rho_true[valid]
    rel = np.abs(recovered - truth) / np.maximum(np.abs(truth), 1e-30)
    max_rel = float(rel.max())
    return max_rel <= tolerance, max_rel, report


def run_benchmark(config: RunConfig, size: int = 512) -> dict:
    """Stage-4 benchmark on a 228-band size x size cube, comparing the
    compiled kernel backend against the pure-Python fallback."""
    from . import kernels

    metadata, cube, _ = synthesize_scene(config, size=size)
    bands = list(metadata.bands)
    d2 = earth_sun_distance(compute_julian_day(metadata.acquisition_date)).d_squared

    geometry = Geometry.from_metadata(metadata)
    model = aerosol_model(config.aerosol)
    state = AtmosphericState(
        aod550=metadata.aod550, tcwv=metadata.tcwv, tco3=metadata.tco3, source="metadata"
    )
    grid = simulation_grid(bands, config.grid_step)
    e0_grid = resample_reference_spectrum(load_solar_irradiance(), grid)
    srfs = [srf_for_band(b, grid)[0] for b in bands]
    provider = AnalyticProvider(grid, geometry, state, model, e0_grid)
    params = compute_all_band_params(provider, bands, srfs, config.workers)

    results = {"size": size, "n_bands": len(bands), "workers": config.workers}
    available = ["python"] if kernels.BACKEND == "python" else ["cython", "python"]
    import hsac.inversion as inv

    original = (inv.kernels.invert_plane, inv.kernels.forward_plane)
    try:
        for backend_name in available:
            backend = kernels.get_backend(backend_name)
            inv.kernels.invert_plane = backend.invert_plane
            t0 = time.perf_counter()
            invert_cube(cube, d2, params, MaskPolicy(), workers=config.workers)
            results[f"stage4_seconds_{backend_name}"] = time.perf_counter() - t0
    finally:
        inv.kernels.invert_plane, inv.kernels.forward_plane = original
    results["active_backend"] = kernels.BACKEND
    return results


# --- comparison against reference spectra ---------------------------------

def compare_against_reference(
    product_dir: str,
    reference_files: list[str],
    window: tuple[float, float],
    pixel: tuple[int, int],
) -> dict:
    """Compare the exported R_rs product at one pixel against reference CSVs."""
    cube = read_cube(os.path.join(product_dir, "r_rs"))
    if cube.wavelengths is None:
        raise MissingField("product r_rs header lacks a wavelength list")
    row, col = pixel
    values = cube.data[:, row, col].astype(np.float64)
    derived = SpectrumSample(
        np.asarray(cube.wavelengths), values, label=f"pixel({row},{col})"
    )
    reports = []
    per_reference = {}
    for path in reference_files:
        ref = load_reference_spectrum(path)
        rep = compare_spectra(derived, ref, window)
        reports.append(rep)
        per_reference[ref.label or os.path.basename(path)] = rep.to_dict()
    return {
        "references": per_reference,
        "aggregate": aggregate_reports(reports).to_dict(),
    }
