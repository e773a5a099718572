"""Per-band atmospheric parameters for the inversion.

Three sources feed the inversion:
  * a built-in analytic provider (single-scattering path reflectance,
    Gordon-style diffuse transmittance, band-model gas absorption from
    bundled coefficient tables);
  * a table provider ingesting externally computed parameter CSVs;
  * a local auxiliary-data catalogue for atmospheric state variables.

All provider outputs are normalized to 1 AU; the d^2 factor is applied
only inside the inversion.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import (
    DuplicateBand,
    InvariantViolation,
    MissingBand,
    MissingEntry,
    OutOfRange,
    SchemaViolation,
)
from .scene import BandDefinition, SceneMetadata
from .spectral import SRF, SpectralGrid, convolve_to_band

WAVELENGTH_MIN = 350.0
WAVELENGTH_MAX = 2600.0

_PKG_DATA = os.path.join(os.path.dirname(__file__), "data")


def data_dir() -> str:
    """Bundled data-asset directory; HSAC_DATA_DIR overrides it."""
    return os.environ.get("HSAC_DATA_DIR", _PKG_DATA)


@dataclass(frozen=True)
class BandAtmParams:
    """The six per-band quantities consumed by the inversion (all at 1 AU)."""

    band_index: int
    l_path: float
    t_g_o3: float
    t_g_total: float
    t_up: float
    s_atm: float
    e_s: float

    def validate(self) -> None:
        for name in ("t_g_o3", "t_g_total", "t_up"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise InvariantViolation(
                    f"band {self.band_index}: {name} = {v} outside (0, 1]"
                )
        if not 0.0 <= self.s_atm < 1.0:
            raise InvariantViolation(
                f"band {self.band_index}: s_atm = {self.s_atm} outside [0, 1)"
            )
        if self.l_path < 0:
            raise InvariantViolation(f"band {self.band_index}: l_path < 0")
        if self.e_s < 0:
            raise InvariantViolation(f"band {self.band_index}: e_s < 0")


@dataclass(frozen=True)
class AerosolModel:
    name: str
    angstrom_exponent: float
    single_scatter_albedo: float
    asymmetry: float


@dataclass(frozen=True)
class AtmosphericState:
    aod550: float
    tcwv: float
    tco3: float
    source: str  # metadata | catalogue | override

    def __post_init__(self):
        for name in ("aod550", "tcwv", "tco3"):
            if getattr(self, name) < 0:
                raise OutOfRange(f"{name} must be non-negative")


@dataclass(frozen=True)
class Geometry:
    """Scene-average acquisition geometry, degrees."""

    sza: float
    saa: float
    vza: float
    vaa: float

    @property
    def mu_s(self) -> float:
        return math.cos(math.radians(self.sza))

    @property
    def mu_v(self) -> float:
        return math.cos(math.radians(self.vza))

    @property
    def relative_azimuth(self) -> float:
        """|saa - vaa| folded into [0, 180] degrees."""
        phi = abs(self.saa - self.vaa) % 360.0
        return 360.0 - phi if phi > 180.0 else phi

    @property
    def cos_scattering(self) -> float:
        ts, tv = math.radians(self.sza), math.radians(self.vza)
        phi = math.radians(self.relative_azimuth)
        return -math.cos(ts) * math.cos(tv) - math.sin(ts) * math.sin(tv) * math.cos(phi)

    @classmethod
    def from_metadata(cls, meta: SceneMetadata) -> "Geometry":
        return cls(sza=meta.sza, saa=meta.saa, vza=meta.vza, vaa=meta.vaa)


# --- bundled tables -------------------------------------------------------

@lru_cache(maxsize=None)
def _load_table(filename: str) -> np.ndarray:
    path = os.path.join(data_dir(), filename)
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


@lru_cache(maxsize=None)
def aerosol_models() -> dict[str, AerosolModel]:
    path = os.path.join(data_dir(), "aerosol_models.csv")
    models = {}
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            models[row["name"]] = AerosolModel(
                name=row["name"],
                angstrom_exponent=float(row["angstrom"]),
                single_scatter_albedo=float(row["ssa"]),
                asymmetry=float(row["asymmetry"]),
            )
    return models


def aerosol_model(name: str) -> AerosolModel:
    models = aerosol_models()
    if name not in models:
        raise OutOfRange(f"unknown aerosol model {name!r}; choose from {sorted(models)}")
    return models[name]


def load_solar_irradiance() -> list[tuple[float, float]]:
    table = _load_table("solar_irradiance.csv")
    return [(float(w), float(v)) for w, v in table]


def _table_interp(wavelength, filename: str, column: int) -> np.ndarray:
    table = _load_table(filename)
    wl = np.asarray(wavelength, dtype=np.float64)
    if np.any(wl < WAVELENGTH_MIN) or np.any(wl > WAVELENGTH_MAX):
        raise OutOfRange(f"wavelength outside [{WAVELENGTH_MIN}, {WAVELENGTH_MAX}] nm")
    return np.interp(wl, table[:, 0], table[:, column])


def ozone_coefficient(wavelength) -> np.ndarray:
    """Ozone absorption coefficient k_O3 (atm-cm^-1) from the bundled table."""
    return _table_interp(wavelength, "gas_o3.csv", 1)


def water_vapour_coefficients(wavelength) -> tuple[np.ndarray, np.ndarray]:
    return (
        _table_interp(wavelength, "gas_h2o.csv", 1),
        _table_interp(wavelength, "gas_h2o.csv", 2),
    )


def oxygen_coefficient(wavelength) -> np.ndarray:
    return _table_interp(wavelength, "gas_o2.csv", 1)


# --- scalar atmospheric functions (vectorized over wavelength) ------------

def rayleigh_optical_depth(wavelength):
    """Rayleigh optical depth at standard pressure (Hansen-Travis closed form)."""
    wl = np.asarray(wavelength, dtype=np.float64)
    if np.any(wl < WAVELENGTH_MIN) or np.any(wl > WAVELENGTH_MAX):
        raise OutOfRange(f"wavelength outside [{WAVELENGTH_MIN}, {WAVELENGTH_MAX}] nm")
    um = wl / 1000.0
    tau = 0.008569 * um**-4 * (1.0 + 0.0113 * um**-2 + 0.00013 * um**-4)
    return tau if tau.ndim else float(tau)


def aerosol_optical_depth(wavelength, aod550: float, model: AerosolModel):
    """Angstrom power-law extrapolation of the 550 nm aerosol optical depth."""
    if aod550 < 0:
        raise OutOfRange(f"aod550 must be >= 0, got {aod550}")
    wl = np.asarray(wavelength, dtype=np.float64)
    tau = aod550 * (wl / 550.0) ** (-model.angstrom_exponent)
    return tau if tau.ndim else float(tau)


def _air_mass(sza: float, vza: float) -> float:
    if not (0 <= sza < 90 and 0 <= vza < 90):
        raise OutOfRange(f"angles must be in [0, 90): sza={sza}, vza={vza}")
    return 1.0 / math.cos(math.radians(sza)) + 1.0 / math.cos(math.radians(vza))


def ozone_transmittance(wavelength, tco3: float, sza: float, vza: float):
    """Two-way ozone transmittance; tco3 in Dobson Units."""
    if tco3 < 0:
        raise OutOfRange("tco3 must be >= 0")
    m = _air_mass(sza, vza)
    u = tco3 / 1000.0  # DU -> atm-cm
    t = np.exp(-ozone_coefficient(wavelength) * u * m)
    return t if t.ndim else float(t)


def water_vapour_transmittance(wavelength, tcwv: float, sza: float, vza: float):
    """Band-model water vapour transmittance; tcwv in g cm^-2."""
    if tcwv < 0:
        raise OutOfRange("tcwv must be >= 0")
    m = _air_mass(sza, vza)
    a, b = water_vapour_coefficients(wavelength)
    t = np.exp(-a * np.power(tcwv * m, b))
    return t if t.ndim else float(t)


def oxygen_transmittance(wavelength, sza: float, vza: float):
    m = _air_mass(sza, vza)
    t = np.exp(-oxygen_coefficient(wavelength) * math.sqrt(m))
    return t if t.ndim else float(t)


def gas_transmittance_total(wavelength, tcwv: float, tco3: float, sza: float, vza: float):
    """Total two-way gaseous transmittance: ozone * water vapour * oxygen."""
    t = (
        ozone_transmittance(wavelength, tco3, sza, vza)
        * water_vapour_transmittance(wavelength, tcwv, sza, vza)
        * oxygen_transmittance(wavelength, sza, vza)
    )
    return t


def rayleigh_phase(cos_theta: float) -> float:
    return 0.75 * (1.0 + cos_theta * cos_theta)


def henyey_greenstein_phase(cos_theta: float, g: float) -> float:
    return (1.0 - g * g) / (1.0 + g * g - 2.0 * g * cos_theta) ** 1.5


def path_radiance(
    wavelength,
    geometry: Geometry,
    aod550: float,
    model: AerosolModel,
    e0_at_band,
    rayleigh_scale: float = 1.0,
):
    """Single-scattering path radiance at 1 AU.

    rho_path = [tau_R * P_R + ssa * tau_a * P_HG] / (4 mu_s mu_v),
    L_path = rho_path * E0 * mu_s / pi.
    """
    e0 = np.asarray(e0_at_band, dtype=np.float64)
    if np.any(e0 < 0):
        raise OutOfRange("e0 must be >= 0")
    tau_r = rayleigh_scale * np.asarray(rayleigh_optical_depth(wavelength))
    tau_a = np.asarray(aerosol_optical_depth(wavelength, aod550, model))
    cos_theta = geometry.cos_scattering
    rho = (
        tau_r * rayleigh_phase(cos_theta)
        + model.single_scatter_albedo
        * tau_a
        * henyey_greenstein_phase(cos_theta, model.asymmetry)
    ) / (4.0 * geometry.mu_s * geometry.mu_v)
    lp = rho * e0 * geometry.mu_s / math.pi
    return lp if lp.ndim else float(lp)


def _diffuse_transmittance(wavelength, mu: float, aod550, model, rayleigh_scale=1.0):
    """Gordon-style total (direct+diffuse) transmittance along a slant path."""
    tau_r = rayleigh_scale * np.asarray(rayleigh_optical_depth(wavelength))
    tau_a = np.asarray(aerosol_optical_depth(wavelength, aod550, model))
    forward_fraction = (1.0 + model.asymmetry) / 2.0
    effective = tau_r / 2.0 + (1.0 - model.single_scatter_albedo * forward_fraction) * tau_a
    return np.exp(-effective / mu)


def transmittance_up(
    wavelength, vza: float, aod550: float, model: AerosolModel, rayleigh_scale: float = 1.0
):
    """Upward (surface-to-sensor) total transmittance, direct + diffuse."""
    if not 0 <= vza < 90:
        raise OutOfRange(f"vza {vza} outside [0, 90)")
    t = _diffuse_transmittance(
        wavelength, math.cos(math.radians(vza)), aod550, model, rayleigh_scale
    )
    return t if t.ndim else float(t)


def downwelling_irradiance(
    wavelength,
    sza: float,
    aod550: float,
    model: AerosolModel,
    e0_at_band,
    rayleigh_scale: float = 1.0,
):
    """Total downwelling surface irradiance at 1 AU: E0 * mu_s * T_down."""
    if not 0 <= sza < 90:
        raise OutOfRange(f"sza {sza} outside [0, 90)")
    mu_s = math.cos(math.radians(sza))
    t_down = _diffuse_transmittance(wavelength, mu_s, aod550, model, rayleigh_scale)
    e = np.asarray(e0_at_band, dtype=np.float64) * mu_s * t_down
    return e if e.ndim else float(e)


def spherical_albedo(
    wavelength, aod550: float, model: AerosolModel, rayleigh_scale: float = 1.0
):
    """First-order atmospheric spherical albedo, clamped to [0, 0.99]."""
    tau_r = rayleigh_scale * np.asarray(rayleigh_optical_depth(wavelength))
    tau_a = np.asarray(aerosol_optical_depth(wavelength, aod550, model))
    s = np.minimum(
        0.92 * tau_r
        + (1.0 - model.asymmetry) * model.single_scatter_albedo * tau_a / 3.0,
        0.99,
    )
    return s if s.ndim else float(s)


# --- analytic provider ----------------------------------------------------

FINE_FIELD_NAMES = ("l_path", "t_g_o3", "t_g_total", "t_up", "s_atm", "e_s")


def compute_fine_fields(
    grid: SpectralGrid,
    geometry: Geometry,
    state: AtmosphericState,
    model: AerosolModel,
    e0_grid: np.ndarray,
    rayleigh_scale: float = 1.0,
) -> dict[str, np.ndarray]:
    """Evaluate every per-wavelength quantity on the full simulation grid."""
    wl = grid.wavelengths
    return {
        "l_path": np.asarray(
            path_radiance(wl, geometry, state.aod550, model, e0_grid, rayleigh_scale)
        ),
        "t_g_o3": np.asarray(
            ozone_transmittance(wl, state.tco3, geometry.sza, geometry.vza)
        ),
        "t_g_total": np.asarray(
            gas_transmittance_total(wl, state.tcwv, state.tco3, geometry.sza, geometry.vza)
        ),
        "t_up": np.asarray(
            transmittance_up(wl, geometry.vza, state.aod550, model, rayleigh_scale)
        ),
        "s_atm": np.asarray(
            spherical_albedo(wl, state.aod550, model, rayleigh_scale)
        ),
        "e_s": np.asarray(
            downwelling_irradiance(
                wl, geometry.sza, state.aod550, model, e0_grid, rayleigh_scale
            )
        ),
    }


def band_params_from_fields(
    band: BandDefinition,
    srf: SRF,
    fields: dict[str, np.ndarray],
    grid: SpectralGrid,
) -> BandAtmParams:
    """Convolve each fine-grid quantity to the band through its SRF."""
    values = {
        name: convolve_to_band(fields[name], srf, grid) for name in FINE_FIELD_NAMES
    }
    # The weighted mean of in-range samples can exceed the range by one ulp.
    for name in ("t_g_o3", "t_g_total", "t_up"):
        values[name] = min(values[name], 1.0)
    values["s_atm"] = min(max(values["s_atm"], 0.0), 0.99)
    values["l_path"] = max(values["l_path"], 0.0)
    values["e_s"] = max(values["e_s"], 0.0)
    params = BandAtmParams(band_index=band.index, **values)
    params.validate()
    return params


def compute_band_params(
    band: BandDefinition,
    srf: SRF,
    geometry: Geometry,
    state: AtmosphericState,
    model: AerosolModel,
    e0_grid: np.ndarray,
    grid: SpectralGrid,
    rayleigh_scale: float = 1.0,
) -> BandAtmParams:
    fields = compute_fine_fields(grid, geometry, state, model, e0_grid, rayleigh_scale)
    return band_params_from_fields(band, srf, fields, grid)


class AnalyticProvider:
    """Computes band parameters from the built-in analytic model.

    Fine-grid fields are evaluated once per scene; per-band convolution is
    pure and is the unit of band-level parallelism.
    """

    provenance = "analytic"

    def __init__(
        self,
        grid: SpectralGrid,
        geometry: Geometry,
        state: AtmosphericState,
        model: AerosolModel,
        e0_grid: np.ndarray,
        rayleigh_scale: float = 1.0,
    ):
        self.grid = grid
        self.fields = compute_fine_fields(
            grid, geometry, state, model, e0_grid, rayleigh_scale
        )

    def band_params(self, band: BandDefinition, srf: SRF) -> BandAtmParams:
        return band_params_from_fields(band, srf, self.fields, self.grid)


# --- table provider -------------------------------------------------------

PARAMS_TABLE_HEADER = ["band_index", "l_path", "t_g_o3", "t_g_total", "t_up", "s_atm", "e_s"]


def load_params_table(text: str) -> list[BandAtmParams]:
    """Parse a parameter CSV; band indices must be complete and unique."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaViolation("empty parameter table") from None
    if [h.strip() for h in header] != PARAMS_TABLE_HEADER:
        raise SchemaViolation(
            f"header {header} != expected {PARAMS_TABLE_HEADER}"
        )
    params: dict[int, BandAtmParams] = {}
    for row in reader:
        if not row:
            continue
        if len(row) != 7:
            raise SchemaViolation(f"row has {len(row)} fields, expected 7: {row}")
        try:
            idx = int(row[0])
            values = [float(v) for v in row[1:]]
        except ValueError as exc:
            raise SchemaViolation(f"non-numeric row: {row}") from exc
        if idx in params:
            raise DuplicateBand(f"band {idx} appears more than once")
        p = BandAtmParams(idx, *values)
        p.validate()
        params[idx] = p
    expected = set(range(len(params)))
    missing = expected - set(params)
    if missing or (params and max(params) != len(params) - 1):
        absent = sorted(missing) or sorted(set(params) - expected)
        raise MissingBand(f"band indices not contiguous from 0; problem: {absent}")
    return [params[i] for i in sorted(params)]


def serialize_params_table(params: list[BandAtmParams]) -> str:
    """Inverse of load_params_table; %.17g keeps float64 round-trip exact."""
    out = io.StringIO()
    out.write(",".join(PARAMS_TABLE_HEADER) + "\n")
    for p in params:
        out.write(
            f"{p.band_index},{p.l_path:.17g},{p.t_g_o3:.17g},{p.t_g_total:.17g},"
            f"{p.t_up:.17g},{p.s_atm:.17g},{p.e_s:.17g}\n"
        )
    return out.getvalue()


class TableProvider:
    """Serves pre-computed parameters keyed by band index."""

    provenance = "table"

    def __init__(self, params: list[BandAtmParams]):
        self._by_index = {p.band_index: p for p in params}

    @classmethod
    def from_csv(cls, text: str) -> "TableProvider":
        return cls(load_params_table(text))

    def band_params(self, band: BandDefinition, srf: SRF) -> BandAtmParams:
        if band.index not in self._by_index:
            raise MissingBand(f"table has no parameters for band {band.index}")
        return self._by_index[band.index]


# --- auxiliary catalogue --------------------------------------------------

AOD_DATASET = "MODIS/061/MCD19A2_GRANULES"
OZONE_DATASET = "TOMS/MERGED"
WV_DATASET = "NCEP_RE/surface_wv"


class AuxCatalogue:
    """Local JSON catalogue of atmospheric state scalars.

    Entries: {"dataset": ..., "date": "YYYY-MM-DD", "bbox": [w, s, e, n],
    "value": float}. Lookup matches the date exactly and requires the query
    bbox to be contained in the entry bbox; no interpolation.
    """

    def __init__(self, entries: list[dict]):
        self.entries = entries

    @classmethod
    def from_json(cls, text: str) -> "AuxCatalogue":
        entries = json.loads(text)
        if not isinstance(entries, list):
            raise SchemaViolation("catalogue JSON must be an array of objects")
        return cls(entries)

    @classmethod
    def from_file(cls, path: str) -> "AuxCatalogue":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(fh.read())

    def lookup(self, dataset: str, date: str, bbox) -> float:
        w, s, e, n = bbox
        for entry in self.entries:
            if entry["dataset"] != dataset or entry["date"] != date:
                continue
            ew, es_, ee, en = entry["bbox"]
            if ew <= w and es_ <= s and ee >= e and en >= n:
                return float(entry["value"])
        raise MissingEntry(f"{dataset} has no entry for date={date}, bbox={list(bbox)}")


def lookup_atmospheric_state(catalogue: AuxCatalogue, date: str, bbox) -> AtmosphericState:
    return AtmosphericState(
        aod550=catalogue.lookup(AOD_DATASET, date, bbox),
        tco3=catalogue.lookup(OZONE_DATASET, date, bbox),
        tcwv=catalogue.lookup(WV_DATASET, date, bbox),
        source="catalogue",
    )


def resolve_atmospheric_state(
    metadata: SceneMetadata,
    policy: str = "metadata_first",
    catalogue: AuxCatalogue | None = None,
    bbox=None,
    override: AtmosphericState | None = None,
) -> AtmosphericState:
    """Pick aod550/tcwv/tco3 per the configured precedence policy."""
    if policy == "override":
        if override is None:
            raise MissingEntry("state policy 'override' requires explicit values")
        return override

    from_meta = {
        "aod550": metadata.aod550,
        "tcwv": metadata.tcwv,
        "tco3": metadata.tco3,
    }
    from_cat: dict[str, float | None] = {"aod550": None, "tcwv": None, "tco3": None}
    if catalogue is not None:
        date = metadata.acquisition_date.isoformat()
        box = bbox if bbox is not None else [-180.0, -90.0, 180.0, 90.0]
        datasets = {"aod550": AOD_DATASET, "tco3": OZONE_DATASET, "tcwv": WV_DATASET}
        for key, dataset in datasets.items():
            try:
                from_cat[key] = catalogue.lookup(dataset, date, box)
            except MissingEntry:
                from_cat[key] = None

    if policy == "metadata_first":
        first, second, source = from_meta, from_cat, "metadata"
    elif policy == "catalogue_first":
        first, second, source = from_cat, from_meta, "catalogue"
    else:
        raise OutOfRange(f"unknown state policy {policy!r}")

    resolved = {}
    for key in ("aod550", "tcwv", "tco3"):
        value = first[key] if first[key] is not None else second[key]
        if value is None:
            raise MissingEntry(f"no value for {key} from metadata or catalogue")
        if first[key] is None:
            source_used = "catalogue" if source == "metadata" else "metadata"
        else:
            source_used = source
        resolved[key] = value
        resolved.setdefault("_sources", []).append(source_used)
    sources = set(resolved.pop("_sources"))
    label = sources.pop() if len(sources) == 1 else "mixed"
    return AtmosphericState(source=label, **resolved)
