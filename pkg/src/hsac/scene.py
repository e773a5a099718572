"""Scene metadata parsing and solar geometry factors.

Metadata arrives as a small XML document (schema documented in the README);
angles are kept in degrees end-to-end and only converted to radians inside
trigonometric evaluation.
"""

from __future__ import annotations

import datetime as _dt
import math
import warnings
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

from .errors import InvalidDate, MalformedXml, MissingField, OutOfRange


@dataclass(frozen=True)
class BandDefinition:
    """One sensor channel: center wavelength and FWHM in nm, optional measured SRF."""

    index: int
    center_wavelength: float
    fwhm: float
    srf: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if self.fwhm <= 0:
            raise OutOfRange(f"band {self.index}: fwhm must be > 0, got {self.fwhm}")
        if not 350.0 <= self.center_wavelength <= 2600.0:
            raise OutOfRange(
                f"band {self.index}: center wavelength {self.center_wavelength} nm "
                "outside [350, 2600]"
            )
        if self.srf is not None:
            responses = [r for _, r in self.srf]
            if any(r < 0 for r in responses):
                raise OutOfRange(f"band {self.index}: negative SRF response")
            if max(responses, default=0.0) <= 0:
                raise OutOfRange(f"band {self.index}: SRF has no positive response")


@dataclass(frozen=True)
class SceneMetadata:
    """Scene-average acquisition geometry, timestamp and atmospheric state.

    aod550 / tcwv / tco3 are None when the document omits them; the
    atmospheric provider fills them according to the state policy.
    """

    acquisition_date: _dt.date
    acquisition_time: float  # seconds of day, UTC
    sza: float
    saa: float
    vza: float
    vaa: float
    aod550: float | None
    tcwv: float | None
    tco3: float | None
    bands: tuple[BandDefinition, ...] = field(default_factory=tuple)
    scene_id: str = ""

    def __post_init__(self):
        if not 0.0 <= self.sza < 90.0:
            raise OutOfRange(f"sza {self.sza} outside [0, 90)")
        if not 0.0 <= self.vza < 90.0:
            raise OutOfRange(f"vza {self.vza} outside [0, 90)")
        if not 0.0 <= self.saa < 360.0:
            raise OutOfRange(f"saa {self.saa} outside [0, 360)")
        if not 0.0 <= self.vaa < 360.0:
            raise OutOfRange(f"vaa {self.vaa} outside [0, 360)")
        for name in ("aod550", "tcwv", "tco3"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise OutOfRange(f"{name} must be non-negative, got {value}")
        if self.tco3 is not None and not 100.0 <= self.tco3 <= 600.0:
            warnings.warn(
                f"tco3 = {self.tco3} DU outside plausible range [100, 600]",
                stacklevel=2,
            )
        centers = [b.center_wavelength for b in self.bands]
        if any(b <= a for a, b in zip(centers, centers[1:])):
            raise OutOfRange("band center wavelengths must be strictly increasing")


@dataclass(frozen=True)
class SolarDistanceFactor:
    """Earth-Sun distance for a day of year, in AU, and its square."""

    julian_day: int
    d_au: float
    d_squared: float


def compute_julian_day(date: _dt.date) -> int:
    """Day of year in [1, 366], leap years included."""
    if not isinstance(date, _dt.date):
        raise InvalidDate(f"not a calendar date: {date!r}")
    return date.timetuple().tm_yday


def earth_sun_distance(julian_day: int) -> SolarDistanceFactor:
    """Earth-Sun distance from day of year.

    d = 1 - 0.01672 * cos(0.9856 deg * (J - 4)); accurate to <0.1% against
    ephemeris tables, minimum near perihelion (J=4).
    """
    if not 1 <= julian_day <= 366:
        raise OutOfRange(f"julian day {julian_day} outside [1, 366]")
    d_au = 1.0 - 0.01672 * math.cos(math.radians(0.9856 * (julian_day - 4)))
    return SolarDistanceFactor(julian_day=julian_day, d_au=d_au, d_squared=d_au * d_au)


def _text_of(root: ET.Element, tag: str) -> str:
    node = root.find(tag)
    if node is None or node.text is None or not node.text.strip():
        raise MissingField(tag)
    return node.text.strip()


def _float_of(root: ET.Element, tag: str) -> float:
    text = _text_of(root, tag)
    try:
        return float(text)
    except ValueError as exc:
        raise MalformedXml(f"element <{tag}> is not a number: {text!r}") from exc


def _optional_float(root: ET.Element, tag: str) -> float | None:
    node = root.find(tag)
    if node is None or node.text is None or not node.text.strip():
        return None
    try:
        return float(node.text.strip())
    except ValueError as exc:
        raise MalformedXml(f"element <{tag}> is not a number: {node.text!r}") from exc


def _parse_srf(node: ET.Element, band_index: int) -> tuple[tuple[float, float], ...]:
    tokens = (node.text or "").split()
    if len(tokens) % 2 != 0:
        raise MalformedXml(f"band {band_index}: srf needs wavelength/response pairs")
    values = [float(t) for t in tokens]
    return tuple(zip(values[0::2], values[1::2]))


def _solar_zenith(root: ET.Element) -> float:
    """sza from <sunZenith> or complementary <sunElevation>; both must agree."""
    zen = _optional_float(root, "sunZenith")
    elev = _optional_float(root, "sunElevation")
    if zen is None and elev is None:
        raise MissingField("sunZenith")
    if elev is not None:
        from_elev = 90.0 - elev
        if zen is not None and abs(zen - from_elev) > 0.01:
            raise OutOfRange(
                f"sunZenith {zen} inconsistent with sunElevation {elev}"
            )
        if zen is None:
            return from_elev
    return zen  # type: ignore[return-value]


def parse_scene_metadata(xml_document: str) -> SceneMetadata:
    """Parse a scene XML document into a SceneMetadata.

    Raises MalformedXml for unparseable documents, MissingField naming any
    absent mandatory element, OutOfRange for invariant violations.
    """
    try:
        root = ET.fromstring(xml_document)
    except ET.ParseError as exc:
        raise MalformedXml(str(exc)) from exc

    date_text = _text_of(root, "acquisitionDate")
    try:
        acq_date = _dt.date.fromisoformat(date_text)
    except ValueError as exc:
        raise InvalidDate(f"acquisitionDate {date_text!r}") from exc

    time_text = _text_of(root, "acquisitionTime")
    try:
        t = _dt.time.fromisoformat(time_text)
    except ValueError as exc:
        raise MalformedXml(f"acquisitionTime {time_text!r}") from exc
    seconds = t.hour * 3600 + t.minute * 60 + t.second + t.microsecond / 1e6

    sza = _solar_zenith(root)
    saa = _float_of(root, "sunAzimuth")
    vza = _float_of(root, "viewZenith")
    vaa = _float_of(root, "viewAzimuth")

    band_parent = root.find("bandCharacterisation")
    bands: list[BandDefinition] = []
    if band_parent is not None:
        for node in band_parent.findall("band"):
            idx_text = node.get("index")
            if idx_text is None:
                raise MissingField("band/@index")
            srf_node = node.find("srf")
            srf = _parse_srf(srf_node, int(idx_text)) if srf_node is not None else None
            bands.append(
                BandDefinition(
                    index=int(idx_text),
                    center_wavelength=_float_of(node, "centerWavelength"),
                    fwhm=_float_of(node, "fwhm"),
                    srf=srf,
                )
            )
        bands.sort(key=lambda b: b.index)

    scene_id_node = root.find("sceneId")
    scene_id = (scene_id_node.text or "").strip() if scene_id_node is not None else ""

    return SceneMetadata(
        acquisition_date=acq_date,
        acquisition_time=seconds,
        sza=sza,
        saa=saa,
        vza=vza,
        vaa=vaa,
        aod550=_optional_float(root, "aod550"),
        tcwv=_optional_float(root, "tcwv"),
        tco3=_optional_float(root, "tco3"),
        bands=tuple(bands),
        scene_id=scene_id,
    )
