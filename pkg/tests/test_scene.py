import datetime

import pytest

from hsac.errors import InvalidDate, MalformedXml, MissingField, OutOfRange
from hsac.scene import (
    BandDefinition,
    SceneMetadata,
    compute_julian_day,
    earth_sun_distance,
    parse_scene_metadata,
)

FIXTURE_XML = """<scene>
  <sceneId>TEST-0001</sceneId>
  <acquisitionDate>2024-07-24</acquisitionDate>
  <acquisitionTime>11:01:54</acquisitionTime>
  <sunZenith>35.2</sunZenith>
  <sunAzimuth>145.0</sunAzimuth>
  <viewZenith>5.0</viewZenith>
  <viewAzimuth>100.0</viewAzimuth>
  <aod550>0.12</aod550>
  <tcwv>1.8</tcwv>
  <tco3>310</tco3>
  <bandCharacterisation>
    <band index="0"><centerWavelength>550.0</centerWavelength><fwhm>6.5</fwhm></band>
    <band index="1"><centerWavelength>650.0</centerWavelength><fwhm>6.5</fwhm>
      <srf>645.0 0.1 650.0 1.0 655.0 0.1</srf>
    </band>
  </bandCharacterisation>
</scene>
"""


class TestParseSceneMetadata:
    def test_fixture_fields_echoed(self):
        meta = parse_scene_metadata(FIXTURE_XML)
        assert meta.scene_id == "TEST-0001"
        assert meta.acquisition_date == datetime.date(2024, 7, 24)
        assert meta.acquisition_time == 11 * 3600 + 60 + 54
        assert meta.sza == 35.2
        assert meta.saa == 145.0
        assert meta.vza == 5.0
        assert meta.vaa == 100.0
        assert meta.aod550 == 0.12
        assert meta.tcwv == 1.8
        assert meta.tco3 == 310
        assert len(meta.bands) == 2
        assert meta.bands[0].center_wavelength == 550.0
        assert meta.bands[1].srf == ((645.0, 0.1), (650.0, 1.0), (655.0, 0.1))

    def test_sun_elevation_converted_to_zenith(self):
        doc = FIXTURE_XML.replace(
            "<sunZenith>35.2</sunZenith>", "<sunElevation>60.0</sunElevation>"
        )
        assert parse_scene_metadata(doc).sza == 30.0

    def test_inconsistent_elevation_and_zenith(self):
        doc = FIXTURE_XML.replace(
            "<sunZenith>35.2</sunZenith>",
            "<sunZenith>35.2</sunZenith><sunElevation>60.0</sunElevation>",
        )
        with pytest.raises(OutOfRange):
            parse_scene_metadata(doc)

    def test_consistent_elevation_and_zenith(self):
        doc = FIXTURE_XML.replace(
            "<sunZenith>35.2</sunZenith>",
            "<sunZenith>35.2</sunZenith><sunElevation>54.8</sunElevation>",
        )
        assert parse_scene_metadata(doc).sza == 35.2

    def test_missing_view_zenith_names_element(self):
        doc = FIXTURE_XML.replace("<viewZenith>5.0</viewZenith>", "")
        with pytest.raises(MissingField, match="viewZenith"):
            parse_scene_metadata(doc)

    def test_malformed_document(self):
        with pytest.raises(MalformedXml):
            parse_scene_metadata("<scene><unclosed>")

    def test_optional_atmospheric_fields_absent(self):
        doc = FIXTURE_XML.replace("<aod550>0.12</aod550>", "")
        assert parse_scene_metadata(doc).aod550 is None

    def test_angle_out_of_range(self):
        doc = FIXTURE_XML.replace("<sunZenith>35.2</sunZenith>", "<sunZenith>95</sunZenith>")
        with pytest.raises(OutOfRange):
            parse_scene_metadata(doc)

    def test_tco3_implausible_warns(self):
        doc = FIXTURE_XML.replace("<tco3>310</tco3>", "<tco3>50</tco3>")
        with pytest.warns(UserWarning, match="tco3"):
            parse_scene_metadata(doc)


class TestInvariants:
    def test_fwhm_positive(self):
        with pytest.raises(OutOfRange):
            BandDefinition(index=0, center_wavelength=550.0, fwhm=0.0)

    def test_center_wavelength_range(self):
        with pytest.raises(OutOfRange):
            BandDefinition(index=0, center_wavelength=3000.0, fwhm=6.5)

    def test_band_centers_strictly_increasing(self):
        bands = (
            BandDefinition(0, 650.0, 6.5),
            BandDefinition(1, 550.0, 6.5),
        )
        with pytest.raises(OutOfRange):
            SceneMetadata(
                acquisition_date=datetime.date(2024, 1, 1),
                acquisition_time=0.0,
                sza=30.0,
                saa=0.0,
                vza=0.0,
                vaa=0.0,
                aod550=0.1,
                tcwv=1.0,
                tco3=300.0,
                bands=bands,
            )


class TestJulianDay:
    def test_year_start(self):
        assert compute_julian_day(datetime.date(2024, 1, 1)) == 1

    def test_leap_year_midsummer(self):
        # oracle: days since Jan 1 plus one
        d = datetime.date(2024, 7, 24)
        assert (d - datetime.date(2024, 1, 1)).days + 1 == 206
        assert compute_julian_day(d) == 206

    def test_non_leap_year_end(self):
        assert compute_julian_day(datetime.date(2023, 12, 31)) == 365

    def test_leap_year_end(self):
        assert compute_julian_day(datetime.date(2024, 12, 31)) == 366

    def test_invalid_input(self):
        with pytest.raises(InvalidDate):
            compute_julian_day("2024-01-01")


class TestEarthSunDistance:
    def test_perihelion_minimum(self):
        # cross-checked against ephemeris tables: early-January minimum
        assert earth_sun_distance(4).d_au == pytest.approx(0.98328, abs=5e-4)

    def test_aphelion_maximum(self):
        assert earth_sun_distance(186).d_au == pytest.approx(1.01671, abs=5e-4)

    def test_range_bound_all_days(self):
        for j in range(1, 367):
            f = earth_sun_distance(j)
            assert 0.983 <= f.d_au <= 1.017
            assert f.d_squared == f.d_au**2

    def test_out_of_range(self):
        for j in (0, 367):
            with pytest.raises(OutOfRange):
                earth_sun_distance(j)
