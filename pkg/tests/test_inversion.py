import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_params
from hsac.atmosphere import BandAtmParams
from hsac.errors import LengthMismatch, OutOfRange
from hsac.inversion import (
    BAND_MASKED_LOW_TG,
    BAND_VALID,
    MaskPolicy,
    forward_model_toa,
    invert_band_plane,
    invert_cube,
    mask_bands,
    to_rrs,
)
from hsac.raster import RadianceCube

PARAMS = BandAtmParams(
    band_index=0, l_path=0.12, t_g_o3=0.93, t_g_total=0.9, t_up=0.95,
    s_atm=0.08, e_s=1.6,
)


def plane(value):
    return np.full((1, 1), value, dtype=np.float64)


class TestInvertBandPlane:
    def test_zero_numerator(self):
        # L_TOA * d^2 / T_g_o3 == L_path -> rho = 0
        l_toa = PARAMS.l_path * PARAMS.t_g_o3 / 1.01
        out, count = invert_band_plane(plane(l_toa), 1.01, PARAMS)
        assert out[0, 0] == pytest.approx(0.0, abs=1e-15)
        assert count == 0

    def test_decoupled_atmosphere_reduction(self):
        p = BandAtmParams(0, 0.12, 0.93, 0.9, 0.95, 0.0, 1.6)
        l_toa, d2 = 0.5, 1.01
        out, _ = invert_band_plane(plane(l_toa), d2, p)
        y = l_toa * d2 / p.t_g_o3 - p.l_path
        expected = math.pi * y / (p.e_s * p.t_up)
        assert out[0, 0] == pytest.approx(expected, rel=1e-14)

    def test_forward_round_trip_selected_reflectances(self):
        rng = np.random.default_rng(29)
        for rho_true in (0.001, 0.02, 0.3):
            p = random_params(rng)
            d2 = rng.uniform(0.966, 1.034)
            l_toa = forward_model_toa(rho_true, d2, p)
            out, _ = invert_band_plane(plane(l_toa), d2, p)
            assert out[0, 0] == pytest.approx(rho_true, rel=1e-12)

    def test_nodata_propagates(self):
        data = np.array([[0.5, -9999.0]])
        out, count = invert_band_plane(data, 1.0, PARAMS, nodata=-9999.0)
        assert out[0, 1] == -9999.0
        assert count == 0

    def test_degenerate_denominator_counted(self):
        # choose L_TOA so that c + s*y == 0 exactly: y = -c/s
        c = PARAMS.e_s * PARAMS.t_up / math.pi
        y = -c / PARAMS.s_atm
        l_toa = (y + PARAMS.l_path) * PARAMS.t_g_o3
        out, count = invert_band_plane(plane(l_toa), 1.0, PARAMS, nodata=-9999.0)
        assert count == 1
        assert out[0, 0] == -9999.0

    def test_invalid_d_squared(self):
        with pytest.raises(OutOfRange):
            invert_band_plane(plane(0.5), 0.0, PARAMS)

    def test_monotone_in_radiance(self):
        l_values = np.linspace(0.01, 2.0, 50)
        out, _ = invert_band_plane(l_values.reshape(1, -1), 1.0, PARAMS)
        assert np.all(np.diff(out[0]) > 0)

    def test_affine_limit_without_coupling(self):
        p = BandAtmParams(0, 0.12, 0.93, 0.9, 0.95, 0.0, 1.6)
        c = p.e_s * p.t_up / math.pi
        l_values = np.linspace(0.01, 2.0, 20)
        out, _ = invert_band_plane(l_values.reshape(1, -1), 1.02, p)
        expected = (l_values * 1.02 / p.t_g_o3 - p.l_path) / c
        np.testing.assert_allclose(out[0], expected, rtol=1e-14)


class TestForwardModel:
    def test_zero_reflectance_pure_path_term(self):
        assert forward_model_toa(0.0, 1.01, PARAMS) == pytest.approx(
            PARAMS.t_g_o3 * PARAMS.l_path / 1.01, rel=1e-14
        )

    def test_linear_regime_without_coupling(self):
        p = BandAtmParams(0, 0.12, 0.93, 0.9, 0.95, 0.0, 1.6)
        expected = (p.t_g_o3 / 1.01) * (p.l_path + 0.1 * p.e_s * p.t_up / math.pi)
        assert forward_model_toa(0.1, 1.01, p) == pytest.approx(expected, rel=1e-14)

    @settings(max_examples=300, deadline=None)
    @given(
        rho=st.floats(min_value=-0.05, max_value=0.9),
        seed=st.integers(min_value=0, max_value=2**31),
        d2=st.floats(min_value=0.966, max_value=1.034),
    )
    def test_round_trip_property(self, rho, seed, d2):
        p = random_params(np.random.default_rng(seed))
        if p.s_atm * rho >= 0.99:
            return
        l_toa = forward_model_toa(rho, d2, p)
        out, _ = invert_band_plane(plane(l_toa), d2, p)
        assert out[0, 0] == pytest.approx(rho, rel=1e-12, abs=1e-15)


class TestMaskBands:
    def _params(self, tg):
        return BandAtmParams(0, 0.1, 0.9, tg, 0.9, 0.05, 1.5)

    def test_below_threshold_masked(self):
        assert mask_bands([self._params(0.84)], MaskPolicy(0.85)) == [BAND_MASKED_LOW_TG]

    def test_boundary_is_strict_less(self):
        assert mask_bands([self._params(0.85)], MaskPolicy(0.85)) == [BAND_VALID]

    def test_degenerate_threshold_masks_any_absorption(self):
        params = [self._params(tg) for tg in (0.5, 0.9, 0.999)]
        assert mask_bands(params, MaskPolicy(1.0)) == [BAND_MASKED_LOW_TG] * 3

    def test_threshold_validation(self):
        with pytest.raises(OutOfRange):
            MaskPolicy(tg_threshold=0.0)


class TestToRrs:
    def test_unit_check(self):
        out = to_rrs(np.full((1, 1, 1), math.pi))
        assert out[0, 0, 0] == pytest.approx(1.0, rel=1e-15)

    def test_zero(self):
        assert to_rrs(np.zeros((1, 1, 1)))[0, 0, 0] == 0.0

    def test_elementwise_oracle(self):
        rng = np.random.default_rng(31)
        rho = rng.normal(size=(2, 3, 4))
        out = to_rrs(rho)
        for idx in np.ndindex(rho.shape):
            assert out[idx] == rho[idx] / math.pi

    def test_nodata_propagated(self):
        rho = np.array([[[-9999.0, 0.5]]])
        out = to_rrs(rho, nodata=-9999.0)
        assert out[0, 0, 0] == -9999.0


class TestInvertCube:
    def _cube_and_params(self, n_bands=4, size=8, seed=37):
        rng = np.random.default_rng(seed)
        params = [random_params(rng, i) for i in range(n_bands)]
        rho_true = rng.uniform(0.001, 0.5, size=(n_bands, size, size))
        d2 = 1.01
        l_toa = np.stack(
            [forward_model_toa(rho_true[b], d2, params[b]) for b in range(n_bands)]
        )
        return RadianceCube(data=l_toa), d2, params, rho_true

    def test_cube_round_trip(self):
        cube, d2, params, rho_true = self._cube_and_params()
        product = invert_cube(cube, d2, params, MaskPolicy(tg_threshold=0.01))
        np.testing.assert_allclose(product.rho_w, rho_true, rtol=1e-12)
        np.testing.assert_allclose(
            product.r_rs, rho_true / math.pi, rtol=1e-12
        )

    def test_all_bands_masked(self):
        cube, d2, params, _ = self._cube_and_params()
        product = invert_cube(cube, d2, params, MaskPolicy(tg_threshold=1.0))
        assert product.band_mask == [BAND_MASKED_LOW_TG] * cube.n_bands
        assert np.all(product.rho_w == cube.nodata_value)
        assert product.report.valid_band_count == 0
        assert len(product.report.masked_bands) == cube.n_bands

    def test_single_pixel_matches_band_plane(self):
        cube, d2, params, _ = self._cube_and_params(n_bands=1, size=1)
        product = invert_cube(cube, d2, params, MaskPolicy(tg_threshold=0.01))
        expected, _ = invert_band_plane(cube.data[0], d2, params[0])
        assert product.rho_w[0, 0, 0] == expected[0, 0]

    def test_length_mismatch(self):
        cube, d2, params, _ = self._cube_and_params()
        with pytest.raises(LengthMismatch):
            invert_cube(cube, d2, params[:-1], MaskPolicy())

    def test_worker_counts_bit_identical(self):
        cube, d2, params, _ = self._cube_and_params(n_bands=6, size=130)
        products = [
            invert_cube(cube, d2, params, MaskPolicy(tg_threshold=0.01), workers=w)
            for w in (1, 2, 8)
        ]
        for p in products[1:]:
            np.testing.assert_array_equal(p.rho_w, products[0].rho_w)
            assert p.report.degenerate_pixels == products[0].report.degenerate_pixels

    def test_negativity_reported_not_clipped(self):
        cube, d2, params, rho_true = self._cube_and_params()
        # force a negative reflectance at one pixel
        cube.data[0, 0, 0] = forward_model_toa(-0.02, d2, params[0])
        product = invert_cube(cube, d2, params, MaskPolicy(tg_threshold=0.01))
        assert product.rho_w[0, 0, 0] == pytest.approx(-0.02, rel=1e-12)
        assert product.report.negativity_rate > 0

    def test_clip_negative_opt_in(self):
        cube, d2, params, _ = self._cube_and_params()
        cube.data[0, 0, 0] = forward_model_toa(-0.02, d2, params[0])
        product = invert_cube(
            cube, d2, params, MaskPolicy(tg_threshold=0.01, clip_negative=True)
        )
        assert product.rho_w[0, 0, 0] == 0.0

    def test_masked_band_filled_with_sentinel(self):
        cube, d2, params, _ = self._cube_and_params()
        low = BandAtmParams(0, params[0].l_path, params[0].t_g_o3, 0.01,
                            params[0].t_up, params[0].s_atm, params[0].e_s)
        params = [low] + params[1:]
        product = invert_cube(cube, d2, params, MaskPolicy(tg_threshold=0.85))
        assert product.band_mask[0] == BAND_MASKED_LOW_TG
        assert np.all(product.rho_w[0] == cube.nodata_value)
