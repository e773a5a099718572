#!/usr/bin/env python3
"""Regenerate the bundled CSV data assets in src/hsac/data/.

Run from the repository root:  python tools/make_data_assets.py

Assets and provenance:
  solar_irradiance.csv  blackbody approximation of the exoatmospheric solar
                        spectrum (5777 K, solid angle of the solar disk at
                        1 AU); adequate for a smooth E0 baseline.
  gas_o3.csv            parametric Chappuis-band ozone absorption
                        coefficients (atm-cm^-1), Gaussian band shape.
  gas_h2o.csv           band-model water vapour coefficients: super-Gaussian
                        bumps at the major absorption windows (~940, ~1130,
                        ~1380, ~1880 nm) plus weak 720/820 nm features.
  gas_o2.csv            oxygen A-band (and weak B-band) absorption
                        coefficients, super-Gaussian shape around 765 nm.
  aerosol_models.csv    representative (Angstrom, SSA, asymmetry) triples
                        per aerosol model name.
  bands_228.csv         synthetic 228-channel sensor definition covering
                        420-2450 nm (VNIR 6.5 nm FWHM, SWIR 10 nm FWHM).

The gas tables are deliberately coarse: their contract is qualitative
masking behaviour (transmittance dips below 0.85 inside the oxygen-A and
major water-vapour bands for typical mid-latitude states), not
line-by-line spectroscopy.
"""

import os

import numpy as np

OUT = os.path.join(os.path.dirname(__file__), "..", "src", "hsac", "data")

WL = np.arange(340.0, 2610.0 + 1e-6, 2.5)  # nm, covers the 350-2600 op range


def planck_irradiance(wl_nm):
    h = 6.62607015e-34
    c = 2.99792458e8
    kb = 1.380649e-23
    t_sun = 5777.0
    r_sun = 6.957e8
    au = 1.495978707e11
    lam = wl_nm * 1e-9
    radiance = 2 * h * c**2 / lam**5 / (np.exp(h * c / (lam * kb * t_sun)) - 1.0)
    # irradiance at 1 AU per nm
    return np.pi * radiance * (r_sun / au) ** 2 * 1e-9


def gauss(wl, center, width):
    return np.exp(-(((wl - center) / width) ** 2))


def super_gauss(wl, center, width):
    return np.exp(-(((wl - center) / width) ** 4))


def write_csv(name, header, columns):
    path = os.path.join(OUT, name)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for row in zip(*columns):
            fh.write(",".join(f"{v:.8g}" for v in row) + "\n")
    print("wrote", path)


def main():
    os.makedirs(OUT, exist_ok=True)

    write_csv(
        "solar_irradiance.csv",
        "wavelength_nm,irradiance_W_m2_nm",
        [WL, planck_irradiance(WL)],
    )

    k_o3 = 0.134 * gauss(WL, 600.0, 60.0) + 0.47 * gauss(WL, 320.0, 25.0)
    write_csv("gas_o3.csv", "wavelength_nm,k_o3", [WL, k_o3])

    a_wv = (
        0.015 * gauss(WL, 720.0, 12.0)
        + 0.025 * gauss(WL, 820.0, 15.0)
        + 0.35 * super_gauss(WL, 945.0, 35.0)
        + 0.30 * super_gauss(WL, 1135.0, 40.0)
        + 0.90 * super_gauss(WL, 1395.0, 55.0)
        + 1.10 * super_gauss(WL, 1900.0, 80.0)
        + 0.50 * super_gauss(WL, 2550.0, 120.0)
    )
    b_wv = np.full_like(WL, 0.6)
    write_csv("gas_h2o.csv", "wavelength_nm,a_wv,b_wv", [WL, a_wv, b_wv])

    a_o2 = 1.2 * super_gauss(WL, 765.0, 14.0) + 0.05 * gauss(WL, 687.0, 8.0)
    write_csv("gas_o2.csv", "wavelength_nm,a_o2", [WL, a_o2])

    with open(os.path.join(OUT, "aerosol_models.csv"), "w", encoding="utf-8") as fh:
        fh.write("name,angstrom,ssa,asymmetry\n")
        fh.write("Continental,1.3,0.89,0.67\n")
        fh.write("Maritime,0.5,0.98,0.75\n")
        fh.write("Urban,1.1,0.81,0.65\n")
        fh.write("Desert,0.2,0.92,0.73\n")
        fh.write("BiomassBurning,1.8,0.87,0.61\n")
    print("wrote aerosol_models.csv")

    with open(os.path.join(OUT, "bands_228.csv"), "w", encoding="utf-8") as fh:
        fh.write("index,center_nm,fwhm_nm\n")
        idx = 0
        for center in 423.0 + 6.5 * np.arange(88):  # VNIR: 423-988.5 nm
            fh.write(f"{idx},{center:.3f},6.5\n")
            idx += 1
        for center in np.linspace(1000.0, 2450.0, 140):  # SWIR
            fh.write(f"{idx},{center:.3f},10.0\n")
            idx += 1
    print("wrote bands_228.csv (228 bands)")


if __name__ == "__main__":
    main()
