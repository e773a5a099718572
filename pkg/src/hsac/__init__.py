"""hsac: physically-based atmospheric correction for hyperspectral
radiance cubes, converting TOA radiance to water-leaving reflectance and
remote-sensing reflectance by explicit radiative-transfer inversion."""

__version__ = "0.1.0"
