"""ENVI-style raster reading and writing.

Two-file convention: a text header (.hdr) describing dimensions, data type
and interleave, next to a raw little-endian binary payload. Supported data
types are 4 (float32) and 12 (uint16); supported interleaves are bsq and
bil. Cubes are always returned in canonical band-sequential order.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import (
    HeaderPayloadMismatch,
    IoFailure,
    LengthMismatch,
    UnsupportedDataType,
    UnsupportedInterleave,
)

DEFAULT_NODATA = -9999.0

_DTYPE_CODES = {4: np.dtype("<f4"), 12: np.dtype("<u2")}
_CODE_FOR_DTYPE = {np.dtype("float32"): 4, np.dtype("uint16"): 12}


@dataclass
class RadianceCube:
    """Band-sequential raster: data has shape (n_bands, n_rows, n_cols)."""

    data: np.ndarray
    nodata_value: float = DEFAULT_NODATA
    wavelengths: tuple[float, ...] | None = None

    @property
    def n_bands(self) -> int:
        return self.data.shape[0]

    @property
    def n_rows(self) -> int:
        return self.data.shape[1]

    @property
    def n_cols(self) -> int:
        return self.data.shape[2]


def parse_envi_header(text: str) -> dict:
    """Parse an ENVI header into a key -> string/list dict (keys lowercased)."""
    fields: dict = {}
    lines = iter(text.splitlines())
    for line in lines:
        line = line.strip()
        if not line or line.upper() == "ENVI" or "=" not in line:
            continue
        key, _, value = line.partition("=")
        key = key.strip().lower()
        value = value.strip()
        if value.startswith("{"):
            while "}" not in value:
                value += " " + next(lines).strip()
            inner = value[value.index("{") + 1 : value.index("}")]
            fields[key] = [v.strip() for v in inner.split(",") if v.strip()]
        else:
            fields[key] = value
    return fields


def read_radiance_cube(header: str, payload: bytes) -> RadianceCube:
    """Decode a header + raw payload into a canonical BSQ cube."""
    fields = parse_envi_header(header)
    try:
        samples = int(fields["samples"])
        lines = int(fields["lines"])
        bands = int(fields["bands"])
        dtype_code = int(fields["data type"])
        interleave = str(fields["interleave"]).lower()
    except KeyError as exc:
        raise HeaderPayloadMismatch(f"header missing field {exc}") from exc

    if dtype_code not in _DTYPE_CODES:
        raise UnsupportedDataType(f"data type {dtype_code} not in {sorted(_DTYPE_CODES)}")
    if interleave not in ("bsq", "bil"):
        raise UnsupportedInterleave(f"interleave {interleave!r} not in {{bsq, bil}}")

    dtype = _DTYPE_CODES[dtype_code]
    expected = samples * lines * bands * dtype.itemsize
    if len(payload) != expected:
        raise HeaderPayloadMismatch(
            f"payload is {len(payload)} bytes, header implies {expected}"
        )

    flat = np.frombuffer(payload, dtype=dtype)
    if interleave == "bsq":
        data = flat.reshape(bands, lines, samples)
    else:  # bil: (lines, bands, samples)
        data = flat.reshape(lines, bands, samples).transpose(1, 0, 2)
    data = np.ascontiguousarray(data)

    nodata = float(fields.get("data ignore value", DEFAULT_NODATA))
    wavelengths = None
    if "wavelength" in fields:
        wavelengths = tuple(float(w) for w in fields["wavelength"])
    return RadianceCube(data=data, nodata_value=nodata, wavelengths=wavelengths)


def format_envi_header(
    cube: RadianceCube,
    interleave: str = "bsq",
    description: str = "hsac raster",
) -> str:
    dtype_code = _CODE_FOR_DTYPE.get(cube.data.dtype)
    if dtype_code is None:
        raise UnsupportedDataType(f"cannot write dtype {cube.data.dtype}")
    if interleave not in ("bsq", "bil"):
        raise UnsupportedInterleave(interleave)
    lines = [
        "ENVI",
        f"description = {{{description}}}",
        f"samples = {cube.n_cols}",
        f"lines = {cube.n_rows}",
        f"bands = {cube.n_bands}",
        "header offset = 0",
        "file type = ENVI Standard",
        f"data type = {dtype_code}",
        f"interleave = {interleave}",
        "byte order = 0",
        f"data ignore value = {cube.nodata_value!r}",
    ]
    if cube.wavelengths is not None:
        wl = ", ".join(f"{w:.6f}" for w in cube.wavelengths)
        lines.append(f"wavelength = {{{wl}}}")
    return "\n".join(lines) + "\n"


def encode_payload(cube: RadianceCube, interleave: str = "bsq") -> bytes:
    if interleave == "bsq":
        arr = cube.data
    elif interleave == "bil":
        arr = cube.data.transpose(1, 0, 2)
    else:
        raise UnsupportedInterleave(interleave)
    return np.ascontiguousarray(arr).tobytes()


def read_cube(base_path: str) -> RadianceCube:
    """Read `base_path`.hdr + `base_path`.img (or `base_path` raw)."""
    hdr = base_path + ".hdr"
    img = base_path + ".img" if os.path.exists(base_path + ".img") else base_path
    with open(hdr, encoding="utf-8") as fh:
        header = fh.read()
    with open(img, "rb") as fh:
        payload = fh.read()
    return read_radiance_cube(header, payload)


def write_cube(base_path: str, cube: RadianceCube, interleave: str = "bsq") -> None:
    """Write header + payload atomically (temp file then rename)."""
    header = format_envi_header(cube, interleave=interleave)
    payload = encode_payload(cube, interleave=interleave)
    try:
        tmp = base_path + ".hdr.tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(header)
        os.replace(tmp, base_path + ".hdr")
        tmp = base_path + ".img.tmp"
        with open(tmp, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, base_path + ".img")
    except OSError as exc:
        raise IoFailure(f"writing {base_path}: {exc}") from exc


def apply_radiometric_scaling(
    dn_cube: RadianceCube, gains, offsets
) -> RadianceCube:
    """L = gain * DN + offset per band; nodata pixels pass through unscaled."""
    gains = np.asarray(gains, dtype=np.float64)
    offsets = np.asarray(offsets, dtype=np.float64)
    if gains.shape != (dn_cube.n_bands,) or offsets.shape != (dn_cube.n_bands,):
        raise LengthMismatch(
            f"need {dn_cube.n_bands} gains/offsets, got {gains.size}/{offsets.size}"
        )
    dn = dn_cube.data.astype(np.float64)
    scaled = dn * gains[:, None, None] + offsets[:, None, None]
    nodata_mask = dn_cube.data == dn_cube.nodata_value
    scaled[nodata_mask] = dn_cube.nodata_value
    return RadianceCube(
        data=scaled,
        nodata_value=dn_cube.nodata_value,
        wavelengths=dn_cube.wavelengths,
    )
