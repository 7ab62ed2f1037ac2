"""On-disk formats: PGM masks, raw float64 field dumps, CSV tables.

All binary layouts are pinned:

* complex fields: row-major, little-endian float64, interleaved (re, im),
  with a plain-text sidecar naming the grid and wavelength;
* real maps: row-major, little-endian float64, same sidecar minus wavelength;
* masks: binary P5 PGM, maxval 255 or 65535, 16-bit samples big-endian
  (the PGM convention), values scaled to [0, 1] on read.

Sidecars and metric files are plain key=value lines so runs can be diffed
with standard tools.
"""

from __future__ import annotations

import hashlib
import re
from pathlib import Path

import numpy as np

from .errors import ConfigError, GeometryError
from .grid import ComplexField, GridSpec

_PGM_HEADER = re.compile(rb"^P5\s+(?:#[^\n]*\n\s*)*(\d+)\s+(\d+)\s+(\d+)\s")


def read_pgm(path) -> np.ndarray:
    """Read a binary P5 PGM into a float array scaled to [0, 1]."""
    data = Path(path).read_bytes()
    m = _PGM_HEADER.match(data)
    if m is None:
        raise ConfigError(f"not a binary PGM file: {path}")
    width, height, maxval = (int(g) for g in m.groups())
    if maxval <= 0 or maxval > 65535:
        raise ConfigError(f"unsupported PGM maxval {maxval}: {path}")
    raw = data[m.end():]
    if maxval < 256:
        pixels = np.frombuffer(raw, dtype=np.uint8, count=width * height)
    else:
        pixels = np.frombuffer(raw, dtype=">u2", count=width * height)
    return pixels.reshape(height, width).astype(np.float64) / maxval


def write_pgm(path, values: np.ndarray, maxval: int = 65535) -> None:
    """Write a real map as binary P5 PGM, linearly rescaled to [0, maxval].

    A `<name>.minmax` sidecar records the original value range so the
    rescaling is invertible.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise GeometryError("invalid geometry: PGM output requires a 2-d map")
    if maxval not in (255, 65535):
        raise ConfigError(f"unsupported PGM maxval {maxval}")
    lo = float(values.min())
    hi = float(values.max())
    span = hi - lo
    scaled = np.zeros_like(values) if span == 0.0 else (values - lo) / span
    quantized = np.round(scaled * maxval)
    height, width = values.shape
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(f"P5\n{width} {height}\n{maxval}\n".encode("ascii"))
        if maxval < 256:
            fh.write(quantized.astype(np.uint8).tobytes())
        else:
            fh.write(quantized.astype(">u2").tobytes())
    sidecar = path.with_suffix(path.suffix + ".minmax")
    sidecar.write_text(f"min={lo:.17g}\nmax={hi:.17g}\n", encoding="ascii")


def write_key_value(path, items: dict) -> None:
    lines = [f"{key}={_format_value(val)}\n" for key, val in items.items()]
    Path(path).write_text("".join(lines), encoding="ascii")


def _format_value(val) -> str:
    if isinstance(val, bool):
        return "true" if val else "false"
    if isinstance(val, float):
        return f"{val:.17g}"
    return str(val)


def read_key_value(path) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="ascii").splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"malformed key=value line {lineno}: {line!r}")
        key, _, val = stripped.partition("=")
        out[key.strip()] = val.strip()
    return out


def write_complex_field(path, fld: ComplexField) -> None:
    """Raw little-endian float64, interleaved (re, im), row-major + sidecar."""
    path = Path(path)
    stacked = np.empty(fld.grid.shape + (2,), dtype="<f8")
    stacked[..., 0] = fld.amplitudes.real
    stacked[..., 1] = fld.amplitudes.imag
    path.write_bytes(stacked.tobytes())
    write_key_value(
        path.with_suffix(path.suffix + ".meta"),
        {
            "nx": fld.grid.nx,
            "ny": fld.grid.ny,
            "pitch": fld.grid.pitch,
            "wavelength": fld.wavelength,
            "layout": "row-major float64 little-endian interleaved re,im",
        },
    )


def read_complex_field(path) -> ComplexField:
    path = Path(path)
    meta = read_key_value(path.with_suffix(path.suffix + ".meta"))
    nx = int(meta["nx"])
    ny = int(meta["ny"])
    grid = GridSpec(nx=nx, ny=ny, pitch=float(meta["pitch"]))
    raw = np.frombuffer(path.read_bytes(), dtype="<f8", count=nx * ny * 2)
    stacked = raw.reshape(ny, nx, 2)
    amps = stacked[..., 0] + 1j * stacked[..., 1]
    return ComplexField(grid=grid, amplitudes=amps, wavelength=float(meta["wavelength"]))


def write_real_map(path, values: np.ndarray, grid: GridSpec, extra: dict | None = None) -> None:
    """Raw little-endian float64 row-major + sidecar with grid geometry."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape != grid.shape:
        raise GeometryError("grid mismatch between map and grid spec")
    path = Path(path)
    path.write_bytes(values.astype("<f8").tobytes())
    meta = {
        "nx": grid.nx,
        "ny": grid.ny,
        "pitch": grid.pitch,
        "layout": "row-major float64 little-endian",
    }
    if extra:
        meta.update(extra)
    write_key_value(path.with_suffix(path.suffix + ".meta"), meta)


def read_real_map(path) -> tuple[np.ndarray, GridSpec, dict[str, str]]:
    path = Path(path)
    meta = read_key_value(path.with_suffix(path.suffix + ".meta"))
    nx = int(meta["nx"])
    ny = int(meta["ny"])
    grid = GridSpec(nx=nx, ny=ny, pitch=float(meta["pitch"]))
    raw = np.frombuffer(path.read_bytes(), dtype="<f8", count=nx * ny)
    return raw.reshape(ny, nx).copy(), grid, meta


def write_csv(path, header: list[str], rows) -> None:
    """Plain comma-delimited table; floats at full precision."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_format_value(cell) for cell in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def sha256_of(path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()
