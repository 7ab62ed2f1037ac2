"""Round trips for the delimited and binary artifact formats."""

import hashlib

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from ghostsim import ComplexField, ConfigError, GridSpec
from ghostsim.fileio import (
    read_complex_field,
    read_key_value,
    read_pgm,
    read_real_map,
    sha256_of,
    write_complex_field,
    write_csv,
    write_key_value,
    write_pgm,
    write_real_map,
)


def test_pgm_round_trip_8bit(tmp_path):
    rng = np.random.default_rng(31)
    values = rng.random((16, 8))
    path = tmp_path / "a.pgm"
    write_pgm(path, values, maxval=255)
    back = read_pgm(path)
    assert back.shape == (16, 8)
    # stored as round(v * 255), so worst case error is half a level
    lo, hi = values.min(), values.max()
    scaled = (values - lo) / (hi - lo)
    assert np.abs(back - scaled).max() <= 0.5 / 255 + 1e-12


def test_pgm_round_trip_16bit(tmp_path):
    rng = np.random.default_rng(32)
    values = rng.random((8, 8)) * 40.0 - 3.0
    path = tmp_path / "b.pgm"
    write_pgm(path, values)
    back = read_pgm(path)
    lo, hi = values.min(), values.max()
    scaled = (values - lo) / (hi - lo)
    assert np.abs(back - scaled).max() <= 0.5 / 65535 + 1e-12
    side = read_key_value(tmp_path / "b.pgm.minmax")
    assert_allclose(float(side["min"]), lo, rtol=1e-15)
    assert_allclose(float(side["max"]), hi, rtol=1e-15)


def test_pgm_writes_are_deterministic(tmp_path):
    values = np.random.default_rng(33).random((12, 12))
    write_pgm(tmp_path / "c1.pgm", values)
    write_pgm(tmp_path / "c2.pgm", values)
    assert sha256_of(tmp_path / "c1.pgm") == sha256_of(tmp_path / "c2.pgm")


def test_read_pgm_rejects_other_formats(tmp_path):
    bad = tmp_path / "bad.pgm"
    bad.write_bytes(b"P2\n2 2\n255\n0 1 2 3\n")
    with pytest.raises(ConfigError, match="PGM"):
        read_pgm(bad)


def test_complex_field_round_trip_is_exact(tmp_path):
    rng = np.random.default_rng(34)
    grid = GridSpec(16, 8, 12.5e-6)
    amps = rng.standard_normal((8, 16)) + 1j * rng.standard_normal((8, 16))
    fld = ComplexField(grid, amps, 532e-9)
    path = tmp_path / "field.raw"
    write_complex_field(path, fld)
    back = read_complex_field(path)
    assert_array_equal(back.amplitudes, amps)
    assert back.grid == grid
    assert back.wavelength == 532e-9


def test_real_map_round_trip_with_extras(tmp_path):
    rng = np.random.default_rng(35)
    grid = GridSpec(8, 6, 16e-6)
    values = rng.standard_normal((6, 8))
    path = tmp_path / "map.raw"
    write_real_map(path, values, grid, extra={"tag": "demo"})
    back, back_grid, meta = read_real_map(path)
    assert_array_equal(back, values)
    assert back_grid == grid
    assert meta["tag"] == "demo"
    with pytest.raises(Exception):
        write_real_map(tmp_path / "bad.raw", values, GridSpec(4, 4, 1e-6))


def test_key_value_round_trip(tmp_path):
    items = {
        "run.shots": 2000,
        "crystal.exact_gain": False,
        "source.max_angle": 4.0e-3,
        "object.mask_path": "",
        "note": "plain text with = sign? no, plain text",
    }
    path = tmp_path / "kv.txt"
    write_key_value(path, items)
    back = read_key_value(path)
    assert back["run.shots"] == "2000"
    assert back["crystal.exact_gain"] == "false"
    assert float(back["source.max_angle"]) == 4.0e-3
    assert back["object.mask_path"] == ""


def test_key_value_rejects_malformed_lines(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("alpha=1\nno_equals_here\n")
    with pytest.raises(ConfigError, match="line 2"):
        read_key_value(path)


def test_csv_layout(tmp_path):
    path = tmp_path / "t.csv"
    write_csv(path, ["a", "b"], [[1, 2.5], ["x", -3]])
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "a,b"
    assert len(lines) == 3
    assert lines[2].startswith("x,")


def test_sha256_matches_hashlib(tmp_path):
    path = tmp_path / "blob.bin"
    payload = b"\x00\x01abc" * 1000
    path.write_bytes(payload)
    assert sha256_of(path) == hashlib.sha256(payload).hexdigest()
