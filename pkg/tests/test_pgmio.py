import numpy as np
import pytest

from nlpi import (
    load_binary_message,
    load_image,
    read_pgm,
    read_raw,
    write_pgm,
    write_raw,
)

from oracles import checkerboard, natural_test_image


def test_raw_round_trip_exact(tmp_path, rng):
    u = rng.standard_normal((13, 21)) * 37.5
    path = tmp_path / "img.raw"
    write_raw(path, u)
    assert np.array_equal(read_raw(path), u)


def test_raw_header_layout(tmp_path):
    u = np.arange(6, dtype=np.float64).reshape(2, 3)
    path = tmp_path / "img.raw"
    write_raw(path, u)
    data = path.read_bytes()
    assert data[:4] == b"NLPI"
    assert int.from_bytes(data[4:8], "little") == 3  # width
    assert int.from_bytes(data[8:12], "little") == 2  # height
    assert len(data) == 16 + 8 * 6


def test_raw_bad_magic(tmp_path):
    path = tmp_path / "bad.raw"
    path.write_bytes(b"XXXX" + b"\x00" * 12)
    with pytest.raises(ValueError, match="magic"):
        read_raw(path)


def test_pgm_p5_round_trip_8bit(tmp_path):
    u = checkerboard(8)
    path = tmp_path / "img.pgm"
    write_pgm(path, u)
    back = read_pgm(path)
    assert np.array_equal(back, u)  # 0/1 maps exactly onto 0/255 and back


def test_pgm_p2_round_trip(tmp_path):
    u = natural_test_image(16)
    path = tmp_path / "img.pgm"
    write_pgm(path, u, ascii_format=True)
    back = read_pgm(path)
    lo, hi = u.min(), u.max()
    assert np.max(np.abs(back - (u - lo) / (hi - lo))) < 1.0 / 255


def test_pgm_comments_and_whitespace(tmp_path):
    path = tmp_path / "c.pgm"
    path.write_bytes(b"P2\n# a comment\n 2 2 # trailing\n10\n0 5\n10 10\n")
    u = read_pgm(path)
    assert u == pytest.approx(np.array([[0.0, 0.5], [1.0, 1.0]]))


def test_pgm_constant_image_writes_zeros(tmp_path):
    path = tmp_path / "flat.pgm"
    write_pgm(path, np.full((3, 3), 0.5))
    assert np.array_equal(read_pgm(path), np.zeros((3, 3)))


def test_pgm_16bit_rejected(tmp_path):
    path = tmp_path / "deep.pgm"
    path.write_bytes(b"P5\n1 1\n65535\n\x00\x00")
    with pytest.raises(ValueError, match="16-bit"):
        read_pgm(path)


def test_load_image_sniffs_format(tmp_path, rng):
    u = rng.standard_normal((5, 5))
    raw = tmp_path / "a.img"
    pgm = tmp_path / "b.img"
    write_raw(raw, u)
    write_pgm(pgm, u)
    assert np.array_equal(load_image(raw), u)
    assert load_image(pgm).shape == (5, 5)


def test_load_binary_message_thresholds_mid_range(tmp_path):
    msg = checkerboard(6)
    path = tmp_path / "msg.pgm"
    write_pgm(path, msg)
    assert np.array_equal(load_binary_message(path), msg)
