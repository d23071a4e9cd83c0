"""Grayscale image files: PGM (binary P5 and ASCII P2) plus a lossless raw format.

PGM is the 8-bit interchange/visualization path: writes linearly map the
image's [min, max] onto 0..maxval, reads scale 0..maxval back to [0, 1].
Exact round-trips go through the raw format: a 16-byte header (magic "NLPI",
little-endian u32 width, height, reserved) followed by row-major
little-endian float64 pixels.
"""

from __future__ import annotations

import struct

import numpy as np

from .image import as_image

RAW_MAGIC = b"NLPI"


def write_pgm(path, u, maxval: int = 255, ascii_format: bool = False) -> None:
    """Write an image as P5 (default) or P2, mapping [min, max] to [0, maxval]."""
    u = as_image(u)
    if not (0 < maxval <= 255):
        raise ValueError(f"maxval must be in 1..255, got {maxval}")
    lo = float(u.min())
    hi = float(u.max())
    if hi > lo:
        scaled = (u - lo) * (maxval / (hi - lo))
    else:
        scaled = np.zeros_like(u)
    pixels = np.clip(np.rint(scaled), 0, maxval).astype(np.uint8)
    header = f"{'P2' if ascii_format else 'P5'}\n{u.shape[1]} {u.shape[0]}\n{maxval}\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        if ascii_format:
            lines = [" ".join(str(v) for v in row) for row in pixels]
            fh.write(("\n".join(lines) + "\n").encode("ascii"))
        else:
            fh.write(pixels.tobytes())


def _read_tokens(data: bytes, count: int, start: int) -> tuple[list[int], int]:
    """Read whitespace/comment-separated integer tokens from a PNM header."""
    tokens: list[int] = []
    i = start
    while len(tokens) < count:
        if i >= len(data):
            raise ValueError("truncated PGM header")
        c = data[i : i + 1]
        if c == b"#":
            while i < len(data) and data[i : i + 1] != b"\n":
                i += 1
        elif c.isspace():
            i += 1
        else:
            j = i
            while j < len(data) and not data[j : j + 1].isspace() and data[j : j + 1] != b"#":
                j += 1
            tokens.append(int(data[i:j]))
            i = j
    return tokens, i


def read_pgm(path) -> np.ndarray:
    """Read P5 (8-bit) or P2, returning floats scaled to [0, 1] by maxval."""
    with open(path, "rb") as fh:
        data = fh.read()
    magic = data[:2]
    if magic not in (b"P5", b"P2"):
        raise ValueError(f"{path}: not a P5/P2 PGM file (magic {magic!r})")
    (width, height, maxval), i = _read_tokens(data, 3, 2)
    if width < 1 or height < 1 or maxval < 1:
        raise ValueError(f"{path}: bad PGM header {width}x{height}, maxval {maxval}")
    if magic == b"P5":
        if maxval > 255:
            raise ValueError(f"{path}: 16-bit P5 is not supported (maxval {maxval})")
        i += 1  # exactly one whitespace byte after maxval
        raster = data[i : i + width * height]
        if len(raster) != width * height:
            raise ValueError(f"{path}: truncated P5 raster")
        values = np.frombuffer(raster, dtype=np.uint8).astype(np.float64)
    else:
        tokens, _ = _read_tokens(data, width * height, i)
        values = np.array(tokens, dtype=np.float64)
        if values.size and (values.min() < 0 or values.max() > maxval):
            raise ValueError(f"{path}: P2 sample outside 0..{maxval}")
    return (values / maxval).reshape(height, width)


def write_raw(path, u) -> None:
    """Write the lossless float64 format (header NLPI + width + height + reserved)."""
    u = as_image(u)
    with open(path, "wb") as fh:
        fh.write(RAW_MAGIC)
        fh.write(struct.pack("<III", u.shape[1], u.shape[0], 0))
        fh.write(np.ascontiguousarray(u, dtype="<f8").tobytes())


def read_raw(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != RAW_MAGIC:
        raise ValueError(f"{path}: bad magic {data[:4]!r}, expected {RAW_MAGIC!r}")
    if len(data) < 16:
        raise ValueError(f"{path}: truncated header")
    width, height, _reserved = struct.unpack("<III", data[4:16])
    expected = 16 + 8 * width * height
    if len(data) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(data)}")
    pixels = np.frombuffer(data[16:], dtype="<f8").reshape(height, width)
    return as_image(pixels)


def load_image(path) -> np.ndarray:
    """Load PGM or raw, sniffing the magic bytes."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
    if magic[:4] == RAW_MAGIC:
        return read_raw(path)
    if magic[:2] in (b"P5", b"P2"):
        return read_pgm(path)
    raise ValueError(f"{path}: unrecognized image format (magic {magic!r})")


def load_binary_message(path) -> np.ndarray:
    """Load a PGM and threshold at mid-range to a {0, 1} message image."""
    u = load_image(path)
    mid = 0.5 * (float(u.min()) + float(u.max()))
    return (u > mid).astype(np.float64)
