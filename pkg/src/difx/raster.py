"""Linear-light image buffers and their file formats.

Images are plain numpy arrays, row-major with the origin at the top-left:

* ``ImageF``     -- float array of shape ``(height, width, 3)``
* ``GrayImageF`` -- float array of shape ``(height, width)``
* ``BinaryMask`` -- bool array of shape ``(height, width)``

Renders are produced as float32 so that ``.difx.f32`` files round-trip them
bit for bit. No gamma is applied anywhere.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, FormatError

ImageF = np.ndarray
GrayImageF = np.ndarray
BinaryMask = np.ndarray

RAW_MAGIC = b"DIFX"
RAW_VERSION = 1
_RAW_HEADER = struct.Struct("<4sIII")
PPM_MAXVAL = 65535


def check_rgb(img: np.ndarray) -> np.ndarray:
    if img.ndim != 3 or img.shape[2] != 3 or img.shape[0] < 1 or img.shape[1] < 1:
        raise DimensionMismatch(f"expected an (H, W, 3) image, got shape {img.shape}")
    return img


def check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionMismatch(f"shape mismatch: {a.shape} vs {b.shape}")


# -- 16-bit PPM ------------------------------------------------------------


def quantize16(img: ImageF) -> np.ndarray:
    """Clamp to [0, 1] and quantize round-half-up to uint16."""
    v = np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0)
    return np.floor(v * PPM_MAXVAL + 0.5).astype(np.uint16)


def write_ppm16(img: ImageF, path: str | Path) -> None:
    img = check_rgb(np.asarray(img))
    if not np.all(np.isfinite(img)):
        raise ValueError("cannot export non-finite pixels")
    h, w, _ = img.shape
    samples = quantize16(img).astype(">u2")
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n{PPM_MAXVAL}\n".encode("ascii"))
        f.write(samples.tobytes())


def _read_netpbm_header(data: bytes, magic: bytes, n_fields: int) -> tuple[list[int], int]:
    if data[:2] != magic:
        raise FormatError(f"not a {magic.decode()} file")
    pos = 2
    values: list[int] = []
    while len(values) < n_fields:
        # skip whitespace and comments
        while pos < len(data) and (data[pos : pos + 1].isspace() or data[pos : pos + 1] == b"#"):
            if data[pos : pos + 1] == b"#":
                end = data.find(b"\n", pos)
                pos = len(data) if end < 0 else end + 1
            else:
                pos += 1
        start = pos
        while pos < len(data) and data[pos : pos + 1].isdigit():
            pos += 1
        if start == pos:
            raise FormatError("malformed header")
        values.append(int(data[start:pos]))
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise FormatError("malformed header")
    return values, pos + 1


def read_ppm16(path: str | Path) -> ImageF:
    data = Path(path).read_bytes()
    (w, h, maxval), offset = _read_netpbm_header(data, b"P6", 3)
    if maxval != PPM_MAXVAL:
        raise FormatError(f"unsupported maxval {maxval} (need {PPM_MAXVAL})")
    if w < 1 or h < 1:
        raise FormatError("image dimensions must be positive")
    n = w * h * 3
    payload = data[offset : offset + 2 * n]
    if len(payload) != 2 * n:
        raise FormatError("truncated payload")
    samples = np.frombuffer(payload, dtype=">u2").reshape(h, w, 3)
    return (samples.astype(np.float64) / PPM_MAXVAL).astype(np.float32)


# -- raw float32 -----------------------------------------------------------


def write_rawf32(img: ImageF, path: str | Path) -> None:
    """Write ``DIFX`` header + little-endian float32 planes R, G, B."""
    img = check_rgb(np.asarray(img))
    h, w, _ = img.shape
    planes = np.ascontiguousarray(np.moveaxis(img, 2, 0), dtype="<f4")
    with open(path, "wb") as f:
        f.write(_RAW_HEADER.pack(RAW_MAGIC, RAW_VERSION, w, h))
        f.write(planes.tobytes())


def read_rawf32(path: str | Path) -> ImageF:
    data = Path(path).read_bytes()
    if len(data) < _RAW_HEADER.size:
        raise FormatError("truncated header")
    magic, version, w, h = _RAW_HEADER.unpack_from(data)
    if magic != RAW_MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != RAW_VERSION:
        raise FormatError(f"unsupported version {version}")
    n = w * h * 3 * 4
    payload = data[_RAW_HEADER.size :]
    if len(payload) < n:
        raise FormatError("truncated payload")
    planes = np.frombuffer(payload[:n], dtype="<f4").reshape(3, h, w)
    return np.ascontiguousarray(np.moveaxis(planes, 0, 2), dtype=np.float32)


# -- masks -----------------------------------------------------------------


def write_pbm(mask: BinaryMask, path: str | Path) -> None:
    """Binary PBM (P4); set bits are written as 1 (black)."""
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    with open(path, "wb") as f:
        f.write(f"P4\n{w} {h}\n".encode("ascii"))
        f.write(np.packbits(mask, axis=1).tobytes())


def read_pbm(path: str | Path) -> BinaryMask:
    data = Path(path).read_bytes()
    (w, h), offset = _read_netpbm_header(data, b"P4", 2)
    row_bytes = (w + 7) // 8
    payload = data[offset : offset + row_bytes * h]
    if len(payload) != row_bytes * h:
        raise FormatError("truncated payload")
    packed = np.frombuffer(payload, dtype=np.uint8).reshape(h, row_bytes)
    return np.unpackbits(packed, axis=1)[:, :w].astype(bool)
