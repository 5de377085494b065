"""Bit-exact serialization: flow files, noise grids, NPY export, previews.

All binary layouts are little-endian.  Grid files carry the resolution
level and a 64-bit content checksum so corrupted or mislabeled data is
rejected at load instead of silently skewing statistics.
"""

from __future__ import annotations

import hashlib
import struct

import numpy as np

from .errors import DataError, FormatError
from .flow import FlowField
from .grids import NoiseGrid

FLO_MAGIC = 202021.25
GRID_MAGIC = b"NWGR"
GRID_VERSION = 1


def read_flo(path) -> FlowField:
    """Read a Middlebury .flo file (magic, int32 w/h, float32 (dx, dy) pairs)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 12:
        raise FormatError(f"{path}: truncated header ({len(raw)} bytes)")
    (magic,) = struct.unpack("<f", raw[:4])
    if magic != FLO_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {FLO_MAGIC}")
    width, height = struct.unpack("<ii", raw[4:12])
    if width < 1 or height < 1:
        raise FormatError(f"{path}: invalid dimensions {width}x{height}")
    expected = 12 + width * height * 2 * 4
    if len(raw) != expected:
        raise DataError(f"{path}: expected {expected} bytes, found {len(raw)}")
    data = np.frombuffer(raw, dtype="<f4", offset=12).reshape(height, width, 2)
    if not np.all(np.isfinite(data)):
        raise DataError(f"{path}: flow contains NaN or Inf")
    return FlowField(width, height, data.copy())


def write_flo(f: FlowField, path) -> None:
    with open(path, "wb") as fh:
        fh.write(struct.pack("<f", FLO_MAGIC))
        fh.write(struct.pack("<ii", f.width, f.height))
        fh.write(np.ascontiguousarray(f.data, dtype="<f4").tobytes())


def _grid_checksum(header: bytes, payload: bytes) -> int:
    """64-bit content checksum: leading 8 bytes of SHA-256, little-endian."""
    digest = hashlib.sha256(header + payload).digest()
    return int.from_bytes(digest[:8], "little")


def write_grid(g: NoiseGrid, path) -> None:
    """Write the custom .grid container.

    Layout: magic "NWGR", uint32 version, uint32 height/width/channels/level
    (base dimensions), float32 row-major payload, uint64 checksum over
    header+payload.
    """
    header = GRID_MAGIC + struct.pack(
        "<IIIII", GRID_VERSION, g.height, g.width, g.channels, g.level
    )
    payload = np.ascontiguousarray(g.data, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)
        fh.write(struct.pack("<Q", _grid_checksum(header, payload)))


def read_grid(path) -> NoiseGrid:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 24 + 8:
        raise FormatError(f"{path}: truncated grid file")
    if raw[:4] != GRID_MAGIC:
        raise FormatError(f"{path}: bad magic {raw[:4]!r}")
    version, height, width, channels, level = struct.unpack("<IIIII", raw[4:24])
    if version != GRID_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    n = 1 << level
    count = height * n * width * n * channels
    expected = 24 + count * 4 + 8
    if len(raw) != expected:
        raise DataError(f"{path}: expected {expected} bytes, found {len(raw)}")
    (stored,) = struct.unpack("<Q", raw[-8:])
    if stored != _grid_checksum(raw[:24], raw[24:-8]):
        raise DataError(f"{path}: checksum mismatch")
    data = np.frombuffer(raw, dtype="<f4", count=count, offset=24)
    data = data.reshape(height * n, width * n, channels).copy()
    if not np.all(np.isfinite(data)):
        raise DataError(f"{path}: grid contains NaN or Inf")
    return NoiseGrid(width, height, channels, level, data)


def write_npy(g: NoiseGrid, path) -> None:
    """Export the payload as NPY (format version 1.0, float32, C-order)."""
    arr = np.ascontiguousarray(g.data, dtype=np.float32)
    with open(path, "wb") as fh:
        np.lib.format.write_array(fh, arr, version=(1, 0))


def write_png_preview(g: NoiseGrid, path) -> None:
    """Cosmetic preview: value v maps to gray clamp(128 + 48*v, 0, 255).

    One channel renders grayscale, three render RGB; other channel counts
    render their first channel.  Never parsed back.
    """
    from PIL import Image

    data = np.asarray(g.data, dtype=np.float64)
    img = np.clip(np.rint(128.0 + 48.0 * data), 0, 255).astype(np.uint8)
    if g.channels == 3:
        Image.fromarray(img, mode="RGB").save(path)
    else:
        Image.fromarray(img[..., 0], mode="L").save(path)


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
