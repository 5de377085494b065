"""Gaussian noise grids and variance-preserving resolution changes.

A grid at level k stores (height * 2**k) x (width * 2**k) values per channel,
each a standard-normal sample at its own level (unit-variance convention).
Aggregating a 2**j x 2**j block of level-k values with a 1/2**j scale yields
a valid level-(k-j) grid, and conditional upsampling inverts that exactly:
block sums are pinned to the coarse value while fresh detail fills in the
remaining degrees of freedom.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng
from .errors import InvalidArgumentError


@dataclass(frozen=True)
class NoiseGrid:
    """A discrete Gaussian noise sample at a stated resolution level.

    width, height are base (level-0) dimensions; data has shape
    (height * 2**level, width * 2**level, channels), float32, read-only.
    Every stored value is standard normal at its own level.
    """

    width: int
    height: int
    channels: int
    level: int
    data: np.ndarray

    def __post_init__(self):
        if self.width < 1 or self.height < 1 or self.channels < 1:
            raise InvalidArgumentError("grid dimensions must be >= 1")
        if self.level < 0:
            raise InvalidArgumentError("level must be >= 0")
        n = 1 << self.level
        expected = (self.height * n, self.width * n, self.channels)
        if self.data.shape != expected:
            raise InvalidArgumentError(
                f"data shape {self.data.shape} does not match {expected}"
            )
        if self.data.dtype != np.float32:
            object.__setattr__(self, "data", self.data.astype(np.float32))
        self.data.setflags(write=False)

    @property
    def shape(self):
        return self.data.shape


def sample_noise(width: int, height: int, channels: int, key: rng.RngKey) -> NoiseGrid:
    """Draw a fresh level-0 grid of i.i.d. standard-normal values.

    Bit-reproducible for a given key, independent of platform and threads.
    """
    if width < 1 or height < 1 or channels < 1:
        raise InvalidArgumentError("width, height and channels must be >= 1")
    data = rng.normal_array(key.child(rng.BASE_NOISE), (height, width, channels))
    return NoiseGrid(width, height, channels, 0, data.astype(np.float32))


def _check_subdivision(n: int) -> int:
    """Return log2(n) for n a power of two >= 2, else raise."""
    if n < 2 or (n & (n - 1)) != 0:
        raise InvalidArgumentError(f"subdivision factor must be a power of two >= 2, got {n}")
    return n.bit_length() - 1


def upsample_conditional(g: NoiseGrid, n: int, key: rng.RngKey) -> NoiseGrid:
    """Subdivide each pixel into an n x n block, conditioned on its value.

    Each base pixel of value x becomes x/n + (Z - <Z>) with Z i.i.d.
    standard normal over the block and <Z> the block mean, so the block
    sums back to n*x exactly while every sub-pixel stays standard normal
    at the finer level.
    """
    j = _check_subdivision(n)
    z = _detail_region(g, n, key, 0, 0, g.width * (1 << g.level), g.height * (1 << g.level))
    base = np.repeat(np.repeat(g.data, n, axis=0), n, axis=1)
    out = (base.astype(np.float64) / n + z).astype(np.float32)
    return NoiseGrid(g.width, g.height, g.channels, g.level + j, out)


def _detail_region(g: NoiseGrid, n: int, key: rng.RngKey, x0: int, y0: int, x1: int, y1: int) -> np.ndarray:
    """Mean-removed detail (Z - <Z>) for base pixels [y0:y1, x0:x1).

    Z element indices are laid out over the full upsampled grid, so any
    region reproduces the same values as a full-grid generation.
    """
    k = key.child(rng.UPSAMPLE)
    gh, gw = g.data.shape[0], g.data.shape[1]
    c = g.channels
    wk = gw * n
    hr, wr = (y1 - y0) * n, (x1 - x0) * n
    if x0 == 0 and x1 == gw:
        # Full-width regions are contiguous in the element-index layout.
        start = y0 * n * wk * c
        z = rng.normal_slice(k, start, hr * wr * c).reshape(hr, wr, c)
    else:
        z = np.empty((hr, wr, c), dtype=np.float64)
        row_len = wr * c
        for r in range(hr):
            start = ((y0 * n + r) * wk + x0 * n) * c
            z[r] = rng.normal_slice(k, start, row_len).reshape(wr, c)
    means = z.reshape(y1 - y0, n, x1 - x0, n, c).mean(axis=(1, 3))
    z -= np.repeat(np.repeat(means, n, axis=0), n, axis=1)
    return z


def downsample(g: NoiseGrid, n: int) -> NoiseGrid:
    """Aggregate n x n blocks as (block sum) / n, dropping log2(n) levels."""
    if n == 1:
        return g
    j = _check_subdivision(n)
    if j > g.level:
        raise InvalidArgumentError(
            f"cannot downsample by {n} from level {g.level} (would go below level 0)"
        )
    gh, gw, c = g.data.shape
    if gh % n or gw % n:
        raise InvalidArgumentError("grid dimensions must be divisible by the block size")
    blocks = g.data.astype(np.float64).reshape(gh // n, n, gw // n, n, c)
    out = (blocks.sum(axis=(1, 3)) / n).astype(np.float32)
    return NoiseGrid(g.width, g.height, g.channels, g.level - j, out)
