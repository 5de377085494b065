"""Counter-based, element-addressable Gaussian random number generation.

Every random value in the library is identified by a (seed, stream, element
index) triple.  Values are produced by the Philox 4x64 counter-based
generator: element index ``i`` is the ``i``-th 64-bit word of the keyed
Philox stream, mapped to a uniform in (0, 1) and through the inverse normal
CDF.  Any slice of any stream can therefore be regenerated on its own,
independent of draw order, batch partitioning, or thread count, which is
what makes lazy region generation and deterministic parallelism possible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.random import Philox
from scipy.special import ndtri

from . import _kernels

_MASK64 = (1 << 64) - 1

# Stream purposes (domain separation labels for derived streams).
BASE_NOISE = 1
UPSAMPLE = 2
UPSAMPLE_PREV = 3
FILL = 4
TRIALS = 5
PRIOR_SHARED = 6
PRIOR_FRAME = 7


def _splitmix64(x: int) -> int:
    """One splitmix64 round; a bijective 64-bit mixer."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


@dataclass(frozen=True)
class RngKey:
    """Root of a deterministic random stream.

    (seed, stream) keys the Philox generator; ``stream`` separates
    independent uses of the same seed (per frame, per purpose, per trial).
    """

    seed: int
    stream: int = 0

    def child(self, purpose: int, index: int = 0) -> "RngKey":
        """Derive a domain-separated sub-stream (pure, stateless)."""
        h = self.stream & _MASK64
        h = _splitmix64(h ^ (purpose & _MASK64))
        h = _splitmix64(h ^ (index & _MASK64))
        return RngKey(self.seed, h)


def raw_words(key: RngKey, start: int, count: int) -> np.ndarray:
    """uint64 Philox words at absolute stream positions [start, start+count).

    Philox emits 4 words per counter block, so the block holding word ``i``
    is ``i // 4``; starting the counter there lets us slice anywhere.
    """
    if count < 0 or start < 0:
        raise ValueError("start and count must be non-negative")
    if count == 0:
        return np.empty(0, dtype=np.uint64)
    block = start >> 2
    pad = start - (block << 2)
    bg = Philox(
        key=np.array([key.seed & _MASK64, key.stream & _MASK64], dtype=np.uint64),
        counter=[block, 0, 0, 0],
    )
    words = bg.random_raw(pad + count)
    return words[pad:]


def normal_slice(key: RngKey, start: int, count: int) -> np.ndarray:
    """Standard-normal float64 draws at stream positions [start, start+count).

    Each word maps to the centered uniform ((w >> 12) + 0.5) * 2**-52,
    strictly inside (0, 1), then through the inverse normal CDF.  Fixed
    project-wide so stored grids are stable.
    """
    u = _kernels.words_to_unit(raw_words(key, start, count))
    return ndtri(u, out=u)


def normal_array(key: RngKey, shape, start: int = 0) -> np.ndarray:
    """Standard-normal array filled from stream positions start onward."""
    n = int(np.prod(shape)) if len(shape) else 1
    return normal_slice(key, start, n).reshape(shape)
