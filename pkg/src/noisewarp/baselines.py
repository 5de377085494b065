"""Comparison noise schemes: interpolation warps and non-warping priors.

The interpolation warps resample the source grid pointwise at the
backward-displaced pixel centers; except for root-bilinear they do not
preserve per-pixel variance.  The priors replicate common
correlated-sampling recipes (shared-component mixing, autoregressive
mixing, residual-triggered resampling) without any warping.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng
from .errors import InvalidArgumentError
from .flow import FlowField, pixel_centers
from .grids import NoiseGrid, sample_noise
from ._kernels import catmull_rom_sample

INTERP_SCHEMES = ("bilinear", "bicubic", "nearest", "root_bilinear")
PRIOR_KINDS = ("random", "fixed", "pyoco_mixed", "pyoco_progressive", "residual")


@dataclass(frozen=True)
class PriorSpec:
    """Recipe for a non-warping noise prior.

    alpha is the mixing strength for the pyoco kinds; threshold is the
    max-channel RGB change that triggers resampling for the residual kind.
    """

    kind: str
    key: rng.RngKey
    alpha: float = 1.0
    threshold: float = 0.1

    def __post_init__(self):
        if self.kind not in PRIOR_KINDS:
            raise InvalidArgumentError(f"unknown prior kind {self.kind!r}")
        if not (np.isfinite(self.alpha) and self.alpha >= 0):
            raise InvalidArgumentError("alpha must be finite and >= 0")
        if not (np.isfinite(self.threshold) and self.threshold >= 0):
            raise InvalidArgumentError("threshold must be finite and >= 0")


def _source_positions(g: NoiseGrid, f: FlowField):
    if (g.width, g.height) != (f.width, f.height) or g.level != 0:
        raise InvalidArgumentError("grid/flow dimensions do not match (level-0 only)")
    pos = pixel_centers(g.width, g.height) + f.data
    # Grid coordinates of the sampling position (samples at pixel centers).
    gx = np.clip(pos[..., 0], 0.0, g.width) - 0.5
    gy = np.clip(pos[..., 1], 0.0, g.height) - 0.5
    return pos, gx, gy


def warp_interp(g: NoiseGrid, f: FlowField, scheme: str) -> NoiseGrid:
    """Backward-sample g at p + f(p) with the named kernel.

    root_bilinear applies the square roots of the bilinear weights; since
    the bilinear weights sum to 1, the squared root-weights also sum to 1
    and per-pixel variance is preserved (inter-pixel independence is not).
    Out-of-domain source positions clamp to the edge.
    """
    if scheme not in INTERP_SCHEMES:
        raise InvalidArgumentError(f"unknown interpolation scheme {scheme!r}")
    pos, gx, gy = _source_positions(g, f)
    h, w, c = g.data.shape
    if scheme == "bicubic":
        pts = np.ascontiguousarray(pos.reshape(-1, 2))
        out = np.empty((pts.shape[0], c), dtype=np.float64)
        catmull_rom_sample(g.data, pts, out)
        data = out.reshape(h, w, c)
    elif scheme == "nearest":
        ix = np.clip(np.floor(gx + 0.5).astype(np.int64), 0, w - 1)
        iy = np.clip(np.floor(gy + 0.5).astype(np.int64), 0, h - 1)
        data = g.data[iy, ix]
    else:
        ix0 = np.clip(np.floor(gx).astype(np.int64), 0, w - 1)
        iy0 = np.clip(np.floor(gy).astype(np.int64), 0, h - 1)
        ix1 = np.minimum(ix0 + 1, w - 1)
        iy1 = np.minimum(iy0 + 1, h - 1)
        tx = np.clip(gx - ix0, 0.0, 1.0)[..., None]
        ty = np.clip(gy - iy0, 0.0, 1.0)[..., None]
        w00 = (1 - tx) * (1 - ty)
        w01 = tx * (1 - ty)
        w10 = (1 - tx) * ty
        w11 = tx * ty
        if scheme == "root_bilinear":
            w00, w01, w10, w11 = map(np.sqrt, (w00, w01, w10, w11))
        data = (
            w00 * g.data[iy0, ix0]
            + w01 * g.data[iy0, ix1]
            + w10 * g.data[iy1, ix0]
            + w11 * g.data[iy1, ix1]
        )
    return NoiseGrid(g.width, g.height, c, 0, data.astype(np.float32))


def generate_prior(
    spec: PriorSpec, n_frames: int, shape, frames=None
):
    """Generate a sequence of level-0 noise grids under a prior recipe.

    shape is (width, height, channels).  The residual kind requires the
    image sequence (n_frames entries) whose per-pixel changes gate the
    resampling; frames are max-reduced over channels against the threshold.
    """
    if n_frames < 1:
        raise InvalidArgumentError("n_frames must be >= 1")
    width, height, channels = shape
    key = spec.key

    if spec.kind == "fixed":
        g = sample_noise(width, height, channels, key.child(rng.PRIOR_SHARED))
        return [g] * n_frames

    if spec.kind == "random":
        return [
            sample_noise(width, height, channels, key.child(rng.PRIOR_FRAME, i))
            for i in range(n_frames)
        ]

    if spec.kind == "pyoco_mixed":
        a2 = spec.alpha**2
        w_shared = np.sqrt(a2 / (1 + a2))
        w_fresh = np.sqrt(1 / (1 + a2))
        shared = sample_noise(width, height, channels, key.child(rng.PRIOR_SHARED))
        out = []
        for i in range(n_frames):
            fresh = sample_noise(width, height, channels, key.child(rng.PRIOR_FRAME, i))
            data = w_shared * shared.data + w_fresh * fresh.data
            out.append(NoiseGrid(width, height, channels, 0, data.astype(np.float32)))
        return out

    if spec.kind == "pyoco_progressive":
        a2 = spec.alpha**2
        w_prev = np.sqrt(a2 / (1 + a2))
        w_fresh = np.sqrt(1 / (1 + a2))
        out = [sample_noise(width, height, channels, key.child(rng.PRIOR_FRAME, 0))]
        for i in range(1, n_frames):
            fresh = sample_noise(width, height, channels, key.child(rng.PRIOR_FRAME, i))
            data = w_prev * out[-1].data + w_fresh * fresh.data
            out.append(NoiseGrid(width, height, channels, 0, data.astype(np.float32)))
        return out

    # residual: keep noise where the image barely changes, resample elsewhere.
    if frames is None:
        raise InvalidArgumentError("residual prior requires the image sequence")
    frames = np.asarray(frames, dtype=np.float64)
    if frames.shape[0] != n_frames:
        raise InvalidArgumentError(
            f"expected {n_frames} frames, got {frames.shape[0]}"
        )
    out = [sample_noise(width, height, channels, key.child(rng.PRIOR_FRAME, 0))]
    for i in range(1, n_frames):
        diff = np.abs(frames[i] - frames[i - 1])
        if diff.ndim == 3:
            diff = diff.max(axis=-1)
        changed = diff > spec.threshold
        fresh = sample_noise(width, height, channels, key.child(rng.PRIOR_FRAME, i))
        data = np.where(changed[..., None], fresh.data, out[-1].data)
        out.append(NoiseGrid(width, height, channels, 0, data.astype(np.float32)))
    return out
