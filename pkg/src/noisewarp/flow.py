"""Backward deformation fields: sampling, composition, synthetic generators.

A flow field stores one (dx, dy) vector per pixel center, in pixel units,
with the backward convention: the displacement stored at target pixel
center p maps p to its source-frame position p + (dx, dy).  Accumulated
maps share the layout and map frame-n coordinates straight to frame-0
coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import InvalidArgumentError


@dataclass(frozen=True)
class FlowField:
    """Dense backward displacement field, data shape (height, width, 2)."""

    width: int
    height: int
    data: np.ndarray

    def __post_init__(self):
        if self.data.shape != (self.height, self.width, 2):
            raise InvalidArgumentError(
                f"flow shape {self.data.shape} != {(self.height, self.width, 2)}"
            )
        if not np.all(np.isfinite(self.data)):
            raise InvalidArgumentError("flow contains NaN or Inf components")
        if self.data.dtype != np.float32:
            object.__setattr__(self, "data", self.data.astype(np.float32))
        self.data.setflags(write=False)


# Same layout, different semantic: maps frame-n coordinates to frame 0.
AccumulatedMap = FlowField


def pixel_centers(width: int, height: int) -> np.ndarray:
    """(height, width, 2) array of pixel-center coordinates (x+0.5, y+0.5)."""
    xs = np.arange(width, dtype=np.float64) + 0.5
    ys = np.arange(height, dtype=np.float64) + 0.5
    gx, gy = np.meshgrid(xs, ys)
    return np.stack([gx, gy], axis=-1)


def sample_flow(f: FlowField, points: np.ndarray) -> np.ndarray:
    """Catmull-Rom bicubic interpolation of the flow at continuous points.

    points is (..., 2) as (x, y) in [0, width] x [0, height]; out-of-domain
    points are clamped (warped contour vertices legitimately exit the
    domain).  Stored vectors are reproduced exactly at pixel centers.
    """
    pts = np.asarray(points, dtype=np.float64)
    single = pts.ndim == 1
    flat = np.ascontiguousarray(pts.reshape(-1, 2))
    out = np.empty((flat.shape[0], 2), dtype=np.float64)
    _kernels.catmull_rom_sample(f.data, flat, out)
    if single:
        return out[0]
    return out.reshape(pts.shape)


def compose(step: FlowField, acc: FlowField) -> FlowField:
    """Chain one backward step with an accumulated map.

    For each pixel center p: out(p) = step(p) + acc(p + step(p)), with the
    accumulated map sampled bicubically at the intermediate point.  If step
    goes from frame n to n-1 and acc from n-1 to 0, the result goes from
    n straight to 0.
    """
    if (step.width, step.height) != (acc.width, acc.height):
        raise InvalidArgumentError("flow dimensions do not match")
    centers = pixel_centers(step.width, step.height)
    mid = centers + step.data
    tail = sample_flow(acc, mid.reshape(-1, 2)).reshape(mid.shape)
    return FlowField(step.width, step.height, (step.data + tail).astype(np.float32))


def make_synthetic_flow(kind: str, params: dict, width: int, height: int) -> FlowField:
    """Analytic backward flow on the pixel grid.

    kinds:
      translate: dx, dy
      rotate:    angle (radians, forward rotation), cx, cy (default center)
      swirl:     strength (radians at the center), radius (decay length),
                 cx, cy
      zoom:      factor (forward magnification), cx, cy
    """
    params = dict(params)
    for v in params.values():
        if not np.isfinite(v):
            raise InvalidArgumentError(f"non-finite flow parameter in {params}")
    centers = pixel_centers(width, height)
    cx = params.pop("cx", width / 2.0)
    cy = params.pop("cy", height / 2.0)
    rel = centers - np.array([cx, cy])

    if kind == "translate":
        dx, dy = params.pop("dx", 0.0), params.pop("dy", 0.0)
        data = np.empty((height, width, 2), dtype=np.float64)
        data[..., 0] = dx
        data[..., 1] = dy
    elif kind == "rotate":
        angle = params.pop("angle")
        data = _rotate_about(rel, -angle) - rel
    elif kind == "swirl":
        strength = params.pop("strength")
        radius = params.pop("radius", min(width, height) / 4.0)
        r = np.hypot(rel[..., 0], rel[..., 1])
        angle = strength * np.exp(-r / radius)
        data = _rotate_about(rel, -angle) - rel
    elif kind == "zoom":
        factor = params.pop("factor")
        if factor == 0:
            raise InvalidArgumentError("zoom factor must be nonzero")
        data = rel / factor - rel
    else:
        raise InvalidArgumentError(f"unknown synthetic flow kind: {kind!r}")
    if params:
        raise InvalidArgumentError(f"unused parameters for {kind}: {sorted(params)}")
    return FlowField(width, height, data.astype(np.float32))


def _rotate_about(rel: np.ndarray, angle) -> np.ndarray:
    """Rotate offset vectors by angle (scalar or per-pixel array)."""
    ca, sa = np.cos(angle), np.sin(angle)
    out = np.empty_like(rel)
    out[..., 0] = ca * rel[..., 0] - sa * rel[..., 1]
    out[..., 1] = sa * rel[..., 0] + ca * rel[..., 1]
    return out
