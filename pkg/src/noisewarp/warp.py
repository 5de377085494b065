"""Discrete distribution-preserving noise transport.

Each target pixel's unit-square contour is subdivided, traced backward
through the deformation field, fan-triangulated, and rasterized onto the
level-k sub-pixel grid of the source noise.  The owned sub-pixels are summed
and scaled by 1/sqrt(count), which keeps every defined pixel standard normal
while the disjoint ownership keeps distinct pixels independent.  Pixels
whose contour covers no sub-pixel (stretching, or overwritten by a later
polygon under folding flows) go through a two-stage fill: re-warp from the
previous frame with the single-step flow, then fall back to fresh draws.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels, rng
from .errors import InvalidArgumentError
from .flow import FlowField, compose, sample_flow
from .grids import NoiseGrid, _detail_region, upsample_conditional

FILL_ANCHOR = 0
FILL_PREVIOUS = 1
FILL_RANDOM = 2


@dataclass(frozen=True)
class WarpConfig:
    """Algorithm knobs for noise transport."""

    key: rng.RngKey
    k: int = 3
    s: int = 4
    fill_policy: str = "two_stage_then_random"

    def __post_init__(self):
        if self.k < 0:
            raise InvalidArgumentError("upsample level k must be >= 0")
        if self.s < 1:
            raise InvalidArgumentError("contour subdivision s must be >= 1")
        if self.fill_policy != "two_stage_then_random":
            raise InvalidArgumentError(f"unknown fill policy {self.fill_policy!r}")


@dataclass(frozen=True)
class PixelPolygon:
    """Subdivided contour of one pixel, plus its fan triangulation.

    vertices holds the 4s boundary points in traversal order; centroid is
    the interior fan apex.  Triangle rows index into the boundary list, with
    index 4s standing for the centroid.
    """

    owner: tuple
    vertices: np.ndarray
    centroid: np.ndarray
    triangles: np.ndarray


@dataclass(frozen=True)
class CoverageBuffer:
    """Per-sub-pixel owner assignment at level k.

    owner[sy, sx] is the row-major index of the owning pixel, or -1.  Each
    sub-pixel has at most one owner by construction, which is what makes
    warped pixels independent.
    """

    width: int
    height: int
    level: int
    owner: np.ndarray


@dataclass(frozen=True)
class WarpResult:
    """Warped level-0 noise plus fill provenance.

    undefined_mask marks pixels whose polygon covered zero sub-pixels before
    filling; fill_source is FILL_ANCHOR / FILL_PREVIOUS / FILL_RANDOM per
    pixel (undefined_mask is True exactly where fill_source != FILL_ANCHOR).
    """

    noise: NoiseGrid
    undefined_mask: np.ndarray
    fill_source: np.ndarray


@lru_cache(maxsize=16)
def _contour_template(s: int):
    """Boundary vertices of the unit pixel [0,1]^2, s segments per edge.

    All coordinates are built as m/s with integer m so that neighboring
    pixels produce bitwise-identical shared-edge vertices.
    """
    mx = np.empty(4 * s, dtype=np.int64)
    my = np.empty(4 * s, dtype=np.int64)
    j = np.arange(s)
    mx[0:s], my[0:s] = j, 0                  # top: (j/s, 0)
    mx[s:2 * s], my[s:2 * s] = s, j          # right: (1, j/s)
    mx[2 * s:3 * s], my[2 * s:3 * s] = s - j, s  # bottom: ((s-j)/s, 1)
    mx[3 * s:4 * s], my[3 * s:4 * s] = 0, s - j  # left: (0, (s-j)/s)
    t = np.stack([mx / s, my / s], axis=-1)
    t.setflags(write=False)
    return t


def triangulate_pixel(p, s: int) -> PixelPolygon:
    """Subdivided, fan-triangulated contour of pixel p = (px, py), unwarped.

    4s boundary vertices plus the centroid apex; 4s triangles
    (centroid, v_t, v_{t+1}) covering the unit square exactly.
    """
    if s < 1:
        raise InvalidArgumentError("s must be >= 1")
    px, py = int(p[0]), int(p[1])
    verts = _contour_template(s) + np.array([px, py], dtype=np.float64)
    centroid = np.array([px + 0.5, py + 0.5])
    n = 4 * s
    tris = np.stack(
        [np.full(n, n), np.arange(n), (np.arange(n) + 1) % n], axis=-1
    ).astype(np.int32)
    return PixelPolygon((px, py), verts, centroid, tris)


def warp_polygon(poly: PixelPolygon, f: FlowField) -> PixelPolygon:
    """Displace every vertex by the bicubically sampled flow; topology kept."""
    verts = poly.vertices + sample_flow(f, poly.vertices)
    centroid = poly.centroid + sample_flow(f, poly.centroid)
    return PixelPolygon(poly.owner, verts, centroid, poly.triangles)


def rasterize_all(polys, k: int, width: int, height: int) -> CoverageBuffer:
    """Rasterize polygons (in deterministic pixel order) onto the level-k grid.

    A sub-pixel belongs to the triangle containing its center under the
    top-left tie rule; when several polygons cover a sub-pixel the last one
    in iteration order wins.
    """
    if k < 0:
        raise InvalidArgumentError("k must be >= 0")
    bverts = np.stack([p.vertices for p in polys]).astype(np.float64)
    cents = np.stack([p.centroid for p in polys]).astype(np.float64)
    ids = np.array([p.owner[1] * width + p.owner[0] for p in polys], dtype=np.int32)
    scale = 1 << k
    owner = np.full((height * scale, width * scale), -1, dtype=np.int32)
    _kernels.rasterize_fan(bverts, cents, ids, float(scale), 0, 0, owner)
    return CoverageBuffer(width, height, k, owner)


def aggregate(cov: CoverageBuffer, w_k: NoiseGrid) -> WarpResult:
    """Sum owned sub-pixels per pixel and scale by 1/sqrt(count).

    Pixels owning zero sub-pixels are flagged undefined and carry
    placeholder zeros until a fill stage assigns them a value.
    """
    if cov.level != w_k.level:
        raise InvalidArgumentError(
            f"coverage level {cov.level} != noise level {w_k.level}"
        )
    if (cov.width, cov.height) != (w_k.width, w_k.height):
        raise InvalidArgumentError("coverage and noise dimensions do not match")
    values, counts = _aggregate_arrays(
        cov.owner, w_k.data, cov.width, cov.height
    )
    undefined = (counts == 0).reshape(cov.height, cov.width)
    fill = np.where(undefined, FILL_RANDOM, FILL_ANCHOR).astype(np.uint8)
    noise = NoiseGrid(
        cov.width, cov.height, w_k.channels, 0,
        values.reshape(cov.height, cov.width, w_k.channels).astype(np.float32),
    )
    return WarpResult(noise, undefined, fill)


def _aggregate_arrays(owner, wk_data, width, height):
    """Per-owner sums / sqrt(counts) over an owner grid (flat output)."""
    npix = width * height
    c = wk_data.shape[2]
    flat = owner.ravel()
    valid = flat >= 0
    idx = flat[valid]
    counts = np.bincount(idx, minlength=npix)
    sums = np.empty((npix, c), dtype=np.float64)
    vals = wk_data.reshape(-1, c)[valid]
    for ch in range(c):
        sums[:, ch] = np.bincount(idx, weights=vals[:, ch], minlength=npix)
    scale = np.zeros(npix)
    np.divide(1.0, np.sqrt(counts), out=scale, where=counts > 0)
    return sums * scale[:, None], counts


def _grid_vertices(width: int, height: int, s: int):
    """Packed contour vertices and centroids for every pixel, row-major."""
    template = _contour_template(s)
    xs, ys = np.meshgrid(np.arange(width), np.arange(height))
    corners = np.stack([xs, ys], axis=-1).reshape(-1, 1, 2).astype(np.float64)
    bverts = corners + template
    cents = corners[:, 0, :] + 0.5
    return bverts, cents


def _warp_points(f: FlowField, pts: np.ndarray) -> np.ndarray:
    flat = np.ascontiguousarray(pts.reshape(-1, 2))
    disp = np.empty_like(flat)
    _kernels.catmull_rom_sample(f.data, flat, disp)
    return (flat + disp).reshape(pts.shape)


def warp_noise(
    anchor: NoiseGrid,
    acc: FlowField,
    cfg: WarpConfig,
    prev: NoiseGrid | None = None,
    step: FlowField | None = None,
    frame: int = 1,
    anchor_level_k: NoiseGrid | None = None,
) -> WarpResult:
    """Warp a level-0 grid by an accumulated backward map.

    The anchor grid is conditionally upsampled to level cfg.k
    (deterministically from cfg.key; pass anchor_level_k to reuse one
    upsampling across a sequence), warped through
    triangulate/warp/rasterize/aggregate, and undefined pixels are filled in
    two stages: re-warped from prev with the single-step flow (prev is
    upsampled on the fly with a frame-specific stream), then fresh draws.
    """
    if (anchor.width, anchor.height) != (acc.width, acc.height):
        raise InvalidArgumentError("anchor and flow dimensions do not match")
    if prev is not None and (prev.width, prev.height) != (anchor.width, anchor.height):
        raise InvalidArgumentError("prev and anchor dimensions do not match")
    w, h, c = anchor.width, anchor.height, anchor.channels
    n = 1 << cfg.k
    if anchor_level_k is None:
        anchor_level_k = (
            anchor if cfg.k == 0 else upsample_conditional(anchor, n, cfg.key)
        )
    elif anchor_level_k.level != cfg.k:
        raise InvalidArgumentError("anchor_level_k level does not match cfg.k")

    bverts, cents = _grid_vertices(w, h, cfg.s)
    owner = np.full((h * n, w * n), -1, dtype=np.int32)
    _kernels.rasterize_fan(
        _warp_points(acc, bverts),
        _warp_points(acc, cents),
        np.arange(w * h, dtype=np.int32),
        float(n),
        0,
        0,
        owner,
    )
    values, counts = _aggregate_arrays(owner, anchor_level_k.data, w, h)
    undefined = counts == 0
    fill_source = np.full(w * h, FILL_ANCHOR, dtype=np.uint8)

    unresolved = undefined.copy()
    if unresolved.any() and prev is not None and step is not None:
        sel = np.flatnonzero(unresolved).astype(np.int32)
        sb = _warp_points(step, bverts[sel])
        sc = _warp_points(step, cents[sel])
        filled = _fill_from_previous(sel, sb, sc, prev, cfg, frame, values)
        fill_source[sel[filled]] = FILL_PREVIOUS
        unresolved[sel[filled]] = False
    if unresolved.any():
        fresh = rng.normal_array(cfg.key.child(rng.FILL, frame), (h * w, c))
        values[unresolved] = fresh[unresolved]
        fill_source[unresolved] = FILL_RANDOM

    noise = NoiseGrid(w, h, c, 0, values.reshape(h, w, c).astype(np.float32))
    return WarpResult(
        noise,
        undefined.reshape(h, w),
        fill_source.reshape(h, w),
    )


def _fill_from_previous(sel, bverts, cents, prev, cfg, frame, values):
    """Stage-2 fill: rasterize selected polygons over the previous frame.

    Only the bounding rectangle of the warped polygons is upsampled; the
    element-addressable streams make the regional values identical to a
    full-grid upsampling.  Returns a boolean mask over sel of pixels that
    received a value.
    """
    w, h, c = prev.width, prev.height, prev.channels
    n = 1 << cfg.k
    xmin = min(bverts[..., 0].min(), cents[..., 0].min())
    xmax = max(bverts[..., 0].max(), cents[..., 0].max())
    ymin = min(bverts[..., 1].min(), cents[..., 1].min())
    ymax = max(bverts[..., 1].max(), cents[..., 1].max())
    bx0 = max(0, int(np.floor(xmin)))
    by0 = max(0, int(np.floor(ymin)))
    bx1 = min(w, int(np.ceil(xmax)))
    by1 = min(h, int(np.ceil(ymax)))
    if bx0 >= bx1 or by0 >= by1:
        return np.zeros(sel.size, dtype=bool)

    if cfg.k == 0:
        region = prev.data[by0:by1, bx0:bx1].astype(np.float64)
    else:
        key = cfg.key.child(rng.UPSAMPLE_PREV, frame)
        detail = _detail_region(prev, n, key, bx0, by0, bx1, by1)
        base = np.repeat(
            np.repeat(prev.data[by0:by1, bx0:bx1], n, axis=0), n, axis=1
        )
        region = base.astype(np.float64) / n + detail

    owner = np.full(((by1 - by0) * n, (bx1 - bx0) * n), -1, dtype=np.int32)
    _kernels.rasterize_fan(
        bverts, cents, sel, float(n), by0 * n, bx0 * n, owner
    )
    flat = owner.ravel()
    valid = flat >= 0
    if not valid.any():
        return np.zeros(sel.size, dtype=bool)
    idx = flat[valid]
    counts = np.bincount(idx, minlength=values.shape[0])
    vals = region.reshape(-1, c)[valid]
    filled = counts[sel] > 0
    got = sel[filled]
    for ch in range(c):
        sums = np.bincount(idx, weights=vals[:, ch], minlength=values.shape[0])
        values[got, ch] = sums[got] / np.sqrt(counts[got])
    return filled


def warp_sequence(g0: NoiseGrid, flows, cfg: WarpConfig):
    """Warp an anchor grid through a sequence of per-frame backward flows.

    flows[n-1] maps frame n to frame n-1; flows are composed into an
    accumulated map so every frame warps straight from the anchor, whose
    level-k upsampling is generated once from cfg.key and reused (long-term
    coherency).  Returns len(flows)+1 results, frame 0 first.
    """
    if not flows:
        raise InvalidArgumentError("flows must be non-empty")
    for f in flows:
        if (f.width, f.height) != (g0.width, g0.height):
            raise InvalidArgumentError("flow dimensions do not match the grid")
    n = 1 << cfg.k
    anchor_level_k = g0 if cfg.k == 0 else upsample_conditional(g0, n, cfg.key)
    first = WarpResult(
        g0,
        np.zeros((g0.height, g0.width), dtype=bool),
        np.full((g0.height, g0.width), FILL_ANCHOR, dtype=np.uint8),
    )
    results = [first]
    acc = None
    for i, step in enumerate(flows):
        acc = step if acc is None else compose(step, acc)
        results.append(
            warp_noise(
                g0,
                acc,
                cfg,
                prev=results[-1].noise,
                step=step,
                frame=i + 1,
                anchor_level_k=anchor_level_k,
            )
        )
    return results
