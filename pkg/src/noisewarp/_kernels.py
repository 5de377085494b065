"""Numba hot loops: uniform mapping, bicubic sampling, fan rasterization.

Everything here is serial and branch-deterministic; results never depend on
thread count or batch partitioning.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_INV52 = 2.0 ** -52


@njit(cache=True)
def words_to_unit(words):
    """Map uint64 words to uniforms strictly inside (0, 1).

    (w >> 12) + 0.5 fits a 53-bit mantissa exactly and the power-of-two
    scale is exact, so u lies in [2**-53, 1 - 2**-53] and the inverse
    normal CDF never sees 0 or 1.
    """
    out = np.empty(words.size, np.float64)
    for i in range(words.size):
        out[i] = ((words[i] >> np.uint64(12)) + 0.5) * _INV52
    return out


@njit(cache=True, inline="always")
def _cr_w(t):
    """Catmull-Rom weights for taps (p-1, p0, p1, p2) at fraction t."""
    t2 = t * t
    t3 = t2 * t
    w0 = -0.5 * t3 + t2 - 0.5 * t
    w1 = 1.5 * t3 - 2.5 * t2 + 1.0
    w2 = -1.5 * t3 + 2.0 * t2 + 0.5 * t
    w3 = 0.5 * t3 - 0.5 * t2
    return w0, w1, w2, w3


@njit(cache=True)
def catmull_rom_sample(values, pts, out):
    """Sample a (H, W, C) field at continuous points with Catmull-Rom bicubic.

    Field samples live at pixel centers (ix + 0.5, iy + 0.5); points are
    (x, y) in [0, W] x [0, H] and are clamped to that domain; tap indices
    clamp to the edge (replicate).  Reproduces stored values exactly at
    pixel centers.
    """
    h, w, c = values.shape
    n = pts.shape[0]
    for q in range(n):
        x = pts[q, 0]
        y = pts[q, 1]
        if x < 0.0:
            x = 0.0
        elif x > w:
            x = float(w)
        if y < 0.0:
            y = 0.0
        elif y > h:
            y = float(h)
        gx = x - 0.5
        gy = y - 0.5
        ix = int(np.floor(gx))
        iy = int(np.floor(gy))
        wx0, wx1, wx2, wx3 = _cr_w(gx - ix)
        wy0, wy1, wy2, wy3 = _cr_w(gy - iy)
        for ch in range(c):
            acc = 0.0
            for a in range(4):
                ty = iy + a - 1
                if ty < 0:
                    ty = 0
                elif ty > h - 1:
                    ty = h - 1
                wy = wy0 if a == 0 else (wy1 if a == 1 else (wy2 if a == 2 else wy3))
                row = 0.0
                for b in range(4):
                    tx = ix + b - 1
                    if tx < 0:
                        tx = 0
                    elif tx > w - 1:
                        tx = w - 1
                    wx = wx0 if b == 0 else (wx1 if b == 1 else (wx2 if b == 2 else wx3))
                    row += wx * values[ty, tx, ch]
                acc += wy * row
            out[q, ch] = acc
    return out


@njit(cache=True)
def rasterize_fan(bverts, cents, ids, scale, oy, ox, owner):
    """Rasterize warped pixel contours (fan-triangulated) into an owner grid.

    bverts : (P, V, 2) float64 warped boundary vertices, (x, y) continuous
             pixel coordinates; consecutive vertices (cyclically) bound the
             contour; triangles are (centroid, v_t, v_{t+1}).
    cents  : (P, 2) warped centroid per polygon.
    ids    : (P,) int32 value written for polygon p; iteration order is
             overwrite priority (the last polygon covering a sub-pixel wins).
    scale  : sub-pixels per pixel edge (2**k).
    oy, ox : origin of the owner buffer in global sub-pixel indices.
    owner  : (hs, ws) int32 buffer, -1 meaning unowned.

    A sub-pixel is covered when its center ((sx + 0.5)/scale,
    (sy + 0.5)/scale) lies inside a triangle.  On the polygon's boundary
    edge, centers exactly on the edge count only for top or left edges, so
    adjacent polygons split shared-edge samples without gaps or double
    coverage.  The two fan spokes are interior to the polygon (both sides
    have the same owner), so they are inclusive; this avoids dropping
    centers that sit exactly on a spoke.  Inverted triangles (negative
    signed area in y-down coordinates) are rasterized by absolute
    orientation; zero-area triangles are skipped.
    """
    hs, ws = owner.shape
    np_, nv = bverts.shape[0], bverts.shape[1]
    for p in range(np_):
        pid = ids[p]
        ax = cents[p, 0]
        ay = cents[p, 1]
        for t in range(nv):
            vx0 = bverts[p, t, 0]
            vy0 = bverts[p, t, 1]
            tn = t + 1 if t + 1 < nv else 0
            vx1 = bverts[p, tn, 0]
            vy1 = bverts[p, tn, 1]
            area2 = (vx0 - ax) * (vy1 - ay) - (vy0 - ay) * (vx1 - ax)
            if area2 == 0.0:
                continue
            pos = area2 > 0.0
            xmin = min(ax, min(vx0, vx1))
            xmax = max(ax, max(vx0, vx1))
            ymin = min(ay, min(vy0, vy1))
            ymax = max(ay, max(vy0, vy1))
            sx0 = int(np.ceil(xmin * scale - 0.5))
            sx1 = int(np.floor(xmax * scale - 0.5))
            sy0 = int(np.ceil(ymin * scale - 0.5))
            sy1 = int(np.floor(ymax * scale - 0.5))
            if sx0 < ox:
                sx0 = ox
            if sy0 < oy:
                sy0 = oy
            if sx1 > ox + ws - 1:
                sx1 = ox + ws - 1
            if sy1 > oy + hs - 1:
                sy1 = oy + hs - 1
            if sx1 < sx0 or sy1 < sy0:
                continue
            # Spoke edge functions in the canonical direction (centroid ->
            # vertex).  Both triangles sharing a spoke evaluate the exact
            # same expression, so complementary inclusive tests can never
            # drop a center that sits on the spoke.
            sa0 = ay - vy0
            sb0 = vx0 - ax
            sc0 = (vy0 - ay) * ax - (vx0 - ax) * ay
            sa1 = ay - vy1
            sb1 = vx1 - ax
            sc1 = (vy1 - ay) * ax - (vx1 - ax) * ay
            # Boundary segment, traversed so the interior is the positive
            # side; centers exactly on it count only for top/left edges.
            if pos:
                bx0, by0, bx1, by1 = vx0, vy0, vx1, vy1
            else:
                bx0, by0, bx1, by1 = vx1, vy1, vx0, vy0
            ba = by0 - by1
            bb = bx1 - bx0
            bc = (by1 - by0) * bx0 - (bx1 - bx0) * by0
            tl = (by1 - by0) < 0.0 or ((by1 - by0) == 0.0 and (bx1 - bx0) > 0.0)
            for syg in range(sy0, sy1 + 1):
                py = (syg + 0.5) / scale
                r0 = sb0 * py + sc0
                r1 = sb1 * py + sc1
                rb = bb * py + bc
                for sxg in range(sx0, sx1 + 1):
                    px = (sxg + 0.5) / scale
                    es0 = sa0 * px + r0
                    es1 = sa1 * px + r1
                    eb = ba * px + rb
                    if pos:
                        spoke_ok = es0 >= 0.0 and es1 <= 0.0
                    else:
                        spoke_ok = es0 <= 0.0 and es1 >= 0.0
                    if spoke_ok and (eb > 0.0 or (eb == 0.0 and tl)):
                        owner[syg - oy, sxg - ox] = pid
    return owner


@njit(cache=True)
def segment_sum_batch(values, order, seg_starts, out):
    """Sum values over owner segments for a batch of trials.

    values     : (B, n_sub) flattened sub-pixel values per trial.
    order      : indices into the flattened sub grid, sorted by owner.
    seg_starts : (n_seg + 1,) segment boundaries within order.
    out        : (B, n_seg) per-owner sums.
    """
    nb = values.shape[0]
    nseg = seg_starts.size - 1
    for b in range(nb):
        for s in range(nseg):
            acc = 0.0
            for t in range(seg_starts[s], seg_starts[s + 1]):
                acc += values[b, order[t]]
            out[b, s] = acc
    return out
