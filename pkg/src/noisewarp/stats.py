"""Empirical moments, covariance matrices, Gaussianity tests, and oracles.

The oracles here (dense-sampling overlap areas, the 1-D sliding-window
experiment) are deliberately independent of the transport engine: they never
touch its rasterization or aggregation code paths, so they can arbitrate
its claims.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import kstest

from . import rng
from .errors import InvalidArgumentError
from .flow import FlowField, pixel_centers, sample_flow

REPORT_SCHEMA_VERSION = 1


@dataclass
class StatsReport:
    """Serializable bundle of empirical statistics.

    Fields that a given computation does not produce stay None; covariance
    matrices are P x P over a flattened patch.
    """

    sample_count: int
    mean: np.ndarray | None = None
    variance: np.ndarray | None = None
    covariance: np.ndarray | None = None
    cross_covariance: np.ndarray | None = None
    ks_statistic: float | None = None
    ks_p_value: float | None = None
    extra: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        def conv(v):
            return v.tolist() if isinstance(v, np.ndarray) else v

        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "sample_count": self.sample_count,
            "mean": conv(self.mean),
            "variance": conv(self.variance),
            "covariance": conv(self.covariance),
            "cross_covariance": conv(self.cross_covariance),
            "ks_statistic": self.ks_statistic,
            "ks_p_value": self.ks_p_value,
            "extra": self.extra,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)


def _stack(samples) -> np.ndarray:
    """Stack a list of NoiseGrid (or arrays) into (M, H, W, C) float64."""
    arrs = [s.data if hasattr(s, "data") else np.asarray(s) for s in samples]
    shapes = {a.shape for a in arrs}
    if len(shapes) != 1:
        raise InvalidArgumentError(f"sample shapes differ: {sorted(shapes)}")
    return np.stack(arrs).astype(np.float64)


def ensemble_moments(samples) -> StatsReport:
    """Unbiased per-pixel mean and variance of an ensemble."""
    arr = _stack(samples)
    if arr.shape[0] < 2:
        raise InvalidArgumentError("need at least 2 samples")
    return StatsReport(
        sample_count=arr.shape[0],
        mean=arr.mean(axis=0),
        variance=arr.var(axis=0, ddof=1),
    )


def _patch_matrix(arr: np.ndarray, patch) -> np.ndarray:
    """Flatten a (y0, x0, h, w) patch of an (M, H, W, C) stack to (M, P)."""
    if patch is None:
        hh, ww = arr.shape[1], arr.shape[2]
        patch = (hh // 2 - 2, ww // 2 - 2, 4, 4)
    y0, x0, ph, pw = patch
    if y0 < 0 or x0 < 0 or y0 + ph > arr.shape[1] or x0 + pw > arr.shape[2]:
        raise InvalidArgumentError(f"patch {patch} exceeds grid {arr.shape[1:3]}")
    return arr[:, y0 : y0 + ph, x0 : x0 + pw, :].reshape(arr.shape[0], -1)


def cross_covariance(a, b, patch=None, patch_b=None) -> np.ndarray:
    """Unbiased E[(a - mean)(b - mean)^T] over flattened patches.

    a and b are paired ensembles of equal count; patch_b defaults to patch,
    letting the two ensembles be windowed at shifted positions.
    """
    arr_a = _stack(a)
    arr_b = _stack(b)
    if arr_a.shape[0] != arr_b.shape[0]:
        raise InvalidArgumentError(
            f"ensemble counts differ: {arr_a.shape[0]} vs {arr_b.shape[0]}"
        )
    fa = _patch_matrix(arr_a, patch)
    fb = _patch_matrix(arr_b, patch if patch_b is None else patch_b)
    fa = fa - fa.mean(axis=0)
    fb = fb - fb.mean(axis=0)
    # einsum (not BLAS matmul): fixed summation order, so results do not
    # depend on the BLAS thread count.
    return np.einsum("mi,mj->ij", fa, fb) / (fa.shape[0] - 1)


def overlap_oracle(f, p, q, resolution: int = 256) -> float:
    """Brute-force area of (warped pixel p's pre-image) intersected with q.

    Pixel p's unit square is densely sampled (resolution^2 midpoints), each
    point is traced backward through the flow, and the fraction landing in
    anchor pixel q's square estimates the intersection area: the
    ground-truth covariance between the warped and anchor pixels under
    translations.  f is a FlowField or an analytic (dx, dy) translation.
    Accuracy is O(1/resolution).
    """
    px, py = p
    qx, qy = q
    t = (np.arange(resolution, dtype=np.float64) + 0.5) / resolution
    gx, gy = np.meshgrid(px + t, py + t)
    pts = np.stack([gx.ravel(), gy.ravel()], axis=-1)
    if isinstance(f, FlowField):
        src = pts + sample_flow(f, pts)
    else:
        dx, dy = f
        src = pts + np.array([dx, dy], dtype=np.float64)
    inside = (
        (src[:, 0] >= qx)
        & (src[:, 0] < qx + 1)
        & (src[:, 1] >= qy)
        & (src[:, 1] < qy + 1)
    )
    return float(inside.mean())


def ks_normality(values) -> tuple[float, float]:
    """Two-sided Kolmogorov-Smirnov test against the standard normal."""
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size < 100:
        raise InvalidArgumentError(f"need at least 100 values, got {v.size}")
    res = kstest(v, "norm", method="asymp")
    return float(res.statistic), float(res.pvalue)


def brownian_bridge_1d(alpha: float, k: int, trials: int, key: rng.RngKey):
    """Sliding-pixel experiment over integrated 1-D noise.

    Two adjacent cells with values (x0, x1) are conditionally refined to
    2**k sub-cells each; a unit window slid a fraction alpha from the right
    cell toward the left one is summed with the 1/sqrt(count) scaling, and
    the window value z is regressed on (x0, x1) by ordinary least squares.

    Returns (coefficients, residual_variance); the integrated-noise theory
    predicts coefficients (alpha, 1 - alpha) and residual variance
    1 - (alpha**2 + (1 - alpha)**2), up to O(2**-k) window snapping.
    """
    if not 0.0 <= alpha <= 1.0:
        raise InvalidArgumentError("alpha must be in [0, 1]")
    n = 1 << k
    m0 = int(np.ceil(n * (1.0 - alpha) - 0.5))
    m0 = min(max(m0, 0), n)  # window [1-alpha, 2-alpha] within the 2n cells
    x = rng.normal_array(key.child(rng.TRIALS, 0), (trials, 2, 1))
    z = rng.normal_array(key.child(rng.TRIALS, 1), (trials, 2, n))
    w = x / np.sqrt(n) + z - z.mean(axis=2, keepdims=True)
    w = w.reshape(trials, 2 * n)
    zwin = w[:, m0 : m0 + n].sum(axis=1) / np.sqrt(n)
    design = x.reshape(trials, 2)
    # Ordinary least squares via the 2x2 normal equations, solved in closed
    # form (deterministic regardless of BLAS threading).
    xtx = np.einsum("mi,mj->ij", design, design)
    xty = np.einsum("mi,m->i", design, zwin)
    det = xtx[0, 0] * xtx[1, 1] - xtx[0, 1] * xtx[1, 0]
    beta = np.array(
        [
            (xtx[1, 1] * xty[0] - xtx[0, 1] * xty[1]) / det,
            (xtx[0, 0] * xty[1] - xtx[1, 0] * xty[0]) / det,
        ]
    )
    resid = zwin - design[:, 0] * beta[0] - design[:, 1] * beta[1]
    res_var = float(np.einsum("m,m->", resid, resid) / (trials - 2))
    return beta, res_var


def _bilinear_sample(values: np.ndarray, pos: np.ndarray) -> np.ndarray:
    """Clamped bilinear sampling of (H, W, C) values at (..., 2) points."""
    h, w = values.shape[:2]
    gx = np.clip(pos[..., 0], 0.0, float(w)) - 0.5
    gy = np.clip(pos[..., 1], 0.0, float(h)) - 0.5
    ix0 = np.clip(np.floor(gx).astype(np.int64), 0, w - 1)
    iy0 = np.clip(np.floor(gy).astype(np.int64), 0, h - 1)
    ix1 = np.minimum(ix0 + 1, w - 1)
    iy1 = np.minimum(iy0 + 1, h - 1)
    tx = np.clip(gx - ix0, 0.0, 1.0)[..., None]
    ty = np.clip(gy - iy0, 0.0, 1.0)[..., None]
    return (
        (1 - tx) * (1 - ty) * values[iy0, ix0]
        + tx * (1 - ty) * values[iy0, ix1]
        + (1 - tx) * ty * values[iy1, ix0]
        + tx * ty * values[iy1, ix1]
    )


def warp_error(frames, flows, masks=None) -> float:
    """Masked MSE between each frame and the flow-warped previous frame.

    flows[n-1] maps frame n backward to frame n-1; the previous frame is
    bilinearly sampled at the displaced pixel centers.  A pixel counts when
    its backward source lies inside the domain and, if given, the external
    validity mask admits it.  Returns the mean over frames of the masked
    mean squared difference.
    """
    frames = [np.asarray(fr, dtype=np.float64) for fr in frames]
    if len(flows) != len(frames) - 1:
        raise InvalidArgumentError(
            f"expected {len(frames) - 1} flows for {len(frames)} frames"
        )
    if masks is not None and len(masks) != len(flows):
        raise InvalidArgumentError("need one mask per flow")
    per_frame = []
    for i, f in enumerate(flows):
        cur = frames[i + 1]
        prv = frames[i]
        if cur.ndim == 2:
            cur = cur[..., None]
        if prv.ndim == 2:
            prv = prv[..., None]
        pos = pixel_centers(f.width, f.height) + f.data
        warped = _bilinear_sample(prv, pos)
        in_domain = (
            (pos[..., 0] >= 0)
            & (pos[..., 0] <= f.width)
            & (pos[..., 1] >= 0)
            & (pos[..., 1] <= f.height)
        )
        m = in_domain if masks is None else (in_domain & np.asarray(masks[i], bool))
        if not m.any():
            continue
        sq = ((cur - warped) ** 2).mean(axis=-1)
        per_frame.append(float(sq[m].mean()))
    if not per_frame:
        raise InvalidArgumentError("no valid pixels in any frame")
    return float(np.mean(per_frame))
