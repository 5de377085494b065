"""Monte-Carlo experiment drivers: validation suite, ablations, benchmarks.

Ensembles are generated from element-addressable streams, so results do not
depend on batch size, and a fixed seed makes every experiment reproducible
bit for bit.
"""

from __future__ import annotations

import time

import numpy as np

from . import _kernels, rng
from .baselines import INTERP_SCHEMES, PRIOR_KINDS
from .errors import InvalidArgumentError
from .flow import FlowField, compose, make_synthetic_flow, pixel_centers
from .grids import sample_noise
from .stats import ks_normality, overlap_oracle
from .warp import WarpConfig, _grid_vertices, _warp_points, warp_sequence

WARP_METHODS = ("intnoise",) + INTERP_SCHEMES
PRIOR_METHODS = tuple(k for k in PRIOR_KINDS if k != "residual")
VALIDATE_METHODS = WARP_METHODS + PRIOR_METHODS


def parse_flow_spec(spec: str, width: int, height: int) -> FlowField:
    """Build a per-frame step flow from a spec string.

    Grammar: kind:key=val,key=val joined by '+' for composition, e.g.
    "swirl:strength=2.5,radius=64+zoom:factor=1.05".
    """
    step = None
    for part in spec.split("+"):
        if ":" in part:
            kind, argstr = part.split(":", 1)
            params = {}
            for item in argstr.split(","):
                if not item:
                    continue
                key, _, val = item.partition("=")
                params[key.strip()] = float(val)
        else:
            kind, params = part, {}
        f = make_synthetic_flow(kind.strip(), params, width, height)
        step = f if step is None else compose(step, f)
    if step is None:
        raise InvalidArgumentError(f"empty flow spec: {spec!r}")
    return step


def _coverage_for_flow(flow: FlowField, k: int, s: int):
    """Owner grid for a fixed flow plus the segment layout for fast sums."""
    w, h = flow.width, flow.height
    n = 1 << k
    bverts, cents = _grid_vertices(w, h, s)
    owner = np.full((h * n, w * n), -1, dtype=np.int32)
    _kernels.rasterize_fan(
        _warp_points(flow, bverts),
        _warp_points(flow, cents),
        np.arange(w * h, dtype=np.int32),
        float(n),
        0,
        0,
        owner,
    )
    flat = owner.ravel()
    valid = np.flatnonzero(flat >= 0)
    owners = flat[valid]
    order = np.argsort(owners, kind="stable")
    counts = np.bincount(owners, minlength=w * h)
    defined = np.flatnonzero(counts > 0)
    seg_starts = np.concatenate([[0], np.cumsum(counts[defined])]).astype(np.int64)
    return {
        "gather": valid[order],
        "seg_starts": seg_starts,
        "defined": defined,
        "counts": counts,
    }


def warped_ensemble(
    method: str,
    flow: FlowField,
    trials: int,
    k: int,
    s: int,
    key: rng.RngKey,
    batch: int = 256,
):
    """Ensemble of (anchor, warped) level-0 grids under a fixed flow.

    Returns (anchors (M, H, W), warped (M, H, W), defined (H, W) bool).
    The anchor stream depends only on the key, so different methods compare
    on identical inputs.
    """
    if method not in WARP_METHODS:
        raise InvalidArgumentError(f"unknown warp method {method!r}")
    w, h = flow.width, flow.height
    n = 1 << k
    npix = w * h
    anchors = np.empty((trials, h, w), dtype=np.float64)
    warped = np.empty((trials, h, w), dtype=np.float64)
    akey = key.child(rng.TRIALS, 0)
    zkey = key.child(rng.TRIALS, 1)

    if method == "intnoise":
        cov = _coverage_for_flow(flow, k, s)
        defined = (cov["counts"] > 0).reshape(h, w)
        inv_sqrt = np.zeros(npix)
        np.divide(1.0, np.sqrt(cov["counts"]), out=inv_sqrt, where=cov["counts"] > 0)
        nz = h * n * w * n
        for t0 in range(0, trials, batch):
            b = min(batch, trials - t0)
            a = rng.normal_slice(akey, t0 * npix, b * npix).reshape(b, h, w)
            anchors[t0 : t0 + b] = a
            if k == 0:
                wk = np.ascontiguousarray(a.reshape(b, -1))
            else:
                z = rng.normal_slice(zkey, t0 * nz, b * nz).reshape(b, h, n, w, n)
                z -= z.mean(axis=(2, 4), keepdims=True)
                z += a[:, :, None, :, None] / n
                # (b, h, n, w, n) C-order flattens to row-major sub-pixels
                wk = np.ascontiguousarray(z.reshape(b, -1))
            sums = np.empty((b, cov["defined"].size))
            _kernels.segment_sum_batch(wk, cov["gather"], cov["seg_starts"], sums)
            g = np.zeros((b, npix))
            g[:, cov["defined"]] = sums
            warped[t0 : t0 + b] = (g * inv_sqrt).reshape(b, h, w)
        return anchors, warped, defined

    # Pointwise interpolation schemes: taps and weights are flow-fixed.
    taps_iy, taps_ix, weights = _interp_taps(flow, method)
    pos = pixel_centers(w, h) + flow.data
    defined = (
        (pos[..., 0] >= 0)
        & (pos[..., 0] <= w)
        & (pos[..., 1] >= 0)
        & (pos[..., 1] <= h)
    )
    for t0 in range(0, trials, batch):
        b = min(batch, trials - t0)
        a = rng.normal_slice(akey, t0 * npix, b * npix).reshape(b, h, w)
        anchors[t0 : t0 + b] = a
        acc = np.zeros((b, h, w))
        for t in range(weights.shape[-1]):
            acc += weights[..., t] * a[:, taps_iy[..., t], taps_ix[..., t]]
        warped[t0 : t0 + b] = acc
    return anchors, warped, defined


def _interp_taps(flow: FlowField, scheme: str):
    """Tap indices and weights of a pointwise scheme for a fixed flow."""
    w, h = flow.width, flow.height
    pos = pixel_centers(w, h) + flow.data
    gx = np.clip(pos[..., 0], 0.0, float(w)) - 0.5
    gy = np.clip(pos[..., 1], 0.0, float(h)) - 0.5
    if scheme == "nearest":
        ix = np.clip(np.floor(gx + 0.5).astype(np.int64), 0, w - 1)[..., None]
        iy = np.clip(np.floor(gy + 0.5).astype(np.int64), 0, h - 1)[..., None]
        return iy, ix, np.ones(ix.shape)
    ix0 = np.clip(np.floor(gx).astype(np.int64), 0, w - 1)
    iy0 = np.clip(np.floor(gy).astype(np.int64), 0, h - 1)
    if scheme in ("bilinear", "root_bilinear"):
        ix1 = np.minimum(ix0 + 1, w - 1)
        iy1 = np.minimum(iy0 + 1, h - 1)
        tx = np.clip(gx - ix0, 0.0, 1.0)
        ty = np.clip(gy - iy0, 0.0, 1.0)
        ws = np.stack(
            [(1 - tx) * (1 - ty), tx * (1 - ty), (1 - tx) * ty, tx * ty], axis=-1
        )
        if scheme == "root_bilinear":
            ws = np.sqrt(ws)
        iy = np.stack([iy0, iy0, iy1, iy1], axis=-1)
        ix = np.stack([ix0, ix1, ix0, ix1], axis=-1)
        return iy, ix, ws
    if scheme == "bicubic":
        # Base index unclamped so the fraction stays in [0, 1); taps clamp.
        jx0 = np.floor(gx).astype(np.int64)
        jy0 = np.floor(gy).astype(np.int64)
        wx = _cr_weights(gx - jx0)
        wy = _cr_weights(gy - jy0)
        iy4 = np.clip(jy0[..., None] + np.arange(-1, 3), 0, h - 1)
        ix4 = np.clip(jx0[..., None] + np.arange(-1, 3), 0, w - 1)
        iy = np.repeat(iy4[..., :, None], 4, axis=-1).reshape(h, w, 16)
        ix = np.repeat(ix4[..., None, :], 4, axis=-2).reshape(h, w, 16)
        ws = (wy[..., :, None] * wx[..., None, :]).reshape(h, w, 16)
        return iy, ix, ws
    raise InvalidArgumentError(f"unknown scheme {scheme!r}")


def _cr_weights(t: np.ndarray) -> np.ndarray:
    """Catmull-Rom tap weights, last axis (p-1, p0, p1, p2)."""
    t2, t3 = t * t, t * t * t
    return np.stack(
        [
            -0.5 * t3 + t2 - 0.5 * t,
            1.5 * t3 - 2.5 * t2 + 1.0,
            -1.5 * t3 + 2.0 * t2 + 0.5 * t,
            0.5 * t3 - 0.5 * t2,
        ],
        axis=-1,
    )


def prior_ensemble(
    kind: str,
    alpha: float,
    trials: int,
    n_frames: int,
    width: int,
    height: int,
    key: rng.RngKey,
):
    """Vectorized prior sequences, (M, F, H, W); same law as generate_prior."""
    shape = (trials, n_frames, height, width)
    if kind == "random":
        return rng.normal_array(key.child(rng.TRIALS, 0), shape)
    if kind == "fixed":
        one = rng.normal_array(key.child(rng.TRIALS, 0), (trials, 1, height, width))
        return np.broadcast_to(one, shape).copy()
    a2 = alpha**2
    w_old = np.sqrt(a2 / (1 + a2))
    w_new = np.sqrt(1 / (1 + a2))
    fresh = rng.normal_array(key.child(rng.TRIALS, 0), shape)
    if kind == "pyoco_mixed":
        shared = rng.normal_array(key.child(rng.TRIALS, 1), (trials, 1, height, width))
        return w_old * shared + w_new * fresh
    if kind == "pyoco_progressive":
        out = np.empty(shape)
        out[:, 0] = fresh[:, 0]
        for i in range(1, n_frames):
            out[:, i] = w_old * out[:, i - 1] + w_new * fresh[:, i]
        return out
    raise InvalidArgumentError(f"unknown prior kind {kind!r}")


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    """Correlation via fixed-order einsum reductions (thread-independent)."""
    xc = x - x.mean()
    yc = y - y.mean()
    sxy = np.einsum("m,m->", xc, yc)
    sxx = np.einsum("m,m->", xc, xc)
    syy = np.einsum("m,m->", yc, yc)
    if sxx == 0.0 and syy == 0.0:
        return 1.0
    return float(sxy / np.sqrt(sxx * syy))


def _check(name, observed, expected, tolerance, passed=None):
    if passed is None:
        passed = bool(abs(observed - expected) <= tolerance)
    return {
        "name": name,
        "passed": bool(passed),
        "observed": float(observed),
        "expected": float(expected),
        "tolerance": float(tolerance),
    }


def _worst(values: np.ndarray, target: float) -> float:
    """Entry of values farthest from target (sign preserved)."""
    flat = np.asarray(values).ravel()
    return float(flat[np.argmax(np.abs(flat - target))])


def run_validation(
    method: str,
    trials: int = 100_000,
    k: int = 3,
    s: int = 4,
    seed: int = 0,
    shift: tuple = (3.6, 0.0),
    width: int = 16,
    height: int = 8,
) -> dict:
    """Statistical suite for one noise scheme; returns a JSON-able report.

    Warping methods are checked for per-pixel unit variance, pooled
    Gaussianity, independence inside the warped sample, and
    cross-correlation against the dense overlap-area oracle under a
    fractional translation.  Priors are checked for variance, Gaussianity,
    and their closed-form inter-frame correlations.
    """
    if method not in VALIDATE_METHODS:
        raise InvalidArgumentError(
            f"unknown method {method!r}; pick one of {VALIDATE_METHODS}"
        )
    key = rng.RngKey(seed)
    checks = []
    se_mean = 1.0 / np.sqrt(trials)
    se_var = np.sqrt(2.0 / (trials - 1))
    ks_cap = 2_000_000  # KS sample cap (cost); keeps the stream prefix

    if method in WARP_METHODS:
        flow = make_synthetic_flow(
            "translate", {"dx": shift[0], "dy": shift[1]}, width, height
        )
        anchors, warped, defined = warped_ensemble(
            method, flow, trials, k, s, key
        )
        margin_x = int(np.ceil(abs(shift[0]))) + 1
        margin_y = int(np.ceil(abs(shift[1]))) + 1
        interior = np.zeros_like(defined)
        interior[margin_y : height - margin_y, margin_x : width - margin_x] = True
        interior &= defined
        if not interior.any():
            raise InvalidArgumentError("grid too small for the requested shift")

        var = warped.var(axis=0, ddof=1)[interior]
        checks.append(
            _check("variance_preserved", _worst(var, 1.0), 1.0, 4 * se_var)
        )
        stat, pval = ks_normality(warped[:, interior].ravel()[:ks_cap])
        checks.append(_check("gaussianity_ks", pval, 1.0, 1.0, passed=pval > 0.01))

        ys, xs = np.nonzero(interior)
        py, px = int(ys[0]), int(xs[0])
        off_lo = int(np.floor(shift[0]))
        ph = min(4, int(ys[-1]) - py + 1)
        pw = min(4, width - px - off_lo - 2)
        fa = warped[:, py : py + ph, px : px + pw].reshape(trials, -1)
        fa = fa - fa.mean(axis=0)
        cov = np.einsum("mi,mj->ij", fa, fa) / (trials - 1)
        off = cov - np.diag(np.diag(cov))
        checks.append(
            _check("independence_offdiag", _worst(off, 0.0), 0.0, 4 * se_mean)
        )

        tol = 4 * se_mean + 1.0 / (1 << k)
        for name, off_x in (("near", off_lo), ("far", off_lo + 1)):
            oracle = overlap_oracle(
                (shift[0], shift[1]), (px, py), (px + off_x, py)
            )
            fb = anchors[:, py : py + ph, px + off_x : px + off_x + pw].reshape(
                trials, -1
            )
            fb = fb - fb.mean(axis=0)
            band = np.einsum("mi,mi->i", fa, fb) / (trials - 1)
            checks.append(
                _check(f"cross_covariance_{name}", _worst(band, oracle), oracle, tol)
            )
    else:
        n_frames = 4
        alpha = 1.0
        seqs = prior_ensemble(method, alpha, trials, n_frames, 8, 8, key)
        flat = seqs.reshape(trials, n_frames, -1)
        var = flat.var(axis=0, ddof=1)
        checks.append(
            _check("variance_preserved", _worst(var, 1.0), 1.0, 4 * se_var)
        )
        head = max(2, ks_cap // (n_frames * flat.shape[-1]))
        stat, pval = ks_normality(flat[:head].ravel())
        checks.append(_check("gaussianity_ks", pval, 1.0, 1.0, passed=pval > 0.01))

        rho = {"random": 0.0, "fixed": 1.0}.get(method, alpha**2 / (1 + alpha**2))
        for lag in (1, 2):
            if method == "pyoco_progressive":
                # per-step correlation is the sqrt mixing weight itself
                expected = (alpha**2 / (1 + alpha**2)) ** (lag / 2)
            else:
                expected = rho  # random/fixed/mixed: lag-independent
            x = flat[:, :-lag].ravel()
            y = flat[:, lag:].ravel()
            corr = _pearson(x, y)
            checks.append(
                _check(f"frame_correlation_lag{lag}", corr, expected, 4 * se_mean)
            )

    return {
        "schema_version": 1,
        "method": method,
        "trials": trials,
        "k": k,
        "s": s,
        "seed": seed,
        "passed": all(c["passed"] for c in checks),
        "checks": checks,
    }


def covariance_experiment(
    method: str,
    trials: int,
    k: int,
    s: int,
    seed: int,
    shift: tuple = (3.6, 0.0),
    width: int = 16,
    height: int = 8,
    patch=None,
) -> dict:
    """Covariance and cross-covariance matrices for one method.

    The warped ensemble's patch covariance shows self-correlation; its
    cross-covariance against anchor patches at the two source column
    offsets shows how much of the motion-induced correlation survives.
    Returns matrices plus the dense-oracle targets as plain lists.
    """
    key = rng.RngKey(seed)
    flow = make_synthetic_flow(
        "translate", {"dx": shift[0], "dy": shift[1]}, width, height
    )
    anchors, warped, defined = warped_ensemble(method, flow, trials, k, s, key)
    if patch is None:
        off_lo = int(np.floor(shift[0]))
        patch = (max(0, height // 2 - 2), max(1, (width - off_lo) // 2 - 2), 4, 4)
    y0, x0, ph, pw = patch
    fa = warped[:, y0 : y0 + ph, x0 : x0 + pw].reshape(trials, -1)
    fa = fa - fa.mean(axis=0)
    cov = np.einsum("mi,mj->ij", fa, fa) / (trials - 1)
    off_lo = int(np.floor(shift[0]))
    out = {
        "schema_version": 1,
        "method": method,
        "trials": trials,
        "k": k,
        "s": s,
        "seed": seed,
        "patch": list(patch),
        "covariance": cov.tolist(),
    }
    for name, off_x in (("near", off_lo), ("far", off_lo + 1)):
        fb = anchors[:, y0 : y0 + ph, x0 + off_x : x0 + off_x + pw].reshape(
            trials, -1
        )
        fb = fb - fb.mean(axis=0)
        xcov = np.einsum("mi,mj->ij", fa, fb) / (trials - 1)
        oracle = overlap_oracle((shift[0], shift[1]), (x0, y0), (x0 + off_x, y0))
        out[f"cross_covariance_{name}"] = xcov.tolist()
        out[f"oracle_{name}"] = oracle
    return out


def distribution_under_flow(
    flow: FlowField,
    trials: int,
    k: int,
    s: int,
    key: rng.RngKey,
    batch: int = 128,
):
    """Per-pixel variance and pooled KS of warped noise under any fixed flow."""
    anchors, warped, defined = warped_ensemble(
        "intnoise", flow, trials, k, s, key, batch=batch
    )
    var = warped.var(axis=0, ddof=1)
    stat, pval = ks_normality(warped[:, defined].ravel())
    return {
        "defined": defined,
        "variance": var,
        "ks_statistic": stat,
        "ks_p_value": pval,
        "trials": trials,
    }


def undefined_ratio_table(
    step_flow: FlowField,
    n_frames: int,
    k_values,
    s: int,
    seed: int,
):
    """Undefined-pixel ratio per (k, frame) on a synthetic flow sequence."""
    key = rng.RngKey(seed)
    g0 = sample_noise(step_flow.width, step_flow.height, 1, key)
    flows = [step_flow] * n_frames
    table = np.zeros((len(k_values), n_frames))
    for i, k in enumerate(k_values):
        cfg = WarpConfig(key=key, k=int(k), s=s)
        results = warp_sequence(g0, flows, cfg)
        table[i] = [r.undefined_mask.mean() for r in results[1:]]
    return table


def bench_grid(
    k_values,
    s_values,
    n_frames: int,
    width: int,
    height: int,
    seed: int,
    flow_spec: str = "swirl:strength=3.0",
):
    """Wall and CPU time per frame for every (k, s) configuration.

    Times cover the full per-frame pipeline (composition, contour warping,
    rasterization, aggregation, fills) for a sequence of n_frames, averaged
    per frame.
    """
    key = rng.RngKey(seed)
    step = parse_flow_spec(flow_spec, width, height)
    g0 = sample_noise(width, height, 1, key)
    flows = [step] * n_frames
    rows = []
    for k in k_values:
        for s in s_values:
            cfg = WarpConfig(key=key, k=int(k), s=int(s))
            wall0 = time.perf_counter()
            cpu0 = time.process_time()
            results = warp_sequence(g0, flows, cfg)
            wall = time.perf_counter() - wall0
            cpu = time.process_time() - cpu0
            rows.append(
                {
                    "k": int(k),
                    "s": int(s),
                    "frames": n_frames,
                    "wall_per_frame": wall / n_frames,
                    "cpu_per_frame": cpu / n_frames,
                    "undefined_ratio_last": float(results[-1].undefined_mask.mean()),
                }
            )
    return rows
