import numpy as np
import pytest

from noisewarp import (
    InvalidArgumentError,
    PriorSpec,
    RngKey,
    generate_prior,
    make_synthetic_flow,
    sample_noise,
    warp_interp,
)

from noisewarp.experiments import warped_ensemble

KEY = RngKey(31)
SCHEMES = ("bilinear", "bicubic", "nearest", "root_bilinear")


def test_zero_flow_identity_all_schemes():
    g = sample_noise(8, 8, 1, KEY)
    zero = make_synthetic_flow("translate", {"dx": 0.0, "dy": 0.0}, 8, 8)
    for scheme in SCHEMES:
        out = warp_interp(g, zero, scheme)
        assert np.allclose(out.data, g.data, atol=1e-6), scheme


def test_unknown_scheme_and_mismatch():
    g = sample_noise(8, 8, 1, KEY)
    zero = make_synthetic_flow("translate", {"dx": 0.0}, 8, 8)
    with pytest.raises(InvalidArgumentError):
        warp_interp(g, zero, "lanczos")
    other = make_synthetic_flow("translate", {"dx": 0.0}, 9, 8)
    with pytest.raises(InvalidArgumentError):
        warp_interp(g, other, "bilinear")


def test_bilinear_half_shift_variance_deficit():
    # 1-D style shift alpha = 0.5: output variance alpha^2 + (1-alpha)^2.
    flow = make_synthetic_flow("translate", {"dx": 0.5, "dy": 0.0}, 12, 8)
    m = 30_000
    _, warped, _ = warped_ensemble("bilinear", flow, m, 0, 1, KEY)
    var = warped[:, 2:6, 2:8].var(axis=0, ddof=1)
    se = 0.5 * np.sqrt(2.0 / (m - 1))
    assert np.abs(var - 0.5).max() < 4 * se


def test_root_bilinear_half_shift_variance_unit():
    flow = make_synthetic_flow("translate", {"dx": 0.5, "dy": 0.0}, 12, 8)
    m = 30_000
    _, warped, _ = warped_ensemble("root_bilinear", flow, m, 0, 1, KEY)
    var = warped[:, 2:6, 2:8].var(axis=0, ddof=1)
    se = np.sqrt(2.0 / (m - 1))
    assert np.abs(var - 1.0).max() < 4 * se


def test_warp_interp_matches_ensemble_path():
    # The per-grid op and the vectorized ensemble machinery must agree.
    flow = make_synthetic_flow("translate", {"dx": 1.3, "dy": -0.4}, 10, 9)
    g = sample_noise(10, 9, 1, KEY)
    for scheme in SCHEMES:
        a = warp_interp(g, flow, scheme).data[..., 0].astype(np.float64)
        from noisewarp.experiments import _interp_taps

        iy, ix, ws = _interp_taps(flow, scheme)
        b = np.zeros((9, 10))
        src = g.data[..., 0].astype(np.float64)
        for t in range(ws.shape[-1]):
            b += ws[..., t] * src[iy[..., t], ix[..., t]]
        assert np.allclose(a, b, atol=1e-6), scheme


def test_nearest_integer_shift_exact_copy():
    g = sample_noise(10, 6, 1, KEY)
    flow = make_synthetic_flow("translate", {"dx": 2.0, "dy": 0.0}, 10, 6)
    out = warp_interp(g, flow, "nearest")
    assert np.array_equal(out.data[:, :8], g.data[:, 2:])


def test_fixed_prior_identical_frames():
    spec = PriorSpec(kind="fixed", key=KEY)
    frames = generate_prior(spec, 3, (6, 5, 1))
    assert len(frames) == 3
    assert np.array_equal(frames[0].data, frames[1].data)
    assert np.array_equal(frames[0].data, frames[2].data)


def test_random_prior_differs():
    spec = PriorSpec(kind="random", key=KEY)
    frames = generate_prior(spec, 2, (6, 5, 1))
    assert not np.array_equal(frames[0].data, frames[1].data)


def test_pyoco_mixed_moments():
    spec = PriorSpec(kind="pyoco_mixed", key=KEY, alpha=1.0)
    m = 3000
    seqs = np.stack(
        [
            np.stack(
                [
                    f.data.ravel()
                    for f in generate_prior(
                        PriorSpec(kind="pyoco_mixed", key=RngKey(1000 + t)), 2, (8, 8, 1)
                    )
                ]
            )
            for t in range(m)
        ]
    ).astype(np.float64)
    n = m * 64
    se = 1.0 / np.sqrt(n)
    assert abs(seqs.var(ddof=1) - 1.0) < 4 * np.sqrt(2.0 / n)
    corr = np.corrcoef(seqs[:, 0].ravel(), seqs[:, 1].ravel())[0, 1]
    assert abs(corr - 0.5) < 4 * se  # alpha^2/(1+alpha^2) at alpha=1


def test_pyoco_progressive_lag_decay():
    # Per-step correlation is the sqrt mixing weight; lag-m decays as its
    # m-th power.
    m = 3000
    seqs = np.stack(
        [
            np.stack(
                [
                    f.data.ravel()
                    for f in generate_prior(
                        PriorSpec(kind="pyoco_progressive", key=RngKey(5000 + t)),
                        3,
                        (8, 8, 1),
                    )
                ]
            )
            for t in range(m)
        ]
    ).astype(np.float64)
    n = m * 64
    se = 1.0 / np.sqrt(n)
    c = np.sqrt(0.5)
    lag1 = np.corrcoef(seqs[:, 0].ravel(), seqs[:, 1].ravel())[0, 1]
    lag2 = np.corrcoef(seqs[:, 0].ravel(), seqs[:, 2].ravel())[0, 1]
    assert abs(lag1 - c) < 4 * se
    assert abs(lag2 - c**2) < 4 * se


def test_residual_prior_keeps_static_pixels():
    spec = PriorSpec(kind="residual", key=KEY, threshold=0.1)
    frames = np.zeros((3, 6, 5))  # identical frames: nothing changes
    out = generate_prior(spec, 3, (5, 6, 1), frames=frames)
    assert np.array_equal(out[0].data, out[1].data)
    assert np.array_equal(out[1].data, out[2].data)


def test_residual_prior_resamples_changed_pixels():
    spec = PriorSpec(kind="residual", key=KEY, threshold=0.1)
    frames = np.zeros((2, 6, 5))
    frames[1, 2, 3] = 1.0  # one pixel changes beyond the threshold
    out = generate_prior(spec, 2, (5, 6, 1), frames=frames)
    changed = out[0].data != out[1].data
    assert changed[2, 3, 0]
    assert changed.sum() == 1


def test_residual_requires_frames():
    spec = PriorSpec(kind="residual", key=KEY)
    with pytest.raises(InvalidArgumentError):
        generate_prior(spec, 2, (5, 6, 1))


def test_prior_spec_validation():
    with pytest.raises(InvalidArgumentError):
        PriorSpec(kind="bogus", key=KEY)
    with pytest.raises(InvalidArgumentError):
        PriorSpec(kind="random", key=KEY, alpha=-1.0)
    with pytest.raises(InvalidArgumentError):
        PriorSpec(kind="random", key=KEY, threshold=float("nan"))
