import numpy as np
import pytest

from noisewarp import (
    FlowField,
    InvalidArgumentError,
    compose,
    make_synthetic_flow,
    sample_flow,
)


def _cr_1d(p, t):
    """Scalar Catmull-Rom reference: taps p[0..3], fraction t in [0, 1]."""
    return 0.5 * (
        (2 * p[1])
        + (-p[0] + p[2]) * t
        + (2 * p[0] - 5 * p[1] + 4 * p[2] - p[3]) * t * t
        + (-p[0] + 3 * p[1] - 3 * p[2] + p[3]) * t * t * t
    )


def test_constant_flow_sampled_anywhere():
    f = make_synthetic_flow("translate", {"dx": 1.5, "dy": 0.0}, 8, 6)
    pts = np.array([[0.1, 0.2], [4.0, 3.0], [7.9, 5.9], [2.7, 1.3]])
    out = sample_flow(f, pts)
    assert np.allclose(out[:, 0], 1.5, atol=1e-12)
    assert np.allclose(out[:, 1], 0.0, atol=1e-12)


def test_sample_at_pixel_centers_exact():
    rng = np.random.default_rng(0)
    data = rng.normal(size=(5, 7, 2)).astype(np.float32)
    f = FlowField(7, 5, data)
    for (x, y) in [(0, 0), (3, 2), (6, 4)]:
        v = sample_flow(f, np.array([x + 0.5, y + 0.5]))
        assert np.array_equal(v.astype(np.float32), data[y, x])


def test_linear_ramp_reproduced():
    # dx = x/10 sampled at x = 2.5 must give 0.25; cross-check against the
    # direct polynomial evaluation of the Catmull-Rom kernel.
    w, h = 12, 4
    data = np.zeros((h, w, 2), np.float32)
    xs = np.arange(w) + 0.5
    data[..., 0] = (xs / 10.0)[None, :]
    f = FlowField(w, h, data)
    v = sample_flow(f, np.array([2.5, 2.0]))
    assert abs(v[0] - 0.25) < 1e-6
    assert abs(v[1]) < 1e-12
    # Fractional position: linear precision of the kernel, plus the scalar
    # polynomial oracle evaluated on the same taps.
    v = sample_flow(f, np.array([2.8, 2.0]))
    assert abs(v[0] - 0.28) < 1e-6
    taps = [(i + 0.5) / 10.0 for i in (1, 2, 3, 4)]  # columns 1..4, t = 0.3
    oracle = _cr_1d(taps, 0.3)
    assert abs(oracle - 0.28) < 1e-12
    assert abs(v[0] - oracle) < 1e-7


def test_out_of_domain_clamps():
    f = make_synthetic_flow("translate", {"dx": 2.0, "dy": -1.0}, 4, 4)
    v = sample_flow(f, np.array([-3.0, 99.0]))
    assert np.allclose(v, [2.0, -1.0])


def test_compose_zero_step_is_identity():
    rng = np.random.default_rng(1)
    acc = FlowField(6, 5, rng.normal(size=(5, 6, 2)).astype(np.float32))
    zero = make_synthetic_flow("translate", {"dx": 0.0, "dy": 0.0}, 6, 5)
    out = compose(zero, acc)
    assert np.array_equal(out.data, acc.data)
    # Composing zero flows yields the zero map exactly.
    assert np.all(compose(zero, zero).data == 0.0)


def test_compose_translations_add_exactly():
    a = make_synthetic_flow("translate", {"dx": 1.0, "dy": 0.0}, 6, 5)
    b = make_synthetic_flow("translate", {"dx": 2.0, "dy": 0.0}, 6, 5)
    out = compose(a, b)
    assert np.all(out.data[..., 0] == 3.0)
    assert np.all(out.data[..., 1] == 0.0)


def test_compose_n_translations():
    d = make_synthetic_flow("translate", {"dx": 0.5, "dy": -0.25}, 8, 8)
    acc = d
    for _ in range(3):
        acc = compose(d, acc)
    assert np.allclose(acc.data[..., 0], 2.0, atol=1e-12)
    assert np.allclose(acc.data[..., 1], -1.0, atol=1e-12)


def test_compose_rotations_match_double_angle():
    w = h = 32
    theta = 0.05
    rot = make_synthetic_flow("rotate", {"angle": theta}, w, h)
    acc = compose(rot, rot)
    rot2 = make_synthetic_flow("rotate", {"angle": 2 * theta}, w, h)
    err = np.abs(acc.data - rot2.data)[4:-4, 4:-4]
    assert err.max() < 1e-2


def test_compose_dimension_mismatch():
    a = make_synthetic_flow("translate", {"dx": 1.0}, 4, 4)
    b = make_synthetic_flow("translate", {"dx": 1.0}, 5, 4)
    with pytest.raises(InvalidArgumentError):
        compose(a, b)


def test_translate_field_constant():
    f = make_synthetic_flow("translate", {"dx": 3.6, "dy": 0.0}, 10, 7)
    assert np.all(f.data[..., 0] == np.float32(3.6))
    assert np.all(f.data[..., 1] == 0.0)


def test_rotate_zero_is_zero_flow():
    f = make_synthetic_flow("rotate", {"angle": 0.0}, 9, 9)
    assert np.all(f.data == 0.0)


def test_zoom_fixed_point():
    # The zoom center must map to itself: zero vector at the center pixel.
    f = make_synthetic_flow("zoom", {"factor": 2.0, "cx": 4.5, "cy": 4.5}, 9, 9)
    assert np.allclose(f.data[4, 4], 0.0)


def test_unknown_kind_rejected():
    with pytest.raises(InvalidArgumentError):
        make_synthetic_flow("shear", {}, 4, 4)
    with pytest.raises(InvalidArgumentError):
        make_synthetic_flow("translate", {"dx": np.nan}, 4, 4)
    with pytest.raises(InvalidArgumentError):
        make_synthetic_flow("zoom", {"factor": 2.0, "bogus": 1.0}, 4, 4)


def test_flowfield_rejects_nonfinite():
    data = np.zeros((3, 3, 2), np.float32)
    data[1, 1, 0] = np.inf
    with pytest.raises(InvalidArgumentError):
        FlowField(3, 3, data)
