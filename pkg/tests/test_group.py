import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kolmo.group import (
    BallSpec,
    CubeSpec,
    ORIGIN,
    Point,
    compose,
    contains,
    dilate,
    distance,
    estimate_lambda,
    group_norm,
    inverse,
)

coord = st.floats(min_value=-10, max_value=10, allow_nan=False)
points = st.builds(Point, coord, coord, coord)
scales = st.floats(min_value=1e-2, max_value=1e2, allow_nan=False)


def test_compose_identity():
    p = Point(0.3, -1.2, 2.0)
    assert compose(ORIGIN, p) == p
    assert compose(p, ORIGIN) == p


def test_compose_mixes_x_into_y():
    assert compose(Point(1, 0, 0), Point(0, 0, 1)) == Point(1, -1, 1)


def test_inverse_values():
    assert inverse(Point(1, 0, 0)) == Point(-1, 0, 0)
    assert inverse(ORIGIN) == ORIGIN
    assert inverse(Point(1, 1, 2)) == Point(-1, -3, -2)


@settings(max_examples=200, deadline=None)
@given(points)
def test_inverse_law(p):
    left = compose(inverse(p), p)
    right = compose(p, inverse(p))
    for v in (*left, *right):
        assert abs(v) < 1e-12


@settings(max_examples=200, deadline=None)
@given(points, points, points)
def test_associativity(p, q, s):
    lhs = compose(compose(p, q), s)
    rhs = compose(p, compose(q, s))
    for a, b in zip(lhs, rhs):
        assert a == pytest.approx(b, abs=1e-12)


def test_dilate_values():
    p = Point(1.0, 1.0, 1.0)
    assert dilate(1.0, p) == p
    assert dilate(2.0, p) == Point(2.0, 8.0, 4.0)
    with pytest.raises(ValueError):
        dilate(0.0, p)
    with pytest.raises(ValueError):
        dilate(-1.0, p)


@settings(max_examples=100, deadline=None)
@given(scales, scales, points)
def test_dilate_semigroup(mu, lam, p):
    a = dilate(mu, dilate(lam, p))
    b = dilate(mu * lam, p)
    for x, y in zip(a, b):
        assert x == pytest.approx(y, rel=1e-12)


def test_norm_axis_values():
    assert group_norm(Point(1, 0, 0)) == pytest.approx(1.0, rel=1e-12)
    assert group_norm(Point(0, 0, 4)) == pytest.approx(2.0, rel=1e-12)
    assert group_norm(Point(0, 8, 0)) == pytest.approx(2.0, rel=1e-12)
    assert group_norm(ORIGIN) == 0.0


def test_norm_matches_cubic_root():
    # independent oracle: s = r^2 solves s^3 - x^2 s^2 - t^2 s - y^2 = 0
    rng = np.random.default_rng(7)
    for _ in range(200):
        x, y, t = rng.uniform(-5, 5, 3)
        roots = np.roots([1.0, -(x**2), -(t**2), -(y**2)])
        real = [np.sqrt(r.real) for r in roots if abs(r.imag) < 1e-9 and r.real > 0]
        assert len(real) >= 1
        assert group_norm(Point(x, y, t)) == pytest.approx(max(real), rel=1e-9)


@settings(max_examples=200, deadline=None)
@given(scales, points)
def test_norm_homogeneity(mu, p):
    n = group_norm(p)
    assert group_norm(dilate(mu, p)) == pytest.approx(mu * n, rel=1e-10, abs=1e-300)


def test_norm_continuous_at_origin():
    p = Point(1.3, -0.4, 0.8)
    values = [group_norm(dilate(eps, p)) for eps in (1e-1, 1e-2, 1e-3, 1e-4)]
    assert all(a > b for a, b in zip(values, values[1:]))
    assert values[-1] < 1e-3


def test_distance_reduces_to_norm():
    assert distance(Point(0.3, 0.1, -0.2), Point(0.3, 0.1, -0.2)) == 0.0
    assert distance(ORIGIN, Point(1, 0, 0)) == pytest.approx(1.0, rel=1e-12)


def test_distance_not_symmetric():
    z0 = Point(1.0, 0.5, 0.3)
    z = Point(-0.7, 0.2, -1.1)
    assert distance(z0, z) != pytest.approx(distance(z, z0), rel=1e-6)


@settings(max_examples=100, deadline=None)
@given(scales, points, points)
def test_distance_dilation_covariance(mu, z0, z):
    d = distance(z0, z)
    assert distance(dilate(mu, z0), dilate(mu, z)) == pytest.approx(
        mu * d, rel=1e-9, abs=1e-300
    )


def test_ball_membership():
    ball = BallSpec(ORIGIN, 1.0)
    assert contains(ball, ORIGIN)
    assert contains(ball, Point(1, 0, 0))  # boundary inclusive
    past = BallSpec(ORIGIN, 1.0, past_only=True)
    assert not contains(past, Point(0, 0, 1e-9))
    assert contains(past, Point(0, 0, -1e-3))


def test_ball_membership_vectorized():
    ball = BallSpec(Point(0.5, 0.0, 0.0), 1.0)
    xs = np.array([0.5, 0.5, 5.0])
    inside = contains(ball, Point(xs, np.zeros(3), np.zeros(3)))
    assert inside.tolist() == [True, True, False]


def test_cube_membership_translated_by_group_law():
    cube = CubeSpec(Point(1.0, 0.0, 2.0), 0.5)
    # group translation shears y by -tau * x, so membership is not Euclidean
    center_rel = compose(Point(1.0, 0.0, 2.0), Point(0.0, 0.0, 0.0))
    assert contains(cube, center_rel)
    assert not contains(cube, Point(1.6, 0.0, 2.0))


def test_cube_bad_radius():
    with pytest.raises(ValueError):
        CubeSpec(ORIGIN, 0.0)
    with pytest.raises(ValueError):
        BallSpec(ORIGIN, -1.0)


def test_lambda_estimate_golden():
    # frozen after the first 10^6-sample computation (deterministic seed)
    val = estimate_lambda(1.0, 1_000_000, seed=42)
    assert val == pytest.approx(2.108062744140625, abs=1e-9)
    assert val >= 1.0


def test_lambda_dilation_invariance():
    a = estimate_lambda(1.0, 50_000, seed=42)
    b = estimate_lambda(2.0, 50_000, seed=42)
    assert abs(a - b) < 1e-6


def test_lambda_rejects_small_samples():
    with pytest.raises(ValueError):
        estimate_lambda(1.0, 10)


def test_lambda_sandwich_holds_on_samples():
    lam = estimate_lambda(1.0, 50_000, seed=3)
    rng = np.random.default_rng(5)
    # cube C_{1/lam} samples land in B_1
    x = rng.uniform(-1, 1, 2000) / lam
    y = rng.uniform(-8, 8, 2000) / lam**3
    t = rng.uniform(-1, 1, 2000) / lam**2
    assert np.all(group_norm(Point(x, y, t)) <= 1.0 + 1e-9)
    # ball B_1 samples land in C_lam
    bx = rng.uniform(-1, 1, 4000)
    by = rng.uniform(-1, 1, 4000)
    bt = rng.uniform(-1, 1, 4000)
    keep = group_norm(Point(bx, by, bt)) <= 1.0
    assert np.all(np.abs(bx[keep]) <= lam)
    assert np.all(np.abs(by[keep]) <= 8 * lam**3)
    assert np.all(np.abs(bt[keep]) <= lam**2)
