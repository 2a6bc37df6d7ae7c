import numpy as np
import pytest

from dpm.errors import OutOfTubeError
from dpm.geometry import Circle, LevelSetCurve, load_level_set, save_level_set, unit_circle_level


@pytest.fixture(scope="module")
def level_circle():
    xs = np.linspace(-2.0, 2.0, 81)
    return LevelSetCurve.from_function(unit_circle_level, xs, xs, degree=4)


def test_circle_signed_distance():
    c = Circle()
    assert c.signed_distance([0.0, 0.0]) == pytest.approx(-1.0)
    assert c.signed_distance([2.0, 0.0]) == pytest.approx(1.0)


def test_circle_projection():
    c = Circle()
    cp = c.project(np.array([[0.0, 1.3], [0.6, 0.8]]))
    np.testing.assert_allclose(cp.position, [[0.0, 1.0], [0.6, 0.8]], atol=1e-14)
    np.testing.assert_allclose(cp.theta[0], np.pi / 2, atol=1e-14)
    np.testing.assert_allclose(cp.distance, [0.3, 0.0], atol=1e-14)


def test_circle_curvature_and_frame():
    assert np.all(Circle().point_at(np.linspace(0, 6, 7)).curvature == 1.0)
    c2 = Circle(radius=2.0)
    cp = c2.point_at(np.array([0.0, np.pi]))
    assert np.all(cp.curvature == 0.5)
    # theta is arclength: half a quarter of the circumference of radius 2
    np.testing.assert_allclose(cp.position[1], [0.0, 2.0], atol=1e-14)
    np.testing.assert_allclose(cp.tangent[0], [0.0, 1.0], atol=1e-14)


def test_out_of_tube():
    with pytest.raises(OutOfTubeError):
        Circle().project([[0.0, 0.0]])


def test_quadrature():
    c = Circle()
    _, w = c.curve_quadrature(4)
    np.testing.assert_allclose(w, np.pi / 2)
    cp, w = c.curve_quadrature(32)
    assert w.sum() == pytest.approx(2 * np.pi, abs=1e-12)
    assert np.sum(w * np.cos(cp.theta) ** 2) == pytest.approx(np.pi, abs=1e-12)


def test_level_set_distance_and_projection(level_circle):
    assert level_circle.signed_distance([[1.5, 0.0]])[0] == pytest.approx(0.5, abs=1e-10)
    cp = level_circle.project([[1.1, 1.1]])
    np.testing.assert_allclose(cp.position[0], [np.sqrt(0.5), np.sqrt(0.5)], atol=1e-10)
    np.testing.assert_allclose(cp.theta[0], np.pi / 4, atol=1e-8)


def test_level_set_curvature(level_circle):
    cp = level_circle.point_at(np.linspace(0.0, 6.0, 13))
    np.testing.assert_allclose(cp.curvature, 1.0, atol=1e-8)
    d1, d2 = level_circle.curvature_derivatives(cp.theta)
    assert np.max(np.abs(d1)) < 1e-6 and np.max(np.abs(d2)) < 1e-5
    assert level_circle.length == pytest.approx(2 * np.pi, abs=1e-10)


def test_level_set_matches_circle(level_circle):
    rng = np.random.default_rng(0)
    r = rng.uniform(0.6, 1.4, 50)
    phi = rng.uniform(0.0, 2 * np.pi, 50)
    p = np.stack([r * np.cos(phi), r * np.sin(phi)], axis=-1)
    a, b = Circle().project(p), level_circle.project(p)
    np.testing.assert_allclose(b.distance, a.distance, atol=1e-8)
    dtheta = np.angle(np.exp(1j * (b.theta - a.theta)))
    np.testing.assert_allclose(dtheta, 0.0, atol=1e-8)


@pytest.mark.parametrize("curve", ["circle", "level"])
def test_projection_reconstructs_point(curve, level_circle):
    c = Circle() if curve == "circle" else level_circle
    tol = 1e-10 if curve == "circle" else 1e-8
    rng = np.random.default_rng(1)
    p = rng.uniform(-1.3, 1.3, (200, 2))
    p = p[np.abs(np.hypot(p[:, 0], p[:, 1]) - 1.0) < 0.4]
    cp = c.project(p)
    np.testing.assert_allclose(cp.position + cp.distance[:, None] * cp.normal, p, atol=tol)


def test_level_set_file_round_trip(tmp_path):
    xs = np.linspace(-1.5, 1.5, 31)
    xx, yy = np.meshgrid(xs, xs, indexing="ij")
    save_level_set(tmp_path / "f.txt", xs, xs, unit_circle_level(xx, yy))
    xr, yr, v = load_level_set(tmp_path / "f.txt")
    np.testing.assert_allclose(xr, xs)
    np.testing.assert_allclose(v, unit_circle_level(xx, yy))
    c = LevelSetCurve.from_file(tmp_path / "f.txt", degree=4)
    assert c.length == pytest.approx(2 * np.pi, abs=1e-8)


def test_level_set_side_value_far_from_curve(level_circle):
    p = np.array([[0.0, 0.0], [1.9, 1.9], [1.02, 0.0], [0.0, -0.97]])
    v = level_circle.side_value(p)
    assert v[0] < 0 and v[1] > 0
    np.testing.assert_allclose(v[2:], [0.02, -0.03], atol=1e-10)
