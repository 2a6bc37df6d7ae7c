"""Interface curves: explicit circles and curves given by a sampled level function.

Conventions shared by every curve:

* ``theta`` is arclength, measured counterclockwise from the point where the
  curve meets the positive x-axis ray from its center.
* The unit normal points out of the enclosed region, and the signed distance
  ``d`` is positive outside.
* Curvature is positive for a convex curve (``1/R`` for a circle), so that
  ``dT/dtheta = -kappa n`` and ``dn/dtheta = kappa T`` with the tangent
  ``T = (-n_y, n_x)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline, CubicSpline

from .errors import DegenerateLevelSetError, OutOfTubeError, ProjectionError


@dataclass(frozen=True)
class CurvePoint:
    """A batch of points on a curve, with the local frame.

    All fields are arrays with a common leading shape; ``position`` and
    ``normal`` carry a trailing axis of length 2.
    """

    position: np.ndarray
    theta: np.ndarray
    normal: np.ndarray
    curvature: np.ndarray
    distance: np.ndarray | None = None

    @property
    def tangent(self) -> np.ndarray:
        return np.stack([-self.normal[..., 1], self.normal[..., 0]], axis=-1)

    def __len__(self) -> int:
        return len(self.theta)


def _as_points(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != 2:
        raise ValueError("points must have a trailing axis of length 2")
    return p


class Curve:
    """Interface shared by the explicit and implicit curve descriptions."""

    length: float

    def signed_distance(self, p) -> np.ndarray:
        raise NotImplementedError

    def project(self, p) -> CurvePoint:
        raise NotImplementedError

    def side_value(self, p) -> np.ndarray:
        """Negative inside, positive outside; equals the signed distance near the curve."""
        return self.signed_distance(p)

    def point_at(self, theta) -> CurvePoint:
        raise NotImplementedError

    def curvature_derivatives(self, theta) -> tuple[np.ndarray, np.ndarray]:
        """First and second arclength derivatives of the curvature."""
        raise NotImplementedError

    def curve_quadrature(self, n_nodes: int) -> tuple[CurvePoint, np.ndarray]:
        """Periodic trapezoid rule with ``n_nodes`` nodes equispaced in arclength."""
        if n_nodes < 3:
            raise ValueError("need at least 3 quadrature nodes")
        theta = np.arange(n_nodes) * (self.length / n_nodes)
        return self.point_at(theta), np.full(n_nodes, self.length / n_nodes)

    def wrap(self, theta) -> np.ndarray:
        return np.mod(theta, self.length)


class Circle(Curve):
    def __init__(self, center=(0.0, 0.0), radius: float = 1.0, tube_width: float | None = None):
        if radius <= 0:
            raise ValueError("radius must be positive")
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.length = 2.0 * np.pi * self.radius
        self.tube_width = self.radius if tube_width is None else float(tube_width)

    def signed_distance(self, p) -> np.ndarray:
        p = _as_points(p)
        return np.hypot(p[..., 0] - self.center[0], p[..., 1] - self.center[1]) - self.radius

    def point_at(self, theta) -> CurvePoint:
        theta = self.wrap(np.asarray(theta, dtype=float))
        phi = theta / self.radius
        n = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        return CurvePoint(
            position=self.center + self.radius * n,
            theta=theta,
            normal=n,
            curvature=np.full(theta.shape, 1.0 / self.radius),
        )

    def project(self, p) -> CurvePoint:
        p = _as_points(p)
        d = self.signed_distance(p)
        if np.any(np.abs(d) >= self.tube_width):
            raise OutOfTubeError(f"|d| = {np.max(np.abs(d)):.3g} exceeds tube width {self.tube_width:.3g}")
        q = p - self.center
        phi = np.arctan2(q[..., 1], q[..., 0])
        cp = self.point_at(self.radius * phi)
        return CurvePoint(cp.position, cp.theta, cp.normal, cp.curvature, d)

    def curvature_derivatives(self, theta):
        z = np.zeros(np.shape(theta))
        return z, z.copy()


def _lagrange_coefficients(m: int) -> np.ndarray:
    """Monomial coefficients of the Lagrange polynomials on nodes 0..m.

    Row ``a`` holds the coefficients (ascending powers) of the polynomial that
    is one at node ``a`` and zero at the other nodes.
    """
    nodes = np.arange(m + 1, dtype=float)
    vander = np.vander(nodes, m + 1, increasing=True)
    return np.linalg.inv(vander).T


class LevelSetCurve(Curve):
    """Zero level of a function sampled on a uniform grid.

    The function is reconstructed locally by a tensor-product Lagrange
    polynomial of the given degree on the nearest ``(degree+1)**2`` samples.
    Arclength is obtained by tracing the curve along its tangent field and
    tabulating with periodic splines.
    """

    def __init__(
        self,
        xs,
        ys,
        values,
        degree: int = 4,
        *,
        tube_width: float | None = None,
        n_samples: int = 4096,
        tol: float = 1e-12,
        max_iter: int = 50,
    ):
        self.xs = np.asarray(xs, dtype=float)
        self.ys = np.asarray(ys, dtype=float)
        self.values = np.asarray(values, dtype=float)
        if self.values.shape != (len(self.xs), len(self.ys)):
            raise ValueError("values must have shape (len(xs), len(ys))")
        self.h = self.xs[1] - self.xs[0]
        if not np.isclose(self.ys[1] - self.ys[0], self.h, rtol=1e-12):
            raise ValueError("level-set grid must have equal spacing in x and y")
        self.degree = int(degree)
        if self.degree < 1 or min(len(self.xs), len(self.ys)) <= self.degree:
            raise ValueError("interpolation degree incompatible with grid size")
        self.tol = tol
        self.max_iter = max_iter
        self._coef = _lagrange_coefficients(self.degree)
        self._trace(n_samples, None)
        # retrace from the area centroid so the reference point does not
        # depend on which sample nodes happen to be inside
        self._trace(n_samples, self._centroid())
        kmax = np.max(np.abs(self._kappa_samples))
        self.tube_width = 1.0 / kmax if tube_width is None else float(tube_width)

    # construction helpers

    @classmethod
    def from_function(cls, func, xs, ys, degree: int = 4, **kw) -> "LevelSetCurve":
        xx, yy = np.meshgrid(xs, ys, indexing="ij")
        return cls(xs, ys, func(xx, yy), degree, **kw)

    @classmethod
    def from_file(cls, path, degree: int = 4, **kw) -> "LevelSetCurve":
        xs, ys, values = load_level_set(path)
        return cls(xs, ys, values, degree, **kw)

    # local interpolant

    def _weights(self, s: np.ndarray):
        m = self.degree
        powers = np.arange(m + 1)
        sp = s[:, None] ** powers
        w0 = sp @ self._coef.T
        dp = np.zeros_like(sp)
        dp[:, 1:] = powers[1:] * sp[:, :-1]
        w1 = dp @ self._coef.T
        ddp = np.zeros_like(sp)
        ddp[:, 2:] = powers[2:] * (powers[2:] - 1) * sp[:, :-2]
        w2 = ddp @ self._coef.T
        return w0, w1, w2

    def evaluate(self, p):
        """Interpolated value, gradient and Hessian at points ``p`` of shape (k, 2)."""
        p = np.atleast_2d(_as_points(p))
        m = self.degree
        h = self.h
        fx = (p[:, 0] - self.xs[0]) / h
        fy = (p[:, 1] - self.ys[0]) / h
        i0 = np.clip(np.rint(fx).astype(int) - m // 2, 0, len(self.xs) - m - 1)
        j0 = np.clip(np.rint(fy).astype(int) - m // 2, 0, len(self.ys) - m - 1)
        wx0, wx1, wx2 = self._weights(fx - i0)
        wy0, wy1, wy2 = self._weights(fy - j0)
        off = np.arange(m + 1)
        block = self.values[(i0[:, None] + off)[:, :, None], (j0[:, None] + off)[:, None, :]]

        def contract(wx, wy):
            return np.einsum("ka,kab,kb->k", wx, block, wy)

        f = contract(wx0, wy0)
        grad = np.stack([contract(wx1, wy0), contract(wx0, wy1)], axis=-1) / h
        hess = np.empty((len(p), 2, 2))
        hess[:, 0, 0] = contract(wx2, wy0) / h**2
        hess[:, 1, 1] = contract(wx0, wy2) / h**2
        hess[:, 0, 1] = hess[:, 1, 0] = contract(wx1, wy1) / h**2
        return f, grad, hess

    def signed_distance(self, p) -> np.ndarray:
        return self.project(p).distance

    def side_value(self, p) -> np.ndarray:
        # sign of the level function away from the curve, projected distance close to it
        p = _as_points(p)
        flat = p.reshape(-1, 2)
        f, g, _ = self.evaluate(flat)
        gn = np.linalg.norm(g, axis=-1)
        est = f / np.maximum(gn, 1e-300)
        near = np.abs(est) < 0.5 * self.tube_width
        out = est.copy()
        if near.any():
            out[near] = self.project(flat[near]).distance
        return out.reshape(p.shape[:-1])

    def _frame(self, q):
        f, g, H = self.evaluate(q)
        gn = np.linalg.norm(g, axis=-1)
        if np.any(gn < 1e-10):
            raise DegenerateLevelSetError("vanishing level-set gradient near the curve")
        n = g / gn[:, None]
        kappa = (
            H[:, 0, 0] * g[:, 1] ** 2 - 2 * H[:, 0, 1] * g[:, 0] * g[:, 1] + H[:, 1, 1] * g[:, 0] ** 2
        ) / gn**3
        return n, kappa

    def _foot(self, p: np.ndarray) -> np.ndarray:
        """Closest curve point by Newton on (F = 0, (p - q) x grad F = 0)."""
        q = p.copy()
        for _ in range(3):
            f, g, _ = self.evaluate(q)
            gg = np.einsum("ki,ki->k", g, g)
            if np.any(gg < 1e-20):
                raise DegenerateLevelSetError("vanishing level-set gradient near the curve")
            q = q - (f / gg)[:, None] * g
        for _ in range(self.max_iter):
            f, g, H = self.evaluate(q)
            gn = np.linalg.norm(g, axis=-1)
            r = p - q
            e1 = f
            e2 = r[:, 0] * g[:, 1] - r[:, 1] * g[:, 0]
            J = np.empty((len(q), 2, 2))
            J[:, 0, :] = g
            J[:, 1, 0] = -g[:, 1] + r[:, 0] * H[:, 0, 1] - r[:, 1] * H[:, 0, 0]
            J[:, 1, 1] = g[:, 0] + r[:, 0] * H[:, 1, 1] - r[:, 1] * H[:, 0, 1]
            step = np.linalg.solve(J, -np.stack([e1, e2], axis=-1)[..., None])[..., 0]
            q = q + step
            res = np.maximum(np.abs(e1), np.abs(e2)) / gn
            if np.all(np.maximum(res, np.linalg.norm(step, axis=-1)) < self.tol):
                return q
        raise ProjectionError(f"projection did not converge, residual {np.max(res):.3g}")

    # arclength parametrisation

    def _centroid(self) -> np.ndarray:
        gx, gw = np.polynomial.legendre.leggauss(4)
        s = np.linspace(0.0, self._s_end, len(self._sample_s) + 1)
        ds = np.diff(s)
        nodes = (0.5 * (s[:-1] + s[1:])[:, None] + 0.5 * ds[:, None] * gx).ravel()
        w = (0.5 * ds[:, None] * gw).ravel()
        (x, y), (dx, dy) = self._param(nodes).T, self._dparam(nodes).T
        area = 0.5 * np.sum(w * (x * dy - y * dx))
        return np.array([np.sum(w * x * x * dy), -np.sum(w * y * y * dx)]) / (2.0 * area)

    def _start_point(self, center=None) -> np.ndarray:
        if center is None:
            inside = self.values < 0
            if not inside.any():
                raise DegenerateLevelSetError("level function has no negative region")
            xx, yy = np.meshgrid(self.xs, self.ys, indexing="ij")
            c = np.array([xx[inside].mean(), yy[inside].mean()])
        else:
            c = np.asarray(center, dtype=float)
        xr = np.linspace(c[0], self.xs[-1], 4 * len(self.xs))
        fr = self.evaluate(np.stack([xr, np.full_like(xr, c[1])], axis=-1))[0]
        k = np.flatnonzero((fr[:-1] < 0) & (fr[1:] >= 0))
        if len(k) == 0:
            raise DegenerateLevelSetError("no zero crossing along the positive x ray")
        a, b = xr[k[0]], xr[k[0] + 1]
        for _ in range(200):
            mid = 0.5 * (a + b)
            if self.evaluate([[mid, c[1]]])[0][0] < 0:
                a = mid
            else:
                b = mid
            if b - a < 1e-15:
                break
        self.center = c
        return self._foot(np.array([[0.5 * (a + b), c[1]]]))[0]

    def _trace(self, n_samples: int, center) -> None:
        x0 = self._start_point(center)
        n0, _ = self._frame(x0[None])
        t0 = np.array([-n0[0, 1], n0[0, 0]])
        span = 4.0 * ((self.xs[-1] - self.xs[0]) + (self.ys[-1] - self.ys[0]))
        s_min = 4 * self.h

        def rhs(_s, x):
            n, _ = self._frame(x[None])
            return np.array([-n[0, 1], n[0, 0]])

        def closure(s, x):
            return 1.0 if s < s_min else float((x - x0) @ t0)

        closure.terminal = True
        closure.direction = 1.0
        sol = solve_ivp(rhs, (0.0, span), x0, method="RK45", rtol=1e-12, atol=1e-13,
                        events=closure, dense_output=True)
        if not sol.t_events[0].size:
            raise DegenerateLevelSetError("curve tracing did not close")
        s_end = sol.t_events[0][0]
        s = np.linspace(0.0, s_end, n_samples + 1)
        pts = self._foot(sol.sol(s[:-1]).T)
        pts = np.vstack([pts, pts[:1]])
        self._param = CubicSpline(s, pts, bc_type="periodic")
        self._dparam = self._param.derivative()
        # arclength table by 4-point Gauss-Legendre on each parameter interval
        gx, gw = np.polynomial.legendre.leggauss(4)
        ds = np.diff(s)
        mid = 0.5 * (s[:-1] + s[1:])
        nodes = mid[:, None] + 0.5 * ds[:, None] * gx
        speed = np.linalg.norm(self._dparam(nodes.ravel()), axis=-1).reshape(nodes.shape)
        seg = 0.5 * ds * (speed @ gw)
        sigma = np.concatenate([[0.0], np.cumsum(seg)])
        self.length = float(sigma[-1])
        self._s_end = s_end
        self._sigma = CubicHermiteSpline(s, sigma, np.linalg.norm(self._dparam(s), axis=-1))
        self._samples = pts[:-1]
        self._sample_s = s[:-1]
        n, kappa = self._frame(self._samples)
        self._kappa_samples = kappa
        # curvature derivatives by trigonometric interpolation of kappa(theta)
        m = min(1024, n_samples)
        theta = np.arange(m) * (self.length / m)
        _, kap = self._frame(self._position_at(theta))
        self._kappa_fft = np.fft.rfft(kap) / m
        self._kappa_freq = 2 * np.pi * np.arange(len(self._kappa_fft)) / self.length
        self._kappa_fft[-1] *= 0.0 if m % 2 == 0 else 1.0

    def _param_of_theta(self, theta: np.ndarray) -> np.ndarray:
        s = theta * (self._s_end / self.length)
        for _ in range(20):
            r = self._sigma(s) - theta
            s = s - r / self._sigma.derivative()(s)
            if np.all(np.abs(r) < 1e-15 * self.length):
                break
        return s

    def _position_at(self, theta: np.ndarray) -> np.ndarray:
        theta = self.wrap(np.asarray(theta, dtype=float))
        flat = theta.ravel()
        q = self._foot(self._param(self._param_of_theta(flat)))
        return q.reshape(theta.shape + (2,))

    def point_at(self, theta) -> CurvePoint:
        theta = self.wrap(np.asarray(theta, dtype=float))
        q = self._position_at(theta).reshape(-1, 2)
        n, kappa = self._frame(q)
        shp = theta.shape
        return CurvePoint(q.reshape(shp + (2,)), theta, n.reshape(shp + (2,)), kappa.reshape(shp))

    def _theta_of_position(self, q: np.ndarray) -> np.ndarray:
        d2 = (q[:, None, 0] - self._samples[None, :, 0]) ** 2 + (q[:, None, 1] - self._samples[None, :, 1]) ** 2
        s = self._sample_s[np.argmin(d2, axis=1)]
        dd = self._dparam.derivative()
        for _ in range(20):
            r = self._param(s) - q
            x1 = self._dparam(s)
            x2 = dd(s)
            g = np.einsum("ki,ki->k", r, x1)
            step = g / (np.einsum("ki,ki->k", x1, x1) + np.einsum("ki,ki->k", r, x2))
            s = s - step
            if np.all(np.abs(step) < 1e-15 * self._s_end):
                break
        return self.wrap(self._sigma(np.mod(s, self._s_end)))

    def project(self, p) -> CurvePoint:
        p = _as_points(p)
        shp = p.shape[:-1]
        flat = p.reshape(-1, 2)
        q = self._foot(flat)
        n, kappa = self._frame(q)
        d = np.einsum("ki,ki->k", flat - q, n)
        if np.any(np.abs(d) >= self.tube_width):
            raise OutOfTubeError(f"|d| = {np.max(np.abs(d)):.3g} exceeds tube width {self.tube_width:.3g}")
        theta = self._theta_of_position(q)
        return CurvePoint(q.reshape(shp + (2,)), theta.reshape(shp), n.reshape(shp + (2,)),
                          kappa.reshape(shp), d.reshape(shp))

    def curvature_derivatives(self, theta):
        theta = np.asarray(theta, dtype=float)
        w = self._kappa_freq
        e = np.exp(1j * np.multiply.outer(theta, w))
        c = self._kappa_fft
        d1 = 2 * np.real(e @ (1j * w * c))
        d2 = 2 * np.real(e @ (-(w**2) * c))
        return d1, d2


def unit_circle_level(x, y):
    return x**2 + y**2 - 1.0


LEVEL_SETS = {"unit_circle": unit_circle_level}


def save_level_set(path, xs, ys, values) -> None:
    """Write a sampled level function: header ``nx ny xmin xmax ymin ymax``, then row-major values."""
    xs = np.asarray(xs)
    ys = np.asarray(ys)
    values = np.asarray(values)
    with open(path, "w") as fh:
        fh.write(f"{len(xs)} {len(ys)} {float(xs[0])!r} {float(xs[-1])!r} {float(ys[0])!r} {float(ys[-1])!r}\n")
        np.savetxt(fh, values.reshape(1, -1) if values.ndim == 1 else values, fmt="%.17g")


def load_level_set(path):
    text = Path(path).read_text().split()
    nx, ny = int(text[0]), int(text[1])
    xmin, xmax, ymin, ymax = map(float, text[2:6])
    values = np.array(text[6:], dtype=float)
    if values.size != nx * ny:
        raise ValueError(f"expected {nx * ny} values, found {values.size}")
    return np.linspace(xmin, xmax, nx), np.linspace(ymin, ymax, ny), values.reshape(nx, ny)
