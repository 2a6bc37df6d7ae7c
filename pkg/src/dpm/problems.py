"""Benchmark problems with manufactured exact solutions.

Forcing terms and the derivatives needed for boundary data are derived
symbolically from the exact solutions, ``f = u_t - lam(t) Lap u``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import sympy as sp

from .errors import ConfigurationError

x, y, t = sp.symbols("x y t", real=True)


def _fn(expr):
    f = sp.lambdify((x, y, t), expr, "numpy")

    def call(xx, yy, tt):
        xx = np.asarray(xx, dtype=float)
        yy = np.asarray(yy, dtype=float)
        return np.broadcast_to(np.asarray(f(xx, yy, tt), dtype=float), np.broadcast(xx, yy).shape).copy()

    return call


def _tfn(expr):
    f = sp.lambdify(t, expr, "numpy")
    return lambda tt: float(f(tt))


class SideFunctions:
    """Exact solution, diffusion coefficient and forcing on one subdomain."""

    def __init__(self, u_expr, lam_expr):
        self.u_expr = sp.sympify(u_expr)
        self.lam_expr = sp.sympify(lam_expr)
        u = self.u_expr
        f = sp.diff(u, t) - self.lam_expr * (sp.diff(u, x, 2) + sp.diff(u, y, 2))
        self.f_expr = sp.simplify(f)
        self.u = _fn(u)
        self.u_t = _fn(sp.diff(u, t))
        self.u_x = _fn(sp.diff(u, x))
        self.u_y = _fn(sp.diff(u, y))
        self.f = _fn(f)
        self.f_t = _fn(sp.diff(f, t))
        self.f_x = _fn(sp.diff(f, x))
        self.f_y = _fn(sp.diff(f, y))
        self.f_xx = _fn(sp.diff(f, x, 2))
        self.f_xy = _fn(sp.diff(f, x, y))
        self.f_yy = _fn(sp.diff(f, y, 2))
        self.lam = _tfn(self.lam_expr)
        self.dlam = _tfn(sp.diff(self.lam_expr, t))
        self.constant_lam = not self.lam_expr.has(t)

    def normal_derivative(self, p, n, tt) -> np.ndarray:
        return self.u_x(p[..., 0], p[..., 1], tt) * n[..., 0] + self.u_y(p[..., 0], p[..., 1], tt) * n[..., 1]

    def forcing_jets(self, p, n, kappa, tt) -> dict[str, np.ndarray]:
        """f, its normal derivatives, its time derivative and its second arclength derivative on the curve."""
        px, py = p[..., 0], p[..., 1]
        fx, fy = self.f_x(px, py, tt), self.f_y(px, py, tt)
        fxx, fxy, fyy = self.f_xx(px, py, tt), self.f_xy(px, py, tt), self.f_yy(px, py, tt)
        nx, ny = n[..., 0], n[..., 1]
        tx, ty = -ny, nx
        fd = fx * nx + fy * ny
        return {
            "f0": self.f(px, py, tt),
            "fd": fd,
            "fdd": fxx * nx * nx + 2 * fxy * nx * ny + fyy * ny * ny,
            "ft": self.f_t(px, py, tt),
            "f2": fxx * tx * tx + 2 * fxy * tx * ty + fyy * ty * ty - kappa * fd,
        }


@dataclass
class TestProblem:
    id: str
    description: str
    kind: str
    sides: dict[int, SideFunctions]
    regions: dict[int, str]
    independent_side: int | None = None
    final_time: float = 1.0
    radius: float = 1.0
    aux_half_width: float = 2.0
    domain_half_width: float = 2.0
    inner_half_width: float = 1.2
    notes: dict = field(default_factory=dict)

    __test__ = False  # not a pytest class

    @property
    def composite(self) -> bool:
        return self.kind == "composite"

    def side(self, s: int | None) -> SideFunctions:
        if not self.composite:
            if s not in (None, 1):
                raise ConfigurationError(f"{self.id} has a single domain")
            return self.sides[1]
        if s not in self.sides:
            raise ConfigurationError(f"{self.id}: side must be 1 or 2, got {s!r}")
        return self.sides[s]

    def exact(self, xx, yy, tt, side: int | None = None):
        return self.side(side).u(xx, yy, tt)

    def forcing(self, xx, yy, tt, side: int | None = None):
        return self.side(side).f(xx, yy, tt)

    def lam(self, tt, side: int | None = None) -> float:
        return self.side(side).lam(tt)

    def jumps(self, p, n, tt):
        """Interface jumps (u1 - u2, lam1 du1/dn - lam2 du2/dn) at curve points ``p``."""
        if not self.composite:
            raise ConfigurationError(f"{self.id} has no interface")
        s1, s2 = self.sides[1], self.sides[2]
        mu1 = s1.u(p[..., 0], p[..., 1], tt) - s2.u(p[..., 0], p[..., 1], tt)
        mu2 = s1.lam(tt) * s1.normal_derivative(p, n, tt) - s2.lam(tt) * s2.normal_derivative(p, n, tt)
        return mu1, mu2


def _single(pid, desc, u, lam, **kw) -> TestProblem:
    return TestProblem(pid, desc, "single", {1: SideFunctions(u, lam)}, {1: "inside"}, **kw)


def _composite(pid, desc, u1, u2, lam1, lam2, indep, **kw) -> TestProblem:
    sides = {1: SideFunctions(u1, lam1), 2: SideFunctions(u2, lam2)}
    return TestProblem(pid, desc, "composite", sides, {1: "outside", 2: "inside"}, independent_side=indep, **kw)


def _build(pid: str, tp3a_lambda: str = "text") -> TestProblem:
    e = sp.exp(-t)
    if pid == "tp1a":
        return _single(pid, "single circle, lam = 1", x**9 * y**8 * e, 1)
    if pid == "tp3a":
        if tp3a_lambda == "text":
            lam = sp.Rational(11, 10) + sp.sin(10 * sp.pi * t)
        elif tp3a_lambda == "caption":
            lam = sp.Rational(11, 10) + sp.sin(sp.pi * t)
        else:
            raise ConfigurationError(f"unknown tp3a lambda variant {tp3a_lambda!r}")
        return _single(pid, f"single circle, time-dependent lam ({tp3a_lambda})", x**9 * y**8 * e, lam,
                       notes={"lambda_variant": tp3a_lambda})
    if pid == "tp2a":
        return _composite(pid, "circular inclusion, smooth data", sp.sin(x) * sp.cos(y) * e,
                          (x**2 - y**2) * e, 10, 1, 2)
    if pid == "tp2b":
        return _composite(pid, "circular inclusion, oscillatory outer solution",
                          sp.sin(3 * sp.pi * x) * sp.cos(7 * sp.pi * y) * e, (x**2 - y**2) * e, 10, 1, 2)
    if pid == "tp2c":
        return _composite(pid, "circular inclusion, high contrast", sp.Integer(0),
                          1000 * sp.sin(10 * t) * x**4 * y**5, 1000, 1, 1)
    raise ConfigurationError(f"unknown problem {pid!r}; choose from {', '.join(PROBLEM_IDS)}")


PROBLEM_IDS = ("tp1a", "tp3a", "tp2a", "tp2b", "tp2c")
_CACHE: dict = {}


def get_problem(pid: str, tp3a_lambda: str = "text") -> TestProblem:
    key = (pid.lower(), tp3a_lambda)
    if key not in _CACHE:
        _CACHE[key] = _build(*key)
    return _CACHE[key]
