"""Extension of Cauchy data from the curve to the grid boundary gamma.

A grid function on gamma is built from the Dirichlet trace ``a`` and Neumann
trace ``b`` of the solution by a Taylor expansion in the signed distance,

    v = a + d b + d^2/2 u_dd [+ d^3/6 u_ddd + d^4/24 u_dddd].

The higher normal derivatives come from the equation
``u_t = lam Lap u + f`` written in normal coordinates ``(d, theta)``, where
``Lap u = u_dd + kappa/H u_d + H^-1 d/dtheta(H^-1 u_theta)`` with
``H = 1 + d kappa``. Time derivatives of the traces are replaced by backward
differences over stored Cauchy data.

Every input may be an array broadcasting over gamma and over basis columns;
the extension is affine in the trace data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class TraceJets:
    """Arclength derivatives of the traces at the foot points of gamma.

    ``a[m]`` is the m-th derivative of the Dirichlet trace (m = 0..4) and
    ``b[m]`` that of the Neumann trace (m = 0..2).
    """

    a: list
    b: list


@dataclass
class ExtensionContext:
    distance: np.ndarray
    kappa: np.ndarray
    dkappa: np.ndarray
    ddkappa: np.ndarray
    order: int


@dataclass
class Jets:
    """All quantities the normal derivatives depend on, at one time level."""

    a: list
    b: list
    at0: object = 0.0   # time derivative of a
    at2: object = 0.0   # time derivative of a''
    att0: object = 0.0  # second time derivative of a
    bt0: object = 0.0   # time derivative of b
    f0: object = 0.0
    fd: object = 0.0
    fdd: object = 0.0
    ft: object = 0.0
    f2: object = 0.0    # second arclength derivative of f along the curve


def normal_derivative_2(j: Jets, kappa, lam):
    g0 = (j.at0 - j.f0) / lam
    return g0 - kappa * j.b[0] - j.a[2]


def normal_derivative_3(j: Jets, kappa, dkappa, lam, udd):
    g1 = (j.bt0 - j.fd) / lam
    return g1 + dkappa * j.a[1] + 2 * kappa * j.a[2] + kappa**2 * j.b[0] - j.b[2] - kappa * udd


def normal_derivative_4(j: Jets, kappa, dkappa, ddkappa, lam, dlam, udd, uddd):
    # d/dt of g = (u_t - f)/lam at d = 0, then of u_dd
    dg0 = (j.att0 - j.ft) / lam - dlam * (j.at0 - j.f0) / lam**2
    dudd = dg0 - kappa * j.bt0 - j.at2
    g2 = (dudd - j.fdd) / lam
    # second arclength derivative of u_dd on the curve
    udd_tt = (j.at2 - j.f2) / lam - ddkappa * j.b[0] - 2 * dkappa * j.b[1] - kappa * j.b[2] - j.a[4]
    return (
        g2
        - 6 * kappa * dkappa * j.a[1]
        - 6 * kappa**2 * j.a[2]
        - 2 * kappa**3 * j.b[0]
        + 2 * dkappa * j.b[1]
        + 4 * kappa * j.b[2]
        + 2 * kappa**2 * udd
        - udd_tt
        - kappa * uddd
    )


def extend(ctx: ExtensionContext, j: Jets, lam: float, dlam: float = 0.0):
    """Taylor extension of order ``ctx.order`` (2 or 4) evaluated at gamma."""
    d, k = ctx.distance, ctx.kappa
    if j.a[0] is not None and np.ndim(j.a[0]) == 2:
        d, k = d[:, None], k[:, None]
        dk, ddk = ctx.dkappa[:, None], ctx.ddkappa[:, None]
    else:
        dk, ddk = ctx.dkappa, ctx.ddkappa
    udd = normal_derivative_2(j, k, lam)
    v = j.a[0] + d * j.b[0] + 0.5 * d**2 * udd
    if ctx.order == 2:
        return v
    if ctx.order != 4:
        raise ValueError(f"unsupported extension order {ctx.order}")
    uddd = normal_derivative_3(j, k, dk, lam, udd)
    udddd = normal_derivative_4(j, k, dk, ddk, lam, dlam, udd, uddd)
    return v + d**3 / 6.0 * uddd + d**4 / 24.0 * udddd


@dataclass
class TimeWeights:
    """Backward-difference weights (unit step) for the trace time derivatives."""

    first: np.ndarray
    second: np.ndarray | None
    dt: float


@dataclass
class ExtensionAssembly:
    """Affine extension ``v = matrix @ c + offset`` in the unknown coefficients ``c``."""

    matrix: np.ndarray
    offset: np.ndarray

    def __call__(self, c) -> np.ndarray:
        return self.matrix @ c + self.offset


def build_extension(
    ctx: ExtensionContext,
    weights: TimeWeights,
    lam: float,
    dlam: float,
    unknown: TraceJets,
    known: TraceJets,
    history: list[TraceJets],
    forcing: dict,
) -> ExtensionAssembly:
    """Extension of the current level as an affine map of the unknowns.

    ``unknown`` holds jets of shape (|gamma|, n_unknowns) for each basis
    column, ``known`` the jets of the known part of the current traces and
    ``history`` the jets of past levels, newest first.
    """
    w1, w2, dt = weights.first, weights.second, weights.dt
    need = len(w1) - 1 if w2 is None else max(len(w1), len(w2)) - 1
    if len(history) < need:
        raise ValueError(f"extension needs {need} past levels, got {len(history)}")

    cols = Jets(unknown.a, unknown.b)
    cols.at0 = w1[0] / dt * unknown.a[0]
    cols.at2 = w1[0] / dt * unknown.a[2]
    cols.bt0 = w1[0] / dt * unknown.b[0]
    if w2 is not None:
        cols.att0 = w2[0] / dt**2 * unknown.a[0]

    def tdiff(w, get, scale):
        s = w[0] * get(known)
        for k in range(1, len(w)):
            s = s + w[k] * get(history[k - 1])
        return s / scale

    kn = Jets(known.a, known.b, **forcing)
    kn.at0 = tdiff(w1, lambda q: q.a[0], dt)
    kn.at2 = tdiff(w1, lambda q: q.a[2], dt)
    kn.bt0 = tdiff(w1, lambda q: q.b[0], dt)
    if w2 is not None:
        kn.att0 = tdiff(w2, lambda q: q.a[0], dt**2)

    return ExtensionAssembly(extend(ctx, cols, lam, dlam), extend(ctx, kn, lam, dlam))
