"""Auxiliary problem on a rectangle and the difference potentials built on it.

The auxiliary problem is ``lam * Lap_h u - sigma u = q`` on M0 with zero
values on the closure ring. Two interchangeable backends are provided:

``"kron"``
    Fast diagonalisation. The 2D operator is a Kronecker sum of the 1D
    operator ``D`` with itself, so with ``D = V diag(e) V^-1`` a solve costs
    four dense matrix products. Changing ``lam`` or ``sigma`` is free.
``"lu"``
    Sparse LU factorisation of the assembled operator.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grid import AuxiliaryGrid, PointSets, StencilKind
from .operators import second_difference_1d, time_discrete_operator

_EIG_CACHE: dict = {}


def _eig_1d(n: int, h: float, stencil: StencilKind):
    key = (n, h, stencil)
    if key not in _EIG_CACHE:
        d = second_difference_1d(n, h, stencil).toarray()[1:-1, 1:-1]
        if stencil is StencilKind.FIVE_POINT:
            e, v = la.eigh(d)
            vinv = v.T
        else:
            e, v = la.eig(d)
            if np.max(np.abs(e.imag)) > 1e-8 * np.max(np.abs(e)):
                raise np.linalg.LinAlgError("1D operator has complex spectrum")
            e, v = e.real, v.real
            vinv = la.inv(v)
        if len(_EIG_CACHE) > 8:
            _EIG_CACHE.clear()
        _EIG_CACHE[key] = (e, v, vinv)
    return _EIG_CACHE[key]


class ApSolver:
    """Solver for the auxiliary problem with fixed ``lam`` and ``sigma``."""

    def __init__(self, grid: AuxiliaryGrid, stencil: StencilKind, lam: float, sigma: float, backend: str = "kron"):
        self.grid = grid
        self.stencil = stencil
        self.lam = float(lam)
        self.sigma = float(sigma)
        self.backend = backend
        if backend == "kron":
            ex, self._vx, self._vxi = _eig_1d(grid.nx, grid.h, stencil)
            ey, self._vy, self._vyi = _eig_1d(grid.ny, grid.h, stencil)
            self._inv = 1.0 / (self.lam * (ex[:, None] + ey[None, :]) - self.sigma)
        elif backend == "lu":
            mask = grid.interior_mask().ravel()
            self._idx = np.flatnonzero(mask)
            op = time_discrete_operator(grid, stencil, lam, sigma)
            self._lu = spla.splu(op[self._idx][:, self._idx].tocsc())
        else:
            raise ValueError(f"unknown backend {backend!r}")

    @property
    def token(self) -> tuple:
        """Identifies the operator; solvers with equal tokens are interchangeable."""
        return (self.grid, self.stencil, self.lam, self.sigma)

    def solve(self, q: np.ndarray) -> np.ndarray:
        """Solve for one or several right-hand sides.

        ``q`` has shape ``(nx, ny)`` or ``(k, nx, ny)``; values on the ring are
        ignored. The result vanishes on the ring.
        """
        q = np.asarray(q, dtype=float)
        single = q.ndim == 2
        qs = q[None] if single else q
        nx, ny = self.grid.shape
        out = np.zeros_like(qs)
        if self.backend == "kron":
            k = len(qs)
            inner = qs[:, 1:-1, 1:-1]
            mx, my = nx - 2, ny - 2
            # Vx^-1 Q Vy^-T, batched as plain 2D products
            t = (self._vxi @ inner.transpose(1, 0, 2).reshape(mx, k * my)).reshape(mx, k, my)
            t = t.transpose(1, 0, 2).reshape(k * mx, my) @ self._vyi.T
            t = t.reshape(k, mx, my) * self._inv
            t = (self._vx @ t.transpose(1, 0, 2).reshape(mx, k * my)).reshape(mx, k, my)
            t = t.transpose(1, 0, 2).reshape(k * mx, my) @ self._vy.T
            out[:, 1:-1, 1:-1] = t.reshape(k, mx, my)
        else:
            flat = qs.reshape(len(qs), -1)
            sol = self._lu.solve(np.ascontiguousarray(flat[:, self._idx].T))
            out.reshape(len(qs), -1)[:, self._idx] = sol.T
        return out[0] if single else out


class DifferencePotentials:
    """Particular solutions, difference potentials and their traces on gamma."""

    def __init__(self, sets: PointSets, solver: ApSolver):
        self.sets = sets
        self.solver = solver
        grid = sets.grid
        self.gamma = sets.gamma
        op = time_discrete_operator(grid, sets.stencil, solver.lam, solver.sigma)
        # L applied to densities supported on gamma, kept on the M- rows. With
        # u equal to the solution on N+ and zero elsewhere, L u is F on M+ and
        # L u_gamma on M-, which gives u = G F + P u_gamma.
        mminus = sets.m_minus.ravel().astype(float)
        self.l_gamma = (sp.diags(mminus) @ op[:, self.gamma]).tocsr()

    def _to_grid(self, flat: np.ndarray) -> np.ndarray:
        shape = self.sets.grid.shape
        return flat.reshape(flat.shape[:-1] + shape)

    def particular_solution(self, f: np.ndarray) -> np.ndarray:
        """G F: the auxiliary solution for F restricted to M+ (zero on M-)."""
        f = np.asarray(f, dtype=float)
        q = np.where(self.sets.m_plus, f, 0.0)
        return self.solver.solve(q)

    def difference_potential(self, v_gamma: np.ndarray) -> np.ndarray:
        """P v: the auxiliary solution with right-hand side L v on M- (zero on M+)."""
        v = np.asarray(v_gamma, dtype=float)
        q = (self.l_gamma @ v.T).T
        return self.solver.solve(self._to_grid(q))

    def green(self, f: np.ndarray, v_gamma: np.ndarray) -> np.ndarray:
        """G F + P v with a single solve (generalised Green formula)."""
        q = np.where(self.sets.m_plus, f, 0.0) + self._to_grid((self.l_gamma @ np.asarray(v_gamma).T).T)
        return self.solver.solve(q)

    def trace(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u)
        return u.reshape(u.shape[:-2] + (-1,))[..., self.gamma]

    def p_gamma(self, v_gamma: np.ndarray) -> np.ndarray:
        """Trace on gamma of the difference potential; ``v_gamma`` may be (|gamma|, k)."""
        v = np.asarray(v_gamma, dtype=float)
        if v.ndim == 1:
            return self.trace(self.difference_potential(v))
        return self.trace(self.difference_potential(v.T)).T
