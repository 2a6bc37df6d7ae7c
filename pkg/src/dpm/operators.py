"""Discrete Laplacians, the time-discrete operator and BDF bookkeeping."""

from __future__ import annotations

from collections import deque
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from .grid import AuxiliaryGrid, StencilKind

# (-1, 16, -30, 16, -1)/12 and the one-sided row used on the first interior
# line, taking the ring value at offset -1 and reaching to offset +4.
WIDE_ROW = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
EDGE_ROW = np.array([10.0, -15.0, -4.0, 14.0, -6.0, 1.0]) / 12.0


def fd_weights(z: float, x, m: int) -> np.ndarray:
    """Finite-difference weights for the m-th derivative at ``z`` on nodes ``x`` (Fornberg)."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    c = np.zeros((n, m + 1))
    c1, c4 = 1.0, x[0] - z
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2, c5, c4 = 1.0, c4, x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, m]


def backward_weights(derivative: int, n_points: int) -> np.ndarray:
    """Backward-difference weights on levels t, t - dt, ..., for unit step."""
    return fd_weights(0.0, -np.arange(n_points), derivative)


def sigma_of(order: int, dt: float) -> float:
    """Shift of the time-discrete operator, leading BDF weight over dt."""
    return float(backward_weights(1, order + 1)[0]) / dt


def second_difference_1d(n: int, h: float, stencil: StencilKind) -> sp.csr_matrix:
    """1D second-difference operator on nodes 0..n-1 with zero rows at both ends."""
    rows, cols, vals = [], [], []

    def put(i, offs, w):
        rows.extend([i] * len(offs))
        cols.extend(i + o for o in offs)
        vals.extend(w)

    for i in range(1, n - 1):
        if stencil is StencilKind.FIVE_POINT:
            put(i, (-1, 0, 1), (1.0, -2.0, 1.0))
        elif i == 1:
            put(i, range(-1, 5), EDGE_ROW)
        elif i == n - 2:
            put(i, range(-4, 2), EDGE_ROW[::-1])
        else:
            put(i, range(-2, 3), WIDE_ROW)
    return sp.csr_matrix((np.array(vals) / h**2, (rows, cols)), shape=(n, n))


def laplacian_matrix(grid: AuxiliaryGrid, stencil: StencilKind) -> sp.csr_matrix:
    """Sparse discrete Laplacian on all nodes; rows on the closure ring are zero."""
    dx = second_difference_1d(grid.nx, grid.h, stencil)
    dy = second_difference_1d(grid.ny, grid.h, stencil)
    lap = sp.kron(dx, sp.identity(grid.ny)) + sp.kron(sp.identity(grid.nx), dy)
    keep = sp.diags(grid.interior_mask().ravel().astype(float))
    return (keep @ lap).tocsr()


def apply_laplacian(u: np.ndarray, grid: AuxiliaryGrid, stencil: StencilKind) -> np.ndarray:
    """Discrete Laplacian of a grid function; zero on the closure ring."""
    dx = second_difference_1d(grid.nx, grid.h, stencil)
    dy = second_difference_1d(grid.ny, grid.h, stencil)
    out = dx @ u + (dy @ u.T).T
    out[~grid.interior_mask()] = 0.0
    return out


def boundary_corrected_row(grid: AuxiliaryGrid, node: tuple[int, int]) -> dict[tuple[int, int], float]:
    """Weights of the wide Laplacian at a node one line in from the closure ring."""
    i, j = node
    if not (0 < i < grid.nx - 1 and 0 < j < grid.ny - 1):
        raise ValueError("node must be interior")
    if i not in (1, grid.nx - 2) and j not in (1, grid.ny - 2):
        raise ValueError("node is not adjacent to the closure ring")
    dx = second_difference_1d(grid.nx, grid.h, StencilKind.NINE_POINT).getrow(i)
    dy = second_difference_1d(grid.ny, grid.h, StencilKind.NINE_POINT).getrow(j)
    row: dict[tuple[int, int], float] = {}
    for k, w in zip(dx.indices, dx.data):
        row[(k, j)] = row.get((k, j), 0.0) + w
    for k, w in zip(dy.indices, dy.data):
        row[(i, k)] = row.get((i, k), 0.0) + w
    return row


def time_discrete_operator(grid: AuxiliaryGrid, stencil: StencilKind, lam: float, sigma: float) -> sp.csr_matrix:
    """L = lam * Lap_h - sigma I on M0, identically zero on the ring rows."""
    keep = sp.diags(grid.interior_mask().ravel().astype(float))
    return (lam * laplacian_matrix(grid, stencil) - sigma * keep).tocsr()


class BdfHistory:
    """Rolling window of past time levels, newest first."""

    def __init__(self, depth: int):
        self.depth = depth
        self._levels: deque = deque(maxlen=depth)

    def push(self, value) -> None:
        self._levels.appendleft(value)

    def __getitem__(self, k):
        return self._levels[k]

    def __len__(self) -> int:
        return len(self._levels)

    @property
    def full(self) -> bool:
        return len(self._levels) == self.depth


def bdf_rhs(history, forcing: np.ndarray, order: int, dt: float) -> np.ndarray:
    """Right-hand side F = -f + sum_j w_j u^{i+1-j} / dt of the BDF step.

    ``history`` lists the past levels newest first; with weights ``w`` of the
    backward first derivative this is ``-f - (sigma/3)(4u^i - u^{i-1})`` for
    order two.
    """
    w = backward_weights(1, order + 1)
    if len(history) < order:
        raise ValueError(f"order {order} needs {order} past levels, got {len(history)}")
    out = -np.asarray(forcing, dtype=float).copy()
    for k in range(order):
        out = out + (w[k + 1] / dt) * history[k]
    return out


def exact_fraction_weights(derivative: int, n_points: int) -> list[Fraction]:
    """Backward weights as exact fractions (used in reports and tests)."""
    return [Fraction(float(v)).limit_denominator(1000) for v in backward_weights(derivative, n_points)]
