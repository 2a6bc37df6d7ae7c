"""Auxiliary rectangles, stencils and the point sets M, N and gamma."""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass

import numpy as np

from .errors import ClearanceError
from .geometry import Curve, CurvePoint


class StencilKind(enum.Enum):
    FIVE_POINT = "five"
    NINE_POINT = "nine"

    @property
    def radius(self) -> int:
        return 1 if self is StencilKind.FIVE_POINT else 2

    @classmethod
    def for_order(cls, order: int) -> "StencilKind":
        if order == 2:
            return cls.FIVE_POINT
        if order == 4:
            return cls.NINE_POINT
        raise ValueError(f"unsupported order {order}")


@dataclass(frozen=True)
class AuxiliaryGrid:
    """Uniform node-centred grid on ``[xmin, xmax] x [ymin, ymax]``.

    Grid functions are arrays of shape ``(nx, ny)`` indexed ``[i, j]`` for the
    node ``(xmin + i h, ymin + j h)``. The outer ring of nodes carries the
    zero closure of the auxiliary problem; the remaining nodes form M0.
    """

    xmin: float
    ymin: float
    h: float
    nx: int
    ny: int

    @classmethod
    def from_box(cls, xmin, xmax, ymin, ymax, nx, ny=None) -> "AuxiliaryGrid":
        ny = nx if ny is None else ny
        h = (xmax - xmin) / (nx - 1)
        if not np.isclose((ymax - ymin) / (ny - 1), h, rtol=1e-12):
            raise ValueError("grid spacing must be equal in x and y")
        return cls(float(xmin), float(ymin), float(h), int(nx), int(ny))

    @classmethod
    def square(cls, half_width: float, n: int) -> "AuxiliaryGrid":
        return cls.from_box(-half_width, half_width, -half_width, half_width, n)

    def covering(self, xmin, xmax, ymin, ymax) -> "AuxiliaryGrid":
        """Smallest sub-lattice of this grid containing the given box."""
        i0 = int(np.floor((xmin - self.xmin) / self.h + 1e-9))
        i1 = int(np.ceil((xmax - self.xmin) / self.h - 1e-9))
        j0 = int(np.floor((ymin - self.ymin) / self.h + 1e-9))
        j1 = int(np.ceil((ymax - self.ymin) / self.h - 1e-9))
        if i0 < 0 or j0 < 0 or i1 >= self.nx or j1 >= self.ny:
            raise ValueError("box is not inside the parent grid")
        return AuxiliaryGrid(self.xmin + i0 * self.h, self.ymin + j0 * self.h, self.h, i1 - i0 + 1, j1 - j0 + 1)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def size(self) -> int:
        return self.nx * self.ny

    @property
    def x(self) -> np.ndarray:
        return self.xmin + self.h * np.arange(self.nx)

    @property
    def y(self) -> np.ndarray:
        return self.ymin + self.h * np.arange(self.ny)

    @property
    def xmax(self) -> float:
        return self.xmin + self.h * (self.nx - 1)

    @property
    def ymax(self) -> float:
        return self.ymin + self.h * (self.ny - 1)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="ij")

    def interior_mask(self) -> np.ndarray:
        m = np.zeros(self.shape, dtype=bool)
        m[1:-1, 1:-1] = True
        return m

    def ring_mask(self) -> np.ndarray:
        return ~self.interior_mask()

    def node_coords(self, flat_index) -> np.ndarray:
        i, j = np.divmod(np.asarray(flat_index), self.ny)
        return np.stack([self.xmin + i * self.h, self.ymin + j * self.h], axis=-1)


def axis_offsets(i: np.ndarray, n: int, stencil: StencilKind) -> list[tuple[np.ndarray, int]]:
    """Per-axis stencil offsets at indices ``i``, as (selector, offset) pairs.

    The wide stencil switches to a one-sided six-point row on the first and
    last interior lines so that it never reaches past the closure ring.
    """
    if stencil is StencilKind.FIVE_POINT:
        return [(np.ones_like(i, dtype=bool), o) for o in (-1, 0, 1)]
    low = i == 1
    high = i == n - 2
    mid = ~(low | high)
    pairs = [(mid, o) for o in (-2, -1, 0, 1, 2)]
    pairs += [(low, o) for o in (-1, 0, 1, 2, 3, 4)]
    pairs += [(high, o) for o in (-4, -3, -2, -1, 0, 1)]
    return pairs


def stencil_hull(mask: np.ndarray, stencil: StencilKind) -> np.ndarray:
    """Union of the stencils of all nodes in ``mask`` (the set N of M)."""
    nx, ny = mask.shape
    ii, jj = np.nonzero(mask)
    out = np.zeros_like(mask)
    for sel, o in axis_offsets(ii, nx, stencil):
        ti, tj = ii[sel] + o, jj[sel]
        ok = (ti >= 0) & (ti < nx)
        out[ti[ok], tj[ok]] = True
    for sel, o in axis_offsets(jj, ny, stencil):
        ti, tj = ii[sel], jj[sel] + o
        ok = (tj >= 0) & (tj < ny)
        out[ti[ok], tj[ok]] = True
    return out


@dataclass
class PointSets:
    """Point sets of one subdomain on its auxiliary grid."""

    grid: AuxiliaryGrid
    stencil: StencilKind
    m_plus: np.ndarray
    m_minus: np.ndarray
    n_plus: np.ndarray
    n_minus: np.ndarray

    @property
    def gamma_mask(self) -> np.ndarray:
        return self.n_plus & self.n_minus

    @property
    def gamma(self) -> np.ndarray:
        """Flat indices of the grid boundary, in lexicographic (i, j) order."""
        return np.flatnonzero(self.gamma_mask)

    def tags(self) -> np.ndarray:
        """Integer node tags: 1 M+, 2 M-, 4 N+, 8 N-, 16 gamma (bitwise or)."""
        t = np.zeros(self.grid.shape, dtype=int)
        t |= self.m_plus * 1
        t |= self.m_minus * 2
        t |= self.n_plus * 4
        t |= self.n_minus * 8
        t |= self.gamma_mask * 16
        return t


def classify_points(grid: AuxiliaryGrid, inside: np.ndarray, m0: np.ndarray | None = None):
    """Split M0 into (M+, M-) according to the boolean field ``inside``."""
    m0 = grid.interior_mask() if m0 is None else m0
    inside = np.asarray(inside, dtype=bool)
    return m0 & inside, m0 & ~inside


def region_mask(grid: AuxiliaryGrid, curve: Curve, region: str, tol: float | None = None) -> np.ndarray:
    """Nodes of the closed inside region or the open outside region of ``curve``.

    Nodes with ``|d| <= tol`` (default ``1e-12 h``) are counted as inside.
    """
    tol = 1e-12 * grid.h if tol is None else tol
    xx, yy = grid.mesh()
    d = curve.side_value(np.stack([xx, yy], axis=-1))
    if region == "inside":
        return d <= tol
    if region == "outside":
        return d > tol
    raise ValueError(f"unknown region {region!r}")


def build_stencil_sets(grid: AuxiliaryGrid, m_plus, m_minus, stencil: StencilKind) -> PointSets:
    return PointSets(grid, stencil, m_plus, m_minus, stencil_hull(m_plus, stencil), stencil_hull(m_minus, stencil))


def check_clearance(sets: PointSets, physical_boundary: bool = False) -> None:
    """Gamma, and N+ unless the ring carries physical data, must avoid the closure ring."""
    ring = sets.grid.ring_mask()
    if np.any(sets.gamma_mask & ring):
        raise ClearanceError("grid boundary gamma reaches the closure ring of the auxiliary rectangle")
    if not physical_boundary and np.any(sets.n_plus & ring):
        raise ClearanceError("subdomain stencils reach the closure ring of the auxiliary rectangle")


@dataclass
class GammaProjection:
    """Normal coordinates of the gamma nodes relative to the curve."""

    index: np.ndarray
    foot: CurvePoint
    distance: np.ndarray
    dkappa: np.ndarray
    ddkappa: np.ndarray

    @property
    def theta(self) -> np.ndarray:
        return self.foot.theta

    @property
    def kappa(self) -> np.ndarray:
        return self.foot.curvature


def attach_projections(sets: PointSets, curve: Curve) -> GammaProjection:
    idx = sets.gamma
    pts = sets.grid.node_coords(idx)
    foot = curve.project(pts)
    d1, d2 = curve.curvature_derivatives(foot.theta)
    return GammaProjection(idx, foot, foot.distance, d1, d2)


def dump_grid_csv(path, sets: PointSets) -> None:
    """Debug dump with columns (i, j, x, y, tag); see ``PointSets.tags``."""
    tags = sets.tags()
    xx, yy = sets.grid.mesh()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "j", "x", "y", "tag"])
        for i, j in zip(*np.nonzero(tags)):
            w.writerow([i, j, f"{xx[i, j]:.12g}", f"{yy[i, j]:.12g}", tags[i, j]])
