"""Boundary equations with projection and their least-squares solution.

For every subdomain the extension of the Cauchy data must satisfy
``v - P_gamma v = Tr G F``. With ``v = E c + k`` this gives the block
``A = E - P_gamma E`` and the right-hand side ``Tr G(F + L k) - k``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .auxiliary import DifferencePotentials
from .errors import IllPosedBasisError


def assemble_block(pot: DifferencePotentials, ext_matrix: np.ndarray) -> np.ndarray:
    """Columns ``E - P_gamma E``, one auxiliary solve per column."""
    return ext_matrix - pot.p_gamma(ext_matrix)


def block_rhs(pot: DifferencePotentials, f: np.ndarray, offset: np.ndarray) -> np.ndarray:
    """``Tr G(F + L k) - k`` for the known part ``k`` of the extension."""
    return pot.trace(pot.green(f, offset)) - offset


@dataclass(frozen=True)
class InterfaceCoupling:
    """Interface conditions relating the Cauchy data of both sides.

    ``[u] = mu1`` and ``[lam du/dn] = mu2`` with ``[w] = w_1 - w_2``.
    """

    lam1: float
    lam2: float
    independent_side: int = 2

    def dependent_maps(self):
        """Return (scale of Neumann data, sign of mu1, scale of mu2) for the dependent side."""
        if self.independent_side == 2:
            return self.lam2 / self.lam1, 1.0, 1.0 / self.lam1
        if self.independent_side == 1:
            return self.lam1 / self.lam2, -1.0, -1.0 / self.lam2
        raise ValueError("independent side must be 1 or 2")


def couple_interface(c_indep, coupling: InterfaceCoupling, mu1, mu2):
    """Cauchy coefficients of both sides from the independent side's coefficients.

    ``c_indep`` is a pair (dirichlet, neumann); ``mu1`` and ``mu2`` are jump
    coefficients in the same basis. Returns ((a1, b1), (a2, b2)).
    """
    a, b = (np.asarray(v, dtype=float) for v in c_indep)
    n = max(len(a), len(mu1))
    a, b = _pad(a, n), _pad(b, n)
    mu1, mu2 = _pad(np.asarray(mu1, dtype=float), n), _pad(np.asarray(mu2, dtype=float), n)
    scale, s1, s2 = coupling.dependent_maps()
    dep = (a + s1 * mu1, scale * b + s2 * mu2)
    return ((dep, (a, b)) if coupling.independent_side == 2 else ((a, b), dep))


def _pad(v, n):
    out = np.zeros(n)
    out[: len(v)] = v
    return out


class LeastSquares:
    """Column-scaled pivoted QR solver for the stacked boundary equations."""

    def __init__(self, a: np.ndarray, rank_tol: float = 1e-10):
        a = np.asarray(a, dtype=float)
        norms = np.linalg.norm(a, axis=0)
        if np.any(norms == 0):
            raise IllPosedBasisError("boundary equations have a zero column")
        self.scale = 1.0 / norms
        q, r, perm = la.qr(a * self.scale, mode="economic", pivoting=True)
        diag = np.abs(np.diag(r))
        self.rank_ratio = diag[-1] / diag[0]
        if self.rank_ratio < rank_tol:
            raise IllPosedBasisError(
                f"boundary equations are rank deficient (|R_nn|/|R_11| = {self.rank_ratio:.2e} < {rank_tol:g})"
            )
        self.a = a
        self._q, self._r, self._perm = q, r, perm

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        z = la.solve_triangular(self._r, self._q.T @ rhs)
        c = np.empty_like(z)
        c[self._perm] = z
        return c * self.scale

    def residual(self, c, rhs) -> float:
        return float(np.linalg.norm(self.a @ c - rhs))


def solve_bep(blocks, rhs, rank_tol: float = 1e-10):
    """Least-squares solution of the stacked blocks; returns (c, residual norm)."""
    a = np.vstack(blocks)
    r = np.concatenate(rhs)
    ls = LeastSquares(a, rank_tol)
    c = ls.solve(r)
    return c, ls.residual(c, r)


def single_domain_bep(a: np.ndarray, rhs: np.ndarray, dirichlet_coeffs: np.ndarray, rank_tol: float = 1e-10):
    """Solve for Neumann coefficients when the Dirichlet coefficients are known.

    ``a`` holds the Dirichlet columns followed by the Neumann columns; the
    known columns are moved to the right-hand side.
    """
    n0 = len(dirichlet_coeffs)
    c, res = solve_bep([a[:, n0:]], [rhs - a[:, :n0] @ dirichlet_coeffs], rank_tol)
    return c, res
