"""Trigonometric basis on a closed curve of length |Gamma|.

Basis functions are numbered from one: ``phi_1 = 1``,
``phi_{2k} = cos(2 pi k theta / |Gamma|)`` and
``phi_{2k+1} = sin(2 pi k theta / |Gamma|)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def n_funcs_for(modes: int) -> int:
    """Number of basis functions up to frequency ``modes``."""
    return 2 * modes + 1


class TrigBasis:
    def __init__(self, length: float, n_funcs: int):
        if n_funcs < 1 or n_funcs % 2 == 0:
            raise ValueError("n_funcs must be odd and positive")
        self.length = float(length)
        self.n_funcs = int(n_funcs)

    @property
    def max_frequency(self) -> int:
        return (self.n_funcs - 1) // 2

    def _layout(self, n: int):
        nu = np.arange(1, n + 1)
        k = nu // 2
        omega = 2.0 * np.pi * k / self.length
        # cos(x + m pi/2) for the cosine rows and the constant, sin(...) = cos(... - pi/2)
        phase = np.where((nu % 2 == 1) & (nu > 1), -0.5 * np.pi, 0.0)
        return omega, phase

    def matrix(self, theta, order: int = 0, n: int | None = None) -> np.ndarray:
        """Values of the ``order``-th derivatives of phi_1..phi_n at ``theta``."""
        n = self.n_funcs if n is None else n
        omega, phase = self._layout(n)
        theta = np.asarray(theta, dtype=float)
        arg = np.multiply.outer(theta, omega) + phase + order * 0.5 * np.pi
        out = omega**order * np.cos(arg)
        if order > 0:
            out[..., 0] = 0.0
        return out

    def eval_basis(self, nu: int, theta, order: int = 0) -> np.ndarray:
        if not 1 <= nu <= self.n_funcs:
            raise IndexError(f"basis index {nu} outside 1..{self.n_funcs}")
        return self.matrix(theta, order, nu)[..., nu - 1]

    def synthesize(self, coeffs, theta, order: int = 0) -> np.ndarray:
        coeffs = np.asarray(coeffs, dtype=float)
        return self.matrix(theta, order, len(coeffs)) @ coeffs

    def nodes(self, n_nodes: int) -> np.ndarray:
        return np.arange(n_nodes) * (self.length / n_nodes)

    def project_samples(self, samples) -> np.ndarray:
        """L2 projection of samples taken at ``nodes(len(samples))``.

        Uses the periodic trapezoid rule, which is exact for trigonometric
        polynomials of degree below half the number of samples.
        """
        samples = np.asarray(samples, dtype=float)
        m = samples.shape[-1]
        if m < 2 * self.max_frequency + 2:
            raise ValueError(
                f"{m} quadrature nodes under-resolve frequency {self.max_frequency}; need {2 * self.max_frequency + 2}"
            )
        spec = np.fft.rfft(samples, axis=-1) / m
        out = np.empty(samples.shape[:-1] + (self.n_funcs,))
        out[..., 0] = spec[..., 0].real
        k = np.arange(1, self.max_frequency + 1)
        out[..., 2 * k - 1] = 2.0 * spec[..., k].real
        out[..., 2 * k] = -2.0 * spec[..., k].imag
        return out


def trailing_magnitude(coeffs, tail: int = 2) -> float:
    """Largest magnitude among the last ``tail`` frequencies (cos and sin)."""
    coeffs = np.asarray(coeffs)
    return float(np.max(np.abs(coeffs[..., -2 * tail :])))


@dataclass
class CauchyCoefficients:
    dirichlet: np.ndarray
    neumann: np.ndarray

    def pad(self, n: int) -> "CauchyCoefficients":
        return CauchyCoefficients(_pad(self.dirichlet, n), _pad(self.neumann, n))


def _pad(c: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros(c.shape[:-1] + (n,))
    out[..., : c.shape[-1]] = c
    return out
