"""Laurent coefficients from trapezoidal sampling on circles."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_EPS = np.finfo(float).eps


class RadiusInconsistencyError(ArithmeticError):
    """The two-radius self-check of :func:`cauchy_coeffs` failed."""

    def __init__(self, message: str, outer=None, inner=None):
        super().__init__(message)
        self.outer = outer
        self.inner = inner


@dataclass(frozen=True)
class LaurentSeries:
    center: complex
    min_order: int
    coeffs: tuple
    radius: float = float("nan")

    def __post_init__(self):
        if len(self.coeffs) == 0:
            raise ValueError("a Laurent series needs at least one coefficient")

    @property
    def max_order(self) -> int:
        return self.min_order + len(self.coeffs) - 1

    def coeff(self, k: int) -> complex:
        """Coefficient of ``(s - center)**k`` (zero outside the stored range)."""
        i = k - self.min_order
        if 0 <= i < len(self.coeffs):
            return self.coeffs[i]
        return 0j

    @property
    def residue(self) -> complex:
        return self.coeff(-1)

    def derivative_at_center(self, j: int) -> complex:
        """j-th derivative of the regular part at the centre."""
        from math import factorial
        return factorial(j) * self.coeff(j)

    def __call__(self, s):
        u = np.asarray(s, dtype=complex) - self.center
        out = np.zeros_like(u)
        for i, c in enumerate(self.coeffs):
            out = out + c * u ** (self.min_order + i)
        return out if out.ndim else complex(out)


def _sample(f, pts: np.ndarray) -> np.ndarray:
    try:
        vals = np.asarray(f(pts), dtype=complex)
        if vals.shape == pts.shape:
            return vals
    except (TypeError, ValueError):
        pass
    return np.array([complex(f(p)) for p in pts])


def _raw(f, center, radius, orders, nodes):
    theta = 2.0 * np.pi * np.arange(nodes) / nodes
    pts = center + radius * np.exp(1j * theta)
    vals = _sample(f, pts)
    spec = np.fft.fft(vals) / nodes
    out = np.array([spec[k % nodes] / radius ** k for k in orders])
    noise = np.array([_EPS * np.max(np.abs(vals)) / radius ** k for k in orders])
    return out, noise


def cauchy_coeffs(f, center: complex, pole_order: int, n_coeffs: int,
                  radius: float, *, nodes: int = 128, check: bool = True,
                  rtol: float = 1e-9) -> LaurentSeries:
    """Laurent coefficients of orders ``-pole_order .. -pole_order+n_coeffs-1``.

    ``f`` is sampled at ``nodes`` equispaced points on ``|s-center| = radius``.
    With ``check`` the residue (order -1, or order 0 for analytic ``f``) is
    recomputed on the half radius and compared at relative tolerance ``rtol``.
    """
    if pole_order < 0 or n_coeffs < 1 or radius <= 0:
        raise ValueError("need pole_order >= 0, n_coeffs >= 1, radius > 0")
    center = complex(center)
    orders = list(range(-pole_order, -pole_order + n_coeffs))
    k = -1 if pole_order >= 1 else 0
    coeffs, noise = _raw(f, center, radius, orders + [k], nodes)
    if check:
        a, na = coeffs[-1], noise[-1]
        b, nb = _raw(f, center, radius / 2.0, [k], nodes)
        b, nb = b[0], nb[0]
        floor = 100.0 * (na + nb)
        if abs(a - b) > max(rtol * max(abs(a), abs(b)), floor):
            raise RadiusInconsistencyError(
                f"two-radius check failed at radius {radius}: {a} vs {b}", a, b)
    coeffs = coeffs[:-1]
    return LaurentSeries(center, -pole_order, tuple(complex(c) for c in coeffs), radius)
