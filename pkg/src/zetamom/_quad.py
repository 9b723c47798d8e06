"""Vectorised quadrature helpers shared by the numerical modules.

All rules evaluate the integrand on whole arrays of abscissae at once, which is
what makes the zeta-heavy integrands affordable.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np


class QuadratureError(ArithmeticError):
    """Raised when a quadrature misses its tolerance.  ``achieved`` holds the estimate."""

    def __init__(self, message: str, achieved: float = float("nan"), value=None):
        super().__init__(message)
        self.achieved = achieved
        self.value = value


# Gauss-Kronrod 15/7 abscissae and weights on [-1, 1] (positive half, centre last).
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])

_EPS = np.finfo(float).eps
_GK_X = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_GK_W = np.concatenate([_WGK[:-1], _WGK[::-1]])
_G_W = np.zeros(15)
for _k, _w in zip((1, 3, 5), _WG[:3]):
    _G_W[_k] = _G_W[14 - _k] = _w
_G_W[7] = _WG[3]


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _call(f, x):
    return np.asarray(f(x))


def gauss_kronrod(f, a: float, b: float, *, abs_tol: float = 1e-12,
                  rel_tol: float = 1e-10, max_intervals: int = 20000,
                  initial: int = 1):
    """Locally adaptive G7/K15 rule.

    ``f`` maps a 1-d array of abscissae to an array of the same length (real or
    complex).  Intervals are bisected until each one carries an error below its
    length-proportional share of the target.  Returns ``(value, error)``.
    """
    if a == b:
        return 0.0, 0.0
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0
    edges = np.linspace(a, b, initial + 1)
    pending = np.stack([edges[:-1], edges[1:]], axis=1)
    total = 0.0
    total_err = 0.0
    length = b - a
    n_done = 0
    scale = None
    while pending.size:
        mid = 0.5 * (pending[:, 0] + pending[:, 1])
        half = 0.5 * (pending[:, 1] - pending[:, 0])
        xs = mid[:, None] + half[:, None] * _GK_X[None, :]
        vals = _call(f, xs.ravel()).reshape(xs.shape)
        k = (vals * _GK_W[None, :]).sum(axis=1) * half
        g = (vals * _G_W[None, :]).sum(axis=1) * half
        err = np.abs(k - g)
        resabs = (np.abs(vals) * _GK_W[None, :]).sum(axis=1) * half
        if scale is None:
            scale = abs(k.sum())
        else:
            scale = max(scale, abs(total + k.sum()))
        target = max(abs_tol, rel_tol * scale)
        share = target * (2.0 * half) / length
        ok = ((err <= share) | (err <= 50.0 * _EPS * resabs)
              | (half < 1e-14 * max(1.0, abs(a), abs(b))))
        total = total + k[ok].sum()
        total_err += err[ok].sum()
        n_done += pending.shape[0]
        bad = pending[~ok]
        if bad.shape[0] and n_done + 2 * bad.shape[0] > max_intervals:
            total = total + k[~ok].sum()
            total_err += err[~ok].sum()
            raise QuadratureError(
                f"adaptive quadrature did not converge on [{a}, {b}]",
                achieved=float(total_err), value=sign * total)
        m = 0.5 * (bad[:, 0] + bad[:, 1])
        pending = np.concatenate([np.stack([bad[:, 0], m], axis=1),
                                  np.stack([m, bad[:, 1]], axis=1)])
    return sign * total, float(total_err)


def composite_gl(f, edges: np.ndarray, n: int = 16):
    """Fixed composite Gauss-Legendre over consecutive panel edges."""
    x, w = gauss_legendre(n)
    edges = np.asarray(edges, dtype=float)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    xs = mid[:, None] + half[:, None] * x[None, :]
    vals = _call(f, xs.ravel()).reshape(xs.shape)
    return ((vals * w[None, :]).sum(axis=1) * half)


def composite_gl_nodes(edges: np.ndarray, n: int = 16):
    """Nodes and weights of the composite rule, flattened."""
    x, w = gauss_legendre(n)
    edges = np.asarray(edges, dtype=float)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    xs = mid[:, None] + half[:, None] * x[None, :]
    ws = half[:, None] * w[None, :]
    return xs.ravel(), ws.ravel()


def exact_sum(values) -> float | complex:
    """Correctly rounded sum (``math.fsum``) of a real or complex array."""
    v = np.asarray(values).ravel()
    if np.iscomplexobj(v):
        return complex(math.fsum(v.real.tolist()), math.fsum(v.imag.tolist()))
    return math.fsum(v.tolist())
