"""Residue engine and closed-form main terms for the shifted fourth moment."""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._contour import LaurentSeries, RadiusInconsistencyError, cauchy_coeffs
from ._quad import QuadratureError, composite_gl_nodes, exact_sum
from .smoothing import ShiftConfig, window_eval
from .special import EULER_GAMMA, stieltjes, zeta, zeta_shift_grid

__all__ = [
    "LaurentSeries", "RadiusInconsistencyError", "NearDegenerateError", "MomentPolynomial",
    "HFunctionParams", "cauchy_coeffs", "h_offdiag", "diag_term", "offdiag_term", "q2_eval",
    "q2_values", "q2_integral", "moment_polynomial", "a_coeffs", "Q2Model",
]

DELTA_SWITCH = 1e-6
_COMBINED_BELOW = 0.1
_REMOVABLE_RADIUS = 1e-3


class NearDegenerateError(ValueError):
    """Split residues are ill-conditioned for tiny shifts; use :func:`q2_eval`."""


# ------------------------------------------------------------------ h(z, s)

def _two_s_zeta(s: np.ndarray) -> np.ndarray:
    """2 s zeta(1 + 2 s), analytic through s = 0."""
    out = np.empty_like(s)
    small = np.abs(s) < 0.05
    if np.any(small):
        w = 2.0 * s[small]
        g = stieltjes(8).gamma
        acc = np.ones_like(w)
        for n, gn in enumerate(g):
            acc = acc + (-1) ** n * gn * w ** (n + 1) / math.factorial(n)
        out[small] = acc
    if np.any(~small):
        big = s[~small]
        out[~small] = 2.0 * big * zeta(1.0 + 2.0 * big)
    return out


def _h_direct(z: complex, s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=complex)
    pair = zeta(1.0 + z + s) * zeta(1.0 - z + s)
    return np.exp(2.0 * EULER_GAMMA * s) / zeta(2.0 + 2.0 * s) * (
        pair - _two_s_zeta(s) / (s * s - z * z))


def _pick_radius(center: complex, avoid, candidates=(0.05, 0.1, 0.2)) -> float:
    best, score = candidates[0], -1.0
    for r in candidates:
        d = min([min(abs(r - abs(q - center)), abs(r / 2 - abs(q - center)))
                 for q in avoid if abs(q - center) > 1e-12] + [r / 2])
        if d > score:
            best, score = r, d
    return best


@lru_cache(maxsize=4096)
def _h_taylor(z: complex, center: complex) -> LaurentSeries:
    avoid = (z, -z, 0.0)
    r = _pick_radius(center, avoid)
    return cauchy_coeffs(lambda s: _h_direct(z, s), center, 0, 7, r)


@dataclass(frozen=True)
class HFunctionParams:
    z: complex
    s: complex

    def __call__(self) -> complex:
        return h_offdiag(self.z, self.s)


def h_offdiag(z, s):
    """h(z,s) = e^{2 gamma s}/zeta(2+2s) [zeta(1+z+s) zeta(1-z+s) - 2s zeta(1+2s)/(s^2-z^2)].

    ``s`` may be an array; near the removable points s = +-z a degree-6 local
    Taylor model is used instead of the cancelling closed form.
    """
    z = complex(z)
    s_arr = np.asarray(s, dtype=complex)
    flat = s_arr.ravel()
    out = np.empty_like(flat)
    pts = (z, -z)
    dist = np.min(np.abs(flat[:, None] - np.array(pts)[None, :]), axis=1)
    near = dist < _REMOVABLE_RADIUS
    if np.any(~near):
        out[~near] = _h_direct(z, flat[~near])
    for i in np.nonzero(near)[0]:
        p = min(pts, key=lambda q: abs(flat[i] - q))
        # centre the model on a grid point so neighbouring calls share it
        if abs(z) < _REMOVABLE_RADIUS:
            p = 0j
        out[i] = _h_taylor(z, complex(p))(flat[i])
    out = out.reshape(s_arr.shape)
    return complex(out) if s_arr.ndim == 0 else out


# ------------------------------------------------------------------ moment polynomials

@dataclass(frozen=True)
class MomentPolynomial:
    """Coefficients stored leading first (b0 x^3 + b1 x^2 + b2 x + b3 for P3)."""

    kind: str
    coeffs: tuple

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x, deriv: int = 0):
        p = np.poly1d(self.coeffs)
        if deriv:
            p = np.polyder(p, deriv)
        out = p(np.asarray(x, dtype=float))
        return float(out) if np.ndim(out) == 0 else out

    def integral_exp(self, X) -> float:
        """int_{-inf}^{X} P(x) 2 pi e^x dx, i.e. int_0^T P(log t/2pi) dt with X = log(T/2pi)."""
        asc = self.coeffs[::-1]
        total = 0.0
        for k, c in enumerate(asc):
            total += c * sum((-1) ** j * math.factorial(k) / math.factorial(k - j) * X ** (k - j)
                             for j in range(k + 1))
        return 2.0 * math.pi * math.exp(X) * total


_POLY_LOCK = threading.Lock()
_POLY_CACHE: dict = {}


def _k_over(s):
    return zeta(1.0 + s) ** 4 / zeta(2.0 + 2.0 * s)


def _build_poly(kind: str) -> MomentPolynomial:
    if kind == "P3":
        ser = cauchy_coeffs(lambda s: _k_over(s) / (1.0 + s), 0.0, 4, 4, 0.25)
        c = [ser.coeff(-4 + i).real for i in range(4)]
        return MomentPolynomial("P3", (c[0] / 6.0, c[1] / 2.0, c[2], c[3]))
    if kind == "P4":
        ser = cauchy_coeffs(_k_over, 0.0, 4, 5, 0.25)
        hs = cauchy_coeffs(lambda u: _h_direct(0j, u), 0.0, 0, 3, 0.25)
        asc = [2.0 * ser.coeff(-j).real / math.factorial(j) for j in range(5)]
        h0, h1, h2 = (hs.coeff(k).real for k in range(3))
        asc[0] += 2.0 * h2
        asc[1] += 2.0 * h1
        asc[2] += h0
        return MomentPolynomial("P4", tuple(asc[::-1]))
    raise ValueError("kind must be 'P3' or 'P4'")


def moment_polynomial(kind: str) -> MomentPolynomial:
    """P3 (moments of moments) or P4 (fourth moment); built once and cached."""
    poly = _POLY_CACHE.get(kind)
    if poly is None:
        with _POLY_LOCK:
            poly = _POLY_CACHE.get(kind)
            if poly is None:
                poly = _build_poly(kind)
                _POLY_CACHE[kind] = poly
    return poly


# ------------------------------------------------------------------ Q2 pieces

def _offdiag_radius(delta: float) -> float:
    d = abs(delta)
    best, score = 0.25, -1.0
    for r in (0.25, 0.4, 0.1):
        sc = min(abs(r - d), abs(r / 2 - d)) if d > 0 else r
        if sc > score:
            best, score = r, sc
    return best


@lru_cache(maxsize=256)
def _h_coeffs(delta: float) -> tuple:
    """Taylor coefficients h_0, h_1, h_2 of u -> h(i delta, u) at u = 0."""
    z = 1j * delta
    ser = cauchy_coeffs(lambda u: h_offdiag(z, u), 0.0, 0, 3, _offdiag_radius(delta))
    return tuple(ser.coeff(k) for k in range(3))


class Q2Model:
    """Precomputed residue data for Q2(t; alpha, beta) at one shift pair.

    Evaluation at many ``t`` is a cheap vectorised formula.
    """

    NODES = 128

    def __init__(self, shift: ShiftConfig):
        self.shift = shift
        d = shift.delta
        self.delta = d
        self.combined = abs(d) < _COMBINED_BELOW
        if self.combined:
            f = lambda s: _k_over(s) / (s - 1j * d)
            # keep i*delta well inside the half-radius check circle too
            r = max(0.25, 4.0 * abs(d))
            # two-radius self-check on the residue sum
            cauchy_coeffs(f, 0.0, 5, 1, r)
            theta = 2.0 * np.pi * np.arange(self.NODES) / self.NODES
            self._nodes = r * np.exp(1j * theta)
            self._vals = f(self._nodes) * self._nodes / self.NODES
        else:
            r = min(0.25, abs(d) / 2.0)
            ser = cauchy_coeffs(lambda s: _k_over(s) / (s - 1j * d), 0.0, 4, 4, r)
            self._poly = [ser.coeff(-1 - j) / math.factorial(j) for j in range(4)]
            zd = complex(zeta(1.0 + 1j * d))
            self._res_d = zd ** 4 / complex(zeta(2.0 + 2.0j * d))
        self._h = _h_coeffs(float(d))

    # D_delta(t) as a function of x = log(t/2pi)
    def diag_complex(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.combined:
            flat = x.ravel()
            out = np.empty(flat.shape, dtype=complex)
            step = max(1, 2_000_000 // self.NODES)
            for i in range(0, flat.size, step):
                out[i:i + step] = np.exp(np.outer(flat[i:i + step], self._nodes)) @ self._vals
            return out.reshape(x.shape)
        acc = self._res_d * np.exp(1j * self.delta * x)
        for j, c in enumerate(self._poly):
            acc = acc + c * x ** j
        return acc

    def diag(self, x) -> np.ndarray:
        return 2.0 * self.diag_complex(x).real

    def offdiag_complex(self, a, b) -> np.ndarray:
        h0, h1, h2 = self._h
        return 2.0 * h2 + h1 * (a + b) + h0 * a * b

    def values(self, t, return_imag: bool = False):
        t = np.asarray(t, dtype=float)
        x = np.log(t / (2.0 * math.pi))
        a = np.log((t + self.shift.alpha) / (2.0 * math.pi))
        b = np.log((t + self.shift.beta) / (2.0 * math.pi))
        od = self.offdiag_complex(a, b)
        val = self.diag(x) + od.real
        if return_imag:
            return val, np.abs(od.imag)
        return val

    def values_x(self, x) -> np.ndarray:
        """Q2 at t = 2 pi e^x, stable for very negative x."""
        x = np.asarray(x, dtype=float)
        a = np.log(np.exp(x) + self.shift.alpha / (2.0 * math.pi))
        b = np.log(np.exp(x) + self.shift.beta / (2.0 * math.pi))
        return self.diag(x) + self.offdiag_complex(a, b).real


@lru_cache(maxsize=64)
def _model(alpha: float, beta: float) -> Q2Model:
    return Q2Model(ShiftConfig(alpha, beta))


def _model_for(shift: ShiftConfig) -> Q2Model:
    return _model(float(shift.alpha), float(shift.beta))


def diag_term(t: float, shift: ShiftConfig) -> float:
    """D_delta(t) = 2 Re sum of residues at s = 0, i delta of
    zeta^4(1+s)(t/2pi)^s / (zeta(2+2s)(s - i delta))."""
    if t < 10:
        raise ValueError("t must be at least 10")
    if abs(shift.delta) < DELTA_SWITCH:
        raise NearDegenerateError("|delta| < 1e-6: use q2_eval for the combined form")
    return float(_model_for(shift).diag(math.log(t / (2 * math.pi))))


def offdiag_term(t: float, shift: ShiftConfig) -> float:
    """d^2/ds1 ds2 of h(i delta, s1+s2) ((t+alpha)/2pi)^s1 ((t+beta)/2pi)^s2 at 0."""
    if t < 10:
        raise ValueError("t must be at least 10")
    if t + shift.alpha <= 0 or t + shift.beta <= 0:
        raise ValueError("need t + alpha > 0 and t + beta > 0")
    a = math.log((t + shift.alpha) / (2 * math.pi))
    b = math.log((t + shift.beta) / (2 * math.pi))
    val = complex(_model_for(shift).offdiag_complex(a, b))
    if abs(val.imag) > 1e-10 * max(1.0, abs(val.real)):
        raise ArithmeticError(f"off-diagonal term not real: {val}")
    return val.real


def q2_eval(t: float, shift: ShiftConfig) -> float:
    """Main-term density Q2(t; alpha, beta) = D + OD, continuous through delta = 0."""
    if t < 10:
        raise ValueError("t must be at least 10")
    val, imag = _model_for(shift).values(np.array([t]), return_imag=True)
    if imag[0] > 1e-10 * max(1.0, abs(val[0])):
        raise ArithmeticError("imaginary residue above 1e-10")
    return float(val[0])


def q2_values(t, shift: ShiftConfig) -> np.ndarray:
    """Vectorised Q2(t) for t > 0 (no lower limit; used inside integrals)."""
    return _model_for(shift).values(t)


def q2_integral(T1: float, T2: float, shift: ShiftConfig, *, rtol: float = 1e-10) -> float:
    """int_{T1}^{T2} Q2(t) dt, with T1 = 0 allowed."""
    if not 0 <= T1 < T2:
        raise ValueError("need 0 <= T1 < T2")
    if shift.alpha == 0 and shift.beta == 0:
        p4 = moment_polynomial("P4")
        hi = p4.integral_exp(math.log(T2 / (2 * math.pi)))
        lo = p4.integral_exp(math.log(T1 / (2 * math.pi))) if T1 > 0 else 0.0
        return hi - lo
    model = _model_for(shift)
    x_hi = math.log(T2 / (2 * math.pi))
    x_lo = math.log(T1 / (2 * math.pi)) if T1 > 0 else min(x_hi, 0.0) - 45.0
    width = min(0.25, 1.0 / (abs(shift.delta) + 1.0))
    prev = None
    for _ in range(6):
        n = max(2, int(math.ceil((x_hi - x_lo) / width)))
        x, w = composite_gl_nodes(np.linspace(x_lo, x_hi, n + 1), 16)
        val = exact_sum(model.values_x(x) * 2 * math.pi * np.exp(x) * w)
        if prev is not None and abs(val - prev) <= rtol * abs(val):
            return val
        prev, width = val, width / 2
    raise QuadratureError("q2_integral did not converge", achieved=abs(val - prev), value=val)


def q2_windowed(window, shift: ShiftConfig, *, rtol: float = 1e-10) -> float:
    """int W(t) Q2(t) dt over the window's support (t >= 1)."""
    lo, hi = window.support()
    lo = max(lo, 1.0)
    if window.kind == "indicator":
        return q2_integral(lo, hi, shift, rtol=rtol)
    model = _model_for(shift)
    pts = sorted({lo, hi, *[b for b in window.breakpoints() if lo < b < hi]})
    width = min(0.25 * window.Delta, 50.0)
    prev = None
    for _ in range(6):
        edges = [pts[0]]
        for a, b in zip(pts[:-1], pts[1:]):
            n = max(1, int(math.ceil((b - a) / width)))
            edges.extend(np.linspace(a, b, n + 1)[1:].tolist())
        t, w = composite_gl_nodes(np.array(edges), 16)
        val = exact_sum(model.values(t) * window_eval(window, t) * w)
        if prev is not None and abs(val - prev) <= rtol * abs(val):
            return val
        prev, width = val, width / 2
    raise QuadratureError("windowed main term did not converge", achieved=abs(val - prev), value=val)


# ------------------------------------------------------------------ a_j(g)

def _h_taylor_grid(t: np.ndarray, radius: float, nodes: int) -> np.ndarray:
    """Taylor coefficients 0..2 in s of h(it, s)/(1+s) for each t (rows)."""
    theta = 2.0 * np.pi * np.arange(nodes) / nodes
    s = radius * np.exp(1j * theta)
    conj_idx = (-np.arange(nodes)) % nodes  # s[conj_idx] == conj(s)
    tt = t[:, None]
    plus = zeta_shift_grid(1.0 + 1j * t, s)
    minus = np.conj(plus[:, conj_idx])  # zeta(1 - it + s) = conj(zeta(1 + it + conj s))
    common = np.exp(2.0 * EULER_GAMMA * s) / zeta(2.0 + 2.0 * s) / (1.0 + s)
    tsz = _two_s_zeta(s)
    vals = common[None, :] * (plus * minus - tsz[None, :] / (s[None, :] ** 2 + tt ** 2))
    spec = np.fft.fft(vals, axis=1) / nodes
    return np.stack([spec[:, k].real / radius ** k for k in range(3)], axis=1)


def _f_derivs(t: np.ndarray) -> np.ndarray:
    """[f, f', f''] at s = 0 for f(s) = h(it, s)/(1+s), rows over t."""
    t = np.abs(np.asarray(t, dtype=float))
    out = np.empty((t.size, 3))
    far = t >= 0.5
    mid = (t >= 0.2) & ~far
    near = t < 0.2
    for mask, r, m in ((far, 0.1, 16), (mid, 0.1, 32), (near, 0.3, 48)):
        if np.any(mask):
            out[mask] = _h_taylor_grid(t[mask], r, m)
    out[:, 2] *= 2.0
    return out


_MEAN_F = (1.0, 2 * EULER_GAMMA - 1.0, 4 * EULER_GAMMA ** 2 - 4 * EULER_GAMMA + 2.0)


@lru_cache(maxsize=64)
def _a_all(kind: str, c: float, A: float, rtol: float = 1e-9) -> tuple:
    if kind == "indicator":
        L = 2.0 * c
        kern = lambda t: (2.0 * c - t) / (4.0 * c * c)
        tail = (0.0, 0.0, 0.0)
    elif kind in ("smooth", "smooth-exp"):
        lam = 2.0 * A * c
        L = 50.0 * lam
        kern = lambda t: lam / (math.pi * (lam * lam + t * t))
        mass_out = 1.0 - (2.0 / math.pi) * math.atan(L / lam)
        tail = tuple(m * mass_out for m in _MEAN_F)
    else:
        raise ValueError("kernel kind must be 'indicator' or 'smooth-exp'")
    # even integrand: integrate over [0, L] and double
    breaks = [0.0] + [b for b in (0.2, 0.5) if b < L] + [L]
    prev = None
    # the integrand is band-limited to frequencies ~ log t, so unit panels of
    # 16 Gauss nodes already resolve it; halving confirms convergence
    panel = 1.0
    for _ in range(5):
        edges = []
        for lo, hi in zip(breaks[:-1], breaks[1:]):
            n = max(1, int(math.ceil((hi - lo) / panel)))
            edges.append(np.linspace(lo, hi, n + 1)[:-1])
        edges = np.concatenate(edges + [np.array([L])])
        x, w = composite_gl_nodes(edges, 16)
        f = _f_derivs(x)
        kw = 2.0 * kern(x) * w
        val = np.array([exact_sum(kw * f[:, j]) for j in range(3)]) + np.array(tail)
        if prev is not None and np.all(np.abs(val - prev) <= rtol * np.maximum(np.abs(val), 1e-3)):
            return tuple(float(v) for v in val)
        prev, panel = val, panel / 2
    raise QuadratureError("a_coeffs quadrature did not converge",
                          achieved=float(np.max(np.abs(val - prev))))


def a_coeffs(gkind: str, c: float, j: int, A: float = 1.0) -> float:
    """a_j(g) = int (g*g)(t) d^j/ds^j [h(it,s)/(1+s)]_{s=0} dt for j = 0, 1, 2."""
    if not c > 0:
        raise ValueError("c must be positive")
    if j not in (0, 1, 2):
        raise ValueError("j must be 0, 1 or 2")
    return _a_all(gkind, float(c), float(A))[j]
