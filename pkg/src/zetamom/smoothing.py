"""Windows, Gaussian cutoffs, the exact contour weight V and window transforms."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from ._quad import QuadratureError, composite_gl_nodes, gauss_kronrod
from .special import chi, log_gamma_ratio

WINDOW_KINDS = ("gaussian-conv", "bump", "indicator")
_SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class ShiftConfig:
    """Shift pair.  Ordering is not enforced so that swapped pairs can be formed."""

    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and math.isfinite(self.beta)):
            raise ValueError("shifts must be finite")

    @property
    def delta(self) -> float:
        return self.beta - self.alpha

    def t_tilde(self, T: float) -> float:
        return math.sqrt(T * (T + self.delta))

    def swapped(self) -> "ShiftConfig":
        return ShiftConfig(self.beta, self.alpha)

    @classmethod
    def from_delta(cls, delta: float) -> "ShiftConfig":
        return cls(0.0, float(delta))


@dataclass(frozen=True)
class Window:
    kind: str
    T1: float
    T2: float
    Delta: float = 1.0

    def __post_init__(self):
        if self.kind not in WINDOW_KINDS:
            raise ValueError(f"window kind must be one of {WINDOW_KINDS}")
        if not self.T1 < self.T2:
            raise ValueError("need T1 < T2")
        if self.kind != "indicator":
            if not self.Delta > 0:
                raise ValueError("Delta must be positive")
            if not self.Delta < (self.T2 - self.T1) / 2:
                raise ValueError("Delta must be below (T2 - T1)/2")

    def support(self) -> tuple[float, float]:
        """Interval outside which W is zero (or below e^-100)."""
        if self.kind == "gaussian-conv":
            return self.T1 - 10 * self.Delta, self.T2 + 10 * self.Delta
        return self.T1, self.T2

    def breakpoints(self) -> list[float]:
        if self.kind == "gaussian-conv":
            return [self.T1 - 10 * self.Delta, self.T1, self.T2, self.T2 + 10 * self.Delta]
        if self.kind == "bump":
            return [self.T1, self.T1 + self.Delta, self.T2 - self.Delta, self.T2]
        return [self.T1, self.T2]


@dataclass(frozen=True)
class SmoothingConfig:
    Q: float = 25.0

    def __post_init__(self):
        if not self.Q >= 1:
            raise ValueError("Q must be at least 1")


class DerivativeOfIndicatorError(ValueError):
    pass


# ------------------------------------------------------------------ bump

def _jet_exp(a: np.ndarray) -> np.ndarray:
    """Taylor coefficients of exp(a(x)) from those of a (last axis = order)."""
    n = a.shape[-1]
    out = np.zeros_like(a)
    out[..., 0] = np.exp(a[..., 0])
    for k in range(1, n):
        acc = np.zeros_like(a[..., 0])
        for j in range(1, k + 1):
            acc = acc + j * a[..., j] * out[..., k - j]
        out[..., k] = acc / k
    return out


def _jet_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = a.shape[-1]
    out = np.zeros_like(a)
    for k in range(n):
        for j in range(k + 1):
            out[..., k] = out[..., k] + a[..., j] * b[..., k - j]
    return out


def bump_profile(x, order: int = 0):
    """p(x) = exp(-exp(-1/(1-x))/x) on (0, 1), extended by 0 and 1, with derivatives."""
    x = np.asarray(x, dtype=float)
    out = np.where(x >= 1.0, 1.0 if order == 0 else 0.0, 0.0)
    inside = (x > 0.0) & (x < 1.0)
    if not np.any(inside):
        return float(out) if out.ndim == 0 else out
    x0 = x[inside]
    n = order + 1
    k = np.arange(n)
    u = (1.0 / (1.0 - x0))[:, None] ** (k + 1)[None, :]        # 1/(1-x)
    e = _jet_exp(-u)                                              # exp(-1/(1-x))
    inv = ((-1.0) ** k)[None, :] / x0[:, None] ** (k + 1)[None, :]  # 1/x
    p = _jet_exp(-_jet_mul(e, inv))
    val = p[:, order] * math.factorial(order)
    out = out.astype(float)
    out[inside] = val
    return float(out) if out.ndim == 0 else out


# ------------------------------------------------------------------ windows

def _gauss_deriv(u: np.ndarray, delta: float, k: int) -> np.ndarray:
    """k-th derivative of F_Delta(u) = exp(-u^2/Delta^2)/(sqrt(pi) Delta)."""
    x = u / delta
    coeffs = np.zeros(k + 1)
    coeffs[k] = 1.0
    herm = np.polynomial.hermite.hermval(x, coeffs)
    return (-1) ** k * herm * np.exp(-x * x) / (_SQRT_PI * delta ** (k + 1))


def window_eval(w: Window, t, order: int = 0):
    """W^(order)(t), vectorised in t."""
    if not 0 <= order <= 6:
        raise ValueError("order must lie in 0..6")
    t_arr = np.asarray(t, dtype=float)
    if w.kind == "indicator":
        if order:
            raise DerivativeOfIndicatorError("the indicator window has no derivatives")
        out = ((t_arr >= w.T1) & (t_arr <= w.T2)).astype(float)
    elif w.kind == "gaussian-conv":
        if order == 0:
            out = 0.5 * (erf((t_arr - w.T1) / w.Delta) - erf((t_arr - w.T2) / w.Delta))
        else:
            out = (_gauss_deriv(t_arr - w.T1, w.Delta, order - 1)
                   - _gauss_deriv(t_arr - w.T2, w.Delta, order - 1))
    else:
        left = (t_arr - w.T1) / w.Delta
        right = (w.T2 - t_arr) / w.Delta
        scale = w.Delta ** (-order)
        out = np.where(t_arr < (w.T1 + w.T2) / 2,
                       bump_profile(left, order) * scale,
                       bump_profile(right, order) * scale * (-1) ** order)
    return float(out) if out.ndim == 0 else out


# ------------------------------------------------------------------ cutoffs

def i_weight(w, q: SmoothingConfig, convention: str = "gaussian"):
    """Smooth cutoff I(w).

    ``gaussian``: (1 + erf((sqrt(Q)/2) log w))/2, the Gaussian-integral form.
    ``contour``: the inverse Mellin integral of G(z/2)/z, which equals the
    Gaussian form evaluated at w**2.
    """
    w_arr = np.asarray(w, dtype=float)
    if np.any(w_arr <= 0):
        raise ValueError("w must be positive")
    lw = np.log(w_arr)
    if convention == "contour":
        lw = 2.0 * lw
    elif convention != "gaussian":
        raise ValueError("convention must be 'gaussian' or 'contour'")
    out = 0.5 * (1.0 + erf(0.5 * math.sqrt(q.Q) * lw))
    return float(out) if out.ndim == 0 else out


def xi_log(x, t, shift: ShiftConfig):
    return np.log(np.asarray(t, float) * (np.asarray(t, float) + shift.delta)
                  / (4.0 * math.pi ** 2 * np.asarray(x, float)))


def j_weight(x, t, shift: ShiftConfig, q: SmoothingConfig):
    """J(x, t) = I(e^xi) with xi = log(t(t+delta)/(4 pi^2 x))."""
    xi = xi_log(x, t, shift)
    out = 0.5 * (1.0 + erf(0.5 * math.sqrt(q.Q) * xi))
    return float(out) if np.ndim(out) == 0 else out


# ------------------------------------------------------------------ V weight

def contour_height(q: SmoothingConfig) -> float:
    return 6.0 * math.sqrt(q.Q) + 12.0


def _log_y_ratio(z: np.ndarray, t: float, delta: float) -> np.ndarray:
    """log(Y(1/2+z; t) / Y(1/2; t))."""
    a0 = (0.5 + 1j * t) / 2.0
    b0 = (0.5 - 1j * (t + delta)) / 2.0
    lg = 2.0 * (log_gamma_ratio(a0, z / 2.0) + log_gamma_ratio(b0, z / 2.0))
    w = 0.5 + z
    roots = (-1j * t, 1.0 - 1j * t, 1j * (t + delta), 1.0 + 1j * (t + delta))
    lp = 0.0
    for r in roots:
        lp = lp + 2.0 * np.log1p(z / (0.5 - r))
    return lg + lp


def _v_sigma(log_x: float, t: float, delta: float) -> float:
    # The integral does not depend on Re z > 0.  |X^z/z| on Re z = s is
    # smallest near s = 1/log X, which keeps cancellation in the oscillatory
    # integrand mild when X = t(t+delta)/(4 pi^2 x) is large.
    big = 2.0 * math.log(t) + math.log1p(delta / t) - 2 * math.log(2 * math.pi) - log_x
    if big <= 1.0:
        return 1.0
    return max(0.1, round(20.0 / big) / 20.0)


def v_weight(x: float, t: float, shift: ShiftConfig, q: SmoothingConfig, *,
             tol: float = 1e-10, sigma: float | None = None) -> complex:
    """Exact weight V(x, t) by adaptive quadrature on a vertical line."""
    if not (x > 0 and t >= 5):
        raise ValueError("need x > 0 and t >= 5")
    delta = shift.delta
    lx = math.log(math.pi ** 2 * x)
    sig = _v_sigma(math.log(x), t, delta) if sigma is None else sigma
    y0 = contour_height(q)

    def f(y):
        z = sig + 1j * y
        return np.exp(-z * lx + _log_y_ratio(z, t, delta) + z * z / q.Q) / z

    try:
        val, err = gauss_kronrod(f, -y0, y0, abs_tol=tol, rel_tol=0.0, initial=16,
                                 max_intervals=200000)
    except QuadratureError as exc:
        raise QuadratureError(f"v_weight quadrature failed: {exc}", exc.achieved) from exc
    return complex(val) / (2.0 * math.pi)


class VWeightGrid:
    """V(x, t) for many x at one (t, delta, Q), sharing the Gamma-ratio samples.

    ``log_x_span`` bounds |log X| over the requested x and sets the panel width;
    panels are graded towards y = 0 where 1/z varies on the scale Re z.
    """

    def __init__(self, t: float, shift: ShiftConfig, q: SmoothingConfig,
                 log_x_span: float = 20.0, refine: int = 1):
        self.t, self.shift, self.q = t, shift, q
        self.y0 = contour_height(q)
        self.width = min(1.0, 8.0 / (log_x_span + 2.0)) / refine
        self.refine = refine
        self._cache = {}

    def _nodes(self, sig: float):
        w = self.width
        inner = [0.0]
        e = sig / (2.0 * self.refine)
        while e < w:
            inner.append(e)
            e *= 2.0
        start = inner[-1]
        n = max(1, int(math.ceil((self.y0 - start) / w)))
        half = np.concatenate([inner, np.linspace(start, self.y0, n + 1)[1:]])
        edges = np.concatenate([-half[::-1], half[1:]])
        return composite_gl_nodes(edges, 16)

    def _weights(self, sig: float):
        if sig not in self._cache:
            y, wts = self._nodes(sig)
            z = sig + 1j * y
            g = np.exp(_log_y_ratio(z, self.t, self.shift.delta) + z * z / self.q.Q) / z
            self._cache[sig] = (z, g * wts / (2.0 * math.pi))
        return self._cache[sig]

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.empty(x.shape, dtype=complex)
        flat_x = x.ravel()
        flat = out.ravel()
        sigs = self._sigmas(flat_x)
        for sig in np.unique(sigs):
            idx = np.nonzero(sigs == sig)[0]
            z, g = self._weights(float(sig))
            chunk = max(1, 4_000_000 // z.size)
            for s in range(0, idx.size, chunk):
                ii = idx[s:s + chunk]
                lx = np.log(math.pi ** 2 * flat_x[ii])
                flat[ii] = np.exp(-np.outer(lx, z)) @ g
        return out.reshape(x.shape)

    def _sigmas(self, x: np.ndarray) -> np.ndarray:
        t, d = self.t, self.shift.delta
        big = 2 * math.log(t) + math.log1p(d / t) - 2 * math.log(2 * math.pi) - np.log(x)
        safe = np.maximum(big, 1.0)
        return np.where(big <= 1.0, 1.0, np.maximum(0.1, np.round(20.0 / safe) / 20.0))


# ------------------------------------------------------------------ kappa, phi

def kappa_phi(t, shift: ShiftConfig):
    """kappa(t) = chi(1/2 - it) chi(1/2 + i(t+delta)) and its phase model phi(t)."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 1):
        raise ValueError("t must be at least 1")
    d = shift.delta
    kap = chi(0.5 - 1j * t_arr) * chi(0.5 + 1j * (t_arr + d))
    two_pi_e = 2.0 * math.pi * math.e
    phi = t_arr * np.log(np.abs(t_arr) / two_pi_e) - (t_arr + d) * np.log(np.abs(t_arr + d) / two_pi_e)
    if t_arr.ndim == 0:
        return complex(kap), float(phi)
    return kap, phi


# ------------------------------------------------------------------ transforms

def _mellin_edges(w: Window, delta_shift: float, s_imag_max: float) -> np.ndarray:
    lo, hi = w.support()
    lo, hi = max(1.0, lo + delta_shift / 2), hi + delta_shift / 2
    if hi <= lo:
        return np.array([])
    pts = sorted({lo, hi, *[min(max(b + delta_shift / 2, lo), hi) for b in w.breakpoints()]})
    u = np.log(np.array(pts))
    edges = [u[0]]
    for a, b in zip(u[:-1], u[1:]):
        if b <= a:
            continue
        x_hi = math.exp(b)
        scale = w.Delta / x_hi if w.kind != "indicator" else 1.0
        width = min(0.25 * scale, 8.0 / (s_imag_max + 1.0), 0.05)
        n = max(1, int(math.ceil((b - a) / width)))
        edges.extend(np.linspace(a, b, n + 1)[1:].tolist())
    return np.array(edges)


def _mellin_group(w: Window, s: np.ndarray, delta_shift: float, ymax: float,
                  rtol: float) -> np.ndarray:
    prev = None
    for refine in (1, 2, 4, 8, 16):
        edges = _mellin_edges(w, delta_shift, ymax * refine)
        if edges.size < 2:
            return np.zeros_like(s)
        u, wt = composite_gl_nodes(edges, 16)
        x = np.exp(u)
        base = window_eval(w, x - delta_shift / 2) * wt
        out = np.empty_like(s)
        chunk = max(1, 4_000_000 // u.size)
        for i in range(0, s.size, chunk):
            out[i:i + chunk] = np.exp(np.outer(s[i:i + chunk], u)) @ base
        if prev is not None:
            # floor at the L1 norm of the integrand: tiny values only need absolute accuracy
            l1 = float(np.sum(np.abs(base) * np.exp(np.max(s.real) * u)))
            scale = np.maximum(np.abs(out), 1e-3 * l1)
            if np.all(np.abs(out - prev) <= rtol * scale):
                return out
        prev = out
    raise QuadratureError("window_mellin did not converge",
                          achieved=float(np.max(np.abs(out - prev))))


def window_mellin(w: Window, s, delta_shift: float = 0.0, *, rtol: float = 1e-10):
    """int_1^inf W(x - delta/2) x^(s-1) dx, vectorised in s."""
    s_arr = np.asarray(s, dtype=complex)
    flat = s_arr.ravel()
    if np.any(np.abs(flat.real) > 4):
        raise ValueError("|Re s| must not exceed 4")
    if w.kind == "indicator":
        a = max(1.0, w.T1 + delta_shift / 2)
        b = w.T2 + delta_shift / 2
        out = np.zeros_like(flat)
        if b > a:
            la, lb = math.log(a), math.log(b)
            small = np.abs(flat) < 1e-8
            safe = np.where(small, 1.0, flat)
            out = np.where(small, (lb - la) + flat * (lb * lb - la * la) / 2,
                           (np.exp(safe * lb) - np.exp(safe * la)) / safe)
        return complex(out[0]) if s_arr.ndim == 0 else out.reshape(s_arr.shape)
    out = np.zeros_like(flat)
    ay = np.abs(flat.imag)
    # group by |Im s| so each group gets panels matched to its own oscillation
    cap = 8.0
    done = np.zeros(flat.size, dtype=bool)
    while not np.all(done):
        grp = ~done & (ay <= cap)
        if np.any(grp):
            out[grp] = _mellin_group(w, flat[grp], delta_shift, float(ay[grp].max()), rtol)
            done |= grp
        cap *= 2.0
    return complex(out[0]) if s_arr.ndim == 0 else out.reshape(s_arr.shape)


def g_window_fourier(kind: str, c: float, y, A: float = 1.0):
    """hat g(y/2pi) for the averaging kernel g(x) = c^-1 g0(x/c).

    ``indicator``: g0 = 1{|x| <= 1}/2, giving sin(cy)/(cy).
    ``smooth``: the Poisson-type kernel with hat g0(y/2pi) = exp(-A|y|).
    """
    if not c > 0:
        raise ValueError("c must be positive")
    y = np.asarray(y, dtype=float)
    if kind == "indicator":
        out = np.sinc(c * y / math.pi)
    elif kind in ("smooth", "smooth-exp"):
        out = np.exp(-A * c * np.abs(y))
    else:
        raise ValueError("kind must be 'indicator' or 'smooth'")
    return float(out) if out.ndim == 0 else out
