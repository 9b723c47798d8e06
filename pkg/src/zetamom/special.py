"""Complex special functions in double precision.

Everything is vectorised over numpy arrays; scalar inputs give Python scalars.
High precision libraries are used only once, to tabulate the Taylor
coefficients of the Riemann-Siegel kernel.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.special import bernoulli

from ._contour import cauchy_coeffs
from ._quad import QuadratureError, gauss_kronrod

EULER_GAMMA = float(np.euler_gamma)
LOG_PI = math.log(math.pi)
LOG_2PI = math.log(2.0 * math.pi)

# Auto mode hands the critical line to Riemann-Siegel from this height on.
RS_AUTO_MIN_T = 20.0


class PoleError(ZeroDivisionError):
    """Argument sits on a pole of the requested function."""


class AccuracyWarning(UserWarning):
    """Evaluation left the region where the accuracy target was validated."""


@dataclass(frozen=True)
class ZetaMethod:
    kind: str
    terms: int

    KINDS = ("riemann-siegel", "euler-maclaurin", "dirichlet-tail")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown zeta method {self.kind!r}")
        if self.terms < 1:
            raise ValueError("terms must be positive")


@dataclass(frozen=True)
class StieltjesTable:
    gamma: tuple

    def __getitem__(self, n: int) -> float:
        return self.gamma[n]

    def __len__(self) -> int:
        return len(self.gamma)


def _as_complex(s):
    arr = np.asarray(s, dtype=complex)
    return arr, arr.ndim == 0


def _out(arr, scalar):
    return complex(arr) if scalar else arr


_B = bernoulli(24)  # B_0 .. B_24 as floats


# ---------------------------------------------------------------- log-gamma

def _stirling(s: np.ndarray, terms: int = 10) -> np.ndarray:
    out = (s - 0.5) * np.log(s) - s + 0.5 * LOG_2PI
    inv = 1.0 / s
    inv2 = inv * inv
    p = inv
    for j in range(1, terms + 1):
        out = out + _B[2 * j] / (2 * j * (2 * j - 1)) * p
        p = p * inv2
    return out


def log_gamma(s):
    """Principal-branch log Gamma, analytic off the negative real axis.

    Small arguments are shifted right by the recursion until the Stirling
    series is accurate; the shift uses principal logs of each factor, which
    keeps the result continuous along vertical lines.
    """
    arr, scalar = _as_complex(s)
    flat = arr.ravel()
    re, im = flat.real, flat.imag
    bad = (im == 0) & (re <= 0) & (re == np.round(re))
    if np.any(bad):
        raise PoleError(f"log_gamma has a pole at {flat[bad][0]}")
    target = np.where(np.abs(im) > 20.0, 1.0, 15.0)
    shift = np.maximum(0, np.ceil(target - re)).astype(int)
    acc = np.zeros_like(flat)
    if shift.size and shift.max() > 0:
        for k in range(int(shift.max())):
            m = shift > k
            acc[m] += np.log(flat[m] + k)
    res = _stirling(flat + shift) - acc
    return _out(res.reshape(arr.shape), scalar)


def log_gamma_ratio(a, w):
    """log Gamma(a + w) - log Gamma(a) without cancellation for large |a|.

    Where both |a| and |a + w| exceed 15 (and Re a, Re(a + w) > 0) the
    Stirling series is differenced term by term, with log1p for the
    (a - 1/2) log factor; elsewhere the plain difference is returned.
    """
    a_arr, w_arr = np.broadcast_arrays(np.asarray(a, dtype=complex), np.asarray(w, dtype=complex))
    scalar = a_arr.ndim == 0
    a_f, w_f = a_arr.ravel(), w_arr.ravel()
    b_f = a_f + w_f
    ok = (np.abs(a_f) >= 15) & (np.abs(b_f) >= 15) & (a_f.real > 0) & (b_f.real > 0)
    out = np.empty_like(a_f)
    if np.any(~ok):
        out[~ok] = log_gamma(b_f[~ok]) - log_gamma(a_f[~ok])
    if np.any(ok):
        a1, w1, b1 = a_f[ok], w_f[ok], b_f[ok]
        val = w1 * np.log(b1) + (a1 - 0.5) * np.log1p(w1 / a1) - w1
        pa, pb = 1.0 / a1, 1.0 / b1
        ia2, ib2 = pa * pa, pb * pb
        for j in range(1, 11):
            val = val + _B[2 * j] / (2 * j * (2 * j - 1)) * (pb - pa)
            pa, pb = pa * ia2, pb * ib2
        out[ok] = val
    return _out(out.reshape(a_arr.shape), scalar)


def gamma_fn(s):
    return np.exp(log_gamma(s))


def beta_fn(a, b):
    """Beta function through log-Gamma differences."""
    a_arr = np.asarray(a, dtype=complex)
    b_arr = np.asarray(b, dtype=complex)
    val = np.exp(log_gamma(a_arr) + log_gamma(b_arr) - log_gamma(a_arr + b_arr))
    return complex(val) if np.ndim(val) == 0 else val


# ---------------------------------------------------------------- chi, theta

_THETA_SERIES = (1.0 / 48, 7.0 / 5760, 31.0 / 80640, 127.0 / 430080,
                 511.0 / 1216512, 1414477.0 / 1476034560)


def theta(t):
    """Riemann-Siegel theta, continuous and odd in t."""
    t_arr = np.asarray(t, dtype=float)
    a = np.abs(t_arr)
    out = np.empty_like(a)
    big = a > 20.0
    if np.any(big):
        x = a[big]
        val = 0.5 * x * np.log(x / (2.0 * np.pi)) - 0.5 * x - np.pi / 8
        inv = 1.0 / x
        inv2 = inv * inv
        p = inv
        for c in _THETA_SERIES:
            val = val + c * p
            p = p * inv2
        out[big] = val
    small = ~big
    if np.any(small):
        x = a[small]
        out[small] = np.imag(log_gamma(0.25 + 0.5j * x)) - 0.5 * x * LOG_PI
    out = np.sign(t_arr) * out
    return float(out) if out.ndim == 0 else out


def chi(s):
    """chi(s) with zeta(s) = chi(s) zeta(1-s)."""
    arr, scalar = _as_complex(s)
    flat = arr.ravel()
    pole = (flat.imag == 0) & (flat.real >= 1) & ((flat.real - 1) % 2 == 0)
    if np.any(pole):
        raise PoleError(f"chi has a pole at {flat[pole][0]}")
    half = flat / 2.0
    zero = (half.imag == 0) & (half.real <= 0) & (half.real == np.round(half.real))
    out = np.zeros_like(flat)
    ok = ~zero
    if np.any(ok):
        f = flat[ok]
        out[ok] = np.exp((f - 0.5) * LOG_PI + log_gamma((1.0 - f) / 2.0)
                         - log_gamma(f / 2.0))
    return _out(out.reshape(arr.shape), scalar)


# ---------------------------------------------------------------- Riemann-Siegel

@lru_cache(maxsize=1)
def _psi_taylor(degree: int = 110) -> np.ndarray:
    """Taylor coefficients in z = p - 1/2 of cos(2pi(p^2-p-1/16))/cos(2pi p)."""
    import mpmath as mp
    with mp.workdps(80):
        two_pi = 2 * mp.pi
        num = [mp.mpf(0)] * (degree + 1)
        cb, sb = mp.cos(-5 * mp.pi / 8), mp.sin(-5 * mp.pi / 8)
        m = 0
        while 4 * m <= degree:
            num[4 * m] += cb * (-1) ** m * two_pi ** (2 * m) / mp.factorial(2 * m)
            if 4 * m + 2 <= degree:
                num[4 * m + 2] -= sb * (-1) ** m * two_pi ** (2 * m + 1) / mp.factorial(2 * m + 1)
            m += 1
        sec = [mp.mpf(0)] * (degree + 1)
        for n in range(0, degree // 2 + 1):
            sec[2 * n] = abs(mp.eulernum(2 * n)) * two_pi ** (2 * n) / mp.factorial(2 * n)
        prod = [-mp.fsum(num[i] * sec[k - i] for i in range(k + 1)) for k in range(degree + 1)]
    return np.array([float(c) for c in prod])


@lru_cache(maxsize=None)
def _psi_deriv_poly(k: int) -> np.ndarray:
    c = _psi_taylor()
    return np.polynomial.polynomial.polyder(c, k) if k else c


def _psi(p: np.ndarray, k: int) -> np.ndarray:
    return np.polynomial.polynomial.polyval(p - 0.5, _psi_deriv_poly(k))


RS_ORDER = 10


@lru_cache(maxsize=1)
def _rs_table(order: int = RS_ORDER) -> tuple:
    """Exact coefficients d[n, l] expressing C_n through derivatives of Psi.

    C_n(p) = sum_l d[n,l] (-1/2)^(3n-2l) Psi^(3n-2l)(p) / (pi^(2n-l) (2i)^l).
    """
    d = {(0, 0): Fraction(1)}
    for n in range(1, order + 1):
        for k in range(0, 3 * n // 2 + 1):
            m = 3 * n - 2 * k
            v = -(m + 1) * d.get((n - 1, k - 2), Fraction(0))
            if m:
                v += d.get((n - 1, k), Fraction(0)) / (4 * m)
            d[n, k] = v
    rows = []
    for n in range(order + 1):
        row = []
        for l in range(0, 3 * n // 2 + 1, 2):
            c = d.get((n, l), Fraction(0))
            if c:
                m = 3 * n - 2 * l
                row.append((m, float(c) * (-0.5) ** m
                            / (math.pi ** (2 * n - l) * (-4.0) ** (l // 2))))
        rows.append(tuple(row))
    return tuple(rows)


def _rs_corrections(p: np.ndarray, order: int = RS_ORDER) -> list:
    cache = {}
    out = []
    for row in _rs_table()[: order + 1]:
        acc = np.zeros_like(p)
        for m, c in row:
            if m not in cache:
                cache[m] = _psi(p, m)
            acc = acc + c * cache[m]
        out.append(acc)
    return out


def hardy_z(t, corrections: int = RS_ORDER + 1):
    """Hardy's Z(t) by Riemann-Siegel for t >= 20 (vectorised)."""
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(np.abs(t_arr) < 20.0):
        raise ValueError("Riemann-Siegel needs |t| >= 20")
    a = np.abs(t_arr)
    tau = np.sqrt(a / (2.0 * np.pi))
    n_main = np.floor(tau).astype(int)
    p = tau - n_main
    th = theta(a)
    main = np.zeros_like(a)
    order = np.argsort(n_main)
    cap = 4_000_000
    start = 0
    while start < order.size:
        nmax = int(n_main[order[min(order.size - 1, start)]])
        size = max(1, cap // max(nmax, 1))
        idx = order[start:start + size]
        nmax = int(n_main[idx].max())
        n = np.arange(1, nmax + 1, dtype=float)
        ln = np.log(n)
        ph = th[idx, None] - a[idx, None] * ln[None, :]
        terms = np.cos(ph) / np.sqrt(n)[None, :]
        mask = n[None, :] <= n_main[idx, None]
        main[idx] = 2.0 * (terms * mask).sum(axis=1)
        start += size
    cs = _rs_corrections(p)[:corrections]
    w = np.sqrt(2.0 * np.pi / a)
    rem = np.zeros_like(a)
    for k, c in enumerate(cs):
        rem = rem + c * w ** k
    sign = np.where(n_main % 2 == 1, 1.0, -1.0)
    z = main + sign * np.sqrt(w) * rem
    return float(z[0]) if np.ndim(t) == 0 else z


def _zeta_rs(s: np.ndarray) -> np.ndarray:
    t = s.imag
    z = hardy_z(np.abs(t))
    val = np.exp(-1j * theta(np.abs(t))) * z
    return np.where(t < 0, np.conj(val), val)


# ---------------------------------------------------------------- Euler-Maclaurin

def _chunks_by_length(lengths: np.ndarray, cap: int = 2_000_000):
    """Index blocks (in increasing length order) whose rows * max length <= cap."""
    order = np.argsort(lengths, kind="stable")
    srt = lengths[order]
    start = 0
    while start < order.size:
        size = max(1, cap // max(int(srt[start]), 1))
        while size > 1 and size * int(srt[min(start + size, order.size) - 1]) > cap:
            size //= 2
        yield order[start:start + size]
        start += size


def _direct_sums(s: np.ndarray, n_terms: np.ndarray) -> np.ndarray:
    """sum_{n < N_i} n^{-s_i} with per-element N_i."""
    out = np.zeros(s.shape, dtype=complex)
    for idx in _chunks_by_length(n_terms):
        nmax = int(n_terms[idx].max())
        n = np.arange(1, nmax, dtype=float)
        ln = np.log(n)
        terms = np.exp(-s[idx, None] * ln[None, :])
        mask = n[None, :] < n_terms[idx, None]
        out[idx] = (terms * mask).sum(axis=1)
    return out


def _em_tail(s: np.ndarray, n_terms: np.ndarray, bern_terms: int) -> np.ndarray:
    nf = n_terms.astype(float)
    ns = np.exp(-s * np.log(nf))
    out = nf * ns / (s - 1.0) + 0.5 * ns
    fac = s / nf
    for k in range(1, bern_terms + 1):
        out = out + _B[2 * k] / math.factorial(2 * k) * fac * ns
        fac = fac * (s + 2 * k - 1) * (s + 2 * k) / (nf * nf)
    return out


def _em_terms(s: np.ndarray) -> np.ndarray:
    return np.maximum(30, np.ceil(2.0 * np.abs(s.imag))).astype(np.int64)


def _dt_terms(s: np.ndarray) -> np.ndarray:
    return np.maximum(60, np.ceil(3.0 * np.abs(s.imag))).astype(np.int64)


def _zeta_em(s, n_terms=None):
    n = _em_terms(s) if n_terms is None else n_terms
    return _direct_sums(s, n) + _em_tail(s, n, 6)


def _zeta_dt(s, n_terms=None):
    n = _dt_terms(s) if n_terms is None else n_terms
    return _direct_sums(s, n) + _em_tail(s, n, 3)


def zeta_shift_grid(base, shifts):
    """Matrix zeta(base_i + shifts_k) by Euler-Maclaurin.

    All shifts of one row share a direct-sum length, so the n^{-base_i} factors
    are computed once and combined with n^{-shifts_k} by a matrix product.
    Intended for small shift sets (|shifts| << |Im base|) away from s = 1.
    """
    base = np.asarray(base, dtype=complex).ravel()
    shifts = np.asarray(shifts, dtype=complex).ravel()
    s_all = base[:, None] + shifts[None, :]
    if np.any(s_all == 1.0):
        raise PoleError("zeta has a pole at s = 1")
    if np.any(s_all.real < 0):
        raise ValueError("zeta_shift_grid needs Re s >= 0")
    n_row = _em_terms(s_all).max(axis=1)
    out = np.empty(s_all.shape, dtype=complex)
    for idx in _chunks_by_length(n_row):
        nmax = int(n_row[idx].max())
        n = np.arange(1, nmax, dtype=float)
        ln = np.log(n)
        rows = np.exp(-base[idx, None] * ln[None, :])
        rows = rows * (n[None, :] < n_row[idx, None])
        cols = np.exp(-shifts[None, :] * ln[:, None])
        out[idx] = rows @ cols
    nn = np.broadcast_to(n_row[:, None], s_all.shape)
    out += _em_tail(s_all.ravel(), nn.ravel(), 6).reshape(s_all.shape)
    return out


def select_method(s) -> ZetaMethod:
    """Method auto mode would use at the scalar ``s``."""
    s = complex(s)
    if s.real == 0.5 and abs(s.imag) >= RS_AUTO_MIN_T:
        return ZetaMethod("riemann-siegel", int(math.sqrt(abs(s.imag) / (2 * math.pi))))
    if s.real >= 1.5:
        return ZetaMethod("dirichlet-tail", int(_dt_terms(np.array([s]))[0]))
    return ZetaMethod("euler-maclaurin", int(_em_terms(np.array([s]))[0]))


def _check_region(flat: np.ndarray, kinds: np.ndarray):
    t = np.abs(flat.imag)
    off = (flat.real != 0.5) & (t > 1e4)
    if np.any(off) or np.any(t > 1e7):
        warnings.warn("zeta evaluated outside the validated region "
                      "(|t| > 1e4 off the critical line or |t| > 1e7)",
                      AccuracyWarning, stacklevel=3)


def zeta(s, method="auto"):
    """Riemann zeta.

    ``method`` is ``"auto"``, one of :attr:`ZetaMethod.KINDS`, or a
    :class:`ZetaMethod` (whose ``terms`` then fixes the direct-sum length).
    """
    arr, scalar = _as_complex(s)
    flat = arr.ravel()
    if np.any(flat == 1.0):
        raise PoleError("zeta has a pole at s = 1")
    n_fixed = None
    if isinstance(method, ZetaMethod):
        kind, n_fixed = method.kind, method.terms
    else:
        kind = method
    out = np.empty_like(flat)
    if kind == "auto":
        sig, t = flat.real, flat.imag
        neg = sig < -0.5
        rs = (sig == 0.5) & (np.abs(t) >= RS_AUTO_MIN_T)
        dt = (sig >= 1.5) & ~rs
        em = ~(neg | rs | dt)
        _check_region(flat, None)
        if np.any(rs):
            out[rs] = _zeta_rs(flat[rs])
        if np.any(dt):
            out[dt] = _zeta_dt(flat[dt])
        if np.any(em):
            out[em] = _zeta_em(flat[em])
        if np.any(neg):
            f = flat[neg]
            out[neg] = chi(f) * zeta(1.0 - f)
        return _out(out.reshape(arr.shape), scalar)
    nvec = None if n_fixed is None else np.full(flat.shape, n_fixed, dtype=np.int64)
    if kind == "riemann-siegel":
        if np.any(flat.real != 0.5) or np.any(np.abs(flat.imag) < 20.0):
            raise ValueError("riemann-siegel requires Re s = 1/2 and |Im s| >= 20")
        out = _zeta_rs(flat)
    elif kind == "euler-maclaurin":
        out = _zeta_em(flat, nvec)
    elif kind == "dirichlet-tail":
        if np.any(flat.real < 1.5):
            raise ValueError("dirichlet-tail requires Re s >= 1.5")
        out = _zeta_dt(flat, nvec)
    else:
        raise ValueError(f"unknown zeta method {kind!r}")
    return _out(out.reshape(arr.shape), scalar)


def zeta_critical(t):
    """zeta(1/2 + i t) for real t (vectorised convenience)."""
    t_arr = np.asarray(t, dtype=float)
    return zeta(0.5 + 1j * t_arr)


def zeta_derivatives(s: complex, order: int) -> list:
    """[zeta(s), zeta'(s), ..., zeta^(order)(s)] from the differentiated
    Euler-Maclaurin formula.  Needs Re s > -10 and s away from 1."""
    s = complex(s)
    if s == 1:
        raise PoleError("zeta has a pole at s = 1")
    n_terms = int(max(60, math.ceil(3 * abs(s.imag))))
    n = np.arange(1, n_terms, dtype=float)
    ln = np.log(n)
    base = np.exp(-s * ln)
    L = math.log(n_terms)
    nsv = complex(np.exp(-s * L))
    u = s - 1.0
    out = []
    for j in range(order + 1):
        val = complex(np.sum((-ln) ** j * base))
        # N^{1-s}/(s-1) = N * N^{-s} / u
        val += n_terms * nsv * sum(math.comb(j, i) * (-L) ** (j - i)
                                   * (-1) ** i * math.factorial(i) / u ** (i + 1)
                                   for i in range(j + 1))
        val += 0.5 * (-L) ** j * nsv
        for k in range(1, 7):
            # B_2k/(2k)! * (s)_{2k-1} * N^{-s-2k+1}
            poly = np.poly1d([1.0])
            for m in range(2 * k - 1):
                poly = poly * np.poly1d([1.0, float(m)])
            acc = 0j
            for i in range(j + 1):
                acc += math.comb(j, i) * complex(np.polyder(poly, i)(s) if i else poly(s)) \
                    * (-L) ** (j - i)
            val += _B[2 * k] / math.factorial(2 * k) * acc * nsv * n_terms ** (-(2 * k - 1))
        out.append(val)
    return out


# ---------------------------------------------------------------- Stieltjes

@lru_cache(maxsize=None)
def _stieltjes_all() -> tuple:
    f = lambda s: zeta(1.0 + s) - 1.0 / s
    ser = cauchy_coeffs(f, 0.0, 0, 9, 1.5, rtol=1e-12)
    return tuple(float(((-1) ** n * math.factorial(n) * ser.coeff(n)).real) for n in range(9))


def stieltjes(n_max: int) -> StieltjesTable:
    """Stieltjes constants gamma_0 .. gamma_{n_max} (n_max <= 8)."""
    if not 0 <= n_max <= 8:
        raise ValueError("n_max must lie in 0..8")
    return StieltjesTable(_stieltjes_all()[: n_max + 1])


# ---------------------------------------------------------------- 2F1(-1/x)

def _hyp_series(a, b, c, z, tol=1e-17, max_terms=5000):
    term = 1.0 + 0j
    total = 1.0 + 0j
    for n in range(max_terms):
        term *= (a + n) * (b + n) / ((c + n) * (n + 1)) * z
        total += term
        if abs(term) <= tol * abs(total) and n > 2:
            return total
    raise QuadratureError("hypergeometric series did not converge", achieved=abs(term))


def _hyp_euler(a, b, c, x, tol=1e-13):
    """Euler integral with the endpoint behaviour removed by w = e^{-u}."""
    if not (b.real > 0 and (c - b).real > 0):
        raise ValueError("Euler integral needs Re c > Re b > 0")
    ln2 = math.log(2.0)

    def left(u):
        w = np.exp(-u)
        return np.exp(-u * b + (c - b - 1) * np.log1p(-w) - a * np.log1p(w / x))

    def right(v):
        e = np.exp(-v)
        w = -np.expm1(-v)
        return np.exp(-v * (c - b) + (b - 1) * np.log(w) - a * np.log1p(w / x))

    u1 = ln2 + 42.0 / b.real
    u2 = ln2 + 42.0 / (c - b).real
    i1, _ = gauss_kronrod(left, ln2, u1, rel_tol=tol, abs_tol=1e-300, initial=8)
    i2, _ = gauss_kronrod(right, ln2, u2, rel_tol=tol, abs_tol=1e-300, initial=8)
    return (i1 + i2) / beta_fn(b, c - b)


def hyp2f1_neg(a, b, c, x: float, method: str = "auto") -> complex:
    """2F1(a, b; c; -1/x) for x > 0.

    ``auto`` sums the defining series for x >= 2 and otherwise uses the Euler
    integral (swapping a and b if that makes it valid, else the Pfaff
    transformation to argument 1/(1+x)).
    """
    a, b, c = complex(a), complex(b), complex(c)
    x = float(x)
    if not x > 0:
        raise ValueError("x must be positive")
    if c.imag == 0 and c.real <= 0 and c.real == round(c.real):
        raise PoleError("c must not be a non-positive integer")
    if method == "series" or (method == "auto" and x >= 2):
        if x < 1:
            raise ValueError("the series needs x >= 1")
        return _hyp_series(a, b, c, -1.0 / x)
    if method not in ("auto", "euler"):
        raise ValueError(f"unknown method {method!r}")
    if b.real > 0 and (c - b).real > 0:
        return complex(_hyp_euler(a, b, c, x))
    if a.real > 0 and (c - a).real > 0:
        return complex(_hyp_euler(b, a, c, x))
    if method == "euler":
        raise ValueError("Euler integral not valid for these parameters")
    z = -1.0 / x
    return complex((1 - z) ** (-a) * _hyp_series(a, c - b, c, z / (z - 1)))
