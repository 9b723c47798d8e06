"""Divisor sieve, additive divisor correlations and their main term."""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np

from ._contour import cauchy_coeffs
from ._quad import composite_gl_nodes, exact_sum
from .special import EULER_GAMMA, zeta, zeta_derivatives

MAX_SIEVE = 200_000_000
CSV_FIELDS = ("X", "r", "sum", "main", "error", "normalized_error")


class CapacityError(MemoryError):
    pass


@dataclass(frozen=True, eq=False)
class DivisorTable:
    """d(n) for 0 <= n <= N (index 0 holds 0)."""

    N: int
    d: np.ndarray

    def __getitem__(self, n):
        return self.d[n]


@dataclass(frozen=True)
class CorrelationRecord:
    X: int
    r: int
    sum: int
    main: float
    error: float
    normalized_error: float

    def as_dict(self) -> dict:
        return asdict(self)


def sieve_divisors(N: int) -> DivisorTable:
    """Exact d(n), n <= N, by pairing divisors k <= sqrt(n) with their cofactors."""
    if not 1 <= N <= MAX_SIEVE:
        raise CapacityError(f"N must lie in [1, {MAX_SIEVE}]")
    d = np.zeros(N + 1, dtype=np.uint32)
    k = 1
    while k * k <= N:
        d[k * k] += 1
        d[k * (k + 1)::k] += 2
        k += 1
    d.setflags(write=False)
    return DivisorTable(N, d)


def _factor(r: int) -> list[tuple[int, int]]:
    out = []
    p = 2
    while p * p <= r:
        if r % p == 0:
            e = 0
            while r % p == 0:
                r //= p
                e += 1
            out.append((p, e))
        p += 1 if p == 2 else 2
    if r > 1:
        out.append((r, 1))
    return out


@lru_cache(maxsize=4096)
def divisors(r: int) -> tuple[int, ...]:
    if not 1 <= r <= 10 ** 9:
        raise ValueError("r must lie in [1, 1e9]")
    divs = [1]
    for p, e in _factor(r):
        divs = [q * p ** k for q in divs for k in range(e + 1)]
    return tuple(sorted(divs))


def sigma_z(r: int, z, log_power: int = 0) -> complex:
    """sum_{d | r} d^z log^l d."""
    if log_power < 0:
        raise ValueError("log_power must be non-negative")
    ds = np.array(divisors(int(r)), dtype=float)
    lg = np.log(ds)
    return complex(exact_sum(np.exp(complex(z) * lg) * lg ** log_power))


def correlation_sum(X: int, r: int, table: DivisorTable) -> int:
    """Exact sum_{n <= X} d(n) d(n + r)."""
    if r < 1:
        raise ValueError("r must be at least 1")
    if X <= 0:
        return 0
    if X + r > table.N:
        raise ValueError("table too short for X + r")
    a = table.d[1:X + 1].astype(np.int64)
    b = table.d[1 + r:X + r + 1].astype(np.int64)
    bound = int(a.max()) * int(b.max()) * X
    if bound < 2 ** 62:
        return int(np.dot(a, b))
    total = 0
    for i in range(0, X, 1 << 20):
        total += int(np.dot(a[i:i + (1 << 20)], b[i:i + (1 << 20)]))
    return total


# ------------------------------------------------------------------ main term

@lru_cache(maxsize=1)
def _zeta2_derivs() -> tuple[float, float, float]:
    z0, z1, z2 = zeta_derivatives(2.0, 2)
    return z0.real, z1.real, z2.real


def _ratio_derivs(r: int) -> tuple[float, float, float]:
    """sigma_{1+2h}(r)/zeta(2+2h) and its first two h-derivatives at h = 0."""
    z0, z1, z2 = _zeta2_derivs()
    S0 = sigma_z(r, 1, 0).real
    S1 = 2.0 * sigma_z(r, 1, 1).real
    S2 = 4.0 * sigma_z(r, 1, 2).real
    Z0 = 1.0 / z0
    Z1 = -2.0 * z1 / z0 ** 2
    Z2 = 4.0 * (2.0 * z1 ** 2 / z0 ** 3 - z2 / z0 ** 2)
    return S0 * Z0, S1 * Z0 + S0 * Z1, S2 * Z0 + 2 * S1 * Z1 + S0 * Z2


def motohashi_main_density(x, r: int):
    """m(x, r): the h -> 0 limit of m(x, r, h), in expanded closed form.

    Density in the scaled variable x = n/r, vectorised in x.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("x must be positive")
    z0 = _zeta2_derivs()[0]
    s1 = sigma_z(r, 1, 0).real
    _, d1, d2 = _ratio_derivs(r)
    c = 2.0 * EULER_GAMMA - math.log(r)
    lx, l1x = np.log(x), np.log1p(x)
    out = (s1 / z0 * (lx * l1x + (lx + l1x) * c + c * c)
           + (lx + l1x + 2.0 * c) * d1 + d2)
    return float(out) if out.ndim == 0 else out


def m_xrh(x: float, r: int, h):
    """m(x, r, h) for h != 0 (vectorised in h)."""
    h_arr = np.asarray(h, dtype=complex)
    h = h_arr.ravel()
    ds = np.array(divisors(r), dtype=float)
    s_p = np.exp(np.outer(1 + 2 * h, np.log(ds))).sum(axis=1)
    s_m = np.exp(np.outer(1 - 2 * h, np.log(ds))).sum(axis=1)
    s1 = ds.sum()
    zp, zm = zeta(1 + h), zeta(1 - h)
    out = (s_p * zp ** 2 / zeta(2 + 2 * h) * x ** h * (1 + x) ** h
           + r ** (2 * h) * s_m * zm ** 2 / zeta(2 - 2 * h)
           + r ** h * s1 * zp * zm / zeta(2.0) * (x ** h + (1 + x) ** h))
    return out.reshape(h_arr.shape) if h_arr.ndim else complex(out[0])


def motohashi_main_density_contour(x: float, r: int, radius: float = 0.2) -> float:
    """m(x, r) as the constant Laurent coefficient of m(x, r, h) at h = 0."""
    ser = cauchy_coeffs(lambda h: m_xrh(x, r, h), 0.0, 2, 3, radius)
    return ser.coeff(0).real


def motohashi_compact(x: float, r: int) -> float:
    """d^2/dh^2 [(x e^{2 gamma}/r)^h sigma_{1+2h}(r)/zeta(2+2h)] at 0 (large-x form)."""
    d0, d1, d2 = _ratio_derivs(r)
    L = math.log(x) - math.log(r) + 2 * EULER_GAMMA
    return L * L * d0 + 2 * L * d1 + d2


def main_term(X: float, r: int, n0: int = 2) -> float:
    """int_{n0}^{X} m(n/r, r) dn / r."""
    if X <= n0:
        return 0.0
    u_lo, u_hi = math.log(n0), math.log(X)
    n_pan = max(4, int(math.ceil((u_hi - u_lo) / 0.25)))
    u, w = composite_gl_nodes(np.linspace(u_lo, u_hi, n_pan + 1), 16)
    n = np.exp(u)
    return exact_sum(motohashi_main_density(n / r, r) * n * w) / r


def correlation_record(X: int, r: int, table: DivisorTable) -> CorrelationRecord:
    if r < 1:
        raise ValueError("r must be at least 1")
    s = correlation_sum(X, r, table)
    head = correlation_sum(min(X, 2), r, table)
    main = head + main_term(X, r)
    err = s - main
    return CorrelationRecord(int(X), int(r), int(s), float(main), float(err),
                             float(err / X ** (2.0 / 3.0)))


def correlation_report(X: int, r_list, table: DivisorTable, workers: int = 1) -> list:
    r_list = [int(r) for r in r_list]
    if any(r < 1 for r in r_list):
        raise ValueError("every r must be at least 1")
    if r_list and max(r_list) + X > table.N:
        raise ValueError("table too short for X + max r")
    if workers > 1 and len(r_list) > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(lambda r: correlation_record(X, r, table), r_list))
    return [correlation_record(X, r, table) for r in r_list]


def write_records_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for rec in records:
            w.writerow([rec.X, rec.r, rec.sum] + [f"{v:.15g}" for v in
                                                  (rec.main, rec.error, rec.normalized_error)])
