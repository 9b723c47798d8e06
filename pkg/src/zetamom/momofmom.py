"""Moments of moments M_{2,2}: closed-form main terms and desk-scale quadrature."""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from ._quad import QuadratureError, composite_gl_nodes, exact_sum
from .analytic import a_coeffs, moment_polynomial
from .smoothing import g_window_fourier
from .special import EULER_GAMMA, zeta_critical

KERNEL_KINDS = ("indicator", "smooth-exp")
CSV_FIELDS = ("T", "c", "kind", "dbar", "odbar", "total", "empirical", "a_constant")


class BranchCutError(ValueError):
    pass


class StepTooCoarseError(QuadratureError):
    pass


@dataclass(frozen=True)
class AveragingKernel:
    """g(x) = g0(x/c)/c.  ``indicator``: g0 = 1{|x| <= 1}/2.
    ``smooth-exp``: the Cauchy density with hat g0(y/2pi) = exp(-A|y|)."""

    kind: str = "indicator"
    c: float = math.pi
    A: float = 1.0

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ValueError(f"kernel kind must be one of {KERNEL_KINDS}")
        if not self.c > 0 or not self.A > 0:
            raise ValueError("c and A must be positive")

    def ghat(self, y):
        return g_window_fourier("indicator" if self.kind == "indicator" else "smooth",
                                self.c, y, self.A)


@dataclass
class MoMReport:
    T: float
    kernel: AveragingKernel
    dbar: float
    odbar: float
    formula_total: float = field(init=False)
    empirical: float | None = None
    a_constant: float | None = None

    def __post_init__(self):
        self.formula_total = self.T * (self.dbar + self.odbar)

    @property
    def abs_diff(self) -> float | None:
        return None if self.empirical is None else self.empirical - self.formula_total

    @property
    def normalized_diff(self) -> float | None:
        return None if self.empirical is None else (self.empirical - self.formula_total) / self.T

    def to_dict(self) -> dict:
        return {"T": self.T, "kernel": asdict(self.kernel), "dbar": self.dbar,
                "odbar": self.odbar, "formula_total": self.formula_total,
                "empirical": self.empirical, "a_constant": self.a_constant,
                "abs_diff": self.abs_diff, "normalized_diff": self.normalized_diff}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def csv_row(self) -> list:
        return [self.T, self.kernel.c, self.kernel.kind, self.dbar, self.odbar,
                self.formula_total, self.empirical, self.a_constant]


def write_mom_csv(reports, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for rep in reports:
            w.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v)
                        for v in rep.csv_row()])


# ------------------------------------------------------------------ Laplace transform

def laplace_ghat2_indicator(s, c: float) -> complex:
    """int_0^inf sinc^2(c y) e^{-s y} dy in closed form (principal logs)."""
    s = complex(s)
    if not c > 0:
        raise ValueError("c must be positive")
    if s.real < 0 or (s.real == 0 and abs(s.imag) <= 2 * c):
        raise BranchCutError("s lies on or beyond the branch cuts of the closed form")
    p, m = s + 2j * c, s - 2j * c
    val = -(p * np.log(p) + m * np.log(m) - 2 * s * np.log(s)) / (4 * c * c)
    return complex(val)


# ------------------------------------------------------------------ D-bar

def _N(T: float) -> float:
    return math.log(T / (2 * math.pi))


def dbar_integral(T: float, kernel: AveragingKernel, rtol: float = 1e-11) -> float:
    """2 int_0^N ghat^2(y/2pi) P3(N - y) dy by composite Gauss-Legendre."""
    N = _N(T)
    p3 = moment_polynomial("P3")
    # resolve the sinc^2 oscillation (period pi/c) or the exponential scale 1/(2Ac)
    scale = math.pi / kernel.c if kernel.kind == "indicator" else 1.0 / (2 * kernel.A * kernel.c)
    width = min(0.5, scale / 2)
    prev = None
    for _ in range(5):
        n = max(2, int(math.ceil(N / width)))
        y, w = composite_gl_nodes(np.linspace(0.0, N, n + 1), 16)
        val = 2.0 * exact_sum(kernel.ghat(y) ** 2 * p3(N - y) * w)
        if prev is not None and abs(val - prev) <= rtol * abs(val):
            return val
        prev, width = val, width / 2
    raise QuadratureError("dbar quadrature did not converge", achieved=abs(val - prev))


def dbar_closed(T: float, kernel: AveragingKernel) -> float:
    """Large-N closed forms of the D-bar integral."""
    N = _N(T)
    p3 = moment_polynomial("P3")
    b0, b1, b2, b3 = p3.coeffs
    c = kernel.c
    if kernel.kind == "indicator":
        return (math.pi / c * p3(N)
                - p3(N, 1) * (math.log(2 * c * N) + EULER_GAMMA) / c ** 2
                + (3 * b0 * N ** 2 - 2 * b2) / (2 * c ** 2)
                - b0 / (4 * c ** 4)
                - b3 / (c ** 2 * N))
    lam = 2 * kernel.A * c
    return sum(2 * (-1) ** j * p3(N, j) / lam ** (j + 1) for j in range(4))


def dbar(T: float, kernel: AveragingKernel, route: str = "integral") -> float:
    if T < 100:
        raise ValueError("T must be at least 100")
    if route == "integral":
        return dbar_integral(T, kernel)
    if route == "closed":
        return dbar_closed(T, kernel)
    raise ValueError("route must be 'integral' or 'closed'")


def odbar(T: float, kernel: AveragingKernel) -> float:
    """a0 N^2 + 2 a1 N + a2 with a_j built from h(it, s)/(1 + s) including e^{2 gamma s}."""
    if T < 100:
        raise ValueError("T must be at least 100")
    N = _N(T)
    a0, a1, a2 = (a_coeffs(kernel.kind, kernel.c, j, kernel.A) for j in range(3))
    return a0 * N * N + 2 * a1 * N + a2


def log_anomaly_constant(c: float, raw: bool = False) -> float:
    """Constant of the N^{-1} term for the indicator kernel of half-width c.

    The raw coefficient in T^{-1} M_{2,2} is -b3/c^2; the default return value
    b3 pi^2/c^2 is normalised so that c = pi gives b3.
    """
    if not c > 0:
        raise ValueError("c must be positive")
    b3 = moment_polynomial("P3").coeffs[3]
    return -b3 / c ** 2 if raw else b3 * math.pi ** 2 / c ** 2


def anomaly_for(kernel: AveragingKernel) -> float:
    if kernel.kind != "indicator":
        raise ValueError("the log-anomaly constant is defined for indicator kernels only")
    return log_anomaly_constant(kernel.c)


def m22_formula(T: float, kernel: AveragingKernel) -> MoMReport:
    d = dbar(T, kernel)
    o = odbar(T, kernel)
    a = anomaly_for(kernel) if kernel.kind == "indicator" else None
    return MoMReport(T, kernel, d, o, a_constant=a)


# ------------------------------------------------------------------ empirical

def _abs_zeta_sq(u: np.ndarray, workers: int = 1) -> np.ndarray:
    t = np.abs(u)
    chunks = np.array_split(t, max(1, t.size // 50000))
    f = lambda ch: np.abs(zeta_critical(ch)) ** 2
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(f, chunks))
    else:
        parts = [f(ch) for ch in chunks]
    return np.concatenate(parts)


def _outer_integral(values: np.ndarray, h: float, T: float) -> float:
    """int_0^T of samples on t_k = k h by a not-a-knot cubic spline (O(h^4))."""
    K = min(values.size - 1, int(math.ceil(T / h)) + 3)
    u = h * np.arange(K + 1)
    return float(CubicSpline(u, values[:K + 1]).integrate(0.0, T))


def _m22_on_grid(T: float, c: float, h_target: float, signal, point_mass: bool,
                 workers: int) -> float:
    m = max(1, int(math.ceil(c / h_target)))
    h = c / m
    # grid aligned so that u = 0 and u = +-c are nodes
    k0 = m + int(math.ceil(5.0 / h))
    lo = -k0 * h
    n_pts = k0 + int(math.ceil((T + c + 5.0) / h)) + 1
    u = lo + h * np.arange(n_pts)
    F = signal(u) if signal is not None else _abs_zeta_sq(u, workers)
    if point_mass:
        s = F[k0:]
    else:
        wts = np.full(2 * m + 1, h)
        wts[0] = wts[-1] = h / 2
        conv = np.convolve(F, wts[::-1], mode="valid") / (2 * c)
        # conv[k] averages F over u_k .. u_{k+2m}, i.e. centred at u_{k+m}
        s = conv[k0 - m:]
    return _outer_integral(s * s, h, T)


def m22_empirical(T: float, kernel: AveragingKernel, grid_step: float = 0.02, *,
                  signal=None, point_mass: bool = False, workers: int = 1,
                  return_error: bool = False):
    """int_0^T ((1/2c) int_{-c}^{c} |zeta(1/2+i(t+h))|^2 dh)^2 dt on a uniform grid.

    The step is refined to divide c.  A step-halving estimate is attached; a
    change above 1% raises :class:`StepTooCoarseError`.
    """
    if kernel.kind != "indicator":
        raise ValueError("m22_empirical supports the indicator kernel only")
    if T > 1e4:
        raise ValueError("T beyond the desk-scale limit 1e4")
    if not 0 < grid_step <= 0.05:
        raise ValueError("grid_step must lie in (0, 0.05]")
    coarse = _m22_on_grid(T, kernel.c, grid_step, signal, point_mass, workers)
    fine = _m22_on_grid(T, kernel.c, grid_step / 2, signal, point_mass, workers)
    err = abs(fine - coarse)
    if err > 0.01 * abs(fine):
        raise StepTooCoarseError("step halving changed M22 by more than 1%",
                                 achieved=err / abs(fine), value=fine)
    # Richardson on the O(h^2) error of the inner trapezoid average
    est = fine + (fine - coarse) / 3.0
    return (est, err) if return_error else est
