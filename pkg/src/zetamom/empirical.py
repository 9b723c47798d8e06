"""Quadrature of shifted zeta moments and the approximate functional equation check."""
from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from ._quad import QuadratureError, exact_sum, gauss_legendre
from .divisor import sieve_divisors
from .smoothing import (ShiftConfig, SmoothingConfig, VWeightGrid, Window, j_weight,
                        kappa_phi, window_eval)
from .special import zeta_critical


class ToleranceNotMetError(QuadratureError):
    pass


@dataclass(frozen=True)
class QuadratureSpec:
    panel_width: float = 0.25
    nodes_per_panel: int = 16
    tolerance: float = 1e-9

    def __post_init__(self):
        if not self.panel_width > 0:
            raise ValueError("panel_width must be positive")
        if self.nodes_per_panel not in (8, 16, 32):
            raise ValueError("nodes_per_panel must be 8, 16 or 32")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")

    @staticmethod
    def max_width(T2: float) -> float:
        """Half the mean gap between zeros at height T2."""
        return math.pi / math.log(max(T2, 2 * math.pi * math.e) / (2 * math.pi))

    @classmethod
    def for_range(cls, T2: float, nodes_per_panel: int = 16, tolerance: float = 1e-9):
        return cls(cls.max_width(T2), nodes_per_panel, tolerance)


@dataclass
class MomentReport:
    T1: float
    T2: float
    shift: ShiftConfig
    window: Window | None
    empirical: float
    main_term: float
    abs_diff: float = field(init=False)
    rel_diff: float = field(init=False)
    n_evals: int = 0
    wall_seconds: float = 0.0

    def __post_init__(self):
        self.abs_diff = abs(self.empirical - self.main_term)
        self.rel_diff = self.abs_diff / abs(self.main_term) if self.main_term else math.inf

    def to_dict(self) -> dict:
        return {
            "T1": self.T1, "T2": self.T2, "shift": asdict(self.shift),
            "window": None if self.window is None else asdict(self.window),
            "empirical": self.empirical, "main_term": self.main_term,
            "abs_diff": self.abs_diff, "rel_diff": self.rel_diff,
            "n_evals": self.n_evals, "wall_seconds": self.wall_seconds,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=False, indent=2) + "\n"


def integrand(t, shift: ShiftConfig):
    """|zeta(1/2+i(t+alpha))|^2 |zeta(1/2+i(t+beta))|^2, vectorised in t."""
    t = np.asarray(t, dtype=float)
    if np.any(t + min(shift.alpha, shift.beta) < 0):
        raise ValueError("need t + alpha >= 0 and t + beta >= 0")
    za = np.abs(zeta_critical(t + shift.alpha)) ** 2
    if shift.alpha == shift.beta:
        out = za * za
    else:
        out = za * np.abs(zeta_critical(t + shift.beta)) ** 2
    return float(out) if out.ndim == 0 else out


def _panel_edges(lo: float, hi: float, width: float, breaks=()) -> np.ndarray:
    pts = sorted({lo, hi, *[b for b in breaks if lo < b < hi]})
    edges = [lo]
    for a, b in zip(pts[:-1], pts[1:]):
        n = max(1, int(math.ceil((b - a) / width)))
        edges.extend(np.linspace(a, b, n + 1)[1:].tolist())
    return np.array(edges)


def _panel_values(f, edges: np.ndarray, n: int, workers: int) -> np.ndarray:
    x, w = gauss_legendre(n)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])

    def block(sl):
        xs = mid[sl, None] + half[sl, None] * x[None, :]
        return (f(xs.ravel()).reshape(xs.shape) * w[None, :]).sum(axis=1) * half[sl]

    n_pan = mid.size
    step = 4096
    slices = [slice(i, min(i + step, n_pan)) for i in range(0, n_pan, step)]
    if workers > 1 and len(slices) > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(block, slices))
    else:
        parts = [block(s) for s in slices]
    return np.concatenate(parts) if parts else np.zeros(0)


def moment_quadrature(T1: float, T2: float, shift: ShiftConfig, window: Window | None = None,
                      spec: QuadratureSpec | None = None, *, workers: int = 1,
                      func=None, max_halvings: int = 3, stats: dict | None = None) -> float:
    """int W(t) |zeta zeta|^2 dt by composite Gauss-Legendre with panel halving.

    Without a window the range is [T1, T2]; with one it is the window's support.
    ``func`` replaces the zeta integrand (engine self-tests).
    """
    if window is not None:
        lo, hi = window.support()
        lo = max(lo, 0.0)
        breaks = window.breakpoints()
    else:
        lo, hi, breaks = T1, T2, ()
    if not (0 <= lo < hi):
        raise ValueError("need 0 <= T1 < T2")
    if hi > 1e6 and func is None:
        raise ValueError("T2 beyond the validated range 1e6")
    spec = spec or QuadratureSpec.for_range(hi)
    width = min(spec.panel_width, QuadratureSpec.max_width(hi))
    base = func if func is not None else (lambda t: integrand(t, shift))
    f = base if window is None else (lambda t: base(t) * window_eval(window, t))
    evals = 0
    prev, err = None, math.inf
    for _ in range(max_halvings + 1):
        edges = _panel_edges(lo, hi, width, breaks)
        vals = _panel_values(f, edges, spec.nodes_per_panel, workers)
        evals += vals.size * spec.nodes_per_panel
        cur = exact_sum(vals)
        if prev is not None:
            err = abs(cur - prev)
            if err <= spec.tolerance * max(abs(cur), 1e-300):
                if stats is not None:
                    stats.update(n_evals=evals, error=err)
                return cur
        prev = cur
        width /= 2
    raise ToleranceNotMetError("moment quadrature missed its tolerance",
                               achieved=err / max(abs(cur), 1e-300), value=cur)


# ------------------------------------------------------------------ AFE

def afe_cutoff(t: float, shift: ShiftConfig, q: SmoothingConfig, cutoff_sigma: float) -> int:
    return int(t * (t + shift.delta) / (4 * math.pi ** 2) * math.exp(cutoff_sigma / math.sqrt(q.Q)))


def _pair_sums(t: float, delta: float, M: int, d: np.ndarray) -> np.ndarray:
    """S[x] = sum_{nm = x} d(n) d(m) m^{i(t+delta)} n^{-it} for x <= M."""
    n = np.arange(1, M + 1)
    counts = M // n
    total = int(counts.sum())
    nn = np.repeat(n, counts)
    starts = np.repeat(np.cumsum(counts) - counts, counts)
    mm = np.arange(total) - starts + 1
    x = nn * mm
    w = d[nn].astype(float) * d[mm].astype(float)
    ph = (t + delta) * np.log(mm) - t * np.log(nn)
    re = np.bincount(x, weights=w * np.cos(ph), minlength=M + 1)
    im = np.bincount(x, weights=w * np.sin(ph), minlength=M + 1)
    return re + 1j * im


def afe_rhs(t: float, shift: ShiftConfig, q: SmoothingConfig, M: int, weight: str = "V") -> float:
    """2 Re kappa(t) sum_{nm <= M} d(n)d(m) m^{i delta} (m/n)^{it} W(nm) / sqrt(nm)."""
    delta = shift.delta
    d = sieve_divisors(max(M, 1)).d
    S = _pair_sums(t, delta, M, d)[1:]
    x = np.arange(1, M + 1, dtype=float)
    if weight == "V":
        span = abs(math.log(t * (t + delta) / (4 * math.pi ** 2))) + 2.0
        v = VWeightGrid(t, shift, q, log_x_span=span)(x)
    elif weight == "J":
        v = j_weight(x, t, shift, q)
    else:
        raise ValueError("weight must be 'V' or 'J'")
    kap, _ = kappa_phi(t, shift)
    terms = (kap * S * v / np.sqrt(x))
    return 2.0 * exact_sum(terms.real)


def afe_check(t: float, shift: ShiftConfig, q: SmoothingConfig, cutoff_sigma: float = 12.0,
              weight: str = "V") -> tuple[float, float, float]:
    """(lhs, rhs, rel_err) for the exact smoothed approximate functional equation."""
    if not 50 <= t <= 2000:
        raise ValueError("t must lie in [50, 2000]")
    if not 9 <= q.Q <= 100:
        raise ValueError("Q must lie in [9, 100]")
    lhs = float(np.abs(zeta_critical(t)) ** 2 * np.abs(zeta_critical(t + shift.delta)) ** 2)
    M = afe_cutoff(t, shift, q, cutoff_sigma)
    rhs = afe_rhs(t, shift, q, M, weight)
    return lhs, rhs, abs(lhs - rhs) / abs(lhs)


def timed(fn, *args, **kwargs):
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - t0
