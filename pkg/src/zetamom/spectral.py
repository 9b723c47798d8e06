"""Spectral-side transforms and error functionals: Xi, Theta, nu, E_c, E_d."""
from __future__ import annotations

import csv
import json
import math
import os
import urllib.request
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from ._quad import QuadratureError, composite_gl_nodes, exact_sum
from .divisor import sieve_divisors
from .smoothing import SmoothingConfig, Window, i_weight, window_eval, window_mellin
from .special import AccuracyWarning, beta_fn, chi, hyp2f1_neg, zeta

KAPPA_1 = 9.5337
HECKE_EXPONENT = 7.0 / 64 + 0.01
DATA_DIR_ENV = "ZETAMOM_DATA_DIR"
TEST_FUNCTION_KINDS = ("window-profile", "explicit-grid")


class DatasetError(ValueError):
    pass


class InsufficientCoefficientsError(ValueError):
    pass


# ------------------------------------------------------------------ test functions

@dataclass(frozen=True, eq=False)
class TestFunction:
    """Compactly supported U on (0, inf).

    ``window-profile`` evaluates a smooth :class:`Window` at x; ``explicit-grid``
    interpolates samples (x_k, U_k) by a cubic spline and is zero outside.
    ``scale`` and ``amplitude`` give amplitude * U(scale * x).
    """

    __test__ = False  # not a pytest class

    kind: str
    window: Window | None = None
    grid: tuple | None = None
    scale: float = 1.0
    amplitude: float = 1.0
    _spline: object = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if self.kind not in TEST_FUNCTION_KINDS:
            raise ValueError(f"kind must be one of {TEST_FUNCTION_KINDS}")
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        if self.kind == "window-profile":
            if self.window is None:
                raise ValueError("window-profile needs a window")
            if self.window.kind == "indicator":
                raise ValueError("an indicator window does not decay at its ends")
            if self.window.support()[0] <= 0:
                raise ValueError("support must lie in x > 0")
            return
        if self.grid is None:
            raise ValueError("explicit-grid needs (x, U) samples")
        xs = np.asarray(self.grid[0], dtype=float)
        us = np.asarray(self.grid[1], dtype=float)
        if xs.ndim != 1 or xs.shape != us.shape or xs.size < 4:
            raise ValueError("grid needs matching 1-d arrays of at least 4 samples")
        if xs[0] <= 0 or np.any(np.diff(xs) <= 0):
            raise ValueError("grid abscissae must be positive and increasing")
        if abs(us[0]) >= 1e-12 or abs(us[-1]) >= 1e-12:
            raise ValueError("U must fall below 1e-12 at both ends of the grid")
        object.__setattr__(self, "_spline", CubicSpline(xs, us, bc_type="clamped"))

    @classmethod
    def from_window(cls, window: Window) -> "TestFunction":
        return cls("window-profile", window=window)

    @classmethod
    def from_grid(cls, xs, us) -> "TestFunction":
        return cls("explicit-grid", grid=(tuple(map(float, xs)), tuple(map(float, us))))

    def rescaled(self, scale: float, amplitude: float = 1.0) -> "TestFunction":
        """x -> amplitude * U(scale * x), composed with any existing rescaling."""
        return TestFunction(self.kind, self.window, self.grid, self.scale * scale,
                            self.amplitude * amplitude)

    def _base_support(self):
        if self.kind == "window-profile":
            return self.window.support()
        return self.grid[0][0], self.grid[0][-1]

    def support(self) -> tuple[float, float]:
        lo, hi = self._base_support()
        return lo / self.scale, hi / self.scale

    def breakpoints(self) -> list[float]:
        if self.kind == "window-profile":
            pts = self.window.breakpoints()
        else:
            pts = [self.grid[0][0], self.grid[0][-1]]
        return sorted({p / self.scale for p in pts})

    def __call__(self, x):
        x = np.asarray(x, dtype=float) * self.scale
        if self.kind == "window-profile":
            out = window_eval(self.window, x)
        else:
            lo, hi = self._base_support()
            out = np.where((x >= lo) & (x <= hi), self._spline(np.clip(x, lo, hi)), 0.0)
        return self.amplitude * out


# ------------------------------------------------------------------ Xi and Theta

def _hyp_pfaff(a: complex, x: np.ndarray, real: bool) -> np.ndarray:
    """2F1(a, a; 2a; -1/x) for x >= 1 via the Pfaff form in u = 1/(1+x) <= 1/2."""
    u = 1.0 / (1.0 + x)
    dt = float if real else complex
    aa = a.real if real else a
    term = np.ones_like(u, dtype=dt)
    total = term.copy()
    for n in range(400):
        term = term * ((aa + n) ** 2 / ((2 * aa + n) * (n + 1))) * u
        total = total + term
        if n > 3 and np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    else:
        raise QuadratureError("Pfaff series did not converge", achieved=float(np.max(np.abs(term))))
    return (1.0 + 1.0 / x) ** (-aa) * total


def _half_integer(z: complex) -> int | None:
    if z.imag == 0 and z.real > 0:
        k = z.real + 0.5
        if k == round(k) and k >= 1:
            return int(k)
    return None


def _hyp_values(z: complex, x: np.ndarray) -> np.ndarray:
    a = 0.5 + z
    out = np.empty(x.shape, dtype=complex)
    big = x >= 1.0
    series_ok = abs(a) <= 12.0
    if np.any(big) and series_ok:
        out[big] = _hyp_pfaff(a, x[big], real=_half_integer(z) is not None)
        rest = ~big
    else:
        rest = np.ones(x.shape, dtype=bool)
    for i in np.flatnonzero(rest):
        out[i] = hyp2f1_neg(a, a, 2 * a, float(x[i]))
    return out


def xi_transform(z, U: TestFunction, *, rtol: float = 1e-11) -> complex:
    """Xi(z; U): B(1/2+z, 1/2+z) int U(x) x^{-1/2-z} 2F1(1/2+z, 1/2+z; 1+2z; -1/x) dx.

    Integrated in u = log x on panels no wider than 2/(1 + |Im z|), halved until
    successive values agree to ``rtol``.  Half-integer z = k - 1/2 runs the
    hypergeometric series in real arithmetic.
    """
    z = complex(z)
    if z.real < 0:
        raise ValueError("need Re z >= 0")
    lo, hi = U.support()
    breaks = np.log(np.array(U.breakpoints()))
    width = min(0.25, 2.0 / (1.0 + abs(z.imag)), (math.log(hi) - math.log(lo)) / 4)
    a = 0.5 + z
    prev = None
    for _ in range(7):
        edges = [breaks[0]]
        for p, q in zip(breaks[:-1], breaks[1:]):
            n = max(1, int(math.ceil((q - p) / width)))
            edges.extend(np.linspace(p, q, n + 1)[1:].tolist())
        u, w = composite_gl_nodes(np.array(edges), 16)
        x = np.exp(u)
        vals = U(x)
        keep = vals != 0
        if not np.any(keep):
            return 0j
        xk = x[keep]
        f = vals[keep] * np.exp((0.5 - z) * u[keep]) * _hyp_values(z, xk) * w[keep]
        cur = complex(exact_sum(f.real), exact_sum(f.imag))
        if prev is not None and abs(cur - prev) <= rtol * max(abs(cur), 1e-300):
            break
        prev, width = cur, width / 2
    else:
        raise QuadratureError("Xi quadrature did not converge", achieved=abs(cur - prev), value=cur)
    pref = beta_fn(a, a)
    return complex(pref * cur)


def _inv_sinh_pi(y: np.ndarray) -> np.ndarray:
    """1/sinh(pi y) without overflow."""
    ay = np.abs(y)
    e = np.exp(-np.pi * ay)
    return np.sign(y) * 2.0 * e / (-np.expm1(-2.0 * np.pi * ay))


def theta_transform(y: float, U: TestFunction, *, rtol: float = 1e-11) -> float:
    """Theta(y; U) = Re((1 + i/sinh(pi y)) Xi(iy; U))/2, evaluated at |y|."""
    y = abs(float(y))
    if y == 0:
        raise ValueError("y = 0 is a removable point; use theta_limit_zero")
    xi = xi_transform(1j * y, U, rtol=rtol)
    return 0.5 * ((1.0 + 1j * float(_inv_sinh_pi(np.array(y)))) * xi).real


def theta_limit_zero(U: TestFunction, h: float = 1e-3) -> float:
    """lim_{y -> 0} Theta(y; U) = (Xi(0) - Xi'(0)/pi)/2.

    Xi is real on the real axis, so Xi'(0) = lim Im Xi(ih)/h; two step sizes
    are combined by Richardson extrapolation.
    """
    x0 = xi_transform(0.0, U).real
    d1 = xi_transform(1j * h, U).imag / h
    d2 = xi_transform(0.5j * h, U).imag / (0.5 * h)
    deriv = (4.0 * d2 - d1) / 3.0
    return 0.5 * (x0 - deriv / math.pi)


# ------------------------------------------------------------------ nu and E_c

@dataclass(frozen=True)
class NuWeight:
    delta: float
    window: Window
    window_shift: float | None = None

    def __call__(self, y):
        return nu_delta(y, self.delta, self.window, window_shift=self.window_shift)


def nu_delta(y, delta: float, window: Window, *, window_shift: float | None = None):
    """(1 + i/sinh(pi y)) chi(1/2 - iy + i delta) B(1/2+iy, 1/2+iy) W~(1/2 - iy).

    W~(s) = int_1^inf W(u - shift/2) u^{s-1} du with shift = delta unless
    ``window_shift`` overrides it.  Vectorised in y.
    """
    y_arr = np.asarray(y, dtype=float)
    if np.any(y_arr == 0):
        raise ValueError("nu is singular at y = 0")
    shift = delta if window_shift is None else window_shift
    yf = y_arr.ravel()
    pair = 1.0 + 1j * _inv_sinh_pi(yf)
    a = 0.5 + 1j * yf
    # W real: W~(1/2 + iy) = conj W~(1/2 - iy), so only |y| is transformed
    ay, inv = np.unique(np.abs(yf), return_inverse=True)
    wm = window_mellin(window, 0.5 - 1j * ay, shift)[inv]
    wm = np.where(yf < 0, np.conj(wm), wm)
    out = pair * chi(0.5 - 1j * yf + 1j * delta) * beta_fn(a, a) * wm
    return complex(out[0]) if y_arr.ndim == 0 else out.reshape(y_arr.shape)


def nu_bound(y, T: float) -> np.ndarray:
    """10 T^{1/2} (1 + 1/|y|)/(1 + |y|)^{3/2}."""
    ay = np.abs(np.asarray(y, dtype=float))
    return 10.0 * math.sqrt(T) * (1.0 + 1.0 / ay) / (1.0 + ay) ** 1.5


@dataclass(frozen=True)
class SpectralResult:
    value: float
    imag_part: float = 0.0
    truncation_estimate: float | None = None
    n_nodes: int = 0
    warnings: tuple = ()
    meta: dict = field(default_factory=dict)

    def __float__(self) -> float:
        return float(self.value)

    def to_dict(self) -> dict:
        return {"value": self.value, "imag_part": self.imag_part,
                "truncation_estimate": self.truncation_estimate, "n_nodes": self.n_nodes,
                "warnings": list(self.warnings), "meta": self.meta}


def ec_integrand(y, delta: float, window: Window, *, window_shift: float | None = None):
    """|zeta(1/2+iy)|^4 zeta(1/2+i(delta-y)) zeta(1/2+i(delta+y)) / |zeta(1+2iy)|^2 * conj(nu)."""
    y = np.asarray(y, dtype=float)
    z4 = np.abs(zeta(0.5 + 1j * y)) ** 4
    zz = zeta(0.5 + 1j * (delta - y)) * zeta(0.5 + 1j * (delta + y))
    den = np.abs(zeta(1.0 + 2j * y)) ** 2
    return z4 * zz / den * np.conj(nu_delta(y, delta, window, window_shift=window_shift))


def ec_integral(delta: float, window: Window, y_max: float, *, panel: float = 0.5,
                window_shift: float | None = None, rtol: float = 1e-8,
                full: bool = False):
    """(1/pi) Re int_{-y_max}^{y_max} of :func:`ec_integrand`.

    Panels are symmetric about 0 so no Gauss node lands on y = 0, where the
    pole of zeta(1+2iy) cancels the 1/sinh factor.  The panel width is halved
    until the value settles to ``rtol``.  With ``full`` a :class:`SpectralResult`
    carries the imaginary accumulator and an edge-based truncation estimate.
    """
    if not 0 < y_max <= 1e4:
        raise ValueError("y_max must lie in (0, 1e4]")
    prev = None
    width = panel
    for _ in range(4):
        n = max(1, int(math.ceil(y_max / width)))
        edges = np.linspace(0.0, y_max, n + 1)
        yp, wp = composite_gl_nodes(edges, 16)
        y = np.concatenate([-yp[::-1], yp])
        w = np.concatenate([wp[::-1], wp])
        f = ec_integrand(y, delta, window, window_shift=window_shift)
        re = exact_sum(f.real * w) / math.pi
        im = exact_sum(f.imag * w) / math.pi
        if prev is not None and abs(re - prev) <= rtol * max(abs(re), 1e-300):
            break
        prev, width = re, width / 2
    else:
        raise QuadratureError("E_c quadrature did not converge", achieved=abs(re - prev), value=re)
    if not full:
        return re
    edge = np.abs(y) >= 0.9 * y_max
    trunc = 2.0 * y_max * float(np.max(np.abs(f[edge]))) / math.pi
    return SpectralResult(re, im, trunc, int(y.size))


# ------------------------------------------------------------------ dataset

@dataclass(frozen=True)
class SpectralEntry:
    kappa: float
    alpha: float
    parity: int
    H_half: float
    hecke: tuple

    def to_dict(self) -> dict:
        return {"kappa": self.kappa, "alpha": self.alpha, "parity": self.parity,
                "H_half": self.H_half, "hecke": list(self.hecke)}


@dataclass(frozen=True)
class SpectralDataset:
    entries: tuple
    n_coef: int
    source: str = ""

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        self.validate()

    def __len__(self) -> int:
        return len(self.entries)

    def validate(self) -> None:
        if self.n_coef < 1:
            raise DatasetError("n_coef must be at least 1")
        if not self.entries:
            return
        d = sieve_divisors(self.n_coef).d[1:].astype(float)
        n = np.arange(1, self.n_coef + 1, dtype=float)
        bound = d * n ** HECKE_EXPONENT * (1 + 1e-12)
        prev = -math.inf
        for j, e in enumerate(self.entries, 1):
            if not e.kappa > 0 or not e.alpha > 0:
                raise DatasetError(f"entry {j}: kappa and alpha must be positive")
            if e.parity not in (1, -1):
                raise DatasetError(f"entry {j}: parity must be +1 or -1")
            if not e.kappa > prev:
                raise DatasetError(f"entry {j}: kappa not strictly increasing")
            prev = e.kappa
            t = np.asarray(e.hecke, dtype=float)
            if t.size != self.n_coef:
                raise DatasetError(f"entry {j}: {t.size} Hecke values, expected {self.n_coef}")
            bad = np.flatnonzero(~(np.abs(t) <= bound))
            if bad.size:
                raise DatasetError(f"entry {j}: t({bad[0] + 1}) = {t[bad[0]]} breaks the Hecke bound")
        if abs(self.entries[0].kappa - KAPPA_1) > 0.01:
            raise DatasetError(f"first kappa {self.entries[0].kappa} is not within 0.01 of {KAPPA_1}")

    def to_dict(self) -> dict:
        return {"source": self.source, "n_coef": self.n_coef,
                "entries": [e.to_dict() for e in self.entries]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"

    @classmethod
    def from_dict(cls, obj: dict) -> "SpectralDataset":
        try:
            entries = [SpectralEntry(float(e["kappa"]), float(e["alpha"]), int(e["parity"]),
                                     float(e["H_half"]), tuple(float(v) for v in e["hecke"]))
                       for e in obj["entries"]]
            return cls(tuple(entries), int(obj["n_coef"]), str(obj.get("source", "")))
        except (KeyError, TypeError) as exc:
            raise DatasetError(f"malformed dataset: {exc}") from exc

    @classmethod
    def load(cls, path) -> "SpectralDataset":
        """JSON, or CSV (kappa,alpha,parity,H_half) with sidecars hecke_<j>.csv, j from 1."""
        path = resolve_data_path(path)
        if path.suffix.lower() == ".json":
            with open(path) as fh:
                return cls.from_dict(json.load(fh))
        if path.suffix.lower() != ".csv":
            raise DatasetError("dataset must be .json or .csv")
        entries = []
        with open(path, newline="") as fh:
            for j, row in enumerate(csv.DictReader(fh), 1):
                hecke = _read_hecke(path.parent / f"hecke_{j}.csv")
                entries.append(SpectralEntry(float(row["kappa"]), float(row["alpha"]),
                                             int(float(row["parity"])), float(row["H_half"]),
                                             hecke))
        n_coef = min((len(e.hecke) for e in entries), default=1)
        entries = [SpectralEntry(e.kappa, e.alpha, e.parity, e.H_half, e.hecke[:n_coef])
                   for e in entries]
        return cls(tuple(entries), n_coef, str(path))

    @classmethod
    def fetch(cls, url: str, timeout: float = 30.0) -> "SpectralDataset":
        """Download the JSON form over HTTPS (opt-in network use)."""
        if not url.lower().startswith("https://"):
            raise DatasetError("only https URLs are accepted")
        with urllib.request.urlopen(url, timeout=timeout) as resp:
            obj = json.loads(resp.read().decode("utf-8"))
        ds = cls.from_dict(obj)
        return SpectralDataset(ds.entries, ds.n_coef, ds.source or url)


def resolve_data_path(path) -> Path:
    p = Path(path)
    if not p.is_absolute() and not p.exists() and os.environ.get(DATA_DIR_ENV):
        p = Path(os.environ[DATA_DIR_ENV]) / p
    return p


def _read_hecke(path: Path) -> tuple:
    if not path.exists():
        raise DatasetError(f"missing Hecke sidecar {path.name}")
    vals = {}
    with open(path, newline="") as fh:
        for k, row in enumerate(csv.reader(fh)):
            if not row:
                continue
            try:
                nums = [float(c) for c in row]
            except ValueError:
                continue  # header line
            if len(nums) == 1:
                vals[len(vals) + 1] = nums[0]
            else:
                vals[int(nums[0])] = nums[1]
    if sorted(vals) != list(range(1, len(vals) + 1)):
        raise DatasetError(f"{path.name}: indices must run 1..n without gaps")
    return tuple(vals[n] for n in range(1, len(vals) + 1))


# low-lying level-one eigenvalues, used to seed synthetic spectra
_KAPPAS = (9.53369526135, 12.17300832468, 13.77975135189, 14.35850951826,
           16.13807317152, 16.64425920190, 17.73856338106, 18.18091783453,
           19.42348147083, 19.48471385474)


def _primes_upto(n: int) -> np.ndarray:
    s = np.ones(n + 1, dtype=bool)
    s[:2] = False
    for p in range(2, int(n ** 0.5) + 1):
        if s[p]:
            s[p * p::p] = False
    return np.flatnonzero(s)


def synthetic_hecke(n_coef: int, rng: np.random.Generator) -> tuple:
    """Multiplicative t(n) with t(p) = 2 cos(theta_p) and the Hecke recursion at p^k."""
    t = np.zeros(n_coef + 1)
    t[1] = 1.0
    spf = np.zeros(n_coef + 1, dtype=np.int64)  # smallest prime factor
    for p in _primes_upto(n_coef):
        if spf[p] == 0:
            blk = spf[p::p]
            blk[blk == 0] = p
        tp = 2.0 * math.cos(rng.uniform(0.0, math.pi))
        prev, cur, pk = 1.0, tp, p
        while pk <= n_coef:
            t[pk] = cur
            prev, cur = cur, tp * cur - prev
            pk *= p
    for n in range(2, n_coef + 1):
        p = spf[n]
        m, q = n, 1
        while m % p == 0:
            m //= p
            q *= p
        if m > 1:
            t[n] = t[q] * t[m]
    return tuple(t[1:].tolist())


def synthetic_dataset(n_entries: int = 10, n_coef: int = 200, seed: int = 0) -> SpectralDataset:
    """Deterministic stand-in spectrum: true low kappas, random Hecke-consistent data."""
    rng = np.random.default_rng(seed)
    kappas = list(_KAPPAS[:n_entries])
    while len(kappas) < n_entries:
        k = kappas[-1]
        kappas.append(k + 6.0 / k * rng.uniform(0.5, 1.5))  # Weyl-law spacing
    entries = []
    for k in kappas:
        parity = int(rng.choice([1, -1]))
        h_half = 0.0 if parity == -1 else float(rng.normal(0.0, 1.0))
        entries.append(SpectralEntry(float(k), float(rng.uniform(0.5, 2.0)), parity, h_half,
                                     synthetic_hecke(n_coef, rng)))
    return SpectralDataset(tuple(entries), n_coef, f"synthetic(seed={seed})")


# ------------------------------------------------------------------ L-series and E_d

def required_coefficients(t_trunc: float, q: SmoothingConfig) -> int:
    return int(math.ceil(abs(t_trunc) / (2 * math.pi) * math.exp(6.0 / math.sqrt(q.Q))))


def truncated_l_series(entry: SpectralEntry, s, t_trunc: float, q: SmoothingConfig,
                       *, sharp: bool = False) -> complex:
    """sum_r t(r) I(|t|/(2 pi r)) r^{-s}, with I in the contour convention.

    ``sharp`` replaces I by the indicator of r <= |t|/(2 pi).
    """
    n_coef = len(entry.hecke)
    need = required_coefficients(t_trunc, q)
    if n_coef < need:
        raise InsufficientCoefficientsError(f"need {need} Hecke coefficients, have {n_coef}")
    if t_trunc == 0:
        return 0j
    r = np.arange(1, n_coef + 1, dtype=float)
    ratio = abs(t_trunc) / (2 * math.pi * r)
    wgt = (ratio >= 1.0).astype(float) if sharp else i_weight(ratio, q, convention="contour")
    terms = np.asarray(entry.hecke) * wgt * np.exp(-complex(s) * np.log(r))
    return complex(exact_sum(terms.real), exact_sum(terms.imag))


def ed_sum(dataset: SpectralDataset, delta: float, window: Window,
           q: SmoothingConfig | None = None, *, t_trunc: float | None = None,
           window_shift: float | None = None, coverage: float = 1e-6) -> SpectralResult:
    """Re sum_j alpha_j H_j(1/2)^2 L_j(1/2 + i delta) conj(nu(kappa_j)).

    H_j(1/2 + i delta) is replaced by the smoothed truncated series at
    height ``t_trunc`` (default |delta|).  A warning is attached when nu at
    the last kappa exceeds ``coverage`` times its peak over the spectrum.
    """
    q = q or SmoothingConfig()
    if not dataset.entries:
        return SpectralResult(0.0, meta={"n_entries": 0})
    t_trunc = abs(delta) if t_trunc is None else t_trunc
    kap = np.array([e.kappa for e in dataset.entries])
    nu = nu_delta(kap, delta, window, window_shift=window_shift)
    total = 0.0
    for e, v in zip(dataset.entries, nu):
        if e.H_half == 0.0:
            continue
        L = truncated_l_series(e, 0.5 + 1j * delta, t_trunc, q)
        total += e.alpha * e.H_half ** 2 * (L * np.conj(v)).real
    probe = np.linspace(0.05, kap[-1], 400)
    peak = float(max(np.max(np.abs(nu_delta(probe, delta, window, window_shift=window_shift))),
                     np.max(np.abs(nu))))
    ratio = float(abs(nu[-1]) / peak) if peak > 0 else 0.0
    notes = ()
    if ratio > coverage:
        notes = (f"nu at the last kappa is {ratio:.3g} of its peak; the spectrum may be truncated",)
        warnings.warn(notes[0], AccuracyWarning, stacklevel=2)
    return SpectralResult(float(total), warnings=notes,
                          meta={"n_entries": len(dataset.entries), "nu_tail_ratio": ratio,
                                "t_trunc": t_trunc})
