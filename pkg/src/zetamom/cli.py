"""Command-line front end: ``python -m zetamom <command> [flags]``.

Every run writes ``<name>.json`` and ``<name>.csv`` into ``--output`` and
prints a short summary.  Exit status: 0 success, 1 usage error, 2 tolerance
failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._quad import QuadratureError
from .analytic import q2_eval, q2_integral, q2_windowed
from .divisor import CSV_FIELDS as DIVISOR_FIELDS
from .divisor import CorrelationRecord, correlation_report, sieve_divisors
from .empirical import MomentReport, QuadratureSpec, afe_check, afe_cutoff, afe_rhs, moment_quadrature
from .momofmom import AveragingKernel, MoMReport, m22_empirical, m22_formula, write_mom_csv
from .smoothing import ShiftConfig, SmoothingConfig, Window
from .spectral import SpectralDataset, ec_integral, ed_sum
from .special import select_method, zeta

COMMANDS = ("zeta", "afe", "moment", "main-term", "compare", "divisor", "mom22", "spectral")
WINDOW_NAMES = {"gaussian": "gaussian-conv", "bump": "bump", "sharp": "indicator"}
EXIT_OK, EXIT_USAGE, EXIT_TOLERANCE = 0, 1, 2


class UsageError(Exception):
    pass


class ToleranceFailure(Exception):
    def __init__(self, message: str, achieved=None, requested=None):
        super().__init__(message)
        self.achieved, self.requested = achieved, requested


# ------------------------------------------------------------------ serialisation

def _plain(obj):
    """Recursively convert to JSON-native types (floats keep repr precision)."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if hasattr(obj, "to_dict"):
        return _plain(obj.to_dict())
    return obj


def dumps_json(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, indent=2) + "\n"


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k in sorted(d):
        v = d[k]
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        elif isinstance(v, (list, tuple)):
            out[key] = ";".join(_cell(x) for x in v)
        else:
            out[key] = v
    return out


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def write_report(report, path) -> None:
    """Deterministic serialisation.

    A list of :class:`CorrelationRecord` (possibly empty) becomes CSV; any
    other report becomes JSON with sorted keys.  Floats use the shortest
    round-trip decimal form.
    """
    path = Path(path)
    if isinstance(report, (list, tuple)):
        text = csv_text(DIVISOR_FIELDS, [[getattr(r, f) for f in DIVISOR_FIELDS] for r in report])
    else:
        text = dumps_json(report)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def read_report(path):
    """Inverse of :func:`write_report` (CSV gives records, JSON a dict)."""
    path = Path(path)
    if path.suffix == ".csv":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        return [CorrelationRecord(int(r["X"]), int(r["r"]), int(r["sum"]), float(r["main"]),
                                  float(r["error"]), float(r["normalized_error"])) for r in rows]
    with open(path) as fh:
        return json.load(fh)


# ------------------------------------------------------------------ configuration

def _real(name):
    def conv(text):
        try:
            v = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"--{name} expects a real number, got {text!r}")
        if not math.isfinite(v):
            raise argparse.ArgumentTypeError(f"--{name} must be finite")
        return v
    return conv


def _int_list(text):
    try:
        vals = [int(p) for p in str(text).split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("the list is empty")
    return vals


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# (flag, type, default, help); default None means required unless set via --config
_SPECS = {
    "zeta": [("t", _real("t"), None, "imaginary part"), ("sigma", _real("sigma"), 0.5, "real part")],
    "afe": [("t", _real("t"), None, "height in [50, 2000]"), ("delta", _real("delta"), 0.0, "shift"),
            ("Q", _real("Q"), 25.0, "smoothing parameter in [9, 100]"),
            ("cutoff-sigma", _real("cutoff-sigma"), 12.0, "nm-truncation in Gaussian widths"),
            ("tol", _real("tol"), 1e-4, "relative tolerance")],
    "moment": [("T1", _real("T1"), None, ""), ("T2", _real("T2"), None, ""),
               ("alpha", _real("alpha"), 0.0, ""), ("beta", _real("beta"), 0.0, ""),
               ("window", str, None, "gaussian|bump|sharp (optional)"),
               ("Delta", _real("Delta"), 1.0, "window transition width"),
               ("tol", _real("tol"), 1e-9, "quadrature tolerance")],
    "main-term": [("t", _real("t"), None, ""), ("alpha", _real("alpha"), 0.0, ""),
                  ("beta", _real("beta"), 0.0, "")],
    "divisor": [("X", int, None, "summation limit"), ("r", _int_list, None, "comma-separated shifts")],
    "mom22": [("T", _real("T"), None, ""), ("c", _real("c"), math.pi, "window half-width"),
              ("kernel", str, "indicator", "indicator|smooth"), ("A", _real("A"), 1.0, "smooth kernel scale"),
              ("empirical", bool, False, "also integrate the averaged |zeta|^2 squared (T <= 1e4)"),
              ("tol", _real("tol"), 0.10, "relative tolerance for the empirical comparison")],
    "spectral": [("dataset", str, None, "JSON or CSV dataset"), ("delta", _real("delta"), 0.0, ""),
                 ("T1", _real("T1"), None, ""), ("T2", _real("T2"), None, ""),
                 ("Delta", _real("Delta"), None, "window transition width"),
                 ("window", str, "gaussian", "gaussian|bump"),
                 ("y-max", _real("y-max"), 200.0, "continuous-spectrum cutoff"),
                 ("Q", _real("Q"), 25.0, "smoothing of the truncated L-series"),
                 ("fetch-url", str, None, "download the dataset from this https URL")],
}
_SPECS["compare"] = _SPECS["moment"]


@dataclass
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)
    output_path: str = "."
    name: str = ""
    workers: int = 1
    seedless: bool = True  # nothing here draws random numbers

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}; choose from {', '.join(COMMANDS)}")
        if self.workers < 1:
            raise UsageError("--workers must be at least 1")
        self.name = self.name or self.command


def read_config_file(path) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}")
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value")
        k, v = (p.strip() for p in line.split("=", 1))
        out[k.lstrip("-")] = v
    return out


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="zetamom", description="Shifted zeta moments: formulas versus quadrature.")
    sub = p.add_subparsers(dest="command", metavar="command")
    sub.required = True
    for cmd in COMMANDS:
        sp = sub.add_parser(cmd, help=f"{cmd} pipeline")
        sp.add_argument("--output", default=None, help="output directory (default .)")
        sp.add_argument("--name", default=None, help="artifact base name (default: command)")
        sp.add_argument("--workers", type=int, default=None)
        sp.add_argument("--config", default=None, help="key=value file; flags override it")
        for flag, typ, _, hlp in _SPECS[cmd]:
            dest = flag.replace("-", "_")
            if typ is bool:
                sp.add_argument(f"--{flag}", dest=dest, action="store_true", default=None, help=hlp)
            else:
                sp.add_argument(f"--{flag}", dest=dest, type=typ, default=None, help=hlp)
    return p


def _convert(cmd: str, key: str, text: str):
    for flag, typ, _, _ in _SPECS[cmd]:
        if flag == key or flag.replace("-", "_") == key:
            if typ is bool:
                low = text.lower()
                if low not in ("true", "false", "1", "0", "yes", "no"):
                    raise UsageError(f"config key {key} expects a boolean")
                return flag.replace("-", "_"), low in ("true", "1", "yes")
            try:
                return flag.replace("-", "_"), typ(text)
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise UsageError(f"config key {key}: {exc}")
    raise UsageError(f"unknown config key {key!r} for {cmd}")


def parse_config(argv) -> RunConfig:
    ns = build_parser().parse_args(argv)
    cmd = ns.command
    params, extra = {}, {}
    if ns.config:
        for k, v in read_config_file(ns.config).items():
            if k in ("output", "name", "workers"):
                extra[k] = v
                continue
            dest, val = _convert(cmd, k, v)
            params[dest] = val
    missing = []
    for flag, _, default, _ in _SPECS[cmd]:
        dest = flag.replace("-", "_")
        val = getattr(ns, dest)
        if val is not None:
            params[dest] = val
        elif dest not in params:
            if default is None and flag not in ("window", "fetch-url", "dataset", "Delta"):
                missing.append(f"--{flag}")
            params[dest] = default
    if cmd == "spectral" and params.get("dataset") is None and params.get("fetch_url") is None:
        missing.append("--dataset (or --fetch-url)")
    if cmd == "spectral" and params.get("Delta") is None:
        missing.append("--Delta")
    if missing:
        raise UsageError(f"{cmd}: missing required {', '.join(missing)}")
    try:
        workers = int(ns.workers if ns.workers is not None else extra.get("workers", 1))
    except ValueError:
        raise UsageError("--workers must be an integer")
    cfg = RunConfig(cmd, params, ns.output or extra.get("output", "."),
                    ns.name or extra.get("name", ""), workers)
    validate(cfg)
    return cfg


def _window(p) -> Window | None:
    if p.get("window") is None:
        return None
    if p["window"] not in WINDOW_NAMES:
        raise UsageError(f"--window must be one of {', '.join(WINDOW_NAMES)}")
    return Window(WINDOW_NAMES[p["window"]], p["T1"], p["T2"], p["Delta"])


def validate(cfg: RunConfig) -> None:
    """Build every domain object once so that bad values fail before any work."""
    p = cfg.params
    try:
        if cfg.command == "afe":
            if not 50 <= p["t"] <= 2000:
                raise UsageError("afe: --t must lie in [50, 2000]")
            if not 9 <= p["Q"] <= 100:
                raise UsageError("afe: --Q must lie in [9, 100]")
            if p["t"] + p["delta"] <= 0:
                raise UsageError("afe: need t + delta > 0")
        elif cfg.command in ("moment", "compare"):
            ShiftConfig(p["alpha"], p["beta"])
            if not 0 <= p["T1"] < p["T2"] <= 1e6:
                raise UsageError(f"{cfg.command}: need 0 <= T1 < T2 <= 1e6")
            _window(p)
        elif cfg.command == "main-term":
            ShiftConfig(p["alpha"], p["beta"])
            if p["t"] < 10:
                raise UsageError("main-term: --t must be at least 10")
        elif cfg.command == "divisor":
            if p["X"] < 1 or min(p["r"]) < 1:
                raise UsageError("divisor: --X and every r must be positive")
        elif cfg.command == "mom22":
            if p["kernel"] not in ("indicator", "smooth"):
                raise UsageError("mom22: --kernel must be indicator or smooth")
            AveragingKernel("indicator" if p["kernel"] == "indicator" else "smooth-exp", p["c"], p["A"])
            if p["T"] < 100:
                raise UsageError("mom22: --T must be at least 100")
            if p["empirical"] and (p["T"] > 1e4 or p["kernel"] != "indicator"):
                raise UsageError("mom22: --empirical needs the indicator kernel and T <= 1e4")
        elif cfg.command == "spectral":
            if p["window"] not in ("gaussian", "bump"):
                raise UsageError("spectral: --window must be gaussian or bump")
            Window(WINDOW_NAMES[p["window"]], p["T1"], p["T2"], p["Delta"])
            if not 0 < p["y_max"] <= 1e4:
                raise UsageError("spectral: --y-max must lie in (0, 1e4]")
            SmoothingConfig(p["Q"])
            url = p.get("fetch_url")
            if url is not None and not url.lower().startswith("https://"):
                raise UsageError("spectral: --fetch-url must be an https URL")
        elif cfg.command == "zeta":
            if abs(p["t"]) > 1e7:
                raise UsageError("zeta: |t| must not exceed 1e7")
    except UsageError:
        raise
    except ValueError as exc:
        raise UsageError(f"{cfg.command}: {exc}")


# ------------------------------------------------------------------ pipelines

def _run_zeta(p, cfg):
    s = complex(p["sigma"], p["t"])
    v = zeta(s)
    m = select_method(s)
    data = {"sigma": p["sigma"], "t": p["t"], "re": v.real, "im": v.imag, "abs": abs(v),
            "method": m.kind, "terms": m.terms}
    lines = [f"zeta({p['sigma']} + i {p['t']}) = {v.real:.15g} {v.imag:+.15g} i",
             f"|zeta| = {abs(v):.6e}   (method {m.kind}, {m.terms} terms)"]
    return data, None, lines, None


def _run_afe(p, cfg):
    shift = ShiftConfig.from_delta(p["delta"])
    q = SmoothingConfig(p["Q"])
    lhs, rhs, rel = afe_check(p["t"], shift, q, p["cutoff_sigma"])
    M = afe_cutoff(p["t"], shift, q, p["cutoff_sigma"])
    rhs2 = afe_rhs(p["t"], shift, q, 2 * M)
    change = abs(rhs2 - rhs) / abs(rhs)
    data = {"t": p["t"], "delta": p["delta"], "Q": p["Q"], "M": M, "lhs": lhs, "rhs": rhs,
            "rel_err": rel, "rhs_doubled_M": rhs2, "doubling_change": change, "tol": p["tol"]}
    lines = [f"|zeta(1/2+it) zeta(1/2+it+i delta)|^2 = {lhs:.12g}",
             f"smoothed double Dirichlet series (nm <= {M}) = {rhs:.12g}",
             f"relative error {rel:.3e}; doubling the truncation changes it by {change:.3e}"]
    fail = None
    if rel > p["tol"]:
        fail = ToleranceFailure("AFE relative error above tolerance", rel, p["tol"])
    return data, None, lines, fail


def _moment_report(p, cfg, with_main: bool):
    shift = ShiftConfig(p["alpha"], p["beta"])
    window = _window(p)
    stats = {}
    t0 = time.perf_counter()
    spec = QuadratureSpec.for_range(p["T2"], tolerance=p["tol"])
    emp = moment_quadrature(p["T1"], p["T2"], shift, window, spec, workers=cfg.workers, stats=stats)
    wall = time.perf_counter() - t0
    if with_main:
        main = q2_windowed(window, shift) if window is not None else q2_integral(p["T1"], p["T2"], shift)
    else:
        main = math.nan
    return MomentReport(p["T1"], p["T2"], shift, window, emp, main,
                        n_evals=stats.get("n_evals", 0), wall_seconds=wall)


def _moment_dict(rep: MomentReport, with_main: bool) -> dict:
    d = rep.to_dict()
    d.pop("wall_seconds")  # keeps artifacts byte-stable
    if not with_main:
        for k in ("main_term", "abs_diff", "rel_diff"):
            d.pop(k)
    return d


def _run_moment(p, cfg):
    rep = _moment_report(p, cfg, with_main=False)
    lines = [f"int W |zeta(1/2+i(t+alpha)) zeta(1/2+i(t+beta))|^2 over [{p['T1']}, {p['T2']}]"
             f" = {rep.empirical:.12g}", f"{rep.n_evals} zeta-pair evaluations"]
    return _moment_dict(rep, False), None, lines, None


def _run_compare(p, cfg):
    rep = _moment_report(p, cfg, with_main=True)
    lines = [f"empirical moment        = {rep.empirical:.12g}",
             f"main term int W Q2 dt   = {rep.main_term:.12g}",
             f"difference {rep.abs_diff:.6g} (relative {rep.rel_diff:.3e})"]
    return _moment_dict(rep, True), None, lines, None


def _run_main_term(p, cfg):
    shift = ShiftConfig(p["alpha"], p["beta"])
    v = q2_eval(p["t"], shift)
    data = {"t": p["t"], "alpha": p["alpha"], "beta": p["beta"], "delta": shift.delta, "Q2": v}
    return data, None, [f"Q2(t = {p['t']}; alpha = {p['alpha']}, beta = {p['beta']}) = {v:.15g}"], None


def _run_divisor(p, cfg):
    X, rs = p["X"], p["r"]
    table = sieve_divisors(X + max(rs))
    recs = correlation_report(X, rs, table, workers=cfg.workers)
    lines = [f"sum_(n <= {X}) d(n) d(n + r) against its main term:"]
    lines += [f"  r = {r.r:>6}: sum {r.sum}, main {r.main:.6f}, E/X^(2/3) = {r.normalized_error:+.4f}"
              for r in recs]
    data = {"X": X, "records": [r.as_dict() for r in recs]}
    return data, recs, lines, None


def _run_mom22(p, cfg):
    kind = "indicator" if p["kernel"] == "indicator" else "smooth-exp"
    kernel = AveragingKernel(kind, p["c"], p["A"])
    rep = m22_formula(p["T"], kernel)
    lines = [f"D-bar = {rep.dbar:.10g}, OD-bar = {rep.odbar:.10g}",
             f"M22 formula T (D-bar + OD-bar) = {rep.formula_total:.10g}"]
    if rep.a_constant is not None:
        lines.append(f"log-anomaly constant a = {rep.a_constant:.6f}")
    fail = None
    if p["empirical"]:
        emp = m22_empirical(p["T"], kernel, workers=cfg.workers)
        rep = MoMReport(rep.T, kernel, rep.dbar, rep.odbar, emp, rep.a_constant)
        rel = abs(emp - rep.formula_total) / abs(rep.formula_total)
        lines.append(f"empirical M22 = {emp:.10g} (relative difference {rel:.3e})")
        if rel > p["tol"]:
            fail = ToleranceFailure("empirical M22 outside tolerance", rel, p["tol"])
    return rep, None, lines, fail


def _run_spectral(p, cfg):
    window = Window(WINDOW_NAMES[p["window"]], p["T1"], p["T2"], p["Delta"])
    if p.get("fetch_url"):
        ds = SpectralDataset.fetch(p["fetch_url"])
    else:
        ds = SpectralDataset.load(p["dataset"])
    ec = ec_integral(p["delta"], window, p["y_max"], full=True)
    ed = ed_sum(ds, p["delta"], window, SmoothingConfig(p["Q"]))
    data = {"delta": p["delta"], "window": {"T1": p["T1"], "T2": p["T2"], "Delta": p["Delta"]},
            "dataset": {"source": ds.source, "entries": len(ds), "n_coef": ds.n_coef},
            "E_c": ec.to_dict(), "E_d": ed.to_dict(), "E_c_plus_E_d": ec.value + ed.value}
    lines = [f"continuous spectrum E_c = {ec.value:.10g} (|y| <= {p['y_max']}, "
             f"edge estimate {ec.truncation_estimate:.2e})",
             f"discrete spectrum  E_d = {ed.value:.10g} ({len(ds)} forms)"]
    lines += [f"warning: {w}" for w in ed.warnings]
    return data, None, lines, None


_RUNNERS = {"zeta": _run_zeta, "afe": _run_afe, "moment": _run_moment, "compare": _run_compare,
            "main-term": _run_main_term, "divisor": _run_divisor, "mom22": _run_mom22,
            "spectral": _run_spectral}


def run(cfg: RunConfig, out=None) -> int:
    out = sys.stdout if out is None else out
    out_dir = Path(cfg.output_path)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        data, table, lines, fail = _RUNNERS[cfg.command](cfg.params, cfg)
    except QuadratureError as exc:
        print(f"tolerance failure: {exc} (achieved {exc.achieved})", file=out)
        return EXIT_TOLERANCE
    json_path, csv_path = out_dir / f"{cfg.name}.json", out_dir / f"{cfg.name}.csv"
    write_report(data, json_path)
    if isinstance(data, MoMReport):
        write_mom_csv([data], csv_path)
    elif isinstance(table, list):
        write_report(table, csv_path)
    else:
        flat = _flatten(_plain(data))
        with open(csv_path, "w", newline="") as fh:
            fh.write(csv_text(list(flat), [list(flat.values())]))
    print(f"== {cfg.command} ==", file=out)
    for line in lines:
        print(line, file=out)
    print(f"wrote {json_path} and {csv_path}", file=out)
    if fail is not None:
        print(f"tolerance failure: {fail} (achieved {fail.achieved:.3e}, requested {fail.requested:.3e})",
              file=out)
        return EXIT_TOLERANCE
    return EXIT_OK


def main(argv=None) -> int:
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
