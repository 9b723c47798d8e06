import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from zetamom.analytic import moment_polynomial
from zetamom.empirical import moment_quadrature
from zetamom.momofmom import (CSV_FIELDS, AveragingKernel, BranchCutError, MoMReport, StepTooCoarseError,
                              a_coeffs, anomaly_for, dbar, dbar_closed, dbar_integral,
                              laplace_ghat2_indicator, log_anomaly_constant, m22_empirical,
                              m22_formula, odbar, write_mom_csv)
from zetamom.smoothing import ShiftConfig
from zetamom.special import EULER_GAMMA

IND = AveragingKernel("indicator", math.pi)


def test_kernel_validation():
    with pytest.raises(ValueError):
        AveragingKernel("box", 1.0)
    with pytest.raises(ValueError):
        AveragingKernel("indicator", 0.0)
    assert IND.ghat(0.0) == 1.0


def test_smooth_kernel_unit_mass_and_transform():
    k = AveragingKernel("smooth-exp", 2.0, 1.5)
    a = k.A * k.c
    g = lambda x: a / (math.pi * (a * a + x * x))
    assert abs(quad(g, -np.inf, np.inf)[0] - 1) < 1e-10
    y = 0.8
    ft = 2 * quad(g, 0, np.inf, weight="cos", wvar=y)[0]
    assert abs(ft - k.ghat(y)) < 1e-8


# ---------------------------------------------------------------- Laplace transform

def test_laplace_quadrature_oracle():
    ref = quad(lambda y: np.sinc(y) ** 2 * math.exp(-y), 0, np.inf, limit=500, epsabs=1e-13)[0]
    val = laplace_ghat2_indicator(1.0, math.pi)
    assert abs(val - ref) <= 1e-8
    assert abs(val - 0.3560191996) <= 1e-10


@given(st.floats(0.01, 100), st.floats(0.1, 10))
def test_laplace_real_for_real_s(s, c):
    assert abs(laplace_ghat2_indicator(s, c).imag) <= 1e-12 * abs(laplace_ghat2_indicator(s, c))


def test_laplace_general_c_against_quadrature():
    c, s = 2.0, 0.7 + 0.3j
    f = lambda y, part: getattr(np.sinc(c * y / math.pi) ** 2 * np.exp(-s * y), part)
    ref = complex(quad(f, 0, np.inf, args=("real",), limit=800)[0],
                  quad(f, 0, np.inf, args=("imag",), limit=800)[0])
    assert abs(laplace_ghat2_indicator(s, c) - ref) <= 1e-8


def test_laplace_large_s_asymptote():
    for s in (1e3, 1e5):
        assert abs(laplace_ghat2_indicator(s, math.pi) * s - 1) <= 10 / s


def test_laplace_branch_cut():
    with pytest.raises(BranchCutError):
        laplace_ghat2_indicator(-1.0, 1.0)
    with pytest.raises(BranchCutError):
        laplace_ghat2_indicator(1j, 1.0)


# ---------------------------------------------------------------- D-bar, OD-bar

def test_dbar_two_routes_indicator():
    T = 1e8
    a, b = dbar(T, IND), dbar(T, IND, route="closed")
    assert abs(a - b) <= 1e-3 * abs(a)


@pytest.mark.parametrize("c", [math.pi, 2 * math.pi, 10.0])
@pytest.mark.parametrize("T", [1e6, 1e8, 1e10])
def test_dbar_two_routes_grid(c, T):
    k = AveragingKernel("indicator", c)
    a, b = dbar_integral(T, k), dbar_closed(T, k)
    assert abs(a - b) <= 1e-3 * abs(a)


def test_dbar_two_routes_smooth():
    k = AveragingKernel("smooth-exp", math.pi, 2.0)
    a, b = dbar(1e8, k), dbar(1e8, k, route="closed")
    assert abs(a - b) <= 1e-4 * abs(a)


def test_dbar_scales_like_inverse_c():
    T = 1e8
    N = math.log(T / (2 * math.pi))
    p3 = moment_polynomial("P3")
    for c in (1e3, 1e4):
        val = dbar(T, AveragingKernel("indicator", c))
        assert abs(val * c / (math.pi * p3(N)) - 1) <= 20 / c * math.log(c * N)


def test_dbar_validation():
    with pytest.raises(ValueError):
        dbar(50.0, IND)
    with pytest.raises(ValueError):
        dbar(1e6, IND, route="magic")


def test_odbar_large_c():
    T = 1e6
    N = math.log(T / (2 * math.pi))
    ref = (N + 2 * EULER_GAMMA - 1) ** 2 + 1
    assert abs(odbar(T, AveragingKernel("indicator", 1e3)) - ref) <= 0.05 * ref


def test_odbar_assembly():
    T = 1e7
    N = math.log(T / (2 * math.pi))
    a = [a_coeffs("indicator", math.pi, j) for j in range(3)]
    assert odbar(T, IND) == a[0] * N * N + 2 * a[1] * N + a[2]
    assert all(math.isfinite(x) for x in a)


# ---------------------------------------------------------------- log-anomaly constant

def test_anomaly_constant():
    assert abs(log_anomaly_constant(math.pi) - 0.46) <= 0.02
    assert abs(log_anomaly_constant(2 * math.pi) / log_anomaly_constant(math.pi) - 0.25) <= 0.025
    b3 = moment_polynomial("P3").coeffs[3]
    assert log_anomaly_constant(math.pi, raw=True) == -b3 / math.pi ** 2
    with pytest.raises(ValueError):
        anomaly_for(AveragingKernel("smooth-exp", 1.0))
    with pytest.raises(ValueError):
        log_anomaly_constant(0.0)


def test_closed_form_carries_the_inverse_n_term():
    # the N^{-1} coefficient of the indicator closed form is -b3/c^2
    c = math.pi
    N1, N2 = 200.0, 300.0
    T = lambda N: 2 * math.pi * math.exp(N)
    p3 = moment_polynomial("P3")
    b0, b1, b2, b3 = p3.coeffs
    k = AveragingKernel("indicator", c)

    def rest(N):
        return (dbar_closed(T(N), k) - (math.pi / c * p3(N)
                - p3(N, 1) * (math.log(2 * c * N) + EULER_GAMMA) / c ** 2
                + (3 * b0 * N ** 2 - 2 * b2) / (2 * c ** 2) - b0 / (4 * c ** 4)))
    assert abs(rest(N1) * N1 - log_anomaly_constant(c, raw=True)) <= 1e-6 * abs(b3)
    assert abs(rest(N2) * N2 - rest(N1) * N1) <= 1e-6 * abs(b3)


def test_formula_has_log_n_structure():
    Ts = np.geomspace(1e6, 1e12, 13)
    N = np.log(Ts / (2 * math.pi))
    v = np.array([dbar(T, IND) + odbar(T, IND) for T in Ts])
    cubic = np.vstack([N ** 3, N ** 2, N, np.ones_like(N)]).T
    with_log = np.hstack([cubic, (N ** 2 * np.log(N))[:, None]])
    r_cubic = np.linalg.lstsq(cubic, v, rcond=None)[1][0]
    r_log = np.linalg.lstsq(with_log, v, rcond=None)[1][0]
    assert r_cubic >= 10 * r_log


# ---------------------------------------------------------------- full formula

def test_m22_formula_report():
    rep = m22_formula(1e8, IND)
    assert rep.formula_total == rep.T * (rep.dbar + rep.odbar)
    assert rep.a_constant == log_anomaly_constant(math.pi)
    assert rep.empirical is None and rep.abs_diff is None
    smooth = m22_formula(1e8, AveragingKernel("smooth-exp", math.pi, 2.0))
    assert smooth.a_constant is None


def test_m22_formula_independent_reassembly():
    T = 1e9
    N = math.log(T / (2 * math.pi))
    p3 = moment_polynomial("P3")
    y = np.linspace(0, N, 400001)
    f = 2 * np.sinc(y) ** 2 * p3(N - y)
    d = (y[1] - y[0]) * (f.sum() - 0.5 * (f[0] + f[-1]))
    a = [a_coeffs("indicator", math.pi, j) for j in range(3)]
    total = T * (d + a[0] * N * N + 2 * a[1] * N + a[2])
    assert abs(m22_formula(T, IND).formula_total - total) <= 1e-7 * total


def test_m22_formula_increasing():
    Ts = [1e3 * 2 ** k for k in range(12)]
    vals = [m22_formula(T, IND).formula_total for T in Ts]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_m22_leading_asymptotic_ratio():
    b0 = moment_polynomial("P3").coeffs[0]

    def ratio(T):
        N = math.log(T / (2 * math.pi))
        return m22_formula(T, IND).formula_total / (T * b0 * N ** 3)

    # lower-order N^2 log N terms keep the ratio well away from 1 at 1e12; it falls
    # monotonically and is within 10% only far out
    rs = [ratio(T) for T in (1e12, 1e30, 1e100)]
    assert rs[0] > rs[1] > rs[2] > 1
    assert rs[2] < 1.1


def test_report_serialisation(tmp_path):
    rep = m22_formula(1e6, IND)
    d = json.loads(rep.to_json())
    assert d["formula_total"] == rep.formula_total
    p = tmp_path / "m.csv"
    write_mom_csv([rep], p)
    rows = list(csv.reader(open(p)))
    assert tuple(rows[0]) == CSV_FIELDS
    assert float(rows[1][5]) == rep.formula_total and rows[1][6] == ""


# ---------------------------------------------------------------- empirical

def test_empirical_constant_signal():
    val = m22_empirical(777.7, IND, 0.05, signal=lambda u: np.full_like(u, 2.5))
    assert abs(val - 777.7 * 6.25) <= 1e-10 * 777.7 * 6.25


def test_empirical_point_mass_equals_moment():
    a = m22_empirical(200.0, IND, 0.02, point_mass=True)
    b = moment_quadrature(0.0, 200.0, ShiftConfig())
    assert abs(a - b) <= 1e-9 * b


def test_empirical_linear_signal_average():
    # the window average of a linear signal is the signal itself
    T = 300.0
    val = m22_empirical(T, IND, 0.05, signal=lambda u: 1.0 + 0.01 * u)
    ref = ((1 + 0.01 * T) ** 3 - 1) / (3 * 0.01)
    assert abs(val - ref) <= 1e-9 * ref


def test_empirical_step_halving():
    a = m22_empirical(1000.0, IND, 0.04)
    b = m22_empirical(1000.0, IND, 0.02)
    assert abs(a - b) <= 0.01 * b


def test_empirical_errors():
    with pytest.raises(ValueError):
        m22_empirical(2e4, IND)
    with pytest.raises(ValueError):
        m22_empirical(100.0, IND, 0.1)
    with pytest.raises(ValueError):
        m22_empirical(100.0, AveragingKernel("smooth-exp", 1.0))
    # aliased onto a constant at the coarse step pi/63, resolved at the fine one
    wild = lambda u: np.cos(126.0 * u) * 100.0 + 101.0
    with pytest.raises(StepTooCoarseError):
        m22_empirical(50.0, IND, 0.05, signal=wild, point_mass=True)


def test_empirical_workers_identical():
    a = m22_empirical(300.0, IND, 0.02)
    b = m22_empirical(300.0, IND, 0.02, workers=3)
    assert abs(a - b) <= 1e-12 * a


def test_report_differences():
    rep = MoMReport(100.0, IND, 1.0, 2.0, empirical=350.0)
    assert rep.formula_total == 300.0
    assert rep.abs_diff == 50.0 and rep.normalized_diff == 0.5
