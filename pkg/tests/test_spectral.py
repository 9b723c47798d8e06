import json
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from zetamom._quad import composite_gl_nodes
from zetamom.smoothing import SmoothingConfig, Window, window_mellin
from zetamom.special import AccuracyWarning, beta_fn, chi
from zetamom.spectral import (DATA_DIR_ENV, KAPPA_1, DatasetError, InsufficientCoefficientsError, NuWeight,
                              SpectralDataset, SpectralEntry, SpectralResult, TestFunction, ec_integral,
                              ed_sum, nu_bound, nu_delta, required_coefficients, resolve_data_path,
                              synthetic_dataset, synthetic_hecke, theta_limit_zero, theta_transform,
                              truncated_l_series, xi_transform)

BUMP = TestFunction.from_window(Window("bump", 1.0, 2.0, 0.3))
GWIN = Window("gaussian-conv", 1000.0, 2000.0, 300.0)


def double_integral_xi(y, U, panels=20):
    """int U(x) int_0^1 (w(1-w))^{-1/2+iy} (x+w)^{-1/2-iy} dw dx.

    The inner integral is folded about w = 1/2 and written in v = -log w, so
    both endpoint singularities become smooth exponential tails.
    """
    def inner(x):
        def g(v):
            w = math.exp(-v)
            return (w ** (0.5 + 1j * y) * (1 - w) ** (-0.5 + 1j * y)
                    * ((x + w) ** (-0.5 - 1j * y) + (x + 1 - w) ** (-0.5 - 1j * y)))
        opts = dict(epsabs=1e-14, epsrel=1e-12, limit=400)
        re = integrate.quad(lambda v: g(v).real, math.log(2), 80, **opts)[0]
        im = integrate.quad(lambda v: g(v).imag, math.log(2), 80, **opts)[0]
        return re + 1j * im

    x, w = composite_gl_nodes(np.linspace(1, 2, panels + 1), 16)
    return sum(U(xx) * inner(xx) * ww for xx, ww in zip(x, w))


# ---------------------------------------------------------------- test functions

def test_test_function_validation():
    with pytest.raises(ValueError):
        TestFunction.from_window(Window("indicator", 1.0, 2.0))
    with pytest.raises(ValueError):
        TestFunction.from_grid([1, 2, 3, 4], [1.0, 1.0, 1.0, 0.0])
    with pytest.raises(ValueError):
        TestFunction.from_grid([1, 3, 2, 4], [0.0, 1.0, 1.0, 0.0])
    with pytest.raises(ValueError):
        TestFunction("spline")


def test_test_function_rescaling():
    U = BUMP.rescaled(2.0, 3.0)
    assert U.support() == (0.5, 1.0)
    assert U(0.75) == 3.0 * BUMP(1.5)


# ---------------------------------------------------------------- Xi

def test_xi_zero_function():
    U0 = TestFunction.from_grid(np.linspace(1, 2, 9), np.zeros(9))
    assert xi_transform(0.5j, U0) == 0


def test_xi_linearity():
    xs = np.linspace(1.0, 3.0, 41)
    u1 = np.sin(np.pi * (xs - 1) / 2) ** 4
    u2 = (xs - 1) ** 2 * (3 - xs) ** 3
    U1, U2 = TestFunction.from_grid(xs, u1), TestFunction.from_grid(xs, u2)
    U12 = TestFunction.from_grid(xs, u1 + u2)
    for z in (0.0, 2j, 1.5 + 0.5j):
        s = xi_transform(z, U12)
        assert abs(s - xi_transform(z, U1) - xi_transform(z, U2)) <= 1e-10 * max(1.0, abs(s))


def test_xi_representation_swap():
    y = 5.0
    ref = double_integral_xi(y, BUMP)
    assert abs(xi_transform(1j * y, BUMP) - ref) <= 1e-8 * abs(ref)


def test_xi_half_integer_decay():
    vals = [abs(xi_transform(k - 0.5, BUMP)) for k in range(6, 14)]
    assert all(b / a <= 0.5 for a, b in zip(vals, vals[1:]))


def test_xi_real_on_real_axis():
    for z in (0.0, 0.7, 3.5):
        assert abs(xi_transform(z, BUMP).imag) <= 1e-14 * abs(xi_transform(z, BUMP))
    with pytest.raises(ValueError):
        xi_transform(-0.5, BUMP)


def test_xi_grid_matches_window_profile():
    xs = np.linspace(1.0, 2.0, 2001)
    grid = TestFunction.from_grid(xs, BUMP(xs))
    a, b = xi_transform(3j, grid), xi_transform(3j, BUMP)
    assert abs(a - b) <= 1e-6 * abs(b)


# ---------------------------------------------------------------- Theta

def test_theta_composition():
    y = 1.0
    xi = xi_transform(1j * y, BUMP)
    direct = 0.5 * ((1 + 1j / math.sinh(math.pi * y)) * xi).real
    assert abs(theta_transform(y, BUMP) - direct) <= 1e-12 * max(1.0, abs(direct))


def test_theta_large_y():
    y = 8.0
    xi = xi_transform(1j * y, BUMP)
    assert abs(theta_transform(y, BUMP) - 0.5 * xi.real) <= abs(xi) / math.sinh(math.pi * y)


@settings(max_examples=15)
@given(st.floats(0.05, 10))
def test_theta_even(y):
    assert theta_transform(y, BUMP) == theta_transform(-y, BUMP)


def test_theta_limit_at_zero():
    lim = theta_limit_zero(BUMP)
    assert abs(theta_transform(1e-3, BUMP) - lim) <= 1e-4 * abs(lim)
    with pytest.raises(ValueError):
        theta_transform(0.0, BUMP)


# ---------------------------------------------------------------- nu

def test_nu_reassembly():
    w = Window("gaussian-conv", 1000.0, 2000.0, 200.0)
    y, d = 2.0, 1.0
    a = 0.5 + 1j * y
    by_hand = ((1 + 1j / math.sinh(math.pi * y)) * chi(0.5 - 1j * y + 1j * d) * beta_fn(a, a)
               * window_mellin(w, 0.5 - 1j * y, d))
    assert abs(nu_delta(y, d, w) - by_hand) <= 1e-12 * abs(by_hand)
    assert NuWeight(d, w)(y) == nu_delta(y, d, w)


def test_nu_negative_y_direct():
    w = Window("bump", 1000.0, 2000.0, 200.0)
    y, d = -2.0, 1.0
    a = 0.5 + 1j * y
    by_hand = ((1 + 1j / math.sinh(math.pi * y)) * chi(0.5 - 1j * y + 1j * d) * beta_fn(a, a)
               * window_mellin(w, 0.5 - 1j * y, d))
    assert abs(nu_delta(y, d, w) - by_hand) <= 1e-9 * abs(by_hand)


def test_nu_bound():
    y = np.array([0.3, 1.0, 3.0, 10.0, 40.0, 150.0])
    for w in (GWIN, Window("bump", 1000.0, 2000.0, 300.0)):
        assert np.all(np.abs(nu_delta(y, 2.0, w)) <= nu_bound(y, 2000.0))


def test_nu_zero_shift_sign():
    y = np.array([0.5, 4.0])
    assert np.allclose(np.abs(nu_delta(y, 0.0, GWIN)), np.abs(nu_delta(y, -0.0, GWIN)), rtol=0)
    assert np.allclose(np.abs(chi(0.5 - 1j * y)), 1.0, atol=1e-14)
    with pytest.raises(ValueError):
        nu_delta(0.0, 1.0, GWIN)


# ---------------------------------------------------------------- E_c

def test_ec_real_and_report():
    r = ec_integral(2.0, GWIN, 20.0, full=True)
    assert isinstance(r, SpectralResult)
    assert abs(r.imag_part) <= 1e-10
    assert float(r) == r.value == ec_integral(2.0, GWIN, 20.0)
    assert r.truncation_estimate > 0 and r.n_nodes > 0
    assert json.loads(json.dumps(r.to_dict()))["value"] == r.value


def test_ec_conjugation_invariance():
    a = ec_integral(2.0, GWIN, 20.0, window_shift=2.0)
    b = ec_integral(-2.0, GWIN, 20.0, window_shift=2.0)
    assert abs(a - b) <= 1e-9 * abs(a)


def test_ec_validation():
    with pytest.raises(ValueError):
        ec_integral(1.0, GWIN, 2e4)


# ---------------------------------------------------------------- datasets

def entry(kappa=KAPPA_1, hecke=None, n=30, **kw):
    hecke = hecke if hecke is not None else synthetic_hecke(n, np.random.default_rng(1))
    base = dict(kappa=kappa, alpha=1.0, parity=1, H_half=0.8, hecke=tuple(hecke))
    base.update(kw)
    return SpectralEntry(**base)


def test_dataset_validation():
    SpectralDataset((), 5)
    SpectralDataset((entry(),), 30)
    with pytest.raises(DatasetError):
        SpectralDataset((entry(kappa=10.0),), 30)
    with pytest.raises(DatasetError):
        SpectralDataset((entry(), entry()), 30)
    with pytest.raises(DatasetError):
        SpectralDataset((entry(parity=0),), 30)
    with pytest.raises(DatasetError):
        SpectralDataset((entry(alpha=-1.0),), 30)
    with pytest.raises(DatasetError):
        SpectralDataset((entry(),), 31)
    bad = list(entry().hecke)
    bad[6] = 5.0  # |t(7)| <= 2 * 7^0.119
    with pytest.raises(DatasetError):
        SpectralDataset((entry(hecke=bad),), 30)


def test_synthetic_hecke_relations():
    ds = synthetic_dataset(10, 300, seed=1)
    assert len(ds) == 10 and ds.entries[0].kappa == pytest.approx(KAPPA_1, abs=0.01)
    for e in ds.entries:
        t = (None,) + e.hecke
        assert t[1] == 1.0
        assert abs(t[6] - t[2] * t[3]) <= 1e-12
        assert abs(t[35] - t[5] * t[7]) <= 1e-12
        assert abs(t[4] - (t[2] * t[2] - 1)) <= 1e-12
        if e.parity == -1:
            assert e.H_half == 0.0
    assert synthetic_dataset(4, 50, 7).to_dict() == synthetic_dataset(4, 50, 7).to_dict()


def test_dataset_json_round_trip(tmp_path):
    ds = synthetic_dataset(5, 40, seed=3)
    p = tmp_path / "ds.json"
    p.write_text(ds.to_json())
    back = SpectralDataset.load(p)
    assert back.to_dict() == ds.to_dict()


def test_dataset_csv_with_sidecars(tmp_path):
    ds = synthetic_dataset(3, 25, seed=2)
    rows = ["kappa,alpha,parity,H_half"]
    for j, e in enumerate(ds.entries, 1):
        rows.append(f"{e.kappa!r},{e.alpha!r},{e.parity},{e.H_half!r}")
        side = ["n,t"] + [f"{n},{v!r}" for n, v in enumerate(e.hecke, 1)]
        (tmp_path / f"hecke_{j}.csv").write_text("\n".join(side) + "\n")
    (tmp_path / "spec.csv").write_text("\n".join(rows) + "\n")
    back = SpectralDataset.load(tmp_path / "spec.csv")
    assert [e.to_dict() for e in back.entries] == [e.to_dict() for e in ds.entries]
    (tmp_path / "hecke_2.csv").unlink()
    with pytest.raises(DatasetError):
        SpectralDataset.load(tmp_path / "spec.csv")


def test_dataset_env_dir(tmp_path, monkeypatch):
    (tmp_path / "d.json").write_text(synthetic_dataset(2, 10).to_json())
    monkeypatch.setenv(DATA_DIR_ENV, str(tmp_path))
    assert resolve_data_path("d.json") == tmp_path / "d.json"
    assert len(SpectralDataset.load("d.json")) == 2


def test_dataset_fetch_requires_https():
    with pytest.raises(DatasetError):
        SpectralDataset.fetch("http://example.invalid/data.json")


def test_dataset_malformed():
    with pytest.raises(DatasetError):
        SpectralDataset.from_dict({"entries": [{"kappa": 1.0}], "n_coef": 3})


# ---------------------------------------------------------------- L-series and E_d

def test_l_series_unit_coefficients():
    e = entry(hecke=[1.0] + [0.0] * 99, n=100)
    assert abs(truncated_l_series(e, 0.5 + 3j, 100.0, SmoothingConfig(25.0)) - 1) <= 1e-15


def test_l_series_sharp_limit():
    ds = synthetic_dataset(1, 400, seed=4)
    e, t = ds.entries[0], 66.0
    smooth = truncated_l_series(e, 0.5 + 2j, t, SmoothingConfig(1e4))
    sharp = truncated_l_series(e, 0.5 + 2j, t, SmoothingConfig(1e4), sharp=True)
    assert abs(smooth - sharp) <= 1e-6


def test_l_series_needs_coefficients():
    q = SmoothingConfig(25.0)
    e = entry(n=30)
    assert required_coefficients(1000.0, q) > 30
    with pytest.raises(InsufficientCoefficientsError):
        truncated_l_series(e, 0.5, 1000.0, q)
    assert truncated_l_series(e, 0.5, 0.0, q) == 0


def test_ed_trivial_cases():
    assert ed_sum(SpectralDataset((), 10), 2.0, GWIN).value == 0.0
    ds = synthetic_dataset(6, 100, seed=5)
    zeroed = SpectralDataset(tuple(SpectralEntry(e.kappa, e.alpha, e.parity, 0.0, e.hecke)
                                   for e in ds.entries), ds.n_coef)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AccuracyWarning)
        assert ed_sum(zeroed, 2.0, GWIN).value == 0.0


def test_ed_single_entry_by_hand():
    e = entry(n=200)
    ds = SpectralDataset((e,), 200)
    d, q = 30.0, SmoothingConfig(25.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AccuracyWarning)
        got = ed_sum(ds, d, GWIN, q).value
    L = truncated_l_series(e, 0.5 + 1j * d, d, q)
    ref = e.alpha * e.H_half ** 2 * (L * np.conj(nu_delta(e.kappa, d, GWIN))).real
    assert abs(got - ref) <= 1e-12 * max(1.0, abs(ref))


def test_ed_coverage_warning():
    ds = synthetic_dataset(10, 300, seed=1)
    with pytest.warns(AccuracyWarning):
        res = ed_sum(ds, 50.0, GWIN)
    assert res.warnings and res.meta["nu_tail_ratio"] > 1e-6
