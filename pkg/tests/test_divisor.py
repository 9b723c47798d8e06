import csv
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from zetamom.divisor import (CSV_FIELDS, CapacityError, correlation_record, correlation_report,
                             correlation_sum, divisors, m_xrh, main_term, motohashi_compact,
                             motohashi_main_density, motohashi_main_density_contour, sieve_divisors,
                             sigma_z, write_records_csv)
from zetamom.special import EULER_GAMMA

ZETA2 = math.pi ** 2 / 6


@pytest.fixture(scope="module")
def table():
    return sieve_divisors(200_000)


def naive_d(n):
    c, k = 0, 1
    while k * k <= n:
        if n % k == 0:
            c += 1 if k * k == n else 2
        k += 1
    return c


# ---------------------------------------------------------------- sieve

def test_sieve_examples(table):
    assert table[1] == 1 and table[12] == 6 and table[97] == 2
    assert table.d.dtype == np.uint32
    with pytest.raises(CapacityError):
        sieve_divisors(0)
    with pytest.raises(CapacityError):
        sieve_divisors(300_000_000)


def test_sieve_matches_naive(table):
    for n in list(range(1, 500)) + [65536, 83160, 199999, 200000]:
        assert table[n] == naive_d(n)


def test_sieve_primes_and_mean(table):
    for p in (2, 3, 199, 7919, 104729):
        assert table[p] == 2
    N = table.N
    total = int(table.d[1:].astype(np.int64).sum())
    assert abs(total - (N * math.log(N) + (2 * EULER_GAMMA - 1) * N)) <= 4 * math.sqrt(N)


# ---------------------------------------------------------------- sigma

def test_sigma_examples():
    assert sigma_z(6, 1) == 12
    assert abs(sigma_z(4, 1, 1) - 10 * math.log(2)) < 1e-13
    assert divisors(12) == (1, 2, 3, 4, 6, 12)
    with pytest.raises(ValueError):
        sigma_z(6, 1, -1)


@given(st.integers(1, 10 ** 6))
def test_sigma_zero_is_divisor_count(r):
    assert sigma_z(r, 0).real == naive_d(r)


@given(st.integers(1, 5000), st.integers(1, 5000))
def test_sigma_multiplicative(a, b):
    if math.gcd(a, b) != 1:
        return
    assert abs(sigma_z(a * b, 0.5 + 1j) - sigma_z(a, 0.5 + 1j) * sigma_z(b, 0.5 + 1j)) \
        <= 1e-10 * abs(sigma_z(a * b, 0.5 + 1j))


# ---------------------------------------------------------------- correlation sums

def test_correlation_examples(table):
    assert correlation_sum(10, 1, table) == 74
    assert correlation_sum(1, 5, table) == 4
    assert correlation_sum(0, 3, table) == 0
    with pytest.raises(ValueError):
        correlation_sum(10, 0, table)
    with pytest.raises(ValueError):
        correlation_sum(table.N, 1, table)


def test_correlation_naive_oracle(table):
    X, r = 10_000, 2
    assert correlation_sum(X, r, table) == sum(naive_d(n) * naive_d(n + r) for n in range(1, X + 1))


@given(st.integers(0, 5000), st.integers(1, 500))
def test_correlation_index_shift(X, r):
    t = sieve_divisors(6000)
    lhs = correlation_sum(X, r, t)
    rhs = sum(int(t[m - r]) * int(t[m]) for m in range(r + 1, X + r + 1))
    assert lhs == rhs


def test_correlation_wide_accumulator():
    # force the chunked path by checking it agrees with Python integers
    t = sieve_divisors(50_000)
    X, r = 40_000, 7
    assert correlation_sum(X, r, t) == sum(int(t[n]) * int(t[n + r]) for n in range(1, X + 1))


# ---------------------------------------------------------------- main-term density

def test_density_expanded_vs_contour_example():
    a, b = motohashi_main_density(100.0, 7), motohashi_main_density_contour(100.0, 7)
    assert abs(a - b) <= 1e-9 * abs(a)


@pytest.mark.parametrize("x", [2.0, 3.7, 10.0, 55.0, 1e3, 1e5, 1e7, 1e9, 3e10, 1e12])
@pytest.mark.parametrize("r", [1, 12])
def test_density_two_representations(x, r):
    a, b = motohashi_main_density(x, r), motohashi_main_density_contour(x, r)
    assert abs(a - b) <= 1e-8 * abs(a)


def test_density_r1_compact_limit():
    # for r = 1 the compact form differs from m(x, 1) only through log(1+x) - log x
    for x in (1e4, 1e8, 1e12):
        assert abs(motohashi_compact(x, 1) / motohashi_main_density(x, 1) - 1) <= 2.0 / x


def test_density_leading_growth():
    r = 7
    lead = lambda x: sigma_z(r, 1).real / ZETA2 * math.log(x) * math.log1p(x)
    ratios = [motohashi_main_density(x, r) / lead(x) for x in (1e2, 1e4, 1e8, 1e16)]
    assert all(a > b > 1 for a, b in zip(ratios, ratios[1:]))
    assert ratios[-1] - 1 < 0.25


def test_m_xrh_tends_to_density():
    m = motohashi_main_density(100.0, 3)
    gaps = [abs(m_xrh(100.0, 3, h) - m) for h in (1e-2, 1e-3, 1e-4)]
    # the poles cancel: the gap shrinks linearly in h
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] <= 1e-3 * m


def test_main_term_validation():
    assert main_term(2, 3) == 0.0
    with pytest.raises(ValueError):
        motohashi_main_density(0.0, 1)


# ---------------------------------------------------------------- records

def test_correlation_record_fields(table):
    rec = correlation_record(100_000, 3, table)
    assert rec.sum == correlation_sum(100_000, 3, table)
    assert rec.error == rec.sum - rec.main
    assert rec.normalized_error == rec.error / 100_000 ** (2 / 3)
    assert abs(rec.normalized_error) <= 50


def test_correlation_report_workers_identical(table):
    a = correlation_report(50_000, [1, 2, 30], table)
    b = correlation_report(50_000, [1, 2, 30], table, workers=3)
    assert a == b
    with pytest.raises(ValueError):
        correlation_report(50_000, [0], table)


def test_records_csv(tmp_path, table):
    recs = correlation_report(1000, [1, 5], table)
    p = tmp_path / "c.csv"
    write_records_csv(recs, p)
    rows = list(csv.reader(open(p)))
    assert tuple(rows[0]) == CSV_FIELDS
    assert int(rows[1][2]) == recs[0].sum
    assert float(rows[2][3]) == float(f"{recs[1].main:.15g}")
