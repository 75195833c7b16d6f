import math

import numpy as np
import pytest
import sympy
from hypothesis import given, settings, strategies as st

from lowzeros.errors import ConfigError, DegenerateFitError
from lowzeros.hypotheses import (
    deaveraging_ratio,
    deaveraging_scan,
    gv_main_term,
    gv_variance,
    montgomery_scan,
    progression_statistic,
    write_fit_json,
    write_scan_csv,
)
from lowzeros.primes import PrimeTable
from lowzeros.special import cfloat

X_MAX = 10**4
_LAM = [0.0] * (X_MAX + 1)
for _n in range(2, X_MAX + 1):
    _f = sympy.factorint(_n)
    if len(_f) == 1:
        _LAM[_n] = math.log(next(iter(_f)))


@pytest.fixture(scope="module")
def table():
    return PrimeTable(10**5)


def naive_psi(x, q, a, weighted=False):
    return math.fsum(_LAM[n] * ((1 - n / x) if weighted else 1.0)
                     for n in range(1, int(x) + 1) if n % q == a % q)


def naive_variance(x, Q):
    """Plain double loop over q <= Q and coprime a."""
    psi = math.fsum(_LAM[: int(x) + 1])
    V, V1, Vh = [], [], []
    for q in range(1, int(Q) + 1):
        phi = sympy.totient(q)
        for a in range(1, q + 1):
            if math.gcd(a, q) != 1:
                continue
            e = naive_psi(x, q, a) - psi / phi if q > 1 else 0.0
            V.append(e * e)
            if q > Q / 2:
                Vh.append(e * e)
                if a == 1 % q or (q == 1):
                    V1.append(e * e)
    return math.fsum(V), math.fsum(V1), math.fsum(Vh)


def test_trivial_modulus(table):
    s = gv_variance(100, 1, table)
    assert s.V == 0.0


@pytest.mark.parametrize("x, Q", [(1000, 30), (10**4, 100), (5000.5, 17.3)])
def test_matches_naive_double_loop(table, x, Q):
    s = gv_variance(x, Q, table)
    V, V1, Vh = naive_variance(x, Q)
    assert s.V == pytest.approx(V, rel=1e-12)
    assert s.V1 == pytest.approx(V1, rel=1e-12)
    assert s.V_half == pytest.approx(Vh, rel=1e-12)


def test_main_term_and_ratio(table):
    s = gv_variance(10**4, 100, table)
    want = 100 * 1e4 * math.log(100) - cfloat("c_gv") * 1e4 * 100
    assert s.main_term == pytest.approx(want)
    assert s.ratio == pytest.approx(s.V / want)
    assert gv_main_term(10, 1) == 0.0


def test_monotone_in_Q(table):
    s = gv_variance(10**4, 200, table)
    assert np.all(s.per_q >= 0)
    cum = np.cumsum(s.per_q)
    for Q in (10, 50, 120, 200):
        assert gv_variance(10**4, Q, table).V == pytest.approx(cum[Q], rel=1e-12)


@given(st.integers(100, 10**5), st.floats(2, 300))
@settings(max_examples=25)
def test_eta_one_inequality(x, Q):
    if Q > x:
        return
    t = _shared()
    s = gv_variance(x, Q, t)
    assert s.V >= 0
    assert s.V1 <= s.V_half * (1 + 1e-12)
    r, eta = deaveraging_ratio(x, Q, t)
    assert 0 <= r <= 1 + 1e-12
    assert eta <= 1 + 1e-12


def test_deaveraging_ratio_consistent(table):
    s = gv_variance(10**4, 100, table)
    r, eta = deaveraging_ratio(10**4, 100, table)
    assert r == pytest.approx(s.V1 / s.V_half, rel=1e-12)
    assert eta == pytest.approx(1 + math.log(r) / math.log(100))


def test_argument_checks(table):
    with pytest.raises(ConfigError):
        gv_variance(100, 200, table)
    with pytest.raises(ConfigError):
        deaveraging_ratio(100, 1, table)


def test_threads_give_same_answer(table):
    a = gv_variance(5 * 10**4, 150, table)
    b = gv_variance(5 * 10**4, 150, table, workers=4)
    assert a.V == b.V and a.V1 == b.V1


def test_smoothed_statistic_direct(table):
    x, q = 10**4, 11
    psi2 = math.fsum(_LAM[n] * (1 - n / x) for n in range(1, x + 1))
    want = naive_psi(x, q, 1, weighted=True) - psi2 / 10
    assert progression_statistic(x, q, table, smoothed=True) == pytest.approx(want, abs=1e-9)
    assert progression_statistic(x, q, table) == pytest.approx(naive_psi(x, q, 1) - math.fsum(_LAM) / 10,
                                                               abs=1e-9)


def test_montgomery_scan(table, tmp_path):
    fit = montgomery_scan([1e4, 1e5], [1, 3, 5, 7, 11, 31, 101], table=table)
    assert all(q != 1 for _, q in fit.grid)
    assert math.isfinite(fit.exponent) and fit.residual_norm >= 0
    assert all(math.isfinite(v) for v in fit.normalized)
    lines = write_scan_csv(tmp_path / "m.csv", fit).read_text().splitlines()
    assert lines[0] == "x,q,class,statistic,normalized" and len(lines) == len(fit.grid) + 1
    assert write_fit_json(tmp_path / "m.json", fit).exists()


def test_montgomery_smoothed_range(table):
    fit = montgomery_scan([1e4], [3, 7, 50, 99, 101, 500], smoothed=True, table=table)
    assert max(q for _, q in fit.grid) <= 100


def test_degenerate_fits(table):
    with pytest.raises(DegenerateFitError):
        montgomery_scan([1e4], [3, 5], table=table)
    with pytest.raises(DegenerateFitError):
        montgomery_scan([1e3, 1e4, 1e5], [7], table=table)


def test_deaveraging_scan(table):
    fit = deaveraging_scan([1e4, 5e4], [10, 30, 100], table=table)
    assert fit.tag == "eta" and math.isfinite(fit.exponent)
    assert len(fit.values) == 6


_T = {}


def _shared():
    if "t" not in _T:
        _T["t"] = PrimeTable(10**5)
    return _T["t"]
