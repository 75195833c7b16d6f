import math

import mpmath
import numpy as np
import pytest

from lowzeros import lfunctions as lf
from lowzeros.characters import enumerate_characters, unit_group
from lowzeros.errors import AccuracyLossError, IncompleteZeroSetError, PoleError
from lowzeros.lfunctions import (
    LSeriesEvaluator,
    counting_estimate,
    family_zero_sum,
    find_zeros,
    hurwitz_zeta,
    l_value,
    read_zero_csv,
    write_zero_csv,
)
from lowzeros.testfunctions import default_test_function, zero_function


def mp_l(chi, s):
    """mpmath oracle with character values built at 50 digits."""
    E = chi.group.exponent
    with mpmath.workdps(50):
        vals = [0 if n < 0 else mpmath.expjpi(mpmath.mpf(2 * int(n)) / E) for n in chi.numerators]
        if s == 1:  # step just off the pole; the error is O(1e-20)
            s = 1 + mpmath.mpf(10) ** -20
        return complex(mpmath.dirichlet(s, vals))


def odd4():
    return enumerate_characters(4)[1]


# -- Hurwitz zeta and L-values -------------------------------------------------------

def test_hurwitz_closed_forms():
    assert hurwitz_zeta(2, 1.0).real == pytest.approx(math.pi**2 / 6, abs=1e-13)
    assert hurwitz_zeta(2, 0.5).real == pytest.approx(math.pi**2 / 2, abs=1e-13)
    assert hurwitz_zeta(2, 0.5).real == pytest.approx(4.9348, abs=1e-4)


@pytest.mark.parametrize("s", [0.5 + 10j, 0.5 + 57.3j, 2 - 3j, -0.5 + 1j, 0.25 + 120j])
@pytest.mark.parametrize("a", [1 / 3, 0.1, 0.77, 1.0])
def test_hurwitz_vs_mpmath(s, a):
    want = complex(mpmath.zeta(mpmath.mpc(s), mpmath.mpf(a)))
    assert abs(hurwitz_zeta(s, a) - want) <= 1e-10 * max(1, abs(want))


def test_hurwitz_broadcast_shape():
    v = hurwitz_zeta([2, 3, 0.5 + 1j], [0.2, 0.5])
    assert v.shape == (3, 2)
    assert v[1, 1] == pytest.approx(hurwitz_zeta(3, 0.5))


def test_hurwitz_errors():
    with pytest.raises(PoleError):
        hurwitz_zeta(1, 0.5)
    with pytest.raises(AccuracyLossError):
        hurwitz_zeta(0.5 + 100j, 0.5, N=5, M=2)


def test_l_values_mod4():
    chi = odd4()
    assert l_value(chi, 1).real == pytest.approx(math.pi / 4, abs=1e-12)
    assert l_value(chi, 2).real == pytest.approx(float(mpmath.catalan), abs=1e-12)
    assert l_value(chi, 2).real == pytest.approx(0.9159655942, abs=1e-10)
    assert l_value(unit_group(1).principal(), 2).real == pytest.approx(math.pi**2 / 6, abs=1e-12)
    with pytest.raises(PoleError):
        l_value(unit_group(4).principal(), 1)


@pytest.mark.parametrize("q", [5, 7, 8, 12, 15])
def test_l_values_vs_mpmath(q):
    for chi in enumerate_characters(q):
        for s in (2.0, 0.5 + 3j, 0.5 + 25j):
            assert abs(l_value(chi, s) - mp_l(chi, s)) < 1e-9
        if not chi.is_principal:
            assert abs(l_value(chi, 1.0) - mp_l(chi, 1)) < 1e-9


@pytest.mark.parametrize("q", [3, 4, 5, 7, 8, 11, 13, 24])
def test_rotated_function_is_real(q):
    for chi in enumerate_characters(q):
        if not chi.is_primitive:
            continue
        ev = LSeriesEvaluator(chi)
        t = np.linspace(0.1, 50, 40)
        r = ev.rotated(t)
        assert np.max(np.abs(r.imag)) < 1e-9 * max(1, np.max(np.abs(r.real)))
        s = np.array([0.3 + 2j, 0.8 + 17j, 2 + 40j])
        assert np.max(ev.fe_residual(s)) < 1e-9


def test_evaluator_requires_primitive():
    with pytest.raises(ValueError):
        LSeriesEvaluator(unit_group(12).principal())


# -- zeros ---------------------------------------------------------------------------

def test_first_zeta_zero():
    zs = find_zeros(unit_group(1).principal(), 20.0)
    assert len(zs) == 1 and zs.found == zs.expected == 1
    assert zs.ordinates[0] == pytest.approx(float(mpmath.zetazero(1).imag), abs=1e-9)
    assert zs.ordinates[0] == pytest.approx(14.134725, abs=1e-6)


def test_first_zero_mod4():
    zs = find_zeros(odd4(), 7.0)
    assert len(zs) == 1
    assert zs.ordinates[0] == pytest.approx(6.0209489, abs=1e-6)


def test_zeta_zeros_to_60():
    zs = find_zeros(unit_group(1).principal(), 60.0)
    want = [float(mpmath.zetazero(k).imag) for k in range(1, len(zs) + 1)]
    assert np.allclose(zs.ordinates, want, atol=1e-9)
    assert zs.found == 13


@pytest.mark.parametrize("q", [5, 7, 9])
def test_zeros_are_zeros_of_mpmath_l(q):
    for chi in enumerate_characters(q):
        if not chi.is_primitive:
            continue
        zs = find_zeros(chi, 25.0)
        assert zs.found == zs.expected
        for g in zs.ordinates:
            assert abs(mp_l(chi, 0.5 + 1j * g)) < 1e-8
        assert zs.max_residual < 1e-8


def test_conjugate_character_zeros():
    chi = next(c for c in enumerate_characters(7) if c.order == 6)
    a, b = find_zeros(chi, 30.0), find_zeros(chi.conj(), 30.0)
    # positive zeros of chi-bar are the mirrored negative zeros of chi
    for g in b.ordinates:
        assert abs(mp_l(chi, 0.5 - 1j * g)) < 1e-8
    # together they cover |gamma| <= T for chi
    assert len(a) + len(b) == pytest.approx(counting_estimate(7, 30.0), abs=3)
    real = next(c for c in enumerate_characters(5) if c.order == 2)
    assert np.allclose(find_zeros(real, 30.0).ordinates, find_zeros(real.conj(), 30.0).ordinates)


def test_imprimitive_uses_inducer():
    chi = next(c for c in enumerate_characters(9) if c.order == 2)
    zs = find_zeros(chi, 20.0)
    star = find_zeros(enumerate_characters(3)[1], 20.0)
    assert zs.conductor == 3
    assert np.allclose(zs.ordinates, star.ordinates)


def test_incomplete_zero_set(monkeypatch):
    monkeypatch.setattr(lf, "MAX_REFINEMENTS", 1)
    with pytest.raises(IncompleteZeroSetError) as ei:
        find_zeros(enumerate_characters(13)[1], 60.0, step=15.0)
    assert ei.value.found < ei.value.expected


def test_height_validation():
    with pytest.raises(ValueError):
        find_zeros(odd4(), 0.0)
    with pytest.raises(ValueError):
        find_zeros(odd4(), 1e4)


def test_zero_csv_round_trip(tmp_path):
    sets = [find_zeros(c, 20.0) for c in enumerate_characters(5)]
    p = write_zero_csv(tmp_path / "z.csv", sets)
    back = read_zero_csv(p)
    for zs in sets:
        if len(zs):
            assert np.array_equal(back[(zs.modulus, zs.chi_index)], zs.ordinates)


# -- family zero sum -----------------------------------------------------------------

def test_family_zero_sum_zero_function():
    assert family_zero_sum(5, zero_function(), 5, 20) == (0.0, 0.0)


def test_family_zero_sum_trivial_family():
    tf = default_test_function()
    Q = 10.0
    val, tail = family_zero_sum(1, tf, Q, 40.0)
    gammas = [float(mpmath.zetazero(k).imag) for k in range(1, 7)]
    want = 2 * sum(tf.fourier(g * math.log(Q) / (2 * math.pi)) for g in gammas if g <= 40)
    assert val == pytest.approx(want, abs=1e-10)
    assert tail > 0
