import math

import numpy as np
import pytest
import sympy
from hypothesis import given, strategies as st
from scipy import integrate

from lowzeros.errors import ConfigError
from lowzeros.special import cfloat
from lowzeros.totient import (
    normalized_residual,
    totient_sum_asymptotic,
    totient_sum_direct,
)


def test_small_examples():
    want = 0.5 + (3 - 2 * math.sqrt(2)) + (3.5 - 2 * math.sqrt(3)) / 2 + 0
    assert totient_sum_direct(4) == pytest.approx(want, abs=1e-14)
    assert want == pytest.approx(0.68952, abs=1e-5)
    assert totient_sum_direct(1) == 0.0


@pytest.mark.parametrize("R", [1e2, 1e3, 1e4, 1e5])
def test_plain_residual_bounded(R):
    assert normalized_residual(R) <= 5


def test_plain_leading_coefficient_is_d1():
    R = 1e6
    a = totient_sum_asymptotic(R)
    lead = (a - cfloat("D2") * math.sqrt(R) - cfloat("D3")) / (math.sqrt(R) * math.log(R))
    assert lead == pytest.approx(cfloat("D1"), rel=1e-12)


def test_zero_polynomial():
    for variant in ("general", "halved"):
        assert totient_sum_asymptotic(1e3, variant, [0.0]) == 0.0
        assert totient_sum_direct(1e3, variant, [0.0]) == 0.0


def test_degree_limit():
    with pytest.raises(ConfigError):
        totient_sum_asymptotic(1e3, "general", [1, 0, 1])
    with pytest.raises(ConfigError):
        totient_sum_direct(2e7)
    with pytest.raises(ConfigError):
        totient_sum_direct(10, "cubic")


@given(st.floats(10, 5e4))
def test_general_unit_polynomial_is_scaled_plain(R):
    L = math.log(R)
    assert totient_sum_direct(R, "general", [1.0]) == pytest.approx(2 / L * totient_sum_direct(R), rel=1e-10)
    assert totient_sum_asymptotic(R, "general", [1.0]) == pytest.approx(2 / L * totient_sum_asymptotic(R),
                                                                       rel=1e-10)


@pytest.mark.parametrize("variant", ["general", "halved"])
def test_closed_form_matches_quadrature(variant):
    poly = [0.3, -1.2]
    a = totient_sum_direct(300, variant, poly, method="closed")
    b = totient_sum_direct(300, variant, poly, method="quad")
    assert a == pytest.approx(b, rel=1e-10)


@given(st.floats(20, 2000), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
def test_direct_linear_in_polynomial(R, a0, a1, b0, b1):
    for v in ("general", "halved"):
        lhs = totient_sum_direct(R, v, [a0 + b0, a1 + b1])
        rhs = totient_sum_direct(R, v, [a0, a1]) + totient_sum_direct(R, v, [b0, b1])
        assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9)


@pytest.mark.parametrize("variant", ["general", "halved"])
@pytest.mark.parametrize("poly", [[1.0], [0.0, 1.0], [2.0, -1.0]])
def test_polynomial_variants_residual_decays(variant, poly):
    r3 = normalized_residual(1e3, variant, poly)
    r5 = normalized_residual(1e5, variant, poly)
    assert r3 <= 5 and r5 <= 5


def double_sum_general_p1(R: float) -> float:
    """sum_{d} mu(d)^2/phi(d) sum_{m <= R/d} (1/(dm)) int_{log dm/log R}^1 (R^{u/2} - dm R^{-u/2}) du.

    Uses 1/phi(r) = (1/r) sum_{d | r} mu(d)^2/phi(d) and quadrature for the inner integral.
    """
    L = math.log(R)
    inner = {}
    for r in range(1, int(R) + 1):
        inner[r], _ = integrate.quad(lambda u: math.exp(u * L / 2) - r * math.exp(-u * L / 2),
                                     math.log(r) / L, 1.0, epsabs=1e-13)
    total = []
    for d in range(1, int(R) + 1):
        mu = sympy.mobius(d)
        if mu == 0:
            continue
        w = 1.0 / int(sympy.totient(d))
        total.append(w * math.fsum(inner[d * m] / (d * m) for m in range(1, int(R) // d + 1)))
    return math.fsum(total)


def test_general_matches_double_sum_oracle():
    R = 1e3
    oracle = double_sum_general_p1(R)
    assert totient_sum_direct(R, "general", [1.0]) == pytest.approx(oracle, rel=1e-10)
