import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import special

from lowzeros.errors import ConfigError
from lowzeros.testfunctions import (
    CallableFunction,
    PolynomialBump,
    TabulatedFunction,
    default_test_function,
    from_spec,
    zero_function,
)


def bessel_oracle(y, sigma, p):
    """Transform of (1-(x/sigma)^2)^p: sigma sqrt(pi) Gamma(p+1) (pi sigma y)^{-(p+1/2)} J_{p+1/2}(2 pi sigma y)."""
    if y == 0:
        return sigma * math.sqrt(math.pi) * math.gamma(p + 1) / math.gamma(p + 1.5)
    z = math.pi * sigma * y
    return sigma * math.sqrt(math.pi) * math.gamma(p + 1) * z ** (-(p + 0.5)) * special.jv(p + 0.5, 2 * z)


def test_bump_values():
    f = PolynomialBump(1.0, 3)
    assert f(0.0) == 1.0
    assert f(1.0) == 0.0 and f.d2(1.0) == 0.0
    assert f(0.5) == pytest.approx(27 / 64)
    assert PolynomialBump(2.0, 3)(1.0) == pytest.approx(27 / 64)
    assert f(1.5) == 0.0
    assert f.d1(0.0) == 0.0


def test_bump_validation():
    with pytest.raises(ConfigError):
        PolynomialBump(1.0, 2)
    with pytest.raises(ConfigError):
        PolynomialBump(-1.0, 3)


def test_fourier_at_zero():
    assert default_test_function().fourier(0.0) == pytest.approx(32 / 35, abs=1e-12)


@pytest.mark.parametrize("sigma, p", [(1.0, 3), (1.4, 3), (2.0, 4), (0.7, 5)])
def test_fourier_matches_bessel(sigma, p):
    f = PolynomialBump(sigma, p)
    for y in [0.0, 0.01, 0.3, 1.0, 2.7, 10.0, 55.5, 300.0]:
        assert f.fourier(y) == pytest.approx(bessel_oracle(y, sigma, p), abs=1e-10)


def test_fourier_symbolic_oracle():
    f = default_test_function()
    for y in (0.25, 1.5):
        with mpmath.workdps(30):
            want = 2 * mpmath.quad(lambda x: (1 - x**2) ** 3 * mpmath.cos(2 * mpmath.pi * x * y), [0, 1])
        assert f.fourier(y) == pytest.approx(float(want), abs=1e-12)


@given(st.floats(0, 200))
def test_fourier_even(y):
    f = PolynomialBump(1.3, 3)
    assert f.fourier(y) == f.fourier(-y)


def test_derivatives_vs_finite_differences():
    f = default_test_function()
    h = 1e-6
    for x in np.linspace(-0.95, 0.95, 15):
        fd = (f(x + h) - f(x - h)) / (2 * h)
        assert f.d1(x) == pytest.approx(fd, abs=1e-6)
        fd2 = (f.d1(x + h) - f.d1(x - h)) / (2 * h)
        assert f.d2(x) == pytest.approx(fd2, abs=1e-6)


def test_taylor_coefficients():
    f = PolynomialBump(1.0, 3)  # 1 - 3x^2 + 3x^4 - x^6
    assert [f.taylor_at_zero(k) for k in range(7)] == pytest.approx([1, 0, -6, 0, 72, 0, -720])


def test_decay_constant_and_validation():
    f = default_test_function()
    assert f.decay_constant == pytest.approx(f.l1_norm(0) + f.l1_norm(2) / (4 * math.pi**2))
    assert f.validate_decay() <= 1.0
    assert f.l1_norm(0) == pytest.approx(32 / 35)


def test_fourier_grid_interpolates():
    f = PolynomialBump(1.2, 3)
    g = f.fourier_grid(40.0)
    ys = np.linspace(0, 39.9, 97)
    assert np.max(np.abs(g(ys) - np.array([bessel_oracle(y, 1.2, 3) for y in ys]))) < 1e-9


def test_zero_function():
    z = zero_function()
    assert z.is_zero
    assert z(0.3) == 0.0 and z.fourier(2.0) == 0.0


def test_linear_combinations():
    f, g = PolynomialBump(1.0, 3), PolynomialBump(1.5, 4)
    h = f + 2 * g
    for x in (0.0, 0.4, 1.2):
        assert h(x) == pytest.approx(f(x) + 2 * g(x))
        assert h.d2(x) == pytest.approx(f.d2(x) + 2 * g.d2(x))
    assert h.fourier(0.8) == pytest.approx(f.fourier(0.8) + 2 * g.fourier(0.8), abs=1e-11)
    assert h.sigma == 1.5


def test_callable_function_matches_builtin():
    f = default_test_function()
    c = CallableFunction(lambda x: (1 - x * x) ** 3, 1.0)
    for x in (0.0, 0.3, 0.77):
        assert c(x) == pytest.approx(f(x))
        assert c.d1(x) == pytest.approx(f.d1(x), abs=1e-8)
        assert c.d2(x) == pytest.approx(f.d2(x), abs=1e-6)
    assert c.fourier(1.1) == pytest.approx(f.fourier(1.1), abs=1e-11)


def test_tabulated_from_csv(tmp_path):
    xs = np.linspace(0, 1, 401)
    path = tmp_path / "f.csv"
    path.write_text("x,f\n" + "".join(f"{float(x)!r},{float((1 - x * x) ** 3)!r}\n" for x in xs))
    t = TabulatedFunction.from_csv(path)
    assert t.sigma == 1.0
    f = default_test_function()
    for x in (0.0, 0.21, 0.5, 0.93):
        assert t(x) == pytest.approx(f(x), abs=1e-8)
    assert t.fourier(0.5) == pytest.approx(f.fourier(0.5), abs=1e-7)
    assert from_spec("tabulated", path=str(path)).sigma == 1.0


def test_from_spec():
    assert isinstance(from_spec("polynomial_bump", 1.3, 4), PolynomialBump)
    assert from_spec("zero").is_zero
    with pytest.raises(ConfigError):
        from_spec("gaussian")
    with pytest.raises(ConfigError):
        from_spec("tabulated")
