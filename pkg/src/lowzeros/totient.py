"""Weighted reciprocal-totient sums and their asymptotic expansions.

Three shapes are supported:

* ``plain``:   sum_{r<=R} (sqrt R + r/sqrt R - 2 sqrt r)/phi(r)
* ``general``: sum_{r<=R} (1/phi(r)) int_{log r/log R}^1 P(u)(R^{u/2} - r R^{-u/2}) du
* ``halved``:  as ``general`` with R -> R/2 in the scale and r -> r/2 in the limit

Only the first two lower-order coefficients F_1(P), F_2(P) are known in closed
form, so the asymptotic side is limited to deg P <= 1.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy import integrate

from .errors import ConfigError
from .primes import totients
from .special import cfloat

MAX_R = 10**7
MAX_DEGREE = 1
VARIANTS = ("plain", "general", "halved")


def _check(R: float, variant: str):
    if variant not in VARIANTS:
        raise ConfigError(f"unknown totient-sum variant {variant!r}")
    if R > MAX_R:
        raise ConfigError(f"R = {R} exceeds {MAX_R}")


def _derivs_at_one(coeffs: Sequence[float]) -> list[float]:
    """[P(1), P'(1), P''(1), ...] for P given by ascending coefficients."""
    c = np.asarray(coeffs, dtype=float)
    out = []
    for _ in range(len(c)):
        out.append(float(npoly.polyval(1.0, c)))
        c = npoly.polyder(c)
    return out


def _exp_poly_integral(coeffs, c: float, lo, hi=1.0):
    """int_lo^hi P(u) e^{c u} du via the antiderivative e^{cu} sum (-1)^i P^(i)(u)/c^(i+1)."""
    lo = np.asarray(lo, dtype=float)
    p = np.asarray(coeffs, dtype=float)
    hi_val = 0.0
    lo_val = np.zeros_like(lo)
    for i in range(len(p)):
        sgn = (-1) ** i / c ** (i + 1)
        hi_val += sgn * npoly.polyval(hi, p)
        lo_val = lo_val + sgn * npoly.polyval(lo, p)
        p = npoly.polyder(p)
    return math.exp(c * hi) * hi_val - np.exp(c * lo) * lo_val


def totient_sum_direct(R: float, variant: str = "plain", poly: Sequence[float] | None = None,
                       method: str = "closed") -> float:
    """Left-hand side by direct summation over r <= R.

    For the polynomial variants ``method="quad"`` integrates each inner
    integral adaptively; ``"closed"`` uses the exact exp-polynomial antiderivative.
    """
    _check(R, variant)
    n = int(math.floor(R))
    if n < 1:
        return 0.0
    r = np.arange(1, n + 1, dtype=float)
    phi = totients(n)[1:].astype(float)
    if variant == "plain":
        sR = math.sqrt(R)
        terms = (sR + r / sR - 2 * np.sqrt(r)) / phi
        return math.fsum(terms)
    poly = [1.0] if poly is None else list(poly)
    if variant == "general":
        scale, rr, lo = R, r, np.log(r) / math.log(R)
    else:
        scale = R / 2
        rr, lo = r / 2, np.log(r / 2) / math.log(R / 2)
    c = math.log(scale) / 2
    if method == "quad":
        vals = []
        for ri, a, ph in zip(rr, lo, phi):
            f = lambda u, ri=ri: npoly.polyval(u, poly) * (math.exp(c * u) - ri * math.exp(-c * u))
            v, _ = integrate.quad(f, a, 1.0, epsabs=1e-13, epsrel=1e-12, limit=200)
            vals.append(v / ph)
        return math.fsum(vals)
    inner = _exp_poly_integral(poly, c, lo) - rr * _exp_poly_integral(poly, -c, lo)
    return math.fsum(inner / phi)


def totient_sum_asymptotic(R: float, variant: str = "plain",
                           poly: Sequence[float] | None = None) -> float:
    """Main terms of the expansion (everything except the O(R^{-1/2}) remainder)."""
    if R <= 1:
        raise ConfigError("asymptotic expansion needs R > 1")
    if variant not in VARIANTS:
        raise ConfigError(f"unknown totient-sum variant {variant!r}")
    if variant == "plain":
        L = math.log(R)
        return cfloat("D1") * math.sqrt(R) * L + cfloat("D2") * math.sqrt(R) + cfloat("D3")
    poly = [1.0] if poly is None else list(poly)
    poly = list(np.trim_zeros(np.asarray(poly, dtype=float), "b")) or [0.0]
    if len(poly) - 1 > MAX_DEGREE:
        raise ConfigError(
            f"degree {len(poly) - 1} needs lower-order coefficients F_j, j >= 3, "
            f"which have no closed form; maximum degree is {MAX_DEGREE}")
    e1, e2, f1, f2 = (cfloat(k) for k in ("E1", "E2", "F1", "F2"))
    if variant == "halved":
        L = math.log(R / 2)
        e2 = e2 + e1 * math.log(2)
        f2 = (f2 + f1 * math.log(2)) / math.sqrt(2)
        f1 = f1 / math.sqrt(2)
    else:
        L = math.log(R)
    c = L / 2
    # int_{-oo}^1 e^{cu} P(u) du = e^c sum_i (-1)^i P^(i)(1)/c^(i+1)
    upoly = npoly.polymulx(np.asarray(poly, dtype=float))
    d = _derivs_at_one(poly)
    du = _derivs_at_one(upoly)
    int_p = math.exp(c) * sum((-1) ** i * v / c ** (i + 1) for i, v in enumerate(d))
    int_up = math.exp(c) * sum((-1) ** i * v / c ** (i + 1) for i, v in enumerate(du))
    alt0 = sum((-1) ** i * v for i, v in enumerate(d))
    alt1 = sum((-1) ** i * v for i, v in enumerate(d) if i >= 1)
    return e1 * L * int_up + e2 * int_p + f1 * alt0 / L + f2 * alt1 / L**2


def normalized_residual(R: float, variant: str = "plain", poly=None) -> float:
    """|direct - asymptotic| * sqrt(R) / log R."""
    diff = totient_sum_direct(R, variant, poly) - totient_sum_asymptotic(R, variant, poly)
    return abs(diff) * math.sqrt(R) / math.log(R)
