"""High-precision special values and the arithmetic constants.

Everything here runs in mpmath at ``WORKING_DPS`` digits; the rest of the
package consumes plain floats.  Every constant carries an error radius built
from explicit truncation envelopes:

* zeta: Euler-Maclaurin remainder bounded by |s+2M+1|/(Re s+2M+1) times the
  first omitted term;
* prime sums sum_p log(p) h(p^{-1/2}): primes up to P0 summed directly, the
  tail expanded in powers of p^{-1/2} and evaluated through
  sum_{p>P0} log p p^{-s} = sum_m mu(m) A(ms),
  A(s) = -zeta'/zeta(s) - sum_{p<=P0} log p/(p^s-1),
  with integral envelopes int_{P0}^oo log t t^{-s} dt for every cut.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import mpmath
from mpmath import mpf, mpc

from .errors import PoleError, UnknownConstantError
from .primes import simple_sieve

WORKING_DPS = 40
DEFAULT_N = 50
DEFAULT_ORDER = 10
DEFAULT_P0 = 1000
ZETA_TARGET = 1e-12


# -- Euler-Maclaurin ---------------------------------------------------------------

def _bernoulli_factorial(k: int):
    return mpmath.bernoulli(2 * k) / mpmath.factorial(2 * k)


def hurwitz_em(s, a=1, N: int = DEFAULT_N, M: int = DEFAULT_ORDER, derivative: bool = False):
    """Euler-Maclaurin value of zeta(s, a) (or its s-derivative) with error bound.

    Returns ``(value, bound)`` in the current mpmath precision.
    """
    s = mpmath.mpmathify(s)
    a = mpmath.mpmathify(a)
    if s == 1:
        raise PoleError("zeta(s, a) has a pole at s = 1")
    ns = [n + a for n in range(N)]
    Na = N + a
    logNa = mpmath.log(Na)
    if not derivative:
        head = mpmath.fsum(n ** (-s) for n in ns)
        val = head + Na ** (1 - s) / (s - 1) + Na ** (-s) / 2
    else:
        head = -mpmath.fsum(mpmath.log(n) * n ** (-s) for n in ns)
        val = (head - logNa * Na ** (1 - s) / (s - 1) - Na ** (1 - s) / (s - 1) ** 2
               - logNa * Na ** (-s) / 2)

    def term(k, deriv):
        # B_2k/(2k)! * s(s+1)...(s+2k-2) * Na^{-s-2k+1}
        poch = mpmath.fprod(s + j for j in range(2 * k - 1))
        t = _bernoulli_factorial(k) * poch * Na ** (-s - 2 * k + 1)
        if not deriv:
            return t
        dpoch = mpmath.fsum(1 / (s + j) for j in range(2 * k - 1)) if poch != 0 else 0
        return t * (dpoch - logNa)

    val += mpmath.fsum(term(k, derivative) for k in range(1, M + 1))
    sigma = mpmath.re(s)
    factor = abs(s + 2 * M + 1) / (sigma + 2 * M + 1) if sigma + 2 * M + 1 > 0 else mpmath.inf
    omitted = abs(term(M + 1, False))
    if derivative:
        # differentiating the remainder integral adds log and Pochhammer factors;
        # a factor 10 covers the mismatch with the first omitted term
        omitted = 10 * (abs(term(M + 1, True)) + omitted * (1 + logNa))
    return val, factor * omitted


def zeta(s, N: int = DEFAULT_N, M: int = DEFAULT_ORDER, target: float = ZETA_TARGET,
         dps: int = WORKING_DPS, with_error: bool = False):
    """Riemann zeta by Euler-Maclaurin, refined until the remainder is below target."""
    with mpmath.workdps(dps):
        s = mpmath.mpmathify(s)
        if s == 1:
            raise PoleError("zeta has a pole at s = 1")
        n = max(N, int(abs(mpmath.im(s))) + 1)
        for _ in range(12):
            val, err = hurwitz_em(s, 1, n, M)
            if err <= target * max(abs(val), mpf(10) ** (-dps // 2)):
                break
            n *= 2
        err += mpf(10) ** (5 - dps)
        return (+val, +err) if with_error else +val


def zeta_derivative(s, N: int = DEFAULT_N, M: int = DEFAULT_ORDER, dps: int = WORKING_DPS):
    with mpmath.workdps(dps):
        val, err = hurwitz_em(s, 1, N, M, derivative=True)
        return +val, +err + mpf(10) ** (5 - dps)


# -- certified values --------------------------------------------------------------

@dataclass(frozen=True)
class Approx:
    """A value with an absolute error radius."""

    value: mpf
    error: mpf

    def __add__(self, o):
        o = _lift(o)
        return Approx(self.value + o.value, self.error + o.error)

    __radd__ = __add__

    def __neg__(self):
        return Approx(-self.value, self.error)

    def __sub__(self, o):
        return self + (-_lift(o))

    def __rsub__(self, o):
        return _lift(o) - self

    def __mul__(self, o):
        o = _lift(o)
        return Approx(self.value * o.value,
                      abs(self.value) * o.error + abs(o.value) * self.error + self.error * o.error)

    __rmul__ = __mul__

    def __truediv__(self, o):
        o = _lift(o)
        lo = abs(o.value) - o.error
        if lo <= 0:
            raise ZeroDivisionError("divisor interval contains zero")
        v = self.value / o.value
        return Approx(v, (self.error + abs(v) * o.error) / lo)

    def __rtruediv__(self, o):
        return _lift(o) / self

    def log(self):
        lo = self.value - self.error
        return Approx(mpmath.log(self.value), self.error / lo)

    def exp(self):
        v = mpmath.exp(self.value)
        return Approx(v, v * (mpmath.exp(self.error) - 1))


def _lift(x) -> Approx:
    return x if isinstance(x, Approx) else Approx(mpmath.mpmathify(x), mpf(0))


@dataclass(frozen=True)
class NamedConstant:
    identifier: str
    value: mpf
    error: float
    descriptor: str
    definition: str = ""

    def __float__(self):
        return float(self.value)

    def as_dict(self) -> dict:
        return {"id": self.identifier, "value": mpmath.nstr(self.value, 25),
                "error": float(self.error), "descriptor": self.descriptor,
                "definition": self.definition}


# -- prime sums --------------------------------------------------------------------

def series_coefficients(num: Sequence[int], den: Sequence[int], K: int) -> list[Fraction]:
    """Power-series coefficients of num(x)/den(x) up to x^K (den[0] != 0)."""
    c: list[Fraction] = []
    d0 = Fraction(den[0])
    for k in range(K + 1):
        v = Fraction(num[k]) if k < len(num) else Fraction(0)
        for j in range(1, min(k, len(den) - 1) + 1):
            v -= den[j] * c[k - j]
        c.append(v / d0)
    return c


def log_series_coefficients(poly: Sequence[int], K: int) -> list[Fraction]:
    """Coefficients of log(poly(x)) for poly(0) = 1, via (log h)' = h'/h."""
    dpoly = [i * poly[i] for i in range(1, len(poly))]
    deriv = series_coefficients(dpoly, poly, K)
    return [Fraction(0)] + [deriv[k - 1] / k for k in range(1, K + 1)]


class _PrimeTail:
    """Tails over primes p > P0 of sum log p p^{-s} and sum p^{-s}, s > 1."""

    def __init__(self, P0: int):
        self.P0 = P0
        self.primes = [int(p) for p in simple_sieve(P0)]
        self.logs = [mpmath.log(p) for p in self.primes]
        self._cache: dict = {}

    def log_bound(self, s) -> mpf:
        """Envelope for sum_{n>P0} log n n^{-s}."""
        P0 = mpf(self.P0)
        return P0 ** (1 - s) * (mpmath.log(P0) / (s - 1) + 1 / (s - 1) ** 2)

    def plain_bound(self, s) -> mpf:
        P0 = mpf(self.P0)
        return P0 ** (1 - s) / (s - 1)

    def _A(self, s):
        # sum_{p > P0} log p / (p^s - 1)
        z, ez = zeta(s, with_error=True, target=1e-35)
        dz, edz = zeta_derivative(s)
        head = mpmath.fsum(lp / (mpf(p) ** s - 1) for p, lp in zip(self.primes, self.logs))
        val = -dz / z - head
        err = (edz + abs(dz / z) * ez) / (abs(z) - ez)
        return val, err

    def _L(self, s):
        # sum_{p > P0} -log(1 - p^{-s})
        z, ez = zeta(s, with_error=True, target=1e-35)
        head = mpmath.fsum(mpmath.log1p(-mpf(p) ** (-s)) for p in self.primes)
        return mpmath.log(z) + head, ez / (abs(z) - ez)

    def log_weighted(self, s) -> tuple[mpf, mpf]:
        """sum_{p>P0} log p p^{-s} with error radius."""
        key = ("log", s)
        if key in self._cache:
            return self._cache[key]
        eps = mpf(10) ** (-WORKING_DPS + 2)
        val, err = mpf(0), mpf(0)
        m = 1
        while True:
            if self.log_bound(m * s) * 2 < eps:
                err += 2 * self.log_bound(m * s)
                break
            mu = _mobius(m)
            if mu:
                a, ea = self._A(m * s)
                val += mu * a
                err += ea
            m += 1
        out = (val, err + eps)
        self._cache[key] = out
        return out

    def plain(self, s) -> tuple[mpf, mpf]:
        """sum_{p>P0} p^{-s} with error radius."""
        key = ("plain", s)
        if key in self._cache:
            return self._cache[key]
        eps = mpf(10) ** (-WORKING_DPS + 2)
        val, err = mpf(0), mpf(0)
        m = 1
        while True:
            if self.plain_bound(m * s) * 2 < eps:
                err += 2 * self.plain_bound(m * s)
                break
            mu = _mobius(m)
            if mu:
                v, ev = self._L(m * s)
                val += mpf(mu) / m * v
                err += ev / m
            m += 1
        out = (val, err + eps)
        self._cache[key] = out
        return out


def _mobius(m: int) -> int:
    from .primes import factorize

    if m == 1:
        return 1
    f = factorize(m)
    if any(e > 1 for _, e in f):
        return 0
    return -1 if len(f) % 2 else 1


def _tail_series(tail: _PrimeTail, coeffs: Sequence[Fraction], weighted: bool) -> tuple[mpf, mpf]:
    """sum_k c_k * T(k/2) where T is the log-weighted or plain prime tail."""
    bound = tail.log_bound if weighted else tail.plain_bound
    get = tail.log_weighted if weighted else tail.plain
    eps = mpf(10) ** (-WORKING_DPS + 5)
    val, err = mpf(0), mpf(0)
    last = len(coeffs) - 1
    for k, c in enumerate(coeffs):
        if c == 0 or k <= 2:
            if c != 0:
                raise ValueError("prime-sum expansion must start at p^{-3/2} or beyond")
            continue
        s = mpf(k) / 2
        cm = mpf(c.numerator) / c.denominator
        if abs(cm) * bound(s) < eps:
            continue
        v, e = get(s)
        val += cm * v
        err += abs(cm) * e
    # remainder beyond the computed coefficients: |c_k| <= 2^k crude majorant
    P0 = mpf(tail.P0)
    r = 2 / mpmath.sqrt(P0)
    first = mpf(2) ** (last + 1) * bound(mpf(last + 1) / 2) / mpf(2) ** (last + 1)
    err += first * mpf(2) ** (last + 1) * r / (1 - r) + eps
    return val, err


_CONST_LOCK = threading.Lock()
_CONST_CACHE: dict = {}


def _prime_sum(key: str, local: Callable, num, den, P0: int, K: int = 160) -> Approx:
    """sum_p log p * num/den evaluated at x = p^{-1/2}."""
    tail = _tail_for(P0)
    head = mpmath.fsum(lp * local(mpf(p)) for p, lp in zip(tail.primes, tail.logs))
    coeffs = series_coefficients(num, den, K)
    tv, te = _tail_series(tail, coeffs, weighted=True)
    return Approx(head + tv, te + abs(head) * mpf(10) ** (3 - WORKING_DPS))


_TAILS: dict = {}


def _tail_for(P0: int) -> _PrimeTail:
    if P0 not in _TAILS:
        _TAILS[P0] = _PrimeTail(P0)
    return _TAILS[P0]


def prime_sum_logp_over_p_pm1(P0: int = DEFAULT_P0) -> Approx:
    """sum_p log p / (p (p-1))."""
    return _prime_sum("s1", lambda p: 1 / (p * (p - 1)), [0, 0, 0, 0, 1], [1, 0, -1], P0)


def prime_sum_logp_over_p2_p_1(P0: int = DEFAULT_P0) -> Approx:
    """sum_p log p / (p^2 - p + 1)."""
    return _prime_sum("s2", lambda p: 1 / (p * p - p + 1), [0, 0, 0, 0, 1], [1, 0, -1, 0, 1], P0)


def prime_sum_logp_over_pm1_sqrtp_1(P0: int = DEFAULT_P0) -> Approx:
    """sum_p log p / ((p-1) sqrt(p) + 1)."""
    return _prime_sum("s3", lambda p: 1 / ((p - 1) * mpmath.sqrt(p) + 1),
                      [0, 0, 0, 1], [1, 0, -1, 1], P0)


def euler_product_sqrt(P0: int = DEFAULT_P0, K: int = 160) -> Approx:
    """prod_p (1 + 1/((p-1) sqrt p)), via the logarithm and the prime-zeta tail.

    With x = p^{-1/2} the local factor is (1 - x^2 + x^3)/(1 - x^2).
    """
    tail = _tail_for(P0)
    head = mpmath.fsum(mpmath.log1p(1 / ((mpf(p) - 1) * mpmath.sqrt(p))) for p in tail.primes)
    c1 = log_series_coefficients([1, 0, -1, 1], K)
    c2 = log_series_coefficients([1, 0, -1], K)
    coeffs = [a - b for a, b in zip(c1, c2)]
    tv, te = _tail_series(tail, coeffs, weighted=False)
    return Approx(head + tv, te + mpf(10) ** (3 - WORKING_DPS)).exp()


# -- Euler products with explicit tails ---------------------------------------------

@dataclass
class EulerProduct:
    """Truncated Euler product prod_{p<=P0} local(p) with a tail envelope.

    ``tail_bound(P0)`` bounds log(full/partial); the strategy tag documents
    where the envelope comes from.
    """

    local_factor: Callable
    tail_bound: Callable
    strategy: str
    P0: int = DEFAULT_P0
    _partial: dict = field(default_factory=dict, repr=False)

    def partial(self, P0: int | None = None) -> mpf:
        P0 = P0 or self.P0
        if P0 not in self._partial:
            with mpmath.workdps(WORKING_DPS):
                self._partial[P0] = mpmath.exp(mpmath.fsum(
                    mpmath.log(self.local_factor(mpf(int(p)))) for p in simple_sieve(P0)))
        return self._partial[P0]

    def evaluate(self, P0: int | None = None) -> tuple[mpf, mpf]:
        """(partial product, bound on |full - partial|)."""
        P0 = P0 or self.P0
        v = self.partial(P0)
        tb = mpf(self.tail_bound(P0))
        return v, abs(v) * (mpmath.exp(tb) - 1)


def d1_euler_product() -> EulerProduct:
    """prod_p (1 + 1/(p(p-1))) = zeta(2)zeta(3)/zeta(6)."""
    return EulerProduct(
        local_factor=lambda p: 1 + 1 / (p * (p - 1)),
        # log(1+y) <= y and sum_{n>P0} 1/(n(n-1)) = 1/P0
        tail_bound=lambda P0: mpf(1) / P0,
        strategy="telescoping: sum_{n>P0} 1/(n(n-1)) = 1/P0",
    )


# -- named constants ---------------------------------------------------------------

_DEFS = {
    "gamma": "Euler-Mascheroni constant",
    "zeta_half": "zeta(1/2)",
    "zeta_logderiv_half": "zeta'(1/2)/zeta(1/2)",
    "sum_logp_p_pm1": "sum_p log p/(p(p-1))",
    "sum_logp_p2_p_1": "sum_p log p/(p^2-p+1)",
    "sum_logp_pm1_sqrtp_1": "sum_p log p/((p-1)sqrt(p)+1)",
    "prod_sqrt": "prod_p (1 + 1/((p-1)sqrt(p)))",
    "D1": "zeta(2)zeta(3)/zeta(6)",
    "D2": "D1 (gamma - 3 - sum_p log p/(p^2-p+1))",
    "D3": "-2 zeta(1/2) prod_p (1 + 1/((p-1)sqrt(p)))",
    "E1": "zeta(2)zeta(3)/zeta(6)",
    "E2": "E1 (gamma - 1 - sum_p log p/(p^2-p+1))",
    "F1": "-4 zeta(1/2) prod_p (1 + 1/((p-1)sqrt(p)))",
    "F2": "F1 (zeta'/zeta(1/2) - sum_p log p/((p-1)sqrt(p)+1))",
    "C1": "D1 log 2",
    "C6": "log(pi/2) + 1 + gamma + sum_p log p/(p(p-1))  [support (1, 3/2) display]",
    "C6_mu0": "log(pi) + 1 + gamma + sum_p log p/(p(p-1))  [mu_0 main term]",
    "c_gv": "gamma + log(2 pi) + 1 + sum_p log p/(p(p-1))",
    "S_f_prefactor": "(2 - sqrt 2) zeta(1/2) prod_p (1 + 1/((p-1)sqrt(p)))",
}

_DESCRIPTORS = {
    "gamma": "zeta-expression",
    "zeta_half": "zeta-expression",
    "zeta_logderiv_half": "zeta-expression",
    "sum_logp_p_pm1": "prime-sum",
    "sum_logp_p2_p_1": "prime-sum",
    "sum_logp_pm1_sqrtp_1": "prime-sum",
    "prod_sqrt": "euler-product",
    "D1": "zeta-expression",
    "E1": "zeta-expression",
    "C1": "zeta-expression",
}

CONSTANT_IDS = tuple(_DEFS)


def _compute_all(P0: int) -> dict[str, Approx]:
    with mpmath.workdps(WORKING_DPS):
        eps = mpf(10) ** (5 - WORKING_DPS)
        g = Approx(+mpmath.euler, eps)
        zh = Approx(*zeta(mpf(1) / 2, with_error=True, target=1e-30))
        dzh = Approx(*zeta_derivative(mpf(1) / 2))
        s1 = prime_sum_logp_over_p_pm1(P0)
        s2 = prime_sum_logp_over_p2_p_1(P0)
        s3 = prime_sum_logp_over_pm1_sqrtp_1(P0)
        k0 = euler_product_sqrt(P0)
        z2, z3, z6 = (Approx(*zeta(k, with_error=True, target=1e-30)) for k in (2, 3, 6))
        d1 = z2 * z3 / z6
        log2 = Approx(mpmath.log(2), eps)
        out = {
            "gamma": g,
            "zeta_half": zh,
            "zeta_logderiv_half": dzh / zh,
            "sum_logp_p_pm1": s1,
            "sum_logp_p2_p_1": s2,
            "sum_logp_pm1_sqrtp_1": s3,
            "prod_sqrt": k0,
            "D1": d1,
            "D2": d1 * (g - 3 - s2),
            "D3": -2 * zh * k0,
            "E1": d1,
            "E2": d1 * (g - 1 - s2),
            "C1": d1 * log2,
            "C6": Approx(mpmath.log(mpmath.pi / 2), eps) + 1 + g + s1,
            "C6_mu0": Approx(mpmath.log(mpmath.pi), eps) + 1 + g + s1,
            "c_gv": Approx(mpmath.log(2 * mpmath.pi), eps) + 1 + g + s1,
            "S_f_prefactor": Approx(2 - mpmath.sqrt(2), eps) * zh * k0,
        }
        f1 = -4 * zh * k0
        out["F1"] = f1
        out["F2"] = f1 * (dzh / zh - s3)
        return out


def constant(identifier: str, P0: int = DEFAULT_P0) -> NamedConstant:
    """Look up a constant; all constants for a given P0 are computed once."""
    if identifier not in _DEFS:
        raise UnknownConstantError(identifier)
    with _CONST_LOCK:
        if P0 not in _CONST_CACHE:
            _CONST_CACHE[P0] = _compute_all(P0)
        a = _CONST_CACHE[P0][identifier]
    return NamedConstant(identifier, a.value, float(a.error),
                         _DESCRIPTORS.get(identifier, "derived"), _DEFS[identifier])


def cfloat(identifier: str) -> float:
    return float(constant(identifier).value)


def all_constants(P0: int = DEFAULT_P0) -> list[NamedConstant]:
    return [constant(k, P0) for k in CONSTANT_IDS]
