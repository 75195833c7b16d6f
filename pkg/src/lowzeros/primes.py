"""Sieve-backed prime tables: Lambda(n), psi, psi_2 and progression errors.

A :class:`PrimeTable` keeps every prime power ``n <= X`` in a sorted array
together with ``Lambda(n)``; the von Mangoldt function is sparse, so this is
far smaller than a dense table at ``X = 10^8``.  Prefix sums are accumulated
in extended precision so that ``psi`` queries are O(log X).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .errors import TableLimitError

DEFAULT_LIMIT = 10**8
DEFAULT_SEGMENT = 1 << 20


def simple_sieve(n: int) -> np.ndarray:
    """Primes <= n from an in-memory sieve of Eratosthenes."""
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    is_p = np.ones(n + 1, dtype=bool)
    is_p[:2] = False
    is_p[4::2] = False
    for p in range(3, math.isqrt(n) + 1, 2):
        if is_p[p]:
            is_p[p * p::2 * p] = False
    return np.flatnonzero(is_p).astype(np.int64)


def segmented_primes(lo: int, hi: int, base: np.ndarray | None = None) -> np.ndarray:
    """Primes in [lo, hi) using base primes up to sqrt(hi)."""
    lo = max(lo, 2)
    if hi <= lo:
        return np.zeros(0, dtype=np.int64)
    if base is None:
        base = simple_sieve(math.isqrt(hi - 1) + 1)
    seg = np.ones(hi - lo, dtype=bool)
    for p in base:
        p = int(p)
        if p * p >= hi:
            break
        start = max(p * p, -(-lo // p) * p)
        seg[start - lo::p] = False
    return np.flatnonzero(seg).astype(np.int64) + lo


def sieve_primes(limit: int, segment: int = DEFAULT_SEGMENT) -> np.ndarray:
    """All primes <= limit, built segment by segment."""
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    base = simple_sieve(math.isqrt(limit) + 1)
    parts = []
    for lo in range(0, limit + 1, segment):
        parts.append(segmented_primes(lo, min(lo + segment, limit + 1), base))
    return np.concatenate(parts)


def von_mangoldt_window(lo: int, hi: int) -> np.ndarray:
    """Dense Lambda(n) for n in [lo, hi) via a segmented sieve."""
    lam = np.zeros(max(hi - lo, 0))
    if hi <= lo:
        return lam
    for p in segmented_primes(lo, hi):
        lam[p - lo] = math.log(p)
    for p in simple_sieve(math.isqrt(hi - 1) + 1):
        p = int(p)
        pk = p * p
        while pk < hi:
            if pk >= lo:
                lam[pk - lo] = math.log(p)
            pk *= p
    return lam


def von_mangoldt_dense(n: int) -> np.ndarray:
    """Lambda(0..n) from a single in-memory sieve (reference path)."""
    lam = np.zeros(n + 1)
    for p in simple_sieve(n):
        p = int(p)
        lp = math.log(p)
        pk = p
        while pk <= n:
            lam[pk] = lp
            pk *= p
    return lam


def totients(n: int) -> np.ndarray:
    """phi(0..n) by a multiplicative sieve; phi(0) is set to 0."""
    phi = np.arange(n + 1, dtype=np.int64)
    for p in simple_sieve(n):
        p = int(p)
        phi[p::p] -= phi[p::p] // p
    return phi


@lru_cache(maxsize=4096)
def factorize(n: int) -> tuple[tuple[int, int], ...]:
    """Prime factorisation as ((p, e), ...) by trial division."""
    if n < 1:
        raise ValueError("factorize needs a positive integer")
    out = []
    for p in (2, 3):
        e = 0
        while n % p == 0:
            n //= p
            e += 1
        if e:
            out.append((p, e))
    p = 5
    while p * p <= n:
        for d in (p, p + 2):
            e = 0
            while n % d == 0:
                n //= d
                e += 1
            if e:
                out.append((d, e))
        p += 6
    if n > 1:
        out.append((n, 1))
    return tuple(out)


def euler_phi(n: int) -> int:
    r = n
    for p, _ in factorize(n):
        r -= r // p
    return r


def omega(n: int) -> int:
    """Number of distinct prime factors."""
    return len(factorize(n))


def num_divisors(n: int) -> int:
    return math.prod(e + 1 for _, e in factorize(n))


def _prefix(values: np.ndarray) -> np.ndarray:
    # float64 cumsum drifts by ~N eps; long double keeps psi(10^8) to ~1e-10 absolute
    out = np.zeros(len(values) + 1, dtype=np.longdouble)
    np.cumsum(values.astype(np.longdouble), out=out[1:])
    return out


@dataclass(frozen=True)
class PsiValue:
    x: float
    value: float
    progression: tuple[int, int] | None = None
    smoothed: bool = False

    def __float__(self):
        return self.value


class PrimeTable:
    """Prime powers up to ``limit`` with Lambda values and prefix sums."""

    def __init__(self, limit: int = DEFAULT_LIMIT, segment: int = DEFAULT_SEGMENT):
        self.limit = int(limit)
        self.segment = segment
        primes = sieve_primes(self.limit, segment)
        powers, logs = [primes], [np.log(primes.astype(float))]
        for p in primes[: np.searchsorted(primes, math.isqrt(self.limit), side="right")]:
            p = int(p)
            ks = []
            pk = p * p
            while pk <= self.limit:
                ks.append(pk)
                pk *= p
            if ks:
                powers.append(np.array(ks, dtype=np.int64))
                logs.append(np.full(len(ks), math.log(p)))
        pp = np.concatenate(powers)
        order = np.argsort(pp, kind="stable")
        self.primes = primes
        self.prime_powers = pp[order]
        self.lam = np.concatenate(logs)[order]
        for arr in (self.primes, self.prime_powers, self.lam):
            arr.setflags(write=False)

    def __repr__(self):
        return f"PrimeTable(limit={self.limit}, prime_powers={len(self.prime_powers)})"

    @cached_property
    def cum_lam(self) -> np.ndarray:
        return _prefix(self.lam)

    @cached_property
    def cum_lam_n(self) -> np.ndarray:
        return _prefix(self.lam * self.prime_powers.astype(float))

    def _check(self, x: float):
        if x > self.limit:
            raise TableLimitError(f"argument {x} beyond prime-table limit {self.limit}")

    def count(self, x: float) -> int:
        """Number of prime powers <= x."""
        self._check(x)
        return int(np.searchsorted(self.prime_powers, math.floor(x), side="right"))

    def pi(self, x: float) -> int:
        self._check(x)
        return int(np.searchsorted(self.primes, math.floor(x), side="right"))

    def von_mangoldt(self, n: int) -> float:
        if n < 1:
            raise ValueError("von_mangoldt needs n >= 1")
        self._check(n)
        i = np.searchsorted(self.prime_powers, n)
        if i < len(self.prime_powers) and self.prime_powers[i] == n:
            return float(self.lam[i])
        return 0.0

    def _select(self, x: float, progression):
        k = self.count(x)
        n, lam = self.prime_powers[:k], self.lam[:k]
        if progression is not None:
            q, a = progression
            if not 1 <= a <= q:
                raise ValueError(f"residue {a} out of range for modulus {q}")
            mask = n % q == a % q
            n, lam = n[mask], lam[mask]
        return n, lam

    def psi(self, x: float, progression: tuple[int, int] | None = None) -> PsiValue:
        if progression is None:
            k = self.count(x)
            return PsiValue(x, float(self.cum_lam[k]))
        _, lam = self._select(x, progression)
        return PsiValue(x, math.fsum(lam), tuple(progression))

    def psi2(self, x: float, progression: tuple[int, int] | None = None) -> PsiValue:
        """Sum of Lambda(n) (1 - n/x) over n <= x (optionally n = a mod q)."""
        if x < 2:
            return PsiValue(x, 0.0, progression, True)
        n, lam = self._select(x, progression)
        val = math.fsum(lam) - math.fsum(lam * n) / x
        return PsiValue(x, max(val, 0.0), progression, True)

    def psi_residues(self, x: float, q: int) -> np.ndarray:
        """psi(x; q, a) for every residue a = 0..q-1 in one pass."""
        k = self.count(x)
        return np.bincount(self.prime_powers[:k] % q, weights=self.lam[:k], minlength=q)

    def psi2_residues(self, x: float, q: int) -> np.ndarray:
        k = self.count(x)
        n, lam = self.prime_powers[:k], self.lam[:k]
        w = lam * (1.0 - n / x)
        return np.bincount(n % q, weights=w, minlength=q)

    def progression_error(self, x: float, q: int, a: int) -> float:
        """E(x, q, a) = psi(x; q, a) - psi(x)/phi(q)."""
        if math.gcd(a, q) != 1:
            raise ValueError(f"gcd({a}, {q}) > 1")
        if q == 1:
            return 0.0
        a = a % q or q
        return self.psi(x, (q, a)).value - self.psi(x).value / euler_phi(q)

    def factor(self, n: int) -> tuple[tuple[int, int], ...]:
        return factorize(n)
