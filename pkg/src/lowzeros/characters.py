"""Dirichlet characters modulo q.

Characters are stored exactly: a character is an exponent vector ``k`` on a
fixed generating set ``g_1, ..., g_r`` of the unit group, with
``chi(g_i) = e(k_i / o_i)`` where ``e(x) = exp(2 pi i x)``.  Values are
rationals mod 1 until a complex number is explicitly requested.

The unit group of ``q = 2^k * prod p^e`` is built from the CRT lifts of a
primitive root for every odd prime power and of ``{-1, 5}`` for ``2^k``
(``k >= 3``), so enumeration order is deterministic.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache, reduce
from typing import Iterator, Sequence

import numpy as np
from sympy import cyclotomic_poly, factorint
from sympy.abc import x as _x
from sympy.ntheory import primitive_root

from .errors import ModulusOverflowError, NotPrimitiveError

MAX_MODULUS = 10**6


@dataclass(frozen=True)
class _Component:
    """Cyclic pieces of (Z/p^e)^* with local discrete-log tables."""

    prime: int
    exponent: int
    modulus: int
    local_gens: tuple[int, ...]
    orders: tuple[int, ...]
    # logs[j][n mod p^e] = discrete log w.r.t. local_gens[j], -1 if p | n
    logs: tuple[np.ndarray, ...] = field(repr=False, compare=False)


def _odd_component(p: int, e: int) -> _Component:
    m = p**e
    g = primitive_root(m)
    order = m - m // p
    table = np.full(m, -1, dtype=np.int64)
    v = 1
    for j in range(order):
        table[v] = j
        v = v * g % m
    return _Component(p, e, m, (g,), (order,), (table,))


def _two_component(e: int) -> _Component:
    m = 2**e
    if e == 1:
        return _Component(2, 1, 2, (), (), ())
    sign = np.full(m, -1, dtype=np.int64)
    if e == 2:
        sign[1], sign[3] = 0, 1
        return _Component(2, 2, 4, (3,), (2,), (sign,))
    half = m // 4
    five = np.full(m, -1, dtype=np.int64)
    v = 1
    for j in range(half):
        five[v], sign[v] = j, 0
        five[m - v], sign[m - v] = j, 1
        v = v * 5 % m
    return _Component(2, e, m, (m - 1, 5), (2, half), (sign, five))


class ResidueGroup:
    """The unit group (Z/qZ)^* as a product of cyclic groups."""

    def __init__(self, q: int, max_modulus: int = MAX_MODULUS):
        if q < 1:
            raise ValueError(f"modulus must be positive, got {q}")
        if q > max_modulus:
            raise ModulusOverflowError(f"modulus {q} exceeds maximum {max_modulus}")
        self.modulus = q
        comps = []
        for p, e in sorted(factorint(q).items()):
            comps.append(_two_component(e) if p == 2 else _odd_component(p, e))
        self.components: tuple[_Component, ...] = tuple(comps)

        gens, orders = [], []
        for c in self.components:
            rest = q // c.modulus
            # CRT lift: g mod p^e, 1 mod the cofactor
            inv = pow(rest, -1, c.modulus) if c.modulus > 1 else 0
            for g, o in zip(c.local_gens, c.orders):
                lifted = (1 + rest * ((g - 1) * inv % c.modulus)) % q
                gens.append(lifted)
                orders.append(o)
        self.generators: tuple[tuple[int, int], ...] = tuple(zip(gens, orders))
        self.orders: tuple[int, ...] = tuple(orders)
        self.order = math.prod(orders)
        self.exponent = reduce(math.lcm, orders, 1)

    def __repr__(self):
        return f"ResidueGroup(q={self.modulus}, generators={self.generators})"

    def __len__(self):
        return self.order

    def dlog(self, n: int) -> tuple[int, ...] | None:
        """Exponents of n on the generators, or None when gcd(n, q) > 1."""
        logs = []
        for c in self.components:
            r = n % c.modulus
            for table in c.logs:
                v = int(table[r])
                if v < 0:
                    return None
                logs.append(v)
            if c.modulus == 2 and r % 2 == 0:
                return None
        return tuple(logs)

    @cached_property
    def dlog_table(self) -> np.ndarray:
        """Array of shape (q, r); rows of non-units are filled with -1."""
        q = self.modulus
        n = np.arange(q)
        cols = []
        unit = np.ones(q, dtype=bool)
        for c in self.components:
            r = n % c.modulus
            if c.modulus == 2:
                unit &= r == 1
            for table in c.logs:
                col = table[r]
                unit &= col >= 0
                cols.append(col)
        out = np.stack(cols, axis=1) if cols else np.zeros((q, 0), dtype=np.int64)
        out[~unit] = -1
        out.setflags(write=False)
        self._units = unit
        return out

    @cached_property
    def units(self) -> np.ndarray:
        """Boolean mask over 0..q-1 selecting residues coprime to q."""
        self.dlog_table
        return self._units

    def character(self, exponents: Sequence[int]) -> "DirichletCharacter":
        ks = tuple(int(k) % o for k, o in zip(exponents, self.orders))
        if len(ks) != len(self.orders):
            raise ValueError("exponent vector has wrong length")
        idx = 0
        for k, o in zip(ks, self.orders):
            idx = idx * o + k
        return DirichletCharacter(self, ks, idx)

    def __iter__(self) -> Iterator["DirichletCharacter"]:
        for i, ks in enumerate(itertools.product(*(range(o) for o in self.orders))):
            yield DirichletCharacter(self, ks, i)

    def characters(self) -> list["DirichletCharacter"]:
        return list(self)

    def principal(self) -> "DirichletCharacter":
        return self.character([0] * len(self.orders))


@lru_cache(maxsize=256)
def unit_group(q: int, max_modulus: int = MAX_MODULUS) -> ResidueGroup:
    return ResidueGroup(q, max_modulus)


@dataclass(frozen=True, eq=False)
class DirichletCharacter:
    group: ResidueGroup = field(repr=False)
    exponents: tuple[int, ...]
    index: int

    def __eq__(self, other):
        if not isinstance(other, DirichletCharacter):
            return NotImplemented
        return self.modulus == other.modulus and self.exponents == other.exponents

    def __hash__(self):
        return hash((self.modulus, self.exponents))

    def __repr__(self):
        return f"DirichletCharacter(q={self.modulus}, index={self.index}, exponents={self.exponents})"

    @property
    def modulus(self) -> int:
        return self.group.modulus

    @cached_property
    def order(self) -> int:
        return reduce(math.lcm, (o // math.gcd(k, o) for k, o in zip(self.exponents, self.group.orders)), 1)

    @property
    def is_principal(self) -> bool:
        return not any(self.exponents)

    def exponent(self, n: int) -> Fraction | None:
        """chi(n) = e(exponent(n)); None when gcd(n, q) > 1."""
        logs = self.group.dlog(n)
        if logs is None:
            return None
        return Fraction(sum(k * l * (self.group.exponent // o)
                            for k, l, o in zip(self.exponents, logs, self.group.orders))
                        % self.group.exponent, self.group.exponent)

    def __call__(self, n: int) -> complex:
        e = self.exponent(n)
        if e is None:
            return 0j
        return _root_of_unity(e)

    @cached_property
    def numerators(self) -> np.ndarray:
        """chi(n) = e(numerators[n] / group.exponent) for n mod q, -1 on non-units."""
        g = self.group
        scale = np.array([k * (g.exponent // o) for k, o in zip(self.exponents, g.orders)],
                         dtype=np.int64)
        table = g.dlog_table
        num = (table @ scale) % g.exponent if table.shape[1] else np.zeros(g.modulus, np.int64)
        num = np.where(g.units, num, -1)
        num.setflags(write=False)
        return num

    @cached_property
    def values(self) -> np.ndarray:
        """Complex values chi(0), ..., chi(q-1)."""
        num = self.numerators
        v = np.exp(2j * np.pi * num / self.group.exponent)
        # exact values for the real characters keep L-values of real chi real
        v = np.where(2 * num == self.group.exponent, -1.0, v)
        v = np.where(num == 0, 1.0, v)
        v = np.where(num < 0, 0.0, v)
        v.setflags(write=False)
        return v

    @cached_property
    def parity(self) -> int:
        """a(chi): 0 for even characters, 1 for odd ones."""
        if self.modulus <= 2:
            return 0
        return 0 if self.exponent(self.modulus - 1) == 0 else 1

    def conj(self) -> "DirichletCharacter":
        return self.group.character([-k for k in self.exponents])

    @cached_property
    def conductor(self) -> int:
        cond = 1
        i = 0
        for c in self.group.components:
            ks = self.exponents[i:i + len(c.orders)]
            i += len(c.orders)
            cond *= _component_conductor(c, ks)
        return cond

    @property
    def is_primitive(self) -> bool:
        return self.conductor == self.modulus

    def inducer(self) -> "DirichletCharacter":
        return conductor_and_inducer(self)[1]

    def __mul__(self, other: "DirichletCharacter") -> "DirichletCharacter":
        if other.modulus != self.modulus:
            raise ValueError("characters to different moduli")
        return self.group.character([a + b for a, b in zip(self.exponents, other.exponents)])


def _component_conductor(c: _Component, ks: Sequence[int]) -> int:
    p = c.prime
    if p != 2:
        (k,), (o,) = ks, c.orders
        if k == 0:
            return 1
        order = o // math.gcd(k, o)
        v = 0
        while order % p == 0:
            order //= p
            v += 1
        return p ** (1 + v)
    if c.exponent == 1:
        return 1
    if c.exponent == 2:
        return 4 if ks[0] else 1
    k_sign, k5 = ks
    if k5 == 0:
        return 4 if k_sign else 1
    half = c.orders[1]
    order = half // math.gcd(k5, half)
    return 4 * order


def _root_of_unity(e: Fraction) -> complex:
    if e == 0:
        return 1 + 0j
    if e == Fraction(1, 2):
        return -1 + 0j
    if e == Fraction(1, 4):
        return 1j
    if e == Fraction(3, 4):
        return -1j
    ang = 2 * math.pi * e
    return complex(math.cos(ang), math.sin(ang))


def enumerate_characters(q: int, max_modulus: int = MAX_MODULUS) -> list[DirichletCharacter]:
    """All phi(q) characters mod q, lexicographic in exponent vectors."""
    return unit_group(q, max_modulus).characters()


def evaluate(chi: DirichletCharacter, n: int) -> complex:
    return chi(n)


def conductor_and_inducer(chi: DirichletCharacter) -> tuple[int, DirichletCharacter]:
    """Conductor q* of chi and the primitive character mod q* inducing it."""
    q, qs = chi.modulus, chi.conductor
    if qs == q:
        return q, chi
    star = unit_group(qs)
    ks = []
    for h, o in star.generators:
        n = h
        while math.gcd(n, q) != 1:
            n += qs
        e = chi.exponent(n)
        k = e * o
        assert k.denominator == 1, "character does not factor through its conductor"
        ks.append(int(k))
    return qs, star.character(ks)


def gauss_sum(chi: DirichletCharacter) -> complex:
    """tau(chi) = sum_a chi(a) e(a/q) for primitive chi."""
    if not chi.is_primitive:
        raise NotPrimitiveError(f"Gauss sum requested for imprimitive {chi!r}")
    q, E = chi.modulus, chi.group.exponent
    num = chi.numerators
    a = np.nonzero(num >= 0)[0]
    # e(num/E + a/q) as an exact fraction with denominator E*q
    tot = (num[a] * q + a * E) % (E * q)
    ang = 2 * np.pi * tot / (E * q)
    return complex(math.fsum(np.cos(ang)), math.fsum(np.sin(ang)))


def root_number(chi: DirichletCharacter) -> complex:
    """epsilon_chi = tau(chi) / (i^a sqrt(q)) for primitive chi."""
    tau = gauss_sum(chi)
    return tau / ((1j ** chi.parity) * math.sqrt(chi.modulus))


# -- exact arithmetic in Z[zeta_N] -------------------------------------------------

@lru_cache(maxsize=None)
def _cyclotomic(n: int) -> tuple[int, ...]:
    """Coefficients of Phi_n, highest degree first."""
    return tuple(int(c) for c in cyclotomic_poly(n, _x, polys=True).all_coeffs())


def reduce_cyclotomic(coeffs: Sequence[int], n: int) -> tuple[int, ...]:
    """Reduce sum_j coeffs[j] zeta_n^j to the power basis of Q(zeta_n).

    Returns the phi(n) integer coordinates; the element is zero exactly when
    every coordinate is zero.
    """
    phi = _cyclotomic(n)
    deg = len(phi) - 1
    c = [0] * max(len(coeffs), deg)
    for j, v in enumerate(coeffs):
        c[j % n if j >= n else j] += int(v)
    # Phi_n is monic, so polynomial long division stays in Z
    for top in range(len(c) - 1, deg - 1, -1):
        lead = c[top]
        if lead:
            for i, pc in enumerate(phi):
                c[top - i] -= lead * pc
    return tuple(c[:deg])


@lru_cache(maxsize=None)
def power_basis_table(n: int) -> np.ndarray:
    """Row j holds the coordinates of zeta_n^j in the power basis 1, zeta_n, ..., zeta_n^{phi(n)-1}."""
    phi = _cyclotomic(n)
    deg = len(phi) - 1
    low = [-int(c) for c in reversed(phi[1:])]  # zeta^deg = sum_i low[i] zeta^i
    rows, cur = [], [1] + [0] * (deg - 1)
    for _ in range(n):
        rows.append(cur)
        top = cur[-1]
        cur = [0] + cur[:-1]
        if top:
            cur = [a + top * b for a, b in zip(cur, low)]
    out = np.array(rows, dtype=object)
    if max(abs(int(v)) for v in out.flat) < 2**31:
        out = out.astype(np.int64)
    out.setflags(write=False)
    return out


def character_sum_exact(chars: Sequence[DirichletCharacter], n: int) -> tuple[int, ...]:
    """Exact sum_chi chi(n) in the power basis of Q(zeta_E), E the group exponent."""
    if not chars:
        return ()
    E = chars[0].group.exponent
    counts = [0] * E
    for chi in chars:
        num = int(chi.numerators[n % chi.modulus])
        if num >= 0:
            counts[num] += 1
    return tuple(int(v) for v in np.asarray(counts, dtype=np.int64) @ power_basis_table(E))


def character_sums_exact(chars: Sequence[DirichletCharacter]) -> np.ndarray:
    """Exact sum_chi chi(n) for every n = 0..q-1 at once, shape (q, phi(E))."""
    q, E = chars[0].modulus, chars[0].group.exponent
    counts = np.zeros((q, E), dtype=np.int64)
    cols = np.arange(q)
    for chi in chars:
        num = chi.numerators
        ok = num >= 0
        np.add.at(counts, (cols[ok], num[ok]), 1)
    return counts @ power_basis_table(E)


def value_sums_exact(chi: DirichletCharacter) -> tuple[int, ...]:
    """Exact sum_{n mod q} chi(n)."""
    E = chi.group.exponent
    num = chi.numerators
    counts = np.bincount(num[num >= 0], minlength=E).astype(np.int64)
    return tuple(int(v) for v in counts @ power_basis_table(E))
