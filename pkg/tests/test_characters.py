import cmath
import math

import numpy as np
import pytest
import sympy
from hypothesis import given, strategies as st

from lowzeros.characters import (
    character_sum_exact,
    character_sums_exact,
    conductor_and_inducer,
    enumerate_characters,
    gauss_sum,
    power_basis_table,
    reduce_cyclotomic,
    root_number,
    unit_group,
    value_sums_exact,
)
from lowzeros.errors import ModulusOverflowError, NotPrimitiveError


def brute_conductor(chi):
    """Smallest d | q such that chi(n) = 1 whenever n = 1 mod d and gcd(n, q) = 1."""
    q = chi.modulus
    for d in sorted(sympy.divisors(q)):
        if all(abs(chi(n) - 1) < 1e-12 for n in range(1, q) if math.gcd(n, q) == 1 and n % d == 1 % d):
            return d
    return q


def test_trivial_modulus():
    chars = enumerate_characters(1)
    assert len(chars) == 1
    assert chars[0].is_principal and chars[0](5) == 1


def test_mod4():
    chars = enumerate_characters(4)
    assert len(chars) == 2
    odd = [c for c in chars if not c.is_principal][0]
    assert odd(3) == -1 and odd.parity == 1 and odd.conductor == 4
    assert chars[0].parity == 0


def test_mod5_parity_split():
    chars = enumerate_characters(5)
    assert sorted(c.parity for c in chars) == [0, 0, 1, 1]


def test_evaluate_mod5_forced():
    chi = next(c for c in enumerate_characters(5) if abs(c(2) - 1j) < 1e-12)
    assert chi(4) == -1


def test_principal_mod6_non_unit():
    assert unit_group(6).principal()(4) == 0


def test_orthogonality_example():
    assert character_sum_exact(enumerate_characters(5), 6) == (4, 0)


@pytest.mark.parametrize("q", range(1, 61))
def test_count_and_homomorphism(q):
    chars = enumerate_characters(q)
    assert len(chars) == sympy.totient(q)
    units = [n for n in range(1, q + 1) if math.gcd(n, q) == 1]
    for chi in chars[:6]:
        for m in units[:6]:
            for n in units[:6]:
                assert abs(chi(m * n) - chi(m) * chi(n)) < 1e-12
        assert all(chi(n) == 0 for n in range(q) if math.gcd(n, q) > 1)


@pytest.mark.parametrize("q", [3, 4, 8, 9, 12, 15, 16, 20, 24, 25, 27, 36, 45, 48])
def test_conductor_matches_brute_force(q):
    for chi in enumerate_characters(q):
        assert chi.conductor == brute_conductor(chi)


def test_conductor_examples():
    qs, star = conductor_and_inducer(unit_group(6).principal())
    assert qs == 1 and star.is_principal
    quad9 = next(c for c in enumerate_characters(9) if c.order == 2)
    qs, star = conductor_and_inducer(quad9)
    assert qs == 3 and star.modulus == 3 and star(2) == -1
    prim5 = enumerate_characters(5)[1]
    assert conductor_and_inducer(prim5) == (5, prim5)


@pytest.mark.parametrize("q", [12, 20, 28, 45, 63])
def test_inducer_agrees_on_units(q):
    for chi in enumerate_characters(q):
        star = chi.inducer()
        for n in range(1, q):
            if math.gcd(n, q) == 1:
                assert abs(chi(n) - star(n)) < 1e-12


def test_gauss_sum_examples():
    odd4 = enumerate_characters(4)[1]
    assert abs(gauss_sum(odd4) - 2j) < 1e-12
    quad5 = next(c for c in enumerate_characters(5) if c.order == 2)
    assert abs(gauss_sum(quad5) - math.sqrt(5)) < 1e-12
    with pytest.raises(NotPrimitiveError):
        gauss_sum(unit_group(6).principal())


def test_gauss_sum_direct_oracle():
    for chi in enumerate_characters(7):
        if not chi.is_primitive:
            continue
        direct = sum(chi(a) * cmath.exp(2j * math.pi * a / 7) for a in range(1, 7))
        assert abs(gauss_sum(chi) - direct) < 1e-12


@pytest.mark.parametrize("q", range(3, 101))
def test_gauss_sum_modulus(q):
    for chi in enumerate_characters(q):
        if chi.is_primitive:
            assert abs(abs(gauss_sum(chi)) - math.sqrt(q)) < 1e-10
            assert abs(abs(root_number(chi)) - 1) < 1e-10


def test_real_characters_have_root_number_one():
    for q in (5, 8, 12, 13, 24, 29):
        for chi in enumerate_characters(q):
            if chi.is_primitive and chi.order == 2:
                assert abs(root_number(chi) - 1) < 1e-10


def test_modulus_overflow():
    with pytest.raises(ModulusOverflowError):
        unit_group(10**6 + 1)


@pytest.mark.parametrize("E", [1, 2, 3, 4, 6, 12, 15, 30, 42, 60, 105])
def test_power_basis_table_matches_sympy(E):
    x = sympy.Symbol("x")
    phi = sympy.cyclotomic_poly(E, x)
    tab = power_basis_table(E)
    for j in range(E):
        rem = sympy.Poly(sympy.rem(x**j, phi, x), x)
        coeffs = [int(rem.coeff_monomial(x**i)) for i in range(tab.shape[1])]
        assert list(tab[j]) == coeffs


def test_reduce_cyclotomic_sum_of_roots_is_zero():
    for n in range(2, 40):
        assert all(c == 0 for c in reduce_cyclotomic([1] * n, n))


@given(st.integers(3, 300), st.integers(0, 10**6), st.integers(0, 10**6))
def test_multiplicativity_property(q, m, n):
    chars = enumerate_characters(q)
    chi = chars[(m + n) % len(chars)]
    assert abs(chi(m * n) - chi(m) * chi(n)) < 1e-9


@given(st.integers(3, 200))
def test_conjugate_and_product(q):
    chars = enumerate_characters(q)
    chi = chars[-1]
    prod = chi * chi.conj()
    assert prod.is_principal
    assert chi.conj().parity == chi.parity


def orthogonality_holds_exactly(q: int) -> bool:
    """sum_chi chi(n) = phi(q)[n = 1], sum_n chi(n) = phi(q)[chi principal], and the parity split."""
    chars = enumerate_characters(q)
    phi = len(chars)
    S = character_sums_exact(chars)
    for n in range(q):
        want = [0] * S.shape[1]
        if n % q == 1 % q:
            want[0] = phi
        if list(S[n]) != want:
            return False
    for chi in chars:
        want = [0] * power_basis_table(chi.group.exponent).shape[1]
        if chi.is_principal:
            want[0] = phi
        if list(value_sums_exact(chi)) != want:
            return False
    if q >= 3:
        even = [c for c in chars if c.parity == 0]
        odd = [c for c in chars if c.parity == 1]
        if len(even) != phi // 2 or len(odd) != phi // 2:
            return False
        Se, So = character_sums_exact(even), character_sums_exact(odd)
        for n in range(q):
            ind1, indm1 = int(n % q == 1 % q), int(n % q == (q - 1))
            we = [0] * Se.shape[1]
            wo = [0] * So.shape[1]
            we[0] = phi // 2 * (ind1 + indm1)
            wo[0] = phi // 2 * (ind1 - indm1)
            if list(Se[n]) != we or list(So[n]) != wo:
                return False
    return True


@pytest.mark.parametrize("q", [1, 2, 3, 8, 12, 30, 97, 120])
def test_orthogonality_exact(q):
    assert orthogonality_holds_exactly(q)


def test_numerical_orthogonality_cross_check():
    chars = enumerate_characters(21)
    V = np.array([c.values for c in chars])
    G = V @ V.conj().T
    assert np.allclose(G, 12 * np.eye(12), atol=1e-10)
