import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sympy import factorint, primerange

from qfbias import arith
from qfbias.arith import (
    build_tables,
    factorize,
    is_fundamental,
    is_squarefree_int,
    kronecker,
    pack,
    prime_divisors,
    unpack,
)
from qfbias.errors import DomainError, PreconditionError, ResourceError


@pytest.fixture(scope="module")
def small():
    return build_tables(10**4)


def test_kronecker_examples():
    assert kronecker(-3, 7) == 1
    assert kronecker(-20, 11) == -1
    assert kronecker(-23, 1) == 1
    assert kronecker(-4, 2) == 0


@pytest.mark.parametrize("p", list(primerange(3, 400)))
def test_kronecker_matches_legendre(p):
    for D in (-3, -4, -20, -23, -59, -87, -95, -163):
        e = pow(D, (p - 1) // 2, p)  # Euler's criterion
        want = 0 if e == 0 else (1 if e == 1 else -1)
        assert kronecker(D, p) == want


def test_kronecker_at_two_follows_d_mod_8():
    assert kronecker(-23, 2) == 1  # -23 = 1 mod 8
    assert kronecker(-3, 2) == -1  # -3 = 5 mod 8
    assert kronecker(-20, 2) == 0


@given(st.integers(-500, -1), st.integers(1, 300), st.integers(1, 300))
def test_kronecker_multiplicative_in_n(D, m, n):
    assert kronecker(D, m * n) == kronecker(D, m) * kronecker(D, n)


def test_tables_small():
    t = build_tables(10)
    assert t.primes.tolist() == [2, 3, 5, 7]
    sf = [n for n in range(1, 11) if t.is_squarefree(n)]
    assert sf == [1, 2, 3, 5, 6, 7, 10]
    assert build_tables(2).primes.tolist() == [2]
    assert build_tables(30).squarefree_count() == 19


def test_tables_against_brute(small):
    assert small.primes.tolist() == list(primerange(2, 10**4 + 1))
    sf = np.array([is_squarefree_int(n) for n in range(1, 10**4 + 1)])
    assert np.array_equal(unpack(small.squarefree_bits, small.limit)[1:], sf)
    assert not unpack(small.squarefree_bits, small.limit)[0]


def test_tables_errors(small):
    with pytest.raises(DomainError):
        build_tables(1)
    with pytest.raises(PreconditionError):
        small.is_squarefree(10**4 + 1)
    with pytest.raises(PreconditionError):
        small.is_prime(-1)


def test_factorize_examples(small):
    assert factorize(45, small) == [(3, 2), (5, 1)]
    assert factorize(1, small) == []
    assert factorize(99460729, small) == [(9973, 2)]
    with pytest.raises(PreconditionError):
        factorize(10**9, small)
    with pytest.raises(DomainError):
        factorize(0, small)


@given(st.integers(1, 10**8))
@settings(max_examples=200)
def test_factorize_matches_sympy(n):
    t = _TABLES
    assert factorize(n, t) == sorted(factorint(n).items())


_TABLES = build_tables(10**4)


@given(st.integers(1, 10**6))
def test_prime_divisors(n):
    assert prime_divisors(n) == sorted(factorint(n))


def test_is_fundamental():
    fund = [D for D in range(-40, 0) if is_fundamental(D)]
    assert fund == [-40, -39, -35, -31, -24, -23, -20, -19, -15, -11, -8, -7, -4, -3]


@given(st.lists(st.booleans(), min_size=1, max_size=200))
def test_pack_roundtrip(bits):
    mask = np.array(bits, dtype=bool)
    assert np.array_equal(unpack(pack(mask), mask.size - 1), mask)


def test_memory_budget(monkeypatch):
    monkeypatch.setattr(arith, "MEMORY_BUDGET", 1000)
    with pytest.raises(ResourceError):
        build_tables(10**6)
