"""Exact integer primitives: Kronecker symbols, prime/squarefree tables, trial division."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, PreconditionError, ResourceError

# Bytes any single table or bitmap construction may allocate.
MEMORY_BUDGET = int(os.environ.get("QFBIAS_MEMORY_BUDGET", 3 * 2**30))

# (-1)^((n^2-1)/8) indexed by n mod 8; zero for even n.
_TAB2 = (0, 1, 0, -1, 0, -1, 0, 1)


def kronecker(D: int, n: int) -> int:
    """Kronecker symbol (D|n), the completely multiplicative extension of Legendre."""
    a, b = int(D), int(n)
    if b == 0:
        return 1 if abs(a) == 1 else 0
    if a % 2 == 0 and b % 2 == 0:
        return 0
    v = (b & -b).bit_length() - 1
    b >>= v
    k = 1 if v % 2 == 0 else _TAB2[a & 7]
    if b < 0:
        b = -b
        if a < 0:
            k = -k
    while True:
        if a == 0:
            return k if b == 1 else 0
        v = (a & -a).bit_length() - 1
        a >>= v
        if v % 2:
            k *= _TAB2[b & 7]
        if a & b & 2:
            k = -k
        r = abs(a)
        a = b % r
        b = r


def check_budget(nbytes: int, what: str) -> None:
    if nbytes > MEMORY_BUDGET:
        raise ResourceError(
            f"{what} needs ~{nbytes / 2**20:.0f} MiB, budget is {MEMORY_BUDGET / 2**20:.0f} MiB"
        )


def nbytes_for(limit: int) -> int:
    """Bytes of a packed bit array covering the integers 0..limit."""
    return (limit + 1 + 7) // 8


def pack(mask: np.ndarray) -> np.ndarray:
    return np.packbits(mask.astype(bool, copy=False), bitorder="little")


def unpack(bits: np.ndarray, limit: int) -> np.ndarray:
    return np.unpackbits(bits, count=limit + 1, bitorder="little").view(bool)


def prime_mask(limit: int) -> np.ndarray:
    """Boolean array over 0..limit, True at primes."""
    check_budget(limit + 1, f"prime sieve to {limit}")
    is_prime = np.ones(limit + 1, dtype=bool)
    is_prime[:2] = False
    is_prime[4::2] = False
    for p in range(3, math.isqrt(limit) + 1, 2):
        if is_prime[p]:
            is_prime[p * p :: 2 * p] = False
    return is_prime


def squarefree_mask(limit: int, primes: np.ndarray | None = None) -> np.ndarray:
    """Boolean array over 0..limit, True at squarefree n >= 1."""
    check_budget(limit + 1, f"squarefree sieve to {limit}")
    mask = np.ones(limit + 1, dtype=bool)
    mask[0] = False
    root = math.isqrt(limit)
    if primes is None:
        primes = np.flatnonzero(prime_mask(root))
    for p in primes[primes <= root].tolist():
        mask[p * p :: p * p] = False
    return mask


@dataclass(frozen=True)
class ArithTables:
    """Primes and squarefree flags up to ``limit``; immutable once built.

    Masks are packed little-endian bit arrays in which bit ``n`` describes
    the integer ``n`` (bit 0 is always clear).
    """

    limit: int
    primes: np.ndarray
    squarefree_bits: np.ndarray = field(repr=False)
    prime_bits: np.ndarray = field(repr=False)

    def is_squarefree(self, n: int) -> bool:
        if not 1 <= n <= self.limit:
            raise PreconditionError(f"{n} outside squarefree table 1..{self.limit}")
        return bool((self.squarefree_bits[n >> 3] >> (n & 7)) & 1)

    def is_prime(self, n: int) -> bool:
        if not 0 <= n <= self.limit:
            raise PreconditionError(f"{n} outside prime table 0..{self.limit}")
        return bool((self.prime_bits[n >> 3] >> (n & 7)) & 1)

    def squarefree_count(self, upto: int | None = None) -> int:
        upto = self.limit if upto is None else upto
        return int(unpack(self.squarefree_bits, self.limit)[: upto + 1].sum())

    def primes_upto(self, bound: int) -> np.ndarray:
        return self.primes[: np.searchsorted(self.primes, bound, side="right")]


def build_tables(limit: int) -> ArithTables:
    if limit < 2:
        raise DomainError(f"table limit must be >= 2, got {limit}")
    # two bool sieves plus packed copies and the prime list
    check_budget(2 * (limit + 1) + 8 * (limit // 2 + 1), f"arithmetic tables to {limit}")
    is_prime = prime_mask(limit)
    primes = np.flatnonzero(is_prime).astype(np.int64)
    sf = squarefree_mask(limit, primes)
    return ArithTables(limit, primes, pack(sf), pack(is_prime))


def factorize(n: int, tables: ArithTables) -> list[tuple[int, int]]:
    """Prime factorization of ``n`` by trial division over the table's primes."""
    if n < 1:
        raise DomainError(f"factorize needs n >= 1, got {n}")
    if tables.limit * tables.limit < n:
        raise PreconditionError(f"table limit {tables.limit} too small to factor {n}")
    out = []
    for p in tables.primes_upto(math.isqrt(n)).tolist():
        if p * p > n:
            break
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
    if n > 1:
        out.append((n, 1))
    return out


def prime_divisors(n: int) -> list[int]:
    """Distinct prime divisors of a small positive integer (trial division, no tables)."""
    n = abs(n)
    out = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1 if p == 2 else 2
    if n > 1:
        out.append(n)
    return out


def is_squarefree_int(n: int) -> bool:
    n = abs(n)
    p = 2
    while p * p <= n:
        if n % (p * p) == 0:
            return False
        if n % p == 0:
            n //= p
        p += 1
    return True


def is_fundamental(D: int) -> bool:
    if D % 4 == 1:
        return D != 1 and is_squarefree_int(D)
    if D % 4 == 0:
        m = D // 4
        return m % 4 in (2, 3) and is_squarefree_int(m)
    return False
