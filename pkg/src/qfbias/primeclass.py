"""Primes sorted by the form classes that represent them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy.special import expi

from .arith import ArithTables, factorize, pack, prime_mask
from .errors import DomainError, PreconditionError
from .forms import ClassGroup, class_group
from .repsieve import rep_bitmap


@dataclass(eq=False)
class PrimeClassTable:
    """For each split or ramified prime p <= limit, the class indices representing p.

    ``idx2`` is -1 when a single (self-inverse) class represents p. Inert
    primes are absent.
    """

    D: int
    limit: int
    h: int
    primes: np.ndarray = field(repr=False)
    idx1: np.ndarray = field(repr=False)
    idx2: np.ndarray = field(repr=False)
    class_group: ClassGroup | None = field(default=None, repr=False)

    def classes_of(self, p: int) -> frozenset[int]:
        if p > self.limit:
            raise PreconditionError(f"prime {p} beyond table limit {self.limit}")
        pos = int(np.searchsorted(self.primes, p))
        if pos == self.primes.size or self.primes[pos] != p:
            return frozenset()
        j = int(self.idx2[pos])
        return frozenset((int(self.idx1[pos]),) if j < 0 else (int(self.idx1[pos]), j))

    def primes_of_class(self, i: int, upto: int | None = None) -> np.ndarray:
        sel = (self.idx1 == i) | (self.idx2 == i)
        ps = self.primes[sel]
        return ps if upto is None else ps[ps <= upto]

    def in_subgroup(self, H) -> np.ndarray:
        """Boolean flag per stored prime: some representing class lies in H."""
        hs = np.array(sorted(H), dtype=self.idx1.dtype)
        return np.isin(self.idx1, hs) | np.isin(self.idx2, hs)

    def same_as(self, other: "PrimeClassTable") -> bool:
        return (
            (self.D, self.limit, self.h) == (other.D, other.limit, other.h)
            and np.array_equal(self.primes, other.primes)
            and np.array_equal(self.idx1, other.idx1)
            and np.array_equal(self.idx2, other.idx2)
        )


def _set_bit_positions(bits: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(bits)
    if nz.size == 0:
        return np.zeros(0, dtype=np.int64)
    sub = np.unpackbits(bits[nz], bitorder="little").reshape(-1, 8)
    rows, cols = np.nonzero(sub)
    return (nz[rows].astype(np.int64) << 3) + cols


def classify_primes(
    cg: ClassGroup, P: int, threads: int = 1, tables: ArithTables | None = None
) -> PrimeClassTable:
    """One representation sweep per inverse pair of classes, intersected with the primes."""
    if P < 2:
        raise DomainError(f"prime bound must be >= 2, got {P}")
    if tables is not None and tables.limit >= P:
        prime_bits = tables.prime_bits[: (P + 8) // 8].copy()
        extra = prime_bits.size * 8 - (P + 1)
        if extra:
            prime_bits[-1] &= np.uint8(0xFF >> extra)
    else:
        prime_bits = pack(prime_mask(P))
    found_p, found_1, found_2 = [], [], []
    for i in range(cg.h):
        j = cg.inverses[i]
        if j < i:
            continue
        bm = rep_bitmap(cg.reps[i], P, threads)
        ps = _set_bit_positions(bm.bits & prime_bits)
        found_p.append(ps)
        found_1.append(np.full(ps.size, i, dtype=np.int16))
        found_2.append(np.full(ps.size, j if j != i else -1, dtype=np.int16))
    primes = np.concatenate(found_p)
    order = np.argsort(primes, kind="stable")
    primes = primes[order]
    if primes.size > 1 and np.any(primes[1:] == primes[:-1]):
        dup = primes[1:][primes[1:] == primes[:-1]][0]
        raise AssertionError(f"prime {dup} represented by two inverse pairs")
    return PrimeClassTable(
        cg.D, P, cg.h, primes, np.concatenate(found_1)[order], np.concatenate(found_2)[order], cg
    )


def nu_H(n: int, H, pct: PrimeClassTable, tables: ArithTables) -> int:
    """1 when n is squarefree, coprime to 2D, and every prime factor is represented in H."""
    if n < 1 or n > pct.limit:
        raise DomainError(f"n = {n} outside 1..{pct.limit}")
    if math.gcd(n, 2 * pct.D) != 1:
        return 0
    for p, e in factorize(n, tables):
        if e > 1 or not (pct.classes_of(p) & H):
            return 0
    return 1


def Li(x: float) -> float:
    """Offset logarithmic integral, the integral of dt/log t from 2 to x."""
    return float(expi(math.log(x)) - expi(math.log(2.0)))


def class_density(cg: ClassGroup, i: int) -> Fraction:
    """delta(f): 1/2 for classes of order <= 2, otherwise 1."""
    return Fraction(1, 2) if cg.orders[i] <= 2 else Fraction(1)


@dataclass
class EquidistributionReport:
    D: int
    class_index: int
    q: int
    x: int
    delta: Fraction
    residues: list[int]
    counts: list[int]
    predicted: float

    def rows(self) -> list[tuple[int, int, float, float]]:
        return [(a, n, self.predicted, n / self.predicted - 1.0) for a, n in zip(self.residues, self.counts)]

    @property
    def max_relative_error(self) -> float:
        return max(abs(n / self.predicted - 1.0) for n in self.counts)


def prime_equidistribution_report(
    cg: ClassGroup, i: int, q: int, x: int, pct: PrimeClassTable | None = None, threads: int = 1
) -> EquidistributionReport:
    """Counts of primes p <= x, p = a (mod q), represented by class i, next to the Chebotarev main term."""
    if math.gcd(q, 2 * cg.D) != 1:
        raise DomainError(f"modulus {q} is not coprime to 2D = {2 * cg.D}")
    if pct is None or pct.limit < x:
        pct = classify_primes(cg, x, threads)
    ps = pct.primes_of_class(i, x)
    counts = np.bincount(ps % q, minlength=q)
    residues = [a for a in range(q) if math.gcd(a, q) == 1]
    phi = len(residues)
    delta = class_density(cg, i)
    predicted = float(delta) / (phi * cg.h) * Li(x)
    return EquidistributionReport(cg.D, i, q, x, delta, residues, [int(counts[a]) for a in residues], predicted)


def save_table(pct: PrimeClassTable, path) -> None:
    """Write the cache format: header 'D P h', then 'p i' or 'p i,j' per stored prime."""
    lines = [f"{pct.D} {pct.limit} {pct.h}"]
    for p, i, j in zip(pct.primes.tolist(), pct.idx1.tolist(), pct.idx2.tolist()):
        lines.append(f"{p} {i}" if j < 0 else f"{p} {i},{j}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_table(path, cg: ClassGroup | None = None) -> PrimeClassTable:
    text = Path(path).read_text().split("\n", 1)
    D, P, h = (int(t) for t in text[0].split())
    tokens = text[1].split() if len(text) > 1 else []
    primes = np.array(tokens[0::2], dtype=np.int64)
    idx1 = np.empty(primes.size, dtype=np.int16)
    idx2 = np.full(primes.size, -1, dtype=np.int16)
    for k, tok in enumerate(tokens[1::2]):
        if "," in tok:
            a, b = tok.split(",")
            idx1[k], idx2[k] = int(a), int(b)
        else:
            idx1[k] = int(tok)
    if cg is None:
        cg = class_group(D)
    if cg.D != D or cg.h != h:
        raise DomainError(f"cache is for D={D}, h={h}; class group is D={cg.D}, h={cg.h}")
    return PrimeClassTable(D, P, h, primes, idx1, idx2, cg)


def load_or_build(cg: ClassGroup, P: int, cache=None, threads: int = 1, tables=None) -> PrimeClassTable:
    """Reuse a cached table covering ``P`` when present, else build (and write the cache)."""
    if cache is not None and Path(cache).exists():
        pct = load_table(cache, cg)
        if pct.limit >= P:
            return pct
    pct = classify_primes(cg, P, threads, tables)
    if cache is not None:
        save_table(pct, cache)
    return pct
