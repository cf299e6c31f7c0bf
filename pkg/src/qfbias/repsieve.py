"""Lattice sieve for integers represented by forms, plus masks and residue counts.

Bitmaps are packed little-endian bit arrays; bit ``n`` of ``bits`` is set
when the integer ``n`` belongs to the set (bit 0 is never set).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numba
import numpy as np

from . import forms as _forms
from .arith import ArithTables, check_budget, factorize, nbytes_for, prime_divisors, unpack
from .errors import DomainError, PreconditionError
from .forms import QuadForm, TupleFamily

DEFAULT_STRIPE_ROWS = 512


@numba.njit(nogil=True, cache=True)
def _mark_rows(a, b, c, limit, abs_d, v_start, v_stop, bits, quadrant):
    two_a = 2 * a
    for v in range(v_start, v_stop):
        # f(u, v) <= limit  <=>  (2au + bv)^2 <= 4a*limit - |D| v^2
        disc = 4 * a * limit - abs_d * v * v
        if disc < 0:
            break
        s = np.int64(math.sqrt(disc))
        while s * s > disc:
            s -= 1
        while (s + 1) * (s + 1) <= disc:
            s += 1
        u_lo = -((s + b * v) // two_a)
        u_hi = (s - b * v) // two_a
        if v == 0 or (quadrant and u_lo < 0):
            u_lo = 1 if v == 0 else 0
        if u_lo > u_hi:
            continue
        val = a * u_lo * u_lo + b * u_lo * v + c * v * v
        step = a * (2 * u_lo + 1) + b * v
        for _ in range(u_hi - u_lo + 1):
            bits[val >> 3] |= np.uint8(1 << (val & 7))
            val += step
            step += two_a


@numba.njit(nogil=True, cache=True)
def _residue_counts(bits, q):
    counts = np.zeros(q, dtype=np.int64)
    for i in range(bits.size):
        byte = bits[i]
        if byte == 0:
            continue
        base = i * 8
        for k in range(8):
            if (byte >> k) & 1:
                counts[(base + k) % q] += 1
    return counts


@numba.njit(nogil=True, cache=True)
def _clear_multiples(bits, p, limit):
    n = p
    while n <= limit:
        bits[n >> 3] &= np.uint8(255 ^ (1 << (n & 7)))
        n += p


def _tail_mask(bits: np.ndarray, limit: int) -> np.ndarray:
    """Clear bits above ``limit`` in the last byte (in place) and return ``bits``."""
    extra = bits.size * 8 - (limit + 1)
    if extra:
        bits[-1] &= np.uint8(0xFF >> extra)
    return bits


@dataclass(eq=False)
class RepBitmap:
    """Characteristic bit array of a set of integers in 1..limit."""

    limit: int
    bits: np.ndarray = field(repr=False)
    source: str = ""
    disc: int | None = None
    genus: tuple[int, ...] | None = None

    def __contains__(self, n: int) -> bool:
        if not 0 <= n <= self.limit:
            return False
        return bool((self.bits[n >> 3] >> (n & 7)) & 1)

    def count(self) -> int:
        return int(np.bitwise_count(self.bits).sum(dtype=np.int64))

    def values(self) -> np.ndarray:
        """Sorted array of the integers in the set."""
        return np.flatnonzero(unpack(self.bits, self.limit)).astype(np.int64)

    def prefix(self, limit: int) -> "RepBitmap":
        if limit > self.limit:
            raise DomainError(f"prefix {limit} exceeds bitmap limit {self.limit}")
        bits = _tail_mask(self.bits[: nbytes_for(limit)].copy(), limit)
        return RepBitmap(limit, bits, self.source, self.disc, self.genus)

    def same_bits(self, other: "RepBitmap") -> bool:
        return self.limit == other.limit and np.array_equal(self.bits, other.bits)


def _row_bound(f: QuadForm, limit: int) -> int:
    # largest v with |D| v^2 <= 4 a limit
    return math.isqrt(4 * f.a * limit // -f.discriminant)


def rep_bitmap(
    f: QuadForm,
    limit: int,
    threads: int = 1,
    stripe_rows: int = DEFAULT_STRIPE_ROWS,
    quadrant: bool = False,
) -> RepBitmap:
    """Bitmap of the positive integers <= limit represented by ``f``.

    With ``quadrant`` only the values f(u, v) with u, v >= 0 are marked. That
    is not the represented set when b != 0; it is the convention under which
    some published reference counts were produced.

    Rows v >= 0 of the lattice are cut into stripes of ``stripe_rows``; stripe
    k goes to worker k mod threads, each worker fills a private bitmap, and
    the private bitmaps are OR-ed together. The result does not depend on
    ``threads`` or ``stripe_rows``.
    """
    if not f.is_positive_definite():
        raise DomainError(f"form {f.astuple()} is not positive definite")
    if limit < 1:
        raise DomainError(f"limit must be >= 1, got {limit}")
    if threads < 1 or stripe_rows < 1:
        raise DomainError("threads and stripe_rows must be positive")
    nbytes = nbytes_for(limit)
    check_budget(nbytes * max(threads, 1), f"bitmap to {limit} x {threads} threads")
    a, b, c = f.a, f.b, f.c
    abs_d = -f.discriminant
    rows = _row_bound(f, limit) + 1
    starts = list(range(0, rows, stripe_rows))

    def work(worker: int) -> np.ndarray:
        bits = np.zeros(nbytes, dtype=np.uint8)
        for v0 in starts[worker::threads]:
            _mark_rows(a, b, c, limit, abs_d, v0, min(v0 + stripe_rows, rows), bits, quadrant)
        return bits

    if threads == 1:
        bits = work(0)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, range(threads)))
        bits = parts[0]
        for part in parts[1:]:
            np.bitwise_or(bits, part, out=bits)
    tag = " (u, v >= 0)" if quadrant else ""
    return RepBitmap(limit, bits, f"form {a},{b},{c}{tag}", f.discriminant)


def genus_bitmap(forms: list[QuadForm], limit: int, threads: int = 1) -> RepBitmap:
    """Union of the bitmaps of forms that all lie in one genus."""
    if not forms:
        raise DomainError("genus_bitmap needs at least one form")
    D = forms[0].discriminant
    if any(f.discriminant != D for f in forms):
        raise DomainError("forms have different discriminants")
    facts = _forms.discriminant_factorizations(D)
    vecs = {_forms.character_vector(f, facts) for f in forms}
    if len(vecs) != 1:
        raise DomainError("forms lie in different genera")
    # (a, -b, c) represents exactly what (a, b, c) does
    distinct = sorted({QuadForm(g.a, abs(g.b), g.c) for g in map(_forms.reduce, forms)})
    bits = None
    for g in distinct:
        bm = rep_bitmap(g, limit, threads)
        bits = bm.bits if bits is None else np.bitwise_or(bits, bm.bits, out=bits)
    names = ";".join(f"{g.a},{g.b},{g.c}" for g in distinct)
    return RepBitmap(limit, bits, f"genus {names}", D, vecs.pop())


def apply_masks(
    bm: RepBitmap,
    squarefree: bool = False,
    coprime_to: int | None = None,
    tables: ArithTables | None = None,
) -> RepBitmap:
    """Keep only the set bits that are squarefree and/or coprime to ``coprime_to``."""
    bits = bm.bits.copy()
    tags = []
    if squarefree:
        if tables is None or tables.limit < bm.limit:
            have = None if tables is None else tables.limit
            raise PreconditionError(f"squarefree mask needs tables to {bm.limit}, have {have}")
        np.bitwise_and(bits, tables.squarefree_bits[: bits.size], out=bits)
        _tail_mask(bits, bm.limit)
        tags.append("squarefree")
    if coprime_to is not None and abs(coprime_to) > 1:
        for p in prime_divisors(coprime_to):
            _clear_multiples(bits, p, bm.limit)
        tags.append(f"coprime to {abs(coprime_to)}")
    source = bm.source + (" | " + ", ".join(tags) if tags else "")
    return RepBitmap(bm.limit, bits, source, bm.disc, bm.genus)


def exceptional_bitmap(genus_bm: RepBitmap, form_bm: RepBitmap) -> RepBitmap:
    """Integers in the genus set but not represented by the form."""
    if genus_bm.limit != form_bm.limit:
        raise DomainError(f"limit mismatch: {genus_bm.limit} vs {form_bm.limit}")
    if genus_bm.disc is not None and form_bm.disc is not None and genus_bm.disc != form_bm.disc:
        raise DomainError("genus and form bitmaps have different discriminants")
    if form_bm.genus is not None and genus_bm.genus is not None and form_bm.genus != genus_bm.genus:
        raise DomainError("form does not lie in the genus")
    bits = genus_bm.bits & ~form_bm.bits
    return RepBitmap(
        genus_bm.limit, bits, f"exceptional[{genus_bm.source} - {form_bm.source}]", genus_bm.disc, genus_bm.genus
    )


@dataclass
class ResidueCounts:
    q: int
    counts: np.ndarray
    limit: int

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __getitem__(self, a: int) -> int:
        return int(self.counts[a % self.q])

    def rows(self) -> list[tuple[int, int]]:
        return [(a, int(n)) for a, n in enumerate(self.counts)]


def count_residues(bm: RepBitmap, q: int) -> ResidueCounts:
    if q < 1:
        raise DomainError(f"modulus must be >= 1, got {q}")
    return ResidueCounts(q, _residue_counts(bm.bits, q), bm.limit)


class Conformity(str, Enum):
    CONFORMS = "conforms"
    VIOLATES = "violates"
    OUT_OF_SCOPE = "out-of-scope"


def _canonical(e: int, p0: int) -> int:
    e %= p0
    return min(e, p0 - e)


def _coset_exponents(cg, tuples: TupleFamily) -> list[int]:
    return [cg.dlog(i) % tuples.p0 for i in range(cg.h)]


def classify_exceptional(n: int, tuples: TupleFamily, pct, tables: ArithTables, cg=None) -> Conformity:
    """Check ``n`` against the shape m * p_1 ... p_r with m built from primes of H.

    ``pct`` is a PrimeClassTable covering the prime divisors of ``n``; ``cg``
    defaults to the class group recorded on ``pct``.
    """
    cg = cg if cg is not None else pct.class_group
    if n < 1 or math.gcd(n, 2 * pct.D) != 1:
        return Conformity.OUT_OF_SCOPE
    fac = factorize(n, tables)
    if any(e > 1 for _, e in fac):
        return Conformity.OUT_OF_SCOPE
    exps = _coset_exponents(cg, tuples)
    outside = []
    for p, _ in fac:
        classes = pct.classes_of(p)
        if not classes:
            return Conformity.VIOLATES
        if classes & tuples.H:
            continue
        outside.append(_canonical(exps[min(classes)], tuples.p0))
    if len(outside) != tuples.r:
        return Conformity.VIOLATES
    want = sorted(outside)
    for t in tuples.exponents:
        if sorted(_canonical(e, tuples.p0) for e in t) == want:
            return Conformity.CONFORMS
    return Conformity.VIOLATES


@numba.njit(nogil=True, cache=True)
def _factor_outside_h(values, small_primes, table_primes, table_idx, in_h, canon, two_d, max_keep):
    # status: 0 candidate, 1 out of scope, 2 violates (prime with no class)
    n_vals = values.size
    status = np.zeros(n_vals, dtype=np.int8)
    n_out = np.zeros(n_vals, dtype=np.int64)
    kept = np.full((n_vals, max_keep), -1, dtype=np.int64)
    for i in range(n_vals):
        n = values[i]
        if n < 1:
            status[i] = 1
            continue
        g = n
        t = two_d
        while t:
            g, t = t, g % t
        if g != 1:
            status[i] = 1
            continue
        rest = n
        primes_found = np.empty(64, dtype=np.int64)
        nf = 0
        bad = False
        for p in small_primes:
            if p * p > rest:
                break
            if rest % p == 0:
                rest //= p
                if rest % p == 0:
                    bad = True
                    break
                primes_found[nf] = p
                nf += 1
        if bad:
            status[i] = 1
            continue
        if rest > 1:
            primes_found[nf] = rest
            nf += 1
        for j in range(nf):
            p = primes_found[j]
            pos = np.searchsorted(table_primes, p)
            if pos >= table_primes.size or table_primes[pos] != p:
                status[i] = 2
                break
            cls = table_idx[pos]
            if in_h[cls]:
                continue
            if n_out[i] < max_keep:
                kept[i, n_out[i]] = canon[cls]
            n_out[i] += 1
    return status, n_out, kept


@dataclass
class ConformityReport:
    total: int
    conforms: int
    violates: int
    out_of_scope: int
    violations: np.ndarray = field(repr=False)

    @property
    def in_scope(self) -> int:
        return self.conforms + self.violates

    @property
    def rate(self) -> float:
        return self.conforms / self.in_scope if self.in_scope else 1.0


def classify_values(values: np.ndarray, tuples: TupleFamily, pct, tables: ArithTables, cg=None) -> ConformityReport:
    """Vectorised ``classify_exceptional`` over an array of integers."""
    cg = cg if cg is not None else pct.class_group
    values = np.asarray(values, dtype=np.int64)
    top = int(values.max()) if values.size else 1
    if pct.limit < top:
        raise PreconditionError(f"prime class table to {pct.limit} cannot classify values up to {top}")
    root = math.isqrt(top)
    if tables.limit < root:
        raise PreconditionError(f"tables to {tables.limit} cannot factor values up to {top}")
    small = tables.primes_upto(root)
    in_h = np.array([i in tuples.H for i in range(cg.h)], dtype=np.bool_)
    canon = np.array([_canonical(e, tuples.p0) for e in _coset_exponents(cg, tuples)], dtype=np.int64)
    status, n_out, kept = _factor_outside_h(
        values, small, pct.primes, pct.idx1.astype(np.int64), in_h, canon, 2 * abs(pct.D), max(tuples.r, 1)
    )
    r = tuples.r
    ok = (status == 0) & (n_out == r)
    if r > 0:
        allowed = {tuple(sorted(_canonical(e, tuples.p0) for e in t)) for t in tuples.exponents}
        rows = np.sort(kept[:, :r], axis=1).tolist()
        ok &= np.array([tuple(row) in allowed for row in rows], dtype=bool).reshape(ok.shape)
    out_scope = status == 1
    conforms = int(ok.sum())
    oos = int(out_scope.sum())
    violates_mask = ~ok & ~out_scope
    return ConformityReport(len(values), conforms, int(violates_mask.sum()), oos, values[violates_mask])
