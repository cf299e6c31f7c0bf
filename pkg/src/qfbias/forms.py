"""Positive-definite binary quadratic forms: reduction, composition, class groups, genera."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from itertools import product

import numpy as np

from .arith import is_fundamental, kronecker, prime_divisors
from .errors import DomainError, UnsupportedDiscriminantError


@dataclass(frozen=True, order=True)
class QuadForm:
    """The form a*x^2 + b*x*y + c*y^2."""

    a: int
    b: int
    c: int

    @classmethod
    def parse(cls, text: str) -> "QuadForm":
        parts = [int(t) for t in text.replace(" ", "").split(",")]
        if len(parts) != 3:
            raise DomainError(f"expected 'a,b,c', got {text!r}")
        return cls(*parts)

    @property
    def discriminant(self) -> int:
        return self.b * self.b - 4 * self.a * self.c

    def __call__(self, x: int, y: int) -> int:
        return self.a * x * x + self.b * x * y + self.c * y * y

    def inverse(self) -> "QuadForm":
        return QuadForm(self.a, -self.b, self.c)

    def is_positive_definite(self) -> bool:
        return self.a > 0 and self.discriminant < 0

    def is_reduced(self) -> bool:
        a, b, c = self.a, self.b, self.c
        if not (abs(b) <= a <= c):
            return False
        if (abs(b) == a or a == c) and b < 0:
            return False
        return True

    def __str__(self) -> str:
        def term(coef, mono, first):
            if coef == 0:
                return ""
            sign = "-" if coef < 0 else ("" if first else "+")
            mag = abs(coef)
            return f"{sign}{'' if mag == 1 else mag}{mono}"

        s = term(self.a, "x^2", True)
        s += term(self.b, "xy", not s)
        s += term(self.c, "y^2", not s)
        return s

    def astuple(self) -> tuple[int, int, int]:
        return (self.a, self.b, self.c)


def _require_definite(f: QuadForm) -> None:
    if not f.is_positive_definite():
        raise DomainError(f"form {f.astuple()} is not positive definite")


def reduce(f: QuadForm) -> QuadForm:
    """The reduced form properly equivalent to ``f``."""
    _require_definite(f)
    a, b, c = f.a, f.b, f.c
    while True:
        # translate x -> x + r*y so that -a < b <= a
        r = (a - b) // (2 * a)
        b, c = b + 2 * r * a, a * r * r + b * r + c
        if a > c or (a == c and b < 0):
            a, b, c = c, -b, a
            continue
        return QuadForm(a, b, c)


def principal_form(D: int) -> QuadForm:
    k = D % 2
    return QuadForm(1, k, (k - D) // 4)


def reduced_forms(D: int) -> list[QuadForm]:
    """All primitive reduced forms of discriminant ``D`` < 0, principal form first."""
    if D >= 0 or D % 4 not in (0, 1):
        raise DomainError(f"{D} is not a negative discriminant")
    out = []
    for a in range(1, math.isqrt(-D // 3) + 1):
        for b in range(-a + 1, a + 1):
            if (b - D) % 2:
                continue
            num = b * b - D
            if num % (4 * a):
                continue
            c = num // (4 * a)
            if c < a or (c == a and b < 0):
                continue
            if math.gcd(math.gcd(a, b), c) != 1:
                continue
            out.append(QuadForm(a, b, c))
    out.sort(key=lambda f: (f.a, abs(f.b), -f.b, f.c))
    return out


def _transform(f: QuadForm, x: int, y: int, r: int, s: int) -> QuadForm:
    # f(x*X + r*Y, y*X + s*Y), determinant x*s - y*r = 1
    a, b, c = f.a, f.b, f.c
    return QuadForm(
        f(x, y),
        2 * a * x * r + b * (x * s + y * r) + 2 * c * y * s,
        f(r, s),
    )


def _bezout(x: int, y: int) -> tuple[int, int]:
    """(r, s) with x*s - y*r = 1 for coprime x, y."""
    if y == 0:
        return 0, x  # x = +-1
    # solve x*s + y*(-r) = 1
    g, u, v = _egcd(x, y)
    assert g == 1
    return -v, u


def _egcd(a: int, b: int) -> tuple[int, int, int]:
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def _coprime_equivalent(g: QuadForm, modulus: int, bound: int = 50) -> QuadForm:
    """A form properly equivalent to ``g`` whose first coefficient is coprime to ``modulus``."""
    if math.gcd(g.a, modulus) == 1:
        return g
    for radius in range(1, bound + 1):
        for x in range(-radius, radius + 1):
            for y in (-radius, radius) if abs(x) != radius else range(-radius, radius + 1):
                if math.gcd(x, y) != 1:
                    continue
                if math.gcd(g(x, y), modulus) == 1:
                    r, s = _bezout(x, y)
                    return _transform(g, x, y, r, s)
    raise DomainError(f"no value of {g.astuple()} coprime to {modulus} found")


def compose(f: QuadForm, g: QuadForm) -> QuadForm:
    """Reduced representative of the class product [f][g] (Dirichlet composition)."""
    _require_definite(f)
    _require_definite(g)
    D = f.discriminant
    if g.discriminant != D:
        raise DomainError("cannot compose forms of different discriminants")
    g = _coprime_equivalent(g, f.a)
    a1, b1, a2, b2 = f.a, f.b, g.a, g.b
    # B = b1 (mod 2 a1), B = b2 (mod 2 a2); b1 = b2 (mod 2) since both = D
    k = ((b2 - b1) // 2) * pow(a1, -1, a2) % a2 if a2 > 1 else 0
    A = a1 * a2
    B = b1 + 2 * a1 * k
    C = (B * B - D) // (4 * A)
    return reduce(QuadForm(A, B, C))


@dataclass(frozen=True, eq=False)
class ClassGroup:
    """The form class group of a negative fundamental discriminant.

    ``reps[0]`` is the principal form; ``compose_table[i, j]`` is the index of
    the product of classes ``i`` and ``j``.
    """

    D: int
    reps: tuple[QuadForm, ...]
    compose_table: np.ndarray
    orders: tuple[int, ...]
    inverses: tuple[int, ...]
    generator: int | None

    @property
    def h(self) -> int:
        return len(self.reps)

    @cached_property
    def _index(self) -> dict[QuadForm, int]:
        return {f: i for i, f in enumerate(self.reps)}

    def index(self, f: QuadForm) -> int:
        if f.discriminant != self.D:
            raise DomainError(f"form {f.astuple()} has discriminant {f.discriminant}, not {self.D}")
        return self._index[reduce(f)]

    def mul(self, i: int, j: int) -> int:
        return int(self.compose_table[i, j])

    def power(self, i: int, k: int) -> int:
        k %= self.orders[i]
        out = 0
        for _ in range(k):
            out = self.mul(out, i)
        return out

    @property
    def is_cyclic(self) -> bool:
        return self.generator is not None

    @cached_property
    def squares(self) -> frozenset[int]:
        return frozenset(self.mul(i, i) for i in range(self.h))

    def dlog(self, i: int) -> int:
        """Exponent e with generator**e == class i."""
        if self.generator is None:
            raise UnsupportedDiscriminantError(f"C({self.D}) is not cyclic")
        cur = 0
        for e in range(self.h):
            if cur == i:
                return e
            cur = self.mul(cur, self.generator)
        raise AssertionError("class not reached from generator")

    def shape(self) -> str:
        """Invariant-factor description such as 'Z/8Z' or 'Z/2Z x Z/2Z'."""
        if self.h == 1:
            return "trivial"
        factors = _invariant_factors(self)
        return " x ".join(f"Z/{n}Z" for n in factors)


def _invariant_factors(cg: ClassGroup) -> list[int]:
    # N_j = #{x : x^(p^j) = 1} = prod_i p^min(j, e_i), so log_p(N_j / N_(j-1))
    # counts the cyclic p-factors of order >= p^j
    parts_by_p = []
    for p in prime_divisors(cg.h):
        sizes = [1]
        j = 0
        while sizes[-1] < _p_power_part(cg.h, p):
            j += 1
            sizes.append(sum(1 for o in cg.orders if (p**j) % o == 0))
        at_least = [round(math.log(sizes[k] / sizes[k - 1], p)) for k in range(1, len(sizes))]
        at_least.append(0)
        parts = []
        for k in range(len(at_least) - 1):
            parts += [p ** (k + 1)] * (at_least[k] - at_least[k + 1])
        parts_by_p.append(sorted(parts, reverse=True))
    width = max(len(v) for v in parts_by_p)
    inv = []
    for idx in range(width):
        inv.append(math.prod(parts[idx] for parts in parts_by_p if idx < len(parts)))
    return sorted(inv)


def _p_power_part(n: int, p: int) -> int:
    out = 1
    while n % p == 0:
        n //= p
        out *= p
    return out


def class_group(D: int) -> ClassGroup:
    if not is_fundamental(D) or D >= 0:
        raise DomainError(f"{D} is not a negative fundamental discriminant")
    reps = reduced_forms(D)
    index = {f: i for i, f in enumerate(reps)}
    h = len(reps)
    table = np.empty((h, h), dtype=np.int64)
    for i in range(h):
        for j in range(i, h):
            k = index[compose(reps[i], reps[j])]
            table[i, j] = table[j, i] = k
    orders = []
    for i in range(h):
        cur, n = i, 1
        while cur != 0:
            cur = int(table[cur, i])
            n += 1
        orders.append(n)
    inverses = tuple(index[reduce(f.inverse())] for f in reps)
    generator = next((i for i in range(h) if orders[i] == h), None)
    return ClassGroup(D, tuple(reps), table, tuple(orders), inverses, generator)


def prime_discriminants(D: int) -> list[int]:
    """The prime discriminants whose product is the fundamental discriminant ``D``."""
    out = []
    rest = D
    for p in prime_divisors(D):
        if p == 2:
            continue
        ps = p if p % 4 == 1 else -p
        out.append(ps)
        rest //= ps
    if rest != 1:
        if rest not in (-4, 8, -8):
            raise DomainError(f"{D} is not fundamental")
        out.insert(0, rest)
    return out


def genus_count_exponent(D: int) -> int:
    """The integer mu with 2**(mu - 1) genera of discriminant ``D``."""
    s = len([p for p in prime_divisors(D) if p != 2])
    if D % 4 == 1:
        return s
    n = D // 4
    if n % 4 == 1:
        return s
    if n % 4 in (2, 3) or n % 8 == 4:
        return s + 1
    return s + 2


@dataclass(frozen=True)
class GenusStructure:
    factorizations: tuple[tuple[int, int], ...]
    mu: int
    genus_of_class: tuple[int, ...]
    character_table: tuple[tuple[int, ...], ...]

    @property
    def num_genera(self) -> int:
        return len(set(self.genus_of_class))

    def genus(self, g: int) -> list[int]:
        return [i for i, gi in enumerate(self.genus_of_class) if gi == g]


def discriminant_factorizations(D: int) -> list[tuple[int, int]]:
    """Unordered factorizations D = u*v into fundamental discriminants (u = 1 allowed)."""
    pds = prime_discriminants(D)
    seen = set()
    out = []
    for mask in product((0, 1), repeat=len(pds)):
        u = math.prod(p for p, m in zip(pds, mask) if m)
        v = D // u
        key = tuple(sorted((u, v), key=lambda t: (abs(t), t)))
        if key not in seen:
            seen.add(key)
            out.append(key)
    out.sort(key=lambda t: (abs(t[0]), t[0]))
    return out


def coprime_value(f: QuadForm, modulus: int, bound: int = 20) -> int:
    """Smallest value of ``f`` coprime to ``modulus`` over |x|, |y| <= bound."""
    best = None
    for x in range(-bound, bound + 1):
        for y in range(-bound, bound + 1):
            m = f(x, y)
            if m > 0 and math.gcd(m, modulus) == 1 and (best is None or m < best):
                best = m
    if best is None:
        raise DomainError(f"{f.astuple()} has no small value coprime to {modulus}")
    return best


def character_vector(f: QuadForm, factorizations=None) -> tuple[int, ...]:
    D = f.discriminant
    if factorizations is None:
        factorizations = discriminant_factorizations(D)
    m = coprime_value(f, 2 * D)
    return tuple(kronecker(u, m) for u, _ in factorizations)


def genus_structure(cg: ClassGroup) -> GenusStructure:
    facts = tuple(discriminant_factorizations(cg.D))
    table = tuple(character_vector(f, facts) for f in cg.reps)
    ids: dict[tuple[int, ...], int] = {}
    genus_of = tuple(ids.setdefault(vec, len(ids)) for vec in table)
    return GenusStructure(facts, genus_count_exponent(cg.D), genus_of, table)


@dataclass(frozen=True)
class TupleFamily:
    """Admissible prime-class tuples for exceptional integers of a form.

    ``exponents`` holds each tuple as exponents of the generator taken modulo
    ``p0``; ``tuples`` holds the same tuples as class indices.
    """

    H: frozenset[int]
    p0: int
    r: int
    f_in_H: bool
    exponents: tuple[tuple[int, ...], ...]
    tuples: tuple[tuple[int, ...], ...]


def cyclic_subgroup(cg: ClassGroup) -> tuple[int, frozenset[int]]:
    """(p0, H) with p0 the least prime dividing h and H generated by g^p0."""
    if cg.h == 1 or not cg.is_cyclic:
        raise UnsupportedDiscriminantError(f"C({cg.D}) is not cyclic of order > 1 ({cg.shape()})")
    p0 = prime_divisors(cg.h)[0]
    gen_p0 = cg.power(cg.generator, p0)
    return p0, frozenset(cg.power(gen_p0, k) for k in range(cg.h // p0))


def exceptional_tuples(cg: ClassGroup, f: QuadForm) -> TupleFamily:
    h = cg.h
    if h == 1 or h % 2 == 0 or not cg.is_cyclic:
        raise UnsupportedDiscriminantError(
            f"C({cg.D}) must be cyclic of odd order > 1 (h = {h}, shape {cg.shape()})"
        )
    p0, H = cyclic_subgroup(cg)
    fi = cg.index(f)
    in_H = fi in H
    r = p0 - 2 if in_H else p0 - 3
    e_star = cg.dlog(fi) % p0
    kept: list[int] = []
    for a in range(1, p0):
        if not in_H and a == e_star:
            continue
        if a in kept or (p0 - a) in kept:
            continue
        kept.append(a)
    if r == 0:
        exps: tuple[tuple[int, ...], ...] = ((),)
    else:
        exps = tuple((a,) * r for a in kept)
    classes = tuple(tuple(cg.power(cg.generator, e) for e in t) for t in exps)
    return TupleFamily(H, p0, r, in_H, exps, classes)
