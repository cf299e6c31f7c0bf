"""Numeric constants of the asymptotic expansions and the estimates built from them."""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.special import bernoulli, gamma as gamma_fn

from .arith import is_fundamental, kronecker, prime_divisors, prime_mask
from .errors import DomainError, NumericError, PreconditionError, UnsupportedDiscriminantError
from .forms import ClassGroup, QuadForm, class_group, exceptional_tuples, genus_count_exponent

log = logging.getLogger(__name__)

EULER_GAMMA = 0.57721566490153286061

_EM_TERMS = 8
_EM_SHIFT = 24
# B_{2j}/(2j)! for j = 1.._EM_TERMS
_EM_COEF = [float(bernoulli(2 * j)[2 * j]) / math.factorial(2 * j) for j in range(1, _EM_TERMS + 1)]


def hurwitz_regular(s: float, a: float) -> float:
    """zeta(s, a) - 1/(s - 1), by Euler-Maclaurin; finite at s = 1."""
    N = _EM_SHIFT
    k = np.arange(N) + a
    total = float(np.sum(k ** (-s)))
    w = N + a
    lw = math.log(w)
    if s == 1.0:
        total -= lw
    else:
        # w^(1-s)/(s-1) - 1/(s-1) without the cancellation near the pole
        total += math.expm1((1.0 - s) * lw) / (s - 1.0)
    total += 0.5 * w ** (-s)
    rising = s
    for j, coef in enumerate(_EM_COEF, start=1):
        total += coef * rising * w ** (-s - 2 * j + 1)
        rising *= (s + 2 * j - 1) * (s + 2 * j)
    return total


def _chi_table(D: int) -> np.ndarray:
    m = abs(D)
    return np.array([kronecker(D, r) for r in range(m)], dtype=np.int8)


def L_series(D: int, s: float) -> float:
    """L(s, chi_D) through Hurwitz zeta values; the pole terms cancel since sum chi = 0."""
    m = abs(D)
    chi = _chi_table(D)
    return m ** (-s) * sum(int(chi[j]) * hurwitz_regular(s, j / m) for j in range(1, m) if chi[j])


def L_log_derivative(D: int, step: float = 1e-5) -> float:
    """L'(1)/L(1) by central differences with one Richardson step."""
    def central(hh):
        return (L_series(D, 1 + hh) - L_series(D, 1 - hh)) / (2 * hh)

    d1, d2 = central(step), central(step / 2)
    deriv = (4 * d2 - d1) / 3
    if not math.isfinite(deriv) or abs(d1 - d2) > 1e-4 * max(1.0, abs(deriv)):
        raise NumericError(f"L'(1) for D={D} not converging: {d1} vs {d2}")
    return deriv / L_series(D, 1.0)


def units(D: int) -> int:
    return 6 if D == -3 else 4 if D == -4 else 2


def analytic_class_number(D: int) -> float:
    return units(D) * math.sqrt(abs(D)) * L_series(D, 1.0) / (2 * math.pi)


def L_value(D: int, cg: ClassGroup | None = None) -> float:
    """L_D(1) from the class number formula."""
    if D >= 0 or not is_fundamental(D):
        raise DomainError(f"{D} is not a negative fundamental discriminant")
    h = (cg or class_group(D)).h
    return 2 * math.pi * h / (units(D) * math.sqrt(abs(D)))


@dataclass
class LSDCoefficients:
    D: int
    a0: float
    a1: float
    prime_bound: int
    A1: float
    dlogA: float
    L1: float
    dlogL: float
    genera: int
    tail_bound: float


def lsd_coefficients(D: int, prime_bound: int = 10**7, cg: ClassGroup | None = None) -> LSDCoefficients:
    """a0, a1 of the expansion B_R(x) = a0 x/(log x)^(1/2) + a1 x/(log x)^(3/2) + ..."""
    if prime_bound < 10**3:
        raise PreconditionError("prime_bound must be at least 1000")
    L1 = L_value(D, cg)
    dlogL = L_log_derivative(D)
    ps = np.flatnonzero(prime_mask(prime_bound)).astype(np.int64)
    chi = _chi_table(D)[ps % abs(D)]
    ram = ps[chi == 0].astype(float)
    inert = ps[chi == -1].astype(float)
    logA = -np.sum(np.log1p(-1.0 / ram)) - np.sum(np.log1p(-(inert**-2)))
    dlogA = -np.sum(np.log(ram) / (ram - 1)) - np.sum(2 * np.log(inert) / (inert**2 - 1))
    A1 = math.exp(logA)
    tail = math.expm1(2.0 / prime_bound)
    genera = 2 ** (genus_count_exponent(D) - 1)
    a0 = math.sqrt(A1 * L1) / (math.sqrt(math.pi) * genera)
    a1 = 0.5 * a0 * (1 - 0.5 * (EULER_GAMMA + dlogA + dlogL))
    if not (a0 > 0 and math.isfinite(a1)):
        raise NumericError(f"bad LSD coefficients for D={D}: a0={a0}, a1={a1}")
    log.info("D=%d: A(1) tail bound %.3g at primes <= %d", D, tail, prime_bound)
    return LSDCoefficients(D, a0, a1, prime_bound, A1, float(dlogA), L1, dlogL, genera, tail)


def _check_modulus(D: int, q: int) -> None:
    if q < 1 or math.gcd(q, 2 * D) != 1:
        raise DomainError(f"modulus {q} is not coprime to 2D = {2 * D}")


def _is_prime(q: int) -> bool:
    return q > 1 and prime_divisors(q) == [q]


def c_coefficient(D: int, q: int, a: int) -> Fraction:
    """c(q, a): the share of B_f(x) falling in the class a mod q."""
    _check_modulus(D, q)
    if _is_prime(q):
        if kronecker(D, q) == 1:
            return Fraction(1, q)
        return Fraction(1, q * q) if a % q == 0 else Fraction(q + 1, q * q)
    if math.gcd(a, q) != 1:
        raise UnsupportedDiscriminantError(f"no formula for a={a} sharing a factor with composite q={q}")
    c = Fraction(1, q)
    for p in prime_divisors(q):
        if kronecker(D, p) == -1:
            c *= Fraction(p + 1, p)
    return c


def delta_coefficient(D: int, q: int, a: int) -> float:
    """delta(q, a), the relative secondary-term shift for the class a mod prime q."""
    _check_modulus(D, q)
    if not _is_prime(q):
        raise DomainError(f"delta(q, a) needs prime q, got {q}")
    lq = math.log(q)
    if kronecker(D, q) == 1:
        return -lq / 2 if a % q == 0 else lq / (2 * (q - 1))
    return -lq if a % q == 0 else lq / (q - 1)


def b_coefficients(D: int, q: int, a0: float, a1: float) -> tuple[float, float]:
    """b0, b1 for classes a coprime to q (any q coprime to 2D)."""
    _check_modulus(D, q)
    inert = [p for p in prime_divisors(q) if kronecker(D, p) == -1]
    factor = 1.0 / q
    for p in inert:
        factor *= 1 + 1 / p
    shift = sum(math.log(p) / (p - 1) for p in prime_divisors(q))
    shift -= sum(math.log(p) / (p + 1) for p in inert)
    return a0 * factor, a1 * factor * (1 - a0 / (2 * a1) * shift)


@dataclass
class Progression:
    D: int
    q: int
    c_map: dict[int, Fraction]
    delta_map: dict[int, float]
    b0: float
    b1: float


def progression_coefficients(D: int, q: int, a0: float, a1: float) -> Progression:
    _check_modulus(D, q)
    b0, b1 = b_coefficients(D, q, a0, a1)
    if _is_prime(q):
        c_map = {a: c_coefficient(D, q, a) for a in range(q)}
        delta_map = {a: delta_coefficient(D, q, a) for a in range(q)}
    else:
        c_map = {a: c_coefficient(D, q, a) for a in range(q) if math.gcd(a, q) == 1}
        delta_map = {}
    return Progression(D, q, c_map, delta_map, b0, b1)


@dataclass
class TwoTerm:
    main: float
    two_term: float
    genus_level: bool


def two_term_estimate(
    D: int, q: int, a: int, x: float, a0: float, a1: float, cg: ClassGroup | None = None
) -> TwoTerm:
    """c(q,a) (a0 x/(log x)^(1/2) + a1 (1 - (a0/a1) delta) x/(log x)^(3/2)).

    ``genus_level`` is set when D has more than one class per genus: the
    values then describe B_R, the count for the whole genus.
    """
    cg = cg or class_group(D)
    genus_level = cg.h != 2 ** (genus_count_exponent(D) - 1)
    c = float(c_coefficient(D, q, a))
    d = delta_coefficient(D, q, a)
    lx = math.log(x)
    main = c * a0 * x / math.sqrt(lx)
    second = c * (a1 - a0 * d) * x / lx**1.5
    return TwoTerm(main, main + second, genus_level)


# --- exceptional integers ----------------------------------------------------


def represents(f: QuadForm, n: int) -> bool:
    """Direct search for f(x, y) = n."""
    a, b, c = f.a, f.b, f.c
    D = b * b - 4 * a * c
    ymax = math.isqrt(4 * a * n // -D) + 1
    for y in range(-ymax, ymax + 1):
        # a x^2 + b y x + (c y^2 - n) = 0
        disc = b * b * y * y - 4 * a * (c * y * y - n)
        if disc < 0:
            continue
        r = math.isqrt(disc)
        if r * r != disc:
            continue
        for num in (-b * y + r, -b * y - r):
            if num % (2 * a) == 0:
                return True
    return False


def nu_H_prime(cg: ClassGroup, H, p: int) -> int:
    """nu_H at a single prime, by direct representation search."""
    if math.gcd(p, 2 * cg.D) != 1:
        return 0
    return int(any(represents(cg.reps[i], p) for i in H))


def c_prime(q: int, a: int, nu_q: int) -> tuple[Fraction, bool]:
    """c'(q, a) for prime q. The flag marks the a = 0, nu_H(q) = 0 case (o(1), returned as 0)."""
    if not _is_prime(q):
        raise DomainError(f"c'(q, a) case table needs prime q, got {q}")
    if nu_q:
        return (Fraction(1, q + 1) if a % q == 0 else Fraction(q, q * q - 1)), False
    if a % q == 0:
        return Fraction(0), True
    return Fraction(1, q - 1), False


@dataclass
class WirsingConstants:
    kappa: Fraction
    A3: float
    A4: float
    prime_bound: int
    k_max: int
    checkpoints: list[tuple[int, float]]
    drift: float


def wirsing_constants(cg: ClassGroup, H, pct, prime_bound: int = 10**8, k_max: int = 15) -> WirsingConstants:
    """kappa, A3 and A4 for the multiplicative function nu_H.

    A3 = e^(-gamma kappa)/Gamma(kappa) exp(-sum_p sum_(k=2..k_max) (-1)^k nu(p)/(k p^k)),
    the constant of Wirsing's mean-value theorem, and
    A4 = A3 exp(sum_(p <= N) nu(p)/p - kappa log log N) at N = prime_bound.

    ``pct`` is a prime class table covering ``prime_bound``. A4 carries a
    slowly converging limit; its value at three smaller cut-offs is kept in
    ``checkpoints`` and the spread across them in ``drift``.
    """
    if pct.limit < prime_bound:
        raise PreconditionError(f"prime table reaches {pct.limit}, need {prime_bound}")
    kappa = Fraction(len(H), 2 * cg.h)
    # every prime represented in H counts, ramified ones included
    sel = pct.in_subgroup(H) & (pct.primes <= prime_bound)
    ps = pct.primes[sel].astype(float)
    inv = 1.0 / ps
    higher = 0.0
    for k in range(k_max, 1, -1):
        higher += (-1) ** k / k * float(np.sum(inv**k))
    k = float(kappa)
    A3 = math.exp(-EULER_GAMMA * k) / float(gamma_fn(k)) * math.exp(-higher)
    cums = np.cumsum(inv)

    def a4_at(N):
        s = float(cums[np.searchsorted(ps, N, side="right") - 1])
        return A3 * math.exp(s - k * math.log(math.log(N)))

    checkpoints = [(N, a4_at(N)) for N in (prime_bound // 100, prime_bound // 10, prime_bound)]
    vals = [v for _, v in checkpoints]
    drift = max(vals) - min(vals)
    log.info("A4 checkpoints %s", checkpoints)
    return WirsingConstants(kappa, A3, vals[-1], prime_bound, k_max, checkpoints, drift)


@dataclass
class ExceptionalEstimate:
    value: float
    c_prime: Fraction
    A2: float
    r: int
    p0: int
    tuple_count: int
    negligible: bool
    interpretation: bool


def exceptional_estimate(cg: ClassGroup, f: QuadForm, q: int, a: int, x: float, A4: float) -> ExceptionalEstimate:
    """Main term of N'_f(x; q, a).

    For r > 0 the constant A2 is taken as (number of distinct tuples) A4/h^r;
    ``interpretation`` marks those results.
    """
    _check_modulus(cg.D, q)
    fam = exceptional_tuples(cg, f)
    nu_q = nu_H_prime(cg, fam.H, q)
    cp, negligible = c_prime(q, a, nu_q)
    A2 = len(fam.tuples) * A4 / cg.h**fam.r
    lx = math.log(x)
    value = float(cp) * A2 * x * math.log(lx) ** fam.r / lx ** (1 - 1 / (2 * fam.p0))
    return ExceptionalEstimate(value, cp, A2, fam.r, fam.p0, len(fam.tuples), negligible, fam.r > 0)


# --- report ------------------------------------------------------------------


@dataclass
class ConstantSet:
    D: int
    q: int | None
    a0: float
    a1: float
    b0: float | None = None
    b1: float | None = None
    c_map: dict = field(default_factory=dict)
    delta_map: dict = field(default_factory=dict)
    kappa: Fraction | None = None
    A3: float | None = None
    A4: float | None = None
    c_prime_map: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def rows(self) -> list[tuple[str, str]]:
        out = [("D", str(self.D)), ("a0", f"{self.a0:.9f}"), ("a1", f"{self.a1:.9f}")]
        if self.q is not None:
            out.append(("q", str(self.q)))
            if self.b0 is not None:
                out += [("b0", f"{self.b0:.9f}"), ("b1", f"{self.b1:.9f}")]
            out += [(f"c({self.q},{a})", str(v)) for a, v in self.c_map.items()]
            out += [(f"delta({self.q},{a})", f"{v:.9f}") for a, v in self.delta_map.items()]
        if self.kappa is not None:
            out += [("kappa", str(self.kappa)), ("A3", f"{self.A3:.6f}"), ("A4", f"{self.A4:.6f}")]
            out += [(f"c'({self.q},{a})", str(v)) for a, v in self.c_prime_map.items()]
        out += [(k, str(v)) for k, v in self.meta.items()]
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["name", "value"])
        w.writerows(self.rows())
        return buf.getvalue()

    def to_text(self) -> str:
        rows = self.rows()
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k:<{width}}  {v}" for k, v in rows) + "\n"


def constant_set(
    D: int,
    q: int | None = None,
    prime_bound: int = 10**7,
    pct=None,
    wirsing_bound: int | None = None,
    k_max: int = 15,
) -> ConstantSet:
    """Everything computable for D (and q); Wirsing constants need a prime class table."""
    cg = class_group(D)
    lsd = lsd_coefficients(D, prime_bound, cg)
    cs = ConstantSet(D, q, lsd.a0, lsd.a1)
    cs.meta = {"prime_bound": prime_bound, "A_tail_bound": f"{lsd.tail_bound:.3g}", "L(1)": f"{lsd.L1:.9f}"}
    if q is not None:
        pr = progression_coefficients(D, q, lsd.a0, lsd.a1)
        cs.b0, cs.b1, cs.c_map, cs.delta_map = pr.b0, pr.b1, pr.c_map, pr.delta_map
    if pct is not None:
        try:
            fam = exceptional_tuples(cg, cg.reps[0])
        except UnsupportedDiscriminantError:
            return cs
        bound = wirsing_bound or pct.limit
        w = wirsing_constants(cg, fam.H, pct, bound, k_max)
        cs.kappa, cs.A3, cs.A4 = w.kappa, w.A3, w.A4
        cs.meta.update({"wirsing_bound": bound, "k_max": k_max, "A4_drift": f"{w.drift:.3g}"})
        if q is not None and _is_prime(q):
            nu_q = nu_H_prime(cg, fam.H, q)
            cs.c_prime_map = {a: c_prime(q, a, nu_q)[0] for a in range(q)}
    return cs
