import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, strategies as st
from sympy import primerange

from qfbias.arith import is_fundamental, kronecker
from qfbias.constants import (
    L_log_derivative,
    L_series,
    L_value,
    analytic_class_number,
    b_coefficients,
    c_coefficient,
    c_prime,
    constant_set,
    delta_coefficient,
    exceptional_estimate,
    hurwitz_regular,
    lsd_coefficients,
    progression_coefficients,
    two_term_estimate,
    wirsing_constants,
)
from qfbias.errors import DomainError, PreconditionError, UnsupportedDiscriminantError
from qfbias.forms import QuadForm, class_group, cyclic_subgroup
from qfbias.primeclass import classify_primes

X = 1e8


@pytest.mark.parametrize("s", [0.5, 0.99999, 1.0, 1.00001, 2.0, 3.5])
@pytest.mark.parametrize("a", [0.04, 0.3, 0.5, 0.97])
def test_hurwitz_against_mpmath(s, a):
    if s == 1.0:
        want = -mpmath.digamma(a)
    else:
        want = mpmath.zeta(s, a) - 1 / (s - 1)
    assert hurwitz_regular(s, a) == pytest.approx(float(want), rel=1e-11, abs=1e-11)


@pytest.mark.parametrize("D", [-3, -4, -20, -23, -59, -87, -95, -163])
def test_L_log_derivative_against_mpmath(D):
    # zeta(s, a) = 1/(s-1) - psi(a) - gamma_1(a)(s-1) + ..., so with a_j = j/m
    # L(1) = -(1/m) sum chi(j) psi(a_j) and L'(1)/L(1) = -log m - sum chi(j) gamma_1(a_j) / (m L(1))
    m = abs(D)
    chi = [kronecker(D, r) for r in range(m)]
    with mpmath.workdps(25):
        js = [j for j in range(1, m) if chi[j]]
        L = -mpmath.fsum(chi[j] * mpmath.digamma(mpmath.mpf(j) / m) for j in js) / m
        g1 = mpmath.fsum(chi[j] * mpmath.stieltjes(1, mpmath.mpf(j) / m) for j in js)
        want = -mpmath.log(m) - g1 / (m * L)
    assert L_series(D, 1.0) == pytest.approx(float(L), rel=1e-11)
    assert L_log_derivative(D) == pytest.approx(float(want), abs=1e-9)


def test_L_value_examples():
    assert L_value(-4) == pytest.approx(math.pi / 4)
    assert L_value(-3) == pytest.approx(math.pi / (3 * math.sqrt(3)))
    assert L_value(-23) == pytest.approx(3 * math.pi / math.sqrt(23))
    with pytest.raises(DomainError):
        L_value(-5)


@pytest.mark.parametrize("D", [D for D in range(-200, -2) if is_fundamental(D)])
def test_class_number_formula(D):
    h = analytic_class_number(D)
    assert abs(h - round(h)) < 1e-8
    assert round(h) == class_group(D).h
    assert L_value(D) == pytest.approx(L_series(D, 1.0), rel=1e-10)


# Landau-Ramanujan constant, published high-precision value
LANDAU_RAMANUJAN = 0.76422365358922066299


def test_a0_landau_ramanujan():
    assert lsd_coefficients(-4).a0 == pytest.approx(LANDAU_RAMANUJAN, abs=2e-8)


def test_a0_a1_d3_against_table_inversion():
    c = lsd_coefficients(-3)
    lx = math.log(X)
    inv_a0 = 2126610 * 7 * math.sqrt(lx) / X
    assert c.a0 == pytest.approx(inv_a0, rel=1e-3)
    # two-term columns for a = 0 and a != 0 at q = 7 give two equations in a0, a1
    d0, d1 = -math.log(7) / 2, math.log(7) / 12
    r0, r1 = 2305520 * 7 / X, 2174480 * 7 / X
    # r = a0/sqrt(lx) + (a1 - a0 d)/lx^1.5
    a0 = (r0 - r1) / ((d1 - d0) / lx**1.5)
    a1 = r1 * lx**1.5 - a0 * lx + a0 * d1
    assert a0 == pytest.approx(c.a0, rel=1e-2)
    assert f"{a1:.3g}" == f"{c.a1:.3g}"
    assert c.a1 == pytest.approx(0.3686, abs=1e-4)


def test_lsd_prime_bound_guard():
    with pytest.raises(PreconditionError):
        lsd_coefficients(-3, prime_bound=100)


def test_lsd_converges_in_prime_bound():
    lo, hi = lsd_coefficients(-23, 10**6), lsd_coefficients(-23, 10**7)
    assert abs(lo.a0 - hi.a0) <= hi.a0 * 2 * lo.tail_bound


def test_c_examples():
    assert c_coefficient(-3, 5, 0) == Fraction(1, 25)
    assert c_coefficient(-3, 5, 2) == Fraction(6, 25)
    assert c_coefficient(-20, 11, 0) == Fraction(1, 121)
    assert c_coefficient(-20, 11, 3) == Fraction(12, 121)
    assert c_coefficient(-3, 7, 4) == Fraction(1, 7)
    with pytest.raises(UnsupportedDiscriminantError):
        c_coefficient(-3, 35, 7)
    with pytest.raises(DomainError):
        c_coefficient(-20, 5, 1)


@pytest.mark.parametrize("D", [-3, -4, -20, -23, -59])
@pytest.mark.parametrize("q", list(primerange(3, 60)))
def test_c_sums_to_one(D, q):
    if math.gcd(q, 2 * D) != 1:
        return
    assert sum(c_coefficient(D, q, a) for a in range(q)) == 1


def test_delta_examples():
    assert delta_coefficient(-3, 7, 0) == pytest.approx(-math.log(7) / 2)
    assert delta_coefficient(-3, 7, 3) == pytest.approx(math.log(7) / 12)
    assert delta_coefficient(-3, 7, 0) == pytest.approx(-0.97296, abs=5e-5)
    assert delta_coefficient(-3, 7, 1) == pytest.approx(0.16218, abs=5e-5)
    with pytest.raises(DomainError):
        delta_coefficient(-3, 25, 1)


@pytest.mark.parametrize("q", [7, 13, 19, 31, 37, 43])
def test_b_reduces_to_case_tables_for_split_q(q):
    a0, a1 = 0.6, 0.35
    assert kronecker(-3, q) == 1
    b0, b1 = b_coefficients(-3, q, a0, a1)
    assert b0 == pytest.approx(a0 / q, rel=1e-15)
    c = float(c_coefficient(-3, q, 1))
    assert b1 == pytest.approx(c * (a1 - a0 * delta_coefficient(-3, q, 1)), rel=1e-13)


def test_progression_coefficients_composite():
    p = progression_coefficients(-3, 35, 0.6, 0.35)
    assert set(p.c_map) == {a for a in range(35) if math.gcd(a, 35) == 1}
    assert p.delta_map == {}
    # 5 inert, 7 split at D = -3
    assert p.b0 == pytest.approx(0.6 * (6 / 5) / 35)


def test_two_term_examples():
    c3 = lsd_coefficients(-3)
    assert round(two_term_estimate(-3, 7, 0, X, c3.a0, c3.a1).two_term, -1) == pytest.approx(2305520, rel=5e-4)
    assert two_term_estimate(-3, 5, 0, X, c3.a0, c3.a1).main == pytest.approx(595452, rel=5e-4)
    c20 = lsd_coefficients(-20)
    e = two_term_estimate(-20, 3, 0, X, c20.a0, c20.a1)
    assert e.main == pytest.approx(4156480, rel=5e-4)
    assert e.two_term == pytest.approx(4448270, rel=5e-4)
    assert not e.genus_level
    assert two_term_estimate(-87, 7, 0, X, 0.3, 0.2).genus_level


@given(st.sampled_from([3, 5, 7, 11, 13]), st.integers(0, 12), st.floats(1e4, 1e12))
def test_two_term_with_zero_delta_identity(q, a, x):
    # two_term - main = c (a1 - a0 delta) x/(log x)^1.5, linear in a0 at fixed a1
    D = -23 if q != 23 else -3
    e1 = two_term_estimate(D, q, a, x, 0.5, 0.3)
    e0 = two_term_estimate(D, q, a, x, 0.0, 0.3)
    c = float(c_coefficient(D, q, a))
    assert e0.two_term == pytest.approx(c * 0.3 * x / math.log(x) ** 1.5, rel=1e-12)
    d = delta_coefficient(D, q, a)
    second = e1.two_term - e1.main
    assert second == pytest.approx(c * (0.3 - 0.5 * d) * x / math.log(x) ** 1.5, rel=1e-9)


def test_c_prime_cases():
    assert c_prime(17, 0, 1) == (Fraction(1, 18), False)
    assert c_prime(17, 3, 1) == (Fraction(17, 288), False)
    assert c_prime(3, 0, 0) == (0, True)
    assert c_prime(3, 1, 0) == (Fraction(1, 2), False)
    for q in primerange(2, 200):
        assert Fraction(q, q * q - 1) > Fraction(1, q + 1)
        assert c_prime(q, 0, 1)[0] + (q - 1) * c_prime(q, 1, 1)[0] == 1
        assert c_prime(q, 0, 0)[0] + (q - 1) * c_prime(q, 1, 0)[0] == 1


@pytest.fixture(scope="module")
def d23_tables():
    cg = class_group(-23)
    return cg, classify_primes(cg, 10**7)


def test_wirsing_kappa_and_convergence(d23_tables):
    cg, pct = d23_tables
    _, H = cyclic_subgroup(cg)
    w6 = wirsing_constants(cg, H, pct, 10**6)
    w7 = wirsing_constants(cg, H, pct, 10**7)
    assert w7.kappa == Fraction(1, 6)
    # the k >= 2 prime sum converges like 1/(P log P)
    assert abs(w6.A3 - w7.A3) < 1e-6
    assert w7.A3 == pytest.approx(0.162977, abs=5e-4)
    assert w7.A4 == pytest.approx(0.133413, abs=5e-3)
    assert len(w7.checkpoints) == 3 and w7.drift >= 0
    with pytest.raises(PreconditionError):
        wirsing_constants(cg, H, pct, 10**8)


def test_exceptional_estimate_table1():
    cg = class_group(-23)
    f = QuadForm(2, 1, 3)
    e = exceptional_estimate(cg, f, 3, 1, X, 0.133413)
    assert e.c_prime == Fraction(1, 2) and e.A2 == 0.133413 and e.r == 0
    assert e.value == pytest.approx(588499, abs=3)
    z = exceptional_estimate(cg, f, 3, 0, X, 0.133413)
    assert z.value == 0 and z.negligible
    assert not e.interpretation
    # 59 = x^2 + xy + 6y^2 at (5, 2), so nu_H(59) = 1
    e59 = exceptional_estimate(cg, f, 59, 0, X, 0.133413)
    assert e59.c_prime == Fraction(1, 60) and not e59.negligible
    assert exceptional_estimate(cg, QuadForm(1, 1, 6), 5, 1, X, 0.133413).interpretation


def test_constant_set_report(d23_tables):
    cg, pct = d23_tables
    cs = constant_set(-23, 5, 10**6, pct, 10**6)
    names = [k for k, _ in cs.rows()]
    for key in ("a0", "a1", "b0", "b1", "c(5,0)", "delta(5,0)", "kappa", "A3", "A4", "c'(5,0)", "A4_drift"):
        assert key in names
    assert cs.to_csv().startswith("name,value\n")
    # even class number: Wirsing part skipped
    assert constant_set(-20, 3, 10**6, classify_primes(class_group(-20), 10**4)).kappa is None
