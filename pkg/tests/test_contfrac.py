import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from diocap.contfrac import (CertifiedReal, PartialQuotients, BoundCheck,
                             check_approximation_bounds, convergents, expand,
                             finite_fraction_value, gauss_step, named_real,
                             value_of_digits, ConvergentTable)
from diocap.errors import (AmbiguousDigit, DomainError, PrecisionExhausted,
                           RationalInput)

from .oracles import mpmath_digits


def test_gauss_step_half():
    digit, nxt = gauss_step(CertifiedReal.from_fraction(Fraction(1, 2)))
    assert digit == 2
    assert nxt.lo == nxt.hi == 0


def test_gauss_step_golden_fixed_point():
    g = named_real("golden", 128)
    digit, nxt = gauss_step(g)
    assert digit == 1
    # the golden fraction is its own Gauss image
    assert abs(float(nxt.midpoint()) - float(g.midpoint())) < 1e-30


def test_gauss_step_pi_frac():
    x = named_real("pi-frac", 256)
    digit, _ = gauss_step(x)
    assert digit == 7  # floor(1/(pi-3))


def test_gauss_step_domain():
    with pytest.raises(DomainError):
        gauss_step(CertifiedReal.from_fraction(Fraction(3, 2)))


def test_expand_golden_digits():
    pq = expand(named_real("golden", 256), 10)
    assert pq.a0 == 0
    assert pq.digits == (1,) * 10
    assert pq.source == "expanded-from-real"


def test_expand_pi_against_independent_iteration():
    pq = expand(named_real("pi", 256), 5)
    assert pq.a0 == 3
    assert pq.digits == (7, 15, 1, 292, 1)
    with_mpmath = mpmath_digits(__import__("mpmath").pi, 5)
    assert list(pq.digits) == with_mpmath


def test_expand_rational_terminates():
    with pytest.raises(RationalInput):
        expand(CertifiedReal.from_fraction(Fraction(22, 7)), 5)


def test_expand_unrefinable_interval():
    x = CertifiedReal.from_endpoints(Fraction(499999, 1000000),
                                     Fraction(500001, 1000000))
    with pytest.raises(PrecisionExhausted):
        expand(x, 10)


def test_convergents_golden_fibonacci():
    pq = PartialQuotients(0, (1,) * 5)
    t = convergents(pq, 5)
    assert list(zip(t.ps, t.qs)) == [(0, 1), (1, 1), (1, 2),
                                     (2, 3), (3, 5), (5, 8)]
    assert t.verify_recurrence()


def test_convergents_pi():
    pq = expand(named_real("pi", 256), 3)
    t = convergents(pq, 3)
    assert list(zip(t.ps, t.qs)) == [(3, 1), (22, 7), (333, 106), (355, 113)]


def test_convergents_single_digit():
    for k in (1, 2, 7, 100):
        t = convergents(PartialQuotients(0, (k,)), 1)
        assert (t.ps[1], t.qs[1]) == (1, k)


def test_convergents_need_enough_digits():
    with pytest.raises(DomainError):
        convergents(PartialQuotients(0, (1, 2)), 5)


def test_finite_fraction_value():
    assert finite_fraction_value(3, [7]) == Fraction(22, 7)
    assert finite_fraction_value(0, [1, 1, 1, 1, 1]) == Fraction(5, 8)


def test_bounds_golden_spec_indices():
    g = named_real("golden", 256)
    t = convergents(expand(g, 8), 6)
    rows = check_approximation_bounds(g, t)
    by_n = {r.n: r for r in rows}
    # |alpha - 2/3| ~ 0.04863 in (1/30, 1/15); |alpha - 3/5| in (1/80, 1/40)
    assert by_n[3].lower_ok and by_n[3].upper_ok
    assert by_n[4].lower_ok and by_n[4].upper_ok
    d3 = abs(float(g.midpoint()) - 2 / 3)
    assert 1 / 30 < d3 < 1 / 15


def test_bounds_pi_n1():
    pi = named_real("pi", 256)
    t = convergents(expand(pi, 3), 2)
    rows = check_approximation_bounds(pi, t)
    r1 = rows[1]
    assert r1.lower_ok and r1.upper_ok
    d = abs(math.pi - 22 / 7)
    assert 1 / (2 * 7 * 106) < d < 1 / (7 * 106)


def test_bounds_undecidable_flagged():
    # a deliberately wide interval containing the first convergent
    t = convergents(PartialQuotients(0, (2, 3, 4)), 3)
    wide = CertifiedReal.from_endpoints(Fraction(2, 5), Fraction(1, 2))
    rows = check_approximation_bounds(wide, t)
    assert any(not r.decided for r in rows)


def test_growth_bound_golden_tight():
    # Fibonacci denominators are the extremal case for the lower bound
    t = convergents(PartialQuotients(0, (1,) * 40), 40)
    assert t.growth_bound_holds()


def test_growth_bound_violation_detected():
    bad = ConvergentTable(0, (1,), ps=(0, 1), qs=(1, 0))
    assert not bad.growth_bound_holds()


def test_json_round_trip():
    pq = expand(named_real("e", 256), 8)
    t = convergents(pq, 8)
    t2 = ConvergentTable.from_json(t.to_json())
    assert t2 == t
    pq2 = PartialQuotients.from_json(pq.to_json())
    assert pq2.a0 == pq.a0 and pq2.digits == pq.digits


# -- randomized properties ---------------------------------------------------


def test_recurrence_matches_exact_evaluation_corpus():
    rng = random.Random(20240817)
    for _ in range(50):
        alpha = CertifiedReal.from_fraction(
            Fraction(rng.getrandbits(256) | 1, 2 ** 256))
        pq = expand(alpha, 26)
        t = convergents(pq, 26)
        assert t.verify_recurrence()
        assert t.coprime_everywhere()
        assert t.growth_bound_holds()
        for n in range(0, 26):
            assert t.value(n) == finite_fraction_value(pq.a0, pq.digits[:n])


def test_approximation_bounds_corpus():
    rng = random.Random(99)
    for _ in range(25):
        alpha = CertifiedReal.from_fraction(
            Fraction(rng.getrandbits(256) | 1, 2 ** 256))
        t = convergents(expand(alpha, 26), 26)
        for row in check_approximation_bounds(alpha, t):
            assert row.lower_ok is not False
            assert row.upper_ok is not False


@given(st.lists(st.integers(min_value=1, max_value=100),
                min_size=2, max_size=20))
def test_prescribed_digit_round_trip(digits):
    pq = PartialQuotients(0, tuple(digits))
    val = value_of_digits(pq)
    back = expand(val, len(digits))
    assert back.a0 == 0
    assert back.digits == pq.digits


def test_reexpansion_reproduces_input_within_width():
    alpha = named_real("e", 320)
    pq = expand(alpha, 20)
    t = convergents(pq, 20)
    approx = t.value(20)
    # property-2 style closeness of the truncation to the source value
    assert abs(approx - alpha.midpoint()) < Fraction(1, t.qs[19] * t.qs[20])
