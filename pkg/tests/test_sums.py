import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, strategies as st

from diocap.constructions import GrowthRule, build
from diocap.contfrac import PartialQuotients, convergents
from diocap.errors import DomainError, InsufficientTable
from diocap.sums import (brjuno_series, cauchy_bunyakovsky_check,
                         geometric_tail_bound, inverse_logpow_series,
                         lemma1_series, lemma2_series, lemma_bound_chain,
                         pm_series, report_to_csv)


def golden_table(n):
    return convergents(PartialQuotients(0, (1,) * n), n)


def test_brjuno_golden_first_terms():
    rep = brjuno_series(golden_table(5), 3)
    want = [math.log(2) / 1, math.log(3) / 2, math.log(5) / 3]
    assert rep.terms == pytest.approx(want, rel=1e-15)
    assert rep.total == pytest.approx(sum(want), rel=1e-14)
    assert rep.total == pytest.approx(1.7789326290387004, rel=1e-14)


def test_brjuno_empty_sum():
    rep = brjuno_series(golden_table(3), 0)
    assert rep.total == 0.0
    assert rep.terms == []


def test_insufficient_table():
    with pytest.raises(InsufficientTable):
        brjuno_series(golden_table(4), 5)


def test_partial_sums_monotone_everywhere(golden_build, expq_build):
    for table in (golden_build.table, expq_build.logtable):
        rep = brjuno_series(table, 30)
        assert all(b >= a for a, b in zip(rep.partial_sums,
                                          rep.partial_sums[1:]))


def test_pm_golden_skips_small_and_matches():
    rep = pm_series(golden_table(5), 3)
    assert rep.skipped == [(1, "lnln(Q_{n+1}) <= 0")]
    assert rep.terms[0] == pytest.approx(math.log(math.log(3)) / 2, rel=1e-14)
    assert rep.terms[0] == pytest.approx(0.04702391380834955, rel=1e-13)


def test_lemma1_golden_n2_term_oracle():
    with mpmath.workdps(40):
        want = float(mpmath.log(3) ** 2 *
                     mpmath.log(mpmath.log(3)) ** mpmath.mpf("2.4") /
                     (4 * mpmath.log(2) ** mpmath.mpf("1.1")))
    rep = lemma1_series(golden_table(4), 2, 0.1)
    assert rep.terms[0] == pytest.approx(want, rel=1e-13)


def test_lemma1_requires_positive_epsilon():
    with pytest.raises(DomainError):
        lemma1_series(golden_table(4), 3, 0.0)


def test_lemma1_empty_when_no_valid_index():
    rep = lemma1_series(golden_table(3), 1, 0.1)
    assert rep.total == 0.0 and rep.ns == []


def test_lemma2_small_denominators_all_skipped():
    # Q_{n+1} <= e^e for every index: everything is flagged, sum is zero
    rep = lemma2_series(golden_table(6), 4, 0.1)
    assert rep.ns == [] or min(rep.ns) > 4
    assert all(n in dict(rep.skipped) for n in (2, 3, 4))
    assert rep.total == 0.0


def test_lemma2_golden_converges(golden_build):
    rep = lemma2_series(golden_build.table, 60, 0.1)
    assert rep.diagnostics == "cauchy-converging"
    assert max(rep.terms[30:]) < 1e-6


def test_decomposition_identity(golden_build):
    rep = lemma1_series(golden_build.table, 60, 0.1)
    assert rep.split_sum_in + rep.split_sum_out == \
        pytest.approx(rep.total, rel=1e-12)
    assert rep.split_members  # golden indices do enter the split set


def test_decomposition_identity_beyond_floats(expq_build):
    rep = lemma1_series(expq_build.logtable, 40, 0.1)
    assert rep.split_members == []  # exponential witnesses stay outside
    total = rep.split_in_mag.add(rep.split_out_mag)
    # both sides live beyond float range; compare the extended values
    assert total.level == rep.split_out_mag.level
    assert total.x == pytest.approx(rep.split_out_mag.x, rel=1e-12)


def test_cauchy_bunyakovsky_always_holds(golden_build, expq_build):
    for table, N in ((golden_build.table, 40), (expq_build.logtable, 40)):
        rep = lemma1_series(table, N, 0.1)
        for cap in range(2, N + 1):
            assert cauchy_bunyakovsky_check(rep, cap).holds


def test_cauchy_bunyakovsky_golden_has_slack():
    rep = lemma1_series(golden_table(22), 20, 0.1)
    cb = cauchy_bunyakovsky_check(rep)
    if cb.lhs > 0:
        assert cb.rhs / cb.lhs > 1.0


def test_cauchy_bunyakovsky_single_term_equality(expq_build):
    rep = lemma1_series(expq_build.logtable, 2, 0.1)
    cb = cauchy_bunyakovsky_check(rep)
    assert cb.holds
    assert cb.lhs == pytest.approx(cb.rhs, rel=1e-12)


def test_bound_chain_on_split_members(golden_build):
    rep = lemma1_series(golden_build.table, 50, 0.1)
    rows = lemma_bound_chain(rep)
    for row in rows:
        if row.in_split and row.above_threshold:
            assert row.bound_holds


def test_comparison_series_is_cauchy_for_witness(expq_build):
    r40 = inverse_logpow_series(expq_build.logtable, 40, 0.1)
    r20 = inverse_logpow_series(expq_build.logtable, 20, 0.1)
    assert abs(r40.total - r20.total) < 1e-3


def test_comparison_series_terms_decay_for_golden(golden_build):
    rep = inverse_logpow_series(golden_build.table, 40, 0.1)
    assert all(b < a for a, b in zip(rep.terms, rep.terms[1:]))
    # ln Q_n > C n makes the terms summable like n^-(1+2e); at this
    # truncation only the trend is visible, not a small tail
    assert rep.terms[-1] < 0.04


def test_classification_dichotomy(golden_build, expq_build, expexp_build):
    assert brjuno_series(golden_build.table, 60).diagnostics == \
        "cauchy-converging"
    wb = brjuno_series(expq_build.logtable, 40)
    assert wb.diagnostics == "linear-growth"
    assert pm_series(expq_build.logtable, 40).diagnostics == \
        "cauchy-converging"
    assert brjuno_series(expexp_build.logtable, 40).diagnostics == \
        "superlinear"
    l1 = lemma1_series(expq_build.logtable, 40, 0.1)
    assert l1.diagnostics in ("superlinear", "linear-growth")


def test_constant_and_polynomial_rules_are_cauchy_with_geometric_bound():
    for rule in (GrowthRule.constant(1), GrowthRule.constant(3),
                 GrowthRule.polynomial(2)):
        res = build(rule, 62)
        rep = brjuno_series(res.table if res.table.n_max >= 61
                            else res.logtable, 60)
        assert rep.diagnostics == "cauchy-converging"
        tail = rep.partial_sums[-1] - rep.partial_sums[29]
        bound = geometric_tail_bound(res.table if res.table.n_max >= 61
                                     else res.logtable, 30, 60)
        assert tail <= bound
        assert bound < 1e-2


def test_compensated_sum_matches_exact_rational_sum():
    table = golden_table(12)
    rep = brjuno_series(table, 10)
    exact = sum(Fraction(t) for t in rep.terms)
    assert abs(Fraction(rep.total) - exact) <= Fraction(1, 10 ** 12) * exact


def test_csv_export_format(golden_build):
    rep = lemma1_series(golden_build.table, 6, 0.1)
    text = report_to_csv(rep)
    lines = text.strip().split("\n")
    assert lines[0] == "n,term,partial_sum,in_N_split"
    assert len(lines) == 1 + len(rep.ns)
    first = lines[1].split(",")
    assert int(first[0]) == rep.ns[0]
    assert float(first[1]) == rep.terms[0]
    assert first[3] in ("0", "1")


@given(st.lists(st.integers(min_value=1, max_value=50),
                min_size=6, max_size=24))
def test_series_invariants_random_digit_tables(digits):
    table = convergents(PartialQuotients(0, tuple(digits)), len(digits))
    n = len(digits) - 1
    rep = brjuno_series(table, n)
    assert all(t >= 0 for t in rep.terms)
    assert all(b >= a for a, b in zip(rep.partial_sums, rep.partial_sums[1:]))
    lem = lemma1_series(table, n, 0.1)
    if lem.ns:
        assert lem.split_sum_in + lem.split_sum_out == \
            pytest.approx(lem.total, rel=1e-12, abs=1e-300)
        assert cauchy_bunyakovsky_check(lem).holds
