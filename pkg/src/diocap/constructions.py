"""Witnesses with prescribed partial-quotient growth.

Rules like ``a_{n+1} = ceil(exp(Q_n))`` make each term of the small-divisor
series order one, so divergence is visible at tiny truncations; the doubly
exponential analog does the same for the iterated-log series while keeping
the plain series divergent.  Exact big-integer convergents are built as far
as a digit-count budget, then the recurrence continues in log space:

    ln Q_{n+1} = ln a_{n+1} + ln Q_n + log1p(Q_{n-1} / (a_{n+1} Q_n))

with the third term and the ceil adjustment folded into a reported error
bound.  Entries carry ``ln Q_n`` (and its iterated logs) as extended
magnitudes, so towers of exponentials keep exact relative ordering long
after floats give out.  Construction is inherently serial; results are
immutable and shareable.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

import mpmath

from .contfrac import ConvergentTable, PartialQuotients
from .errors import DomainError, OverflowEvenInLogSpace, PrecisionExhausted
from .xfloat import Mag

__all__ = ["GrowthRule", "LogEntry", "LogSpaceTable", "DigitAnchor",
           "BuildResult", "build", "DEFAULT_EXACT_DIGIT_BUDGET"]

DEFAULT_EXACT_DIGIT_BUDGET = 1_000_000  # decimal digits allowed in exact Q_n

_FLOAT_SAT = 1.7976931348623157e308
_LOG10_E = math.log10(math.e)

LogVal = Union[float, Mag]


@dataclass(frozen=True)
class GrowthRule:
    """Digit-generation rule a_1, a_2, ... with a small explicit seed."""

    kind: str
    c: int = 1
    degree: int = 1
    seed: tuple[int, ...] = ()
    fn: Optional[Callable[[int, Sequence[int]], int]] = field(
        default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("constant", "polynomial", "exp_of_q",
                             "exp_exp_of_q", "custom"):
            raise DomainError(f"unknown growth rule kind {self.kind!r}")
        if any(d < 1 for d in self.seed):
            raise DomainError("seed digits must be >= 1")
        if self.kind in ("exp_of_q", "exp_exp_of_q") and not self.seed:
            raise DomainError(f"{self.kind} needs at least one seed digit")
        if self.kind == "custom" and self.fn is None:
            raise DomainError("custom rule needs a function")

    @classmethod
    def constant(cls, c: int, seed: tuple[int, ...] = ()) -> "GrowthRule":
        if c < 1:
            raise DomainError("constant digit must be >= 1")
        return cls("constant", c=c, seed=seed)

    @classmethod
    def polynomial(cls, degree: int, seed: tuple[int, ...] = ()) -> "GrowthRule":
        if degree < 1:
            raise DomainError("polynomial degree must be >= 1")
        return cls("polynomial", degree=degree, seed=seed)

    @classmethod
    def exp_of_q(cls, seed: tuple[int, ...] = (6,)) -> "GrowthRule":
        return cls("exp_of_q", seed=seed)

    @classmethod
    def exp_exp_of_q(cls, seed: tuple[int, ...] = (2,)) -> "GrowthRule":
        return cls("exp_exp_of_q", seed=seed)

    @classmethod
    def custom(cls, fn: Callable[[int, Sequence[int]], int],
               seed: tuple[int, ...] = ()) -> "GrowthRule":
        return cls("custom", fn=fn, seed=seed)


@dataclass(frozen=True)
class LogEntry:
    """One row of the log-space table: Q_n and its iterated logs.

    ``L`` is ln Q_n as an extended magnitude; ``LL``/``LLL`` are the next
    two logs (plain float when in range, Mag when still huge, None when
    undefined because Q_n is too small).  ``L_recur`` holds the value the
    log-space recurrence produced on rows where exact arithmetic was also
    available (the cross-validation overlap)."""

    n: int
    Q: Mag
    L: Mag
    LL: Optional[LogVal]
    LLL: Optional[LogVal]
    rel_err: float
    exact: bool
    L_recur: Optional[float] = None

    @property
    def lnQ(self) -> float:
        return self.L.to_float()

    @property
    def lnlnQ(self) -> float:
        if self.LL is None:
            return -math.inf
        return self.LL.to_float() if isinstance(self.LL, Mag) else self.LL


@dataclass(frozen=True)
class LogSpaceTable:
    """Entries n = 1..n_terms with strictly increasing ln Q_n."""

    entries: tuple[LogEntry, ...]
    rule: str

    def __len__(self) -> int:
        return len(self.entries)

    def entry(self, n: int) -> LogEntry:
        e = self.entries[n - 1]
        assert e.n == n
        return e

    @property
    def n_max(self) -> int:
        return self.entries[-1].n if self.entries else 0

    def to_json(self) -> str:
        rows = []
        for e in self.entries:
            lnq = e.lnQ
            lnlnq = e.lnlnQ
            rows.append({
                "n": e.n,
                "lnQ": lnq if math.isfinite(lnq) else None,
                "lnlnQ": lnlnq if math.isfinite(lnlnq) else None,
                "rel_err": e.rel_err,
            })
        return json.dumps(rows)


@dataclass(frozen=True)
class DigitAnchor:
    """Certified stand-in for a digit-rule irrational.

    The number lies within ``exp(log_radius)`` of ``value`` (the last exact
    convergent).  Distances from the anchor to any rational are exact, and
    the radius is small enough that they transfer to the irrational itself;
    for rationals that *are* convergents the two-sided approximation law
    supplies the distance bracket in log form."""

    value: Fraction
    m: int
    convergent_values: tuple[Fraction, ...]
    log_q: tuple[float, ...]
    log_q_next: float            # ln Q_{m+1}, saturated at float max
    log_q_next_saturated: bool
    source: str

    @property
    def log_radius(self) -> float:
        # |alpha - P_m/Q_m| < 1/(Q_m Q_{m+1})
        r = -(self.log_q[self.m] + self.log_q_next)
        return max(r, -_FLOAT_SAT)


@dataclass(frozen=True)
class BuildResult:
    rule: GrowthRule
    pq: PartialQuotients
    table: ConvergentTable
    logtable: LogSpaceTable
    anchor: DigitAnchor


# ---------------------------------------------------------------------------


def build(rule: GrowthRule, n_terms: int, *,
          max_exact_digits: int = DEFAULT_EXACT_DIGIT_BUDGET,
          require_float_logs: bool = False) -> BuildResult:
    """Construct a witness: digits, exact convergents within budget, and the
    log-space continuation to ``n_terms`` entries."""
    if n_terms < 1:
        raise DomainError("n_terms must be >= 1")

    digits, qs, ps = _exact_phase(rule, n_terms, max_exact_digits)
    m = len(qs) - 1  # exact table covers n = 0..m
    table = ConvergentTable(0, tuple(digits[:m]), tuple(ps), tuple(qs))
    logtable = _logspace_phase(rule, digits, qs, n_terms, require_float_logs)
    anchor = _make_anchor(rule, table, logtable, m, n_terms)
    source = "prescribed" if len(digits) >= n_terms else f"rule:{rule.kind}"
    pq = PartialQuotients(0, tuple(digits), source=source)
    return BuildResult(rule, pq, table, logtable, anchor)


def _digit_exact(rule: GrowthRule, n: int, qs: list[int],
                 budget: int) -> Optional[int]:
    """Exact digit a_n, or None when it would blow past the digit budget."""
    if n <= len(rule.seed):
        return rule.seed[n - 1]
    if rule.kind == "constant":
        return rule.c
    if rule.kind == "polynomial":
        return n ** rule.degree
    if rule.kind == "custom":
        return int(rule.fn(n, qs))
    q_prev = qs[n - 1]
    if rule.kind == "exp_of_q":
        if q_prev > int(budget * 2.302585):  # exp(Q) has ~Q*log10(e) digits
            return None
        return _certified_ceil(lambda iv: iv.exp(iv.mpf(q_prev)),
                               int(q_prev * 1.4427) + 64)
    # exp_exp_of_q
    if q_prev > 700 or math.exp(q_prev) * _LOG10_E + 2 > budget:
        return None
    return _certified_ceil(lambda iv: iv.exp(iv.exp(iv.mpf(q_prev))),
                           int(math.exp(q_prev) * 1.4427) + 64)


def _exact_phase(rule: GrowthRule, n_terms: int, budget: int):
    digits: list[int] = []
    ps = [0]
    qs = [1]
    p_prev2, q_prev2 = 1, 0
    table_open = True
    for n in range(1, n_terms + 1):
        a = _digit_exact(rule, n, qs, budget)
        if a is None:
            if rule.kind == "custom":
                raise DomainError(
                    "custom rule digit exceeds the exact budget and has no "
                    "log-space continuation")
            break
        if a < 1:
            raise DomainError(f"rule produced digit {a} < 1 at n={n}")
        if rule.kind == "custom" and _digit_count(a) > budget:
            raise DomainError(
                "custom rule digit exceeds the exact budget and has no "
                "log-space continuation")
        digits.append(a)
        if table_open:
            p_next = a * ps[-1] + p_prev2
            q_next = a * qs[-1] + q_prev2
            if _digit_count(q_next) <= budget:
                p_prev2, q_prev2 = ps[-1], qs[-1]
                ps.append(p_next)
                qs.append(q_next)
            else:
                table_open = False
                if rule.kind in ("exp_of_q", "exp_exp_of_q"):
                    digits.pop()
                    break
                if rule.kind == "custom":
                    raise DomainError(
                        "custom rule needs exact denominators and hit the "
                        "exact budget; no log-space continuation")
        elif rule.kind in ("exp_of_q", "exp_exp_of_q"):
            digits.pop()
            break
    return digits, qs, ps


def _digit_count(v: int) -> int:
    return int(v.bit_length() * 0.30103) + 1


def _certified_ceil(build_iv, start_bits: int) -> int:
    """Certified ceil of a positive non-integer interval expression."""
    iv = mpmath.iv
    bits = max(start_bits, 64)
    for _ in range(20):
        old = iv.prec
        try:
            iv.prec = bits
            val = build_iv(iv)
            raw_lo, raw_hi = val._mpi_
            f_lo = _floor_raw(raw_lo)
            f_hi = _floor_raw(raw_hi)
        finally:
            iv.prec = old
        if f_lo == f_hi:
            return f_lo + 1
        bits *= 2
    raise PrecisionExhausted("could not certify an integer ceiling")


def _floor_raw(raw) -> int:
    sign, man, exp, _ = raw
    man = int(man)
    if sign:
        man = -man
    exp = int(exp)
    if exp >= 0:
        return man << exp
    return man >> (-exp)  # arithmetic shift floors toward -inf


def _rule_log_digit(rule: GrowthRule, n: int, digits: list[int],
                    q_cur: Mag) -> tuple[LogVal, float]:
    """(ln a_n as a log-domain value, absolute bound on the dropped part)."""
    if n <= len(digits):
        return math.log(digits[n - 1]) if digits[n - 1] > 1 else 0.0, 0.0
    if rule.kind == "constant":
        return math.log(rule.c) if rule.c > 1 else 0.0, 0.0
    if rule.kind == "polynomial":
        return rule.degree * math.log(n), 0.0
    if rule.kind == "exp_of_q":
        # ln ceil(exp(Q)) = Q + delta, 0 <= delta < exp(-Q)
        lv = q_cur.log()
        drop = math.exp(-q_cur.x) if q_cur.level == 0 and q_cur.x < 700 else 0.0
        return (q_cur.x if q_cur.level == 0 else q_cur), drop
    if rule.kind == "exp_exp_of_q":
        ea = Mag.exp(q_cur.x if q_cur.level == 0 else q_cur)
        return ea, 0.0
    raise DomainError("custom rules stop at the exact prefix")


def _as_mag(v: LogVal) -> Mag:
    if isinstance(v, Mag):
        return v
    if v < 0:
        raise ValueError("negative log-digit")
    return Mag.from_float(v)


def _to_logval(m: Mag) -> LogVal:
    return m.x if m.level == 0 else m


def _logspace_phase(rule: GrowthRule, digits: list[int], qs: list[int],
                    n_terms: int, require_float_logs: bool) -> LogSpaceTable:
    entries: list[LogEntry] = []
    m = len(qs) - 1

    # exact-derived rows
    for n in range(1, min(m, n_terms) + 1):
        L = math.log(qs[n]) if qs[n] > 1 else 0.0
        entries.append(_make_entry(n, Mag.from_int(qs[n]), Mag.from_float(L),
                                   rel_err=2e-16, exact=True))

    # recurrence pass over the exact overlap, seeded only at n = 1, kept
    # for cross-validation against the exact rows
    recomputed: dict[int, float] = {}
    if m >= 2 and n_terms >= 2:
        L_prev: Mag = Mag.zero()  # ln Q_0 = 0
        L_cur = Mag.from_float(math.log(qs[1]) if qs[1] > 1 else 0.0)
        Q_cur = Mag.from_int(qs[1])
        for n in range(2, min(m, n_terms) + 1):
            ln_a, _ = _rule_log_digit(rule, n, digits, Q_cur)
            corr = _third_term(L_prev, ln_a, L_cur)
            L_next = _as_mag(ln_a).add(L_cur).add(Mag.from_float(corr))
            recomputed[n] = L_next.to_float()
            L_prev, L_cur, Q_cur = L_cur, L_next, Mag.exp(_to_logval(L_next))

    # continuation past the exact prefix, re-seeded from the exact tail
    if n_terms > m:
        L_prev = Mag.from_float(math.log(qs[m - 1]) if qs[m - 1] > 1 else 0.0) \
            if m >= 1 else Mag.zero()
        L_cur = Mag.from_float(math.log(qs[m]) if qs[m] > 1 else 0.0)
        Q_cur = Mag.from_int(qs[m])
        rel = 2e-16
        for n in range(m + 1, n_terms + 1):
            ln_a, drop = _rule_log_digit(rule, n, digits, Q_cur)
            corr = _third_term(L_prev, ln_a, L_cur)
            L_next = _as_mag(ln_a).add(L_cur).add(Mag.from_float(corr))
            scale = L_next.x if L_next.level == 0 and L_next.x > 0 else math.inf
            rel = rel + 5e-16 + (drop / scale if math.isfinite(scale) else 0.0)
            Q_next = Mag.exp(_to_logval(L_next))
            entries.append(_make_entry(n, Q_next, L_next,
                                       rel_err=rel, exact=False))
            L_prev, L_cur, Q_cur = L_cur, L_next, Q_next

    if recomputed:
        patched = []
        for e in entries:
            if e.n in recomputed:
                patched.append(LogEntry(e.n, e.Q, e.L, e.LL, e.LLL,
                                        e.rel_err, e.exact,
                                        L_recur=recomputed[e.n]))
            else:
                patched.append(e)
        entries = patched

    if require_float_logs:
        for e in entries:
            if e.lnlnQ == math.inf:
                raise OverflowEvenInLogSpace(
                    f"ln ln Q_{e.n} is not float-representable")
    return LogSpaceTable(tuple(entries), rule=rule.kind)


def _third_term(L_prev: Mag, ln_a: LogVal, L_cur: Mag) -> float:
    """log1p(exp(ln Q_{n-2} - ln a_n - ln Q_{n-1})), or 0 when negligible."""
    if isinstance(ln_a, Mag) and ln_a.level >= 1:
        return 0.0
    if L_cur.level >= 1 or L_prev.level >= 1:
        return 0.0
    la = ln_a.to_float() if isinstance(ln_a, Mag) else ln_a
    expo = L_prev.x - la - L_cur.x
    if expo <= -745.0:
        return 0.0
    return math.log1p(math.exp(expo))


def _make_entry(n: int, Q: Mag, L: Mag, rel_err: float, exact: bool,
                L_recur=None) -> LogEntry:
    LL = _safe_log(L)
    LLL = _safe_log_val(LL)
    return LogEntry(n, Q, L, LL, LLL, rel_err, exact, L_recur)


def _safe_log(v: Mag) -> Optional[LogVal]:
    if v.is_zero():
        return None
    lv = v.log()
    if isinstance(lv, float) and lv <= 0.0:
        return lv if lv > -math.inf else None
    return lv


def _safe_log_val(v: Optional[LogVal]) -> Optional[LogVal]:
    if v is None:
        return None
    if isinstance(v, Mag):
        return v.log()
    if v <= 0.0:
        return None
    return math.log(v)


def _make_anchor(rule: GrowthRule, table: ConvergentTable,
                 logtable: LogSpaceTable, m: int, n_terms: int) -> DigitAnchor:
    if m < 1:
        raise DomainError("witness has no exact convergents to anchor on")
    if m < n_terms and logtable.n_max >= m + 1:
        next_entry = logtable.entry(m + 1)
        lq_next = next_entry.lnQ
        saturated = not math.isfinite(lq_next)
        anchor_m = m
    else:
        anchor_m = m - 1
        lq_next = math.log(table.qs[m])
        saturated = False
        if anchor_m < 1:
            raise DomainError("need at least two exact convergents")
    convs = tuple(Fraction(table.ps[k], table.qs[k])
                  for k in range(anchor_m + 1))
    log_q = tuple(math.log(q) if q > 1 else 0.0
                  for q in table.qs[: anchor_m + 1])
    return DigitAnchor(
        value=convs[-1],
        m=anchor_m,
        convergent_values=convs,
        log_q=log_q,
        log_q_next=min(lq_next, _FLOAT_SAT),
        log_q_next_saturated=saturated,
        source=f"rule:{rule.kind}",
    )
