"""Small-divisor series and the index-set split used in their analysis.

Four series over a convergent table (exact big integers or log-space):

* ``brjuno``:  t_n = ln Q_{n+1} / Q_n,                        n >= 1
* ``pm``:      t_n = ln ln Q_{n+1} / Q_n,                     n >= 1
* ``lemma1``:  t_n = ln^2 Q_{n+1} (ln ln Q_{n+1})^{2+4e} / (Q_n^2 ln^{1+e} Q_n), n >= 2
* ``lemma2``:  same with one extra log on the numerator pair, n >= 2

The lemma reports also carry the index split
``N = { n : (ln ln Q_{n+1})^{2+4e} < (ln Q_n)^{2+3e} }`` (triple logs for
lemma2) and the two partial sums of that decomposition.

Divergence is never concluded at a finite truncation.  Diagnostics compare
S_N against S_{N/2}: the tail below ``classify_tol`` reads
``cauchy-converging``, a ratio in [1.8, 2.2] reads ``linear-growth``,
above reads ``superlinear``, anything else ``inconclusive``.

Terms are computed through extended magnitudes, so witnesses whose terms
overflow floats still classify correctly; float views of such terms come
back as ``inf``.  Summation is compensated and strictly sequential in
``n``, hence reproducible bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

from .contfrac import ConvergentTable
from .constructions import LogSpaceTable
from .errors import DomainError, InsufficientTable
from .xfloat import Mag, MagSum, mag_prod

__all__ = ["SeriesReport", "CBResult", "brjuno_series", "pm_series",
           "lemma1_series", "lemma2_series", "cauchy_bunyakovsky_check",
           "inverse_logpow_series", "lemma_bound_chain",
           "geometric_tail_bound", "report_to_csv"]

Table = Union[ConvergentTable, LogSpaceTable]


class _View:
    """Uniform access to Q_n, ln Q_n and its iterated logs."""

    def __init__(self, table: Table):
        if isinstance(table, ConvergentTable):
            self._qs = table.qs
            self.n_max = table.n_max
            self._log = None
        elif isinstance(table, LogSpaceTable):
            self._qs = None
            self._log = table
            self.n_max = table.n_max
        else:
            raise DomainError(f"unsupported table type {type(table).__name__}")

    def Q(self, n: int) -> Mag:
        if self._qs is not None:
            return Mag.from_int(self._qs[n])
        return self._log.entry(n).Q

    def L(self, n: int) -> Mag:
        if self._qs is not None:
            q = self._qs[n]
            return Mag.from_float(math.log(q)) if q > 1 else Mag.zero()
        return self._log.entry(n).L

    def LL(self, n: int):
        if self._qs is not None:
            q = self._qs[n]
            return math.log(math.log(q)) if q > 1 else None
        return self._log.entry(n).LL

    def LLL(self, n: int):
        if self._qs is not None:
            ll = self.LL(n)
            return math.log(ll) if ll is not None and ll > 0 else None
        return self._log.entry(n).LLL


def _pos_mag(v) -> Optional[Mag]:
    if v is None:
        return None
    if isinstance(v, Mag):
        return None if v.is_zero() else v
    return Mag.from_float(v) if v > 0.0 else None


@dataclass
class SeriesReport:
    """Terms, compensated partial sums, optional split, and diagnostics."""

    kind: str
    N: int
    epsilon: Optional[float]
    ns: list[int]
    terms: list[float]
    partial_sums: list[float]
    skipped: list[tuple[int, str]]
    diagnostics: str
    tail: float
    ratio: float
    split_members: Optional[list[int]] = None
    split_sum_in: Optional[float] = None
    split_sum_out: Optional[float] = None
    term_mags: list[Mag] = field(default_factory=list, repr=False)
    split_in_mag: Optional[Mag] = field(default=None, repr=False)
    split_out_mag: Optional[Mag] = field(default=None, repr=False)
    _view: Optional[_View] = field(default=None, repr=False)

    @property
    def total(self) -> float:
        return self.partial_sums[-1] if self.partial_sums else 0.0


def _classify(ns: list[int], mags: list[Mag], tol: float) -> tuple[str, float, float]:
    if not ns:
        return "inconclusive", 0.0, math.nan
    n_hi = ns[-1]
    n_half = n_hi // 2
    head = MagSum()
    tail = MagSum()
    for n, t in zip(ns, mags):
        (head if n <= n_half else tail).add(t)
    tail_val = tail.total().to_float()
    s_half = head.total()
    s_full = head.total().add(tail.total())
    ratio = s_full.div(s_half).to_float() if not s_half.is_zero() else math.inf
    if tail_val < tol:
        return "cauchy-converging", tail_val, ratio
    if 1.8 <= ratio <= 2.2:
        return "linear-growth", tail_val, ratio
    if ratio > 2.2:
        return "superlinear", tail_val, ratio
    return "inconclusive", tail_val, ratio


def _run(kind: str, view: _View, N: int, start: int, term_fn, epsilon,
         classify_tol: float, with_split: bool) -> SeriesReport:
    if N >= 1 and view.n_max < N + 1:
        raise InsufficientTable(
            f"{kind} to N={N} needs table entries to {N + 1}, have {view.n_max}")
    ns: list[int] = []
    terms: list[float] = []
    mags: list[Mag] = []
    partials: list[float] = []
    skipped: list[tuple[int, str]] = []
    members: list[int] = []
    acc = MagSum()
    acc_in = MagSum()
    acc_out = MagSum()
    for n in range(start, N + 1):
        res = term_fn(n)
        if isinstance(res, str):
            skipped.append((n, res))
            continue
        t, in_split = res
        ns.append(n)
        mags.append(t)
        terms.append(t.to_float())
        acc.add(t)
        if with_split:
            if in_split:
                members.append(n)
                acc_in.add(t)
            else:
                acc_out.add(t)
        partials.append(acc.total().to_float())
    diag, tail, ratio = _classify(ns, mags, classify_tol)
    rep = SeriesReport(kind, N, epsilon, ns, terms, partials, skipped,
                       diag, tail, ratio, term_mags=mags)
    rep._view = view
    if with_split:
        rep.split_members = members
        rep.split_in_mag = acc_in.total()
        rep.split_out_mag = acc_out.total()
        rep.split_sum_in = rep.split_in_mag.to_float()
        rep.split_sum_out = rep.split_out_mag.to_float()
    return rep


def brjuno_series(table: Table, N: int, *,
                  classify_tol: float = 1e-3) -> SeriesReport:
    """Partial sums of ln Q_{n+1} / Q_n for n = 1..N."""
    view = _View(table)

    def term(n):
        return mag_prod([(view.L(n + 1), 1.0), (view.Q(n), -1.0)]), False

    return _run("brjuno", view, N, 1, term, None, classify_tol, False)


def pm_series(table: Table, N: int, *,
              classify_tol: float = 1e-3) -> SeriesReport:
    """Partial sums of ln ln Q_{n+1} / Q_n; entries with Q_{n+1} <= e are
    skipped with a flag (the iterated log would not be positive)."""
    view = _View(table)

    def term(n):
        ll = _pos_mag(view.LL(n + 1))
        if ll is None:
            return "lnln(Q_{n+1}) <= 0"
        return mag_prod([(ll, 1.0), (view.Q(n), -1.0)]), False

    return _run("pm", view, N, 1, term, None, classify_tol, False)


def lemma1_series(table: Table, N: int, epsilon: float, *,
                  classify_tol: float = 1e-3) -> SeriesReport:
    """The transformed series with numerator ln^2 Q_{n+1} (ln ln Q_{n+1})^{2+4e}
    over Q_n^2 ln^{1+e} Q_n, summed from n = 2, with its index split."""
    if not (epsilon > 0):
        raise DomainError("epsilon must be > 0")
    view = _View(table)
    p_num = 2 + 4 * epsilon
    p_split = 2 + 3 * epsilon

    def term(n):
        ll = _pos_mag(view.LL(n + 1))
        if ll is None:
            raise DomainError(f"ln ln Q_{n + 1} <= 0; table too small for lemma1")
        ln = view.L(n)
        if ln.is_zero():
            return "ln(Q_n) = 0"
        t = mag_prod([(view.L(n + 1), 2.0), (view.Q(n), -2.0),
                      (ll, p_num), (ln, -(1 + epsilon))])
        in_split = mag_prod([(ll, p_num), (ln, -p_split)]) < Mag.one()
        return t, in_split

    return _run("lemma1", view, N, 2, term, epsilon, classify_tol, True)


def lemma2_series(table: Table, N: int, epsilon: float, *,
                  classify_tol: float = 1e-3) -> SeriesReport:
    """The iterated-log analog: numerator ln^2 ln Q_{n+1} (ln ln ln Q_{n+1})^{2+4e};
    entries with Q_{n+1} <= e^e are skipped with a flag."""
    if not (epsilon > 0):
        raise DomainError("epsilon must be > 0")
    view = _View(table)
    p_num = 2 + 4 * epsilon
    p_split = 2 + 3 * epsilon

    def term(n):
        lll = _pos_mag(view.LLL(n + 1))
        if lll is None:
            return "lnlnln(Q_{n+1}) <= 0"
        ln = view.L(n)
        if ln.is_zero():
            return "ln(Q_n) = 0"
        ll = _pos_mag(view.LL(n + 1))
        t = mag_prod([(ll, 2.0), (view.Q(n), -2.0),
                      (lll, p_num), (ln, -(1 + epsilon))])
        in_split = mag_prod([(lll, p_num), (ln, -p_split)]) < Mag.one()
        return t, in_split

    return _run("lemma2", view, N, 2, term, epsilon, classify_tol, True)


def inverse_logpow_series(table: Table, N: int, epsilon: float, *,
                          classify_tol: float = 1e-3) -> SeriesReport:
    """Partial sums of 1 / ln^{1+2e} Q_n from n = 2 (the convergent
    comparison series in the split argument)."""
    view = _View(table)
    p = 1 + 2 * epsilon

    def term(n):
        ln = view.L(n)
        if ln.is_zero():
            return "ln(Q_n) = 0"
        return mag_prod([(ln, -p)]), False

    return _run("invlogpow", view, N, 2, term, epsilon, classify_tol, False)


@dataclass(frozen=True)
class CBResult:
    lhs: float
    rhs: float
    holds: bool


def cauchy_bunyakovsky_check(report: SeriesReport,
                             N: Optional[int] = None) -> CBResult:
    """Check, over the complement of the split set at truncation N,

        sum ln Q_{n+1}/Q_n
          <= sqrt(sum ln^2 Q_{n+1} ln^{1+2e} Q_n / Q_n^2)
           * sqrt(sum 1 / ln^{1+2e} Q_n).

    Requires a lemma1 report (it carries the split and the table view)."""
    if report.kind != "lemma1" or report.split_members is None:
        raise DomainError("need a lemma1 report with a computed split")
    view = report._view
    eps = report.epsilon
    n_cap = report.N if N is None else N
    members = set(report.split_members)
    p = 1 + 2 * eps
    lhs = MagSum()
    f1 = MagSum()
    f2 = MagSum()
    for n in report.ns:
        if n > n_cap or n in members:
            continue
        ln = view.L(n)
        lhs.add(mag_prod([(view.L(n + 1), 1.0), (view.Q(n), -1.0)]))
        f1.add(mag_prod([(view.L(n + 1), 2.0), (view.Q(n), -2.0), (ln, p)]))
        f2.add(mag_prod([(ln, -p)]))
    lhs_m = lhs.total()
    rhs_m = f1.total().sqrt().mul(f2.total().sqrt())
    if lhs_m <= rhs_m:
        holds = True
    elif rhs_m.is_zero():
        holds = lhs_m.is_zero()
    else:
        holds = lhs_m.div(rhs_m).to_float() <= 1.0 + 1e-12
    return CBResult(lhs_m.to_float(), rhs_m.to_float(), holds)


@dataclass(frozen=True)
class BoundChainRow:
    n: int
    in_split: bool
    above_threshold: bool
    bound_holds: Optional[bool]


def lemma_bound_chain(report: SeriesReport) -> list[BoundChainRow]:
    """Term-wise realization of the split-set bound: for n in the split,
    ln Q_{n+1} < exp((ln Q_n)^beta) with beta = (2+3e)/(2+4e).  Also flags
    whether (ln Q_n)^beta < ln(Q_n)/2 holds yet (the eventual-threshold
    condition the comparison argument needs)."""
    if report.split_members is None:
        raise DomainError("need a report with a computed split")
    view = report._view
    eps = report.epsilon
    beta = (2 + 3 * eps) / (2 + 4 * eps)
    members = set(report.split_members)
    rows = []
    for n in report.ns:
        ln = view.L(n)
        above = mag_prod([(ln, beta - 1.0)]).mul(Mag.from_float(2.0)) < Mag.one()
        if n in members:
            lb = ln.pow(beta)
            holds = view.LL(n + 1) is not None and \
                _pos_mag(view.LL(n + 1)) is not None and \
                _pos_mag(view.LL(n + 1)) < lb
            rows.append(BoundChainRow(n, True, above, holds))
        else:
            rows.append(BoundChainRow(n, False, above, None))
    return rows


def geometric_tail_bound(table: Table, n_from: int, n_to: int) -> float:
    """Upper bound for the plain-series tail sum over (n_from, n_to] using
    Q_n >= (1/2) phi^(n-1): sum of 2 ln Q_{n+1} / phi^(n-1)."""
    view = _View(table)
    phi = (1 + math.sqrt(5)) / 2
    total = 0.0
    for n in range(n_from + 1, n_to + 1):
        lq = view.L(n + 1).to_float()
        total += 2.0 * lq / phi ** (n - 1)
    return total


def report_to_csv(report: SeriesReport) -> str:
    """CSV with columns n, term, partial_sum, in_N_split (0/1)."""
    members = set(report.split_members or ())
    lines = ["n,term,partial_sum,in_N_split"]
    for n, t, s in zip(report.ns, report.terms, report.partial_sums):
        lines.append(f"{n},{t!r},{s!r},{1 if n in members else 0}")
    return "\n".join(lines) + "\n"
