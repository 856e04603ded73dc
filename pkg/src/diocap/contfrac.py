"""Exact continued-fraction expansion and convergents.

Reals enter as certified intervals with ``Fraction`` endpoints.  The Gauss
map ``x -> 1/x - floor(1/x)`` is exact rational arithmetic on those
endpoints, so every digit this module emits is certified: an interval that
straddles a reciprocal-integer boundary raises :class:`AmbiguousDigit`
instead of guessing, and the expansion driver doubles the working
precision and restarts.

Everything here is a pure function of immutable inputs and safe to share
across threads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import mpmath

from .errors import AmbiguousDigit, DomainError, PrecisionExhausted, RationalInput

__all__ = [
    "CertifiedReal",
    "PartialQuotients",
    "ConvergentTable",
    "BoundCheck",
    "gauss_step",
    "expand",
    "convergents",
    "check_approximation_bounds",
    "finite_fraction_value",
    "named_real",
    "value_of_digits",
    "NAMED_REALS",
    "DEFAULT_START_BITS",
    "MAX_PRECISION_BITS",
]

DEFAULT_START_BITS = 128
MAX_PRECISION_BITS = 2 ** 20

_EXACT_BITS = MAX_PRECISION_BITS  # sentinel claim for width-zero intervals


@dataclass(frozen=True)
class CertifiedReal:
    """A real known to lie in ``[lo, hi]``, with a claimed precision.

    ``refine``, when present, maps a bit count to a tighter enclosure of
    the same underlying number; expansion uses it to recover from
    :class:`AmbiguousDigit`.
    """

    lo: Fraction
    hi: Fraction
    precision_bits: int
    refine: Optional[Callable[[int], tuple[Fraction, Fraction]]] = field(
        default=None, compare=False, repr=False
    )

    def __post_init__(self):
        if self.hi < self.lo:
            raise ValueError("interval endpoints out of order")
        scale = max(1, abs(self.lo), abs(self.hi))
        if self.width > Fraction(1, 2 ** self.precision_bits) * scale:
            raise ValueError("interval wider than the claimed precision")

    @classmethod
    def from_fraction(cls, value: Fraction | int) -> "CertifiedReal":
        v = Fraction(value)
        return cls(v, v, _EXACT_BITS)

    @classmethod
    def from_endpoints(cls, lo: Fraction, hi: Fraction,
                       refine=None) -> "CertifiedReal":
        lo, hi = Fraction(lo), Fraction(hi)
        scale = max(1, abs(lo), abs(hi))
        width = hi - lo
        if width == 0:
            bits = _EXACT_BITS
        else:
            bits = max(0, math.floor(-math.log2(float(width / scale))))
        return cls(lo, hi, bits, refine)

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def is_exact(self) -> bool:
        return self.lo == self.hi

    def midpoint(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def contains(self, v: Fraction) -> bool:
        return self.lo <= v <= self.hi


@dataclass(frozen=True)
class PartialQuotients:
    """Continued-fraction digits ``a0; a1, a2, ...`` of a real.

    ``digits`` holds the materialized prefix; rule-generated witnesses
    whose later digits are too large to materialize carry the rule name in
    ``source`` and only the exact prefix here.
    """

    a0: int
    digits: tuple[int, ...]
    source: str = "prescribed"

    def __post_init__(self):
        if any(d < 1 for d in self.digits):
            raise ValueError("partial quotients after a0 must be >= 1")

    def __len__(self) -> int:
        return len(self.digits)

    def to_json(self) -> str:
        return json.dumps({"a0": self.a0, "digits": list(self.digits)})

    @classmethod
    def from_json(cls, text: str) -> "PartialQuotients":
        obj = json.loads(text)
        return cls(int(obj["a0"]), tuple(int(d) for d in obj["digits"]))


@dataclass(frozen=True)
class ConvergentTable:
    """Convergents ``P_n/Q_n`` for ``n = 0..n_max``, exact big integers."""

    a0: int
    digits: tuple[int, ...]
    ps: tuple[int, ...]
    qs: tuple[int, ...]

    @property
    def n_max(self) -> int:
        return len(self.ps) - 1

    def entry(self, n: int) -> tuple[int, int, int]:
        return (n, self.ps[n], self.qs[n])

    def value(self, n: int) -> Fraction:
        return Fraction(self.ps[n], self.qs[n])

    def verify_recurrence(self) -> bool:
        p2, q2, p1, q1 = 1, 0, self.a0, 1
        if (self.ps[0], self.qs[0]) != (p1, q1):
            return False
        for n in range(1, len(self.ps)):
            a = self.digits[n - 1]
            p1, p2 = a * p1 + p2, p1
            q1, q2 = a * q1 + q2, q1
            if (self.ps[n], self.qs[n]) != (p1, q1):
                return False
        return True

    def coprime_everywhere(self) -> bool:
        return all(math.gcd(p, q) == 1 for p, q in zip(self.ps, self.qs))

    def growth_bound_holds(self) -> bool:
        """Q_n >= (1/2) * ((sqrt(5)+1)/2)**(n-1) for n >= 1, exactly."""
        return all(_ge_half_golden_pow(self.qs[n], n)
                   for n in range(1, len(self.qs)))

    def to_json(self) -> str:
        rows = [[n, str(p), str(q)]
                for n, (p, q) in enumerate(zip(self.ps, self.qs))]
        return json.dumps({"a0": self.a0, "digits": list(self.digits),
                           "convergents": rows})

    @classmethod
    def from_json(cls, text: str) -> "ConvergentTable":
        obj = json.loads(text)
        rows = obj["convergents"]
        return cls(int(obj["a0"]), tuple(int(d) for d in obj["digits"]),
                   tuple(int(r[1]) for r in rows),
                   tuple(int(r[2]) for r in rows))


# ---------------------------------------------------------------------------
# core operations


def gauss_step(x: CertifiedReal) -> tuple[int, CertifiedReal]:
    """One Gauss-map step on an interval inside (0, 1].

    Returns the certified digit ``floor(1/x)`` and the next interval.
    Raises :class:`AmbiguousDigit` when the reciprocal interval straddles
    an integer, which tells the caller to refine and retry.
    """
    if x.lo <= 0 or x.hi > 1:
        raise DomainError("gauss_step needs an interval inside (0, 1]")
    inv_lo = 1 / x.hi
    inv_hi = 1 / x.lo
    d_lo = math.floor(inv_lo)
    d_hi = math.floor(inv_hi)
    if d_lo != d_hi:
        # a point interval sitting exactly on 1/k still has a unique digit
        if not (x.is_exact and inv_lo == d_hi):
            raise AmbiguousDigit(
                f"reciprocal interval [{float(inv_lo):.6g}, {float(inv_hi):.6g}] "
                f"straddles an integer")
        d_lo = d_hi
    digit = d_lo
    nxt = CertifiedReal.from_endpoints(inv_lo - digit, inv_hi - digit)
    return digit, nxt


def expand(alpha: CertifiedReal, n_terms: int, *,
           start_bits: int = DEFAULT_START_BITS,
           max_bits: int = MAX_PRECISION_BITS) -> PartialQuotients:
    """Expand ``alpha`` to ``n_terms`` partial quotients.

    Adaptive precision: starts at ``start_bits`` and doubles whenever a
    digit cannot be certified, up to ``max_bits``.  An exactly zero
    remainder raises :class:`RationalInput`; near-rational inputs that
    exhaust the precision budget raise :class:`PrecisionExhausted` rather
    than being silently classified.
    """
    if n_terms < 0:
        raise ValueError("n_terms must be >= 0")
    bits = max(start_bits, 16)
    while True:
        if alpha.refine is not None and not alpha.is_exact:
            lo, hi = alpha.refine(bits)
        else:
            lo, hi = alpha.lo, alpha.hi
        try:
            a0, digits = _expand_interval(lo, hi, n_terms)
            return PartialQuotients(a0, tuple(digits), source="expanded-from-real")
        except AmbiguousDigit:
            if alpha.refine is None or alpha.is_exact:
                raise PrecisionExhausted(
                    "input interval cannot be refined further") from None
            if bits >= max_bits:
                raise PrecisionExhausted(
                    f"no certified digit at {bits} bits") from None
            bits = min(2 * bits, max_bits)


def _expand_interval(lo: Fraction, hi: Fraction,
                     n_terms: int) -> tuple[int, list[int]]:
    a_lo, a_hi = math.floor(lo), math.floor(hi)
    if a_lo != a_hi:
        if not (lo == hi and lo == a_hi):
            raise AmbiguousDigit("whole part straddles an integer")
        a_lo = a_hi
    a0 = a_lo
    lo, hi = lo - a0, hi - a0
    digits: list[int] = []
    for _ in range(n_terms):
        if lo == hi == 0:
            raise RationalInput(
                f"expansion terminated after {len(digits)} digits")
        if lo <= 0:
            raise AmbiguousDigit("remainder interval touches zero")
        inv_lo, inv_hi = 1 / hi, 1 / lo
        d_lo, d_hi = math.floor(inv_lo), math.floor(inv_hi)
        if d_lo != d_hi:
            if not (lo == hi and inv_lo == d_hi):
                raise AmbiguousDigit("digit straddles an integer")
            d_lo = d_hi
        digits.append(d_lo)
        lo, hi = inv_lo - d_lo, inv_hi - d_lo
    return a0, digits


def convergents(pq: PartialQuotients, n_max: int) -> ConvergentTable:
    """Convergent table from the recurrence, seed (P,Q) = (1,0),(a0,1)."""
    if n_max > len(pq.digits):
        raise DomainError(
            f"table to n={n_max} needs {n_max} digits, have {len(pq.digits)}")
    ps = [pq.a0]
    qs = [1]
    p2, q2 = 1, 0
    for n in range(1, n_max + 1):
        a = pq.digits[n - 1]
        ps.append(a * ps[-1] + p2)
        qs.append(a * qs[-1] + q2)
        p2, q2 = ps[-2], qs[-2]
    return ConvergentTable(pq.a0, tuple(pq.digits[:n_max]),
                           tuple(ps), tuple(qs))


def finite_fraction_value(a0: int, digits: Sequence[int]) -> Fraction:
    """Exact value of the finite fraction [a0; d1, ..., dk]."""
    acc = Fraction(0)
    for d in reversed(digits):
        acc = 1 / (d + acc)
    return a0 + acc


@dataclass(frozen=True)
class BoundCheck:
    """Certified verdicts for one index of the two-sided approximation law.

    ``None`` flags mean the interval width could not separate the
    quantities (undecidable; refine and retry)."""

    n: int
    lower_ok: Optional[bool]
    upper_ok: Optional[bool]

    @property
    def decided(self) -> bool:
        return self.lower_ok is not None and self.upper_ok is not None


def check_approximation_bounds(alpha: CertifiedReal,
                               table: ConvergentTable) -> list[BoundCheck]:
    """Check ``1/(2 Q_n Q_{n+1}) < |alpha - P_n/Q_n| < 1/(Q_n Q_{n+1})``
    for every n with n+1 in the table, by exact rational comparison."""
    out: list[BoundCheck] = []
    for n in range(table.n_max):
        qn, qn1 = table.qs[n], table.qs[n + 1]
        c = Fraction(table.ps[n], qn)
        if alpha.lo <= c <= alpha.hi:
            d_lo, d_hi = Fraction(0), max(alpha.hi - c, c - alpha.lo)
        elif alpha.lo > c:
            d_lo, d_hi = alpha.lo - c, alpha.hi - c
        else:
            d_lo, d_hi = c - alpha.hi, c - alpha.lo
        lower = Fraction(1, 2 * qn * qn1)
        upper = Fraction(1, qn * qn1)
        lower_ok = True if d_lo > lower else (False if d_hi <= lower else None)
        upper_ok = True if d_hi < upper else (False if d_lo >= upper else None)
        out.append(BoundCheck(n, lower_ok, upper_ok))
    return out


# ---------------------------------------------------------------------------
# certified constants and prescribed-digit values


def _raw_mpf_to_fraction(raw) -> Fraction:
    sign, man, exp, _ = raw
    man = int(man)
    if man == 0 and exp != 0:
        raise ValueError("cannot convert a non-finite mpf")
    v = Fraction(man, 1) * (Fraction(2) ** int(exp))
    return -v if sign else v


def _iv_endpoints(build: Callable, bits: int) -> tuple[Fraction, Fraction]:
    iv = mpmath.iv
    old = iv.prec
    try:
        iv.prec = bits + 16
        val = build(iv)
        raw_lo, raw_hi = val._mpi_
        return _raw_mpf_to_fraction(raw_lo), _raw_mpf_to_fraction(raw_hi)
    finally:
        iv.prec = old


NAMED_REALS = {
    "golden": lambda iv: (iv.sqrt(5) - 1) / 2,
    "pi": lambda iv: iv.pi,
    "pi-frac": lambda iv: iv.pi - 3,
    "e": lambda iv: iv.exp(1),
    "e-frac": lambda iv: iv.exp(1) - 2,
}


def named_real(name: str, precision_bits: int = 256) -> CertifiedReal:
    """A refinable certified interval for a named constant."""
    try:
        build = NAMED_REALS[name]
    except KeyError:
        raise DomainError(
            f"unknown constant {name!r}; choose from {sorted(NAMED_REALS)}")
    lo, hi = _iv_endpoints(build, precision_bits)

    def refine(bits: int) -> tuple[Fraction, Fraction]:
        return _iv_endpoints(build, bits)

    return CertifiedReal.from_endpoints(lo, hi, refine=refine)


def value_of_digits(pq: PartialQuotients) -> CertifiedReal:
    """A certified interval containing every real whose expansion starts
    with the digits of ``pq``.

    The endpoints are the values of the prescribed digits followed by a
    next digit of 2 and of 3, a sub-cylinder strictly inside the set of
    reals with this prefix, so re-expansion reproduces the prefix."""
    if not pq.digits:
        raise DomainError("need at least one digit to enclose a value")
    lo = finite_fraction_value(pq.a0, list(pq.digits) + [2])
    hi = finite_fraction_value(pq.a0, list(pq.digits) + [3])
    if lo > hi:
        lo, hi = hi, lo
    return CertifiedReal.from_endpoints(lo, hi)


# ---------------------------------------------------------------------------
# exact golden-power comparison


def _fib(n: int) -> tuple[int, int]:
    """(F_n, F_{n+1}) by fast doubling, F_0 = 0."""
    if n == 0:
        return 0, 1
    a, b = _fib(n >> 1)
    c = a * (2 * b - a)
    d = a * a + b * b
    return (d, c + d) if n & 1 else (c, d)


def _ge_half_golden_pow(q: int, n: int) -> bool:
    """Exact test of Q >= (1/2) * phi**(n-1) using phi**m = F_m*phi + F_{m-1}."""
    m = n - 1
    if m == 0:
        f_prev, f_m = 1, 0
    else:
        f_prev, f_m = _fib(m - 1)
    a = 2 * q - f_prev
    if a < 0:
        return False
    t = 2 * a - f_m
    if t < 0:
        return False
    return t * t >= 5 * f_m * f_m
