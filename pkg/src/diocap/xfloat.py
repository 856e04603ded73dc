"""Extended nonnegative magnitudes for iterated-exponential bookkeeping.

A :class:`Mag` stores a value as ``exp^level(x)``.  Level 0 is a plain
float, so ordinary numbers pay no overhead beyond the wrapper.  Levels
``k >= 1`` hold numbers too large for a float; canonically ``x`` then lies
in ``(LOG_MAX, FLOAT_MAX]`` so that consecutive levels occupy disjoint,
ordered bands.  Tiny values (``exp`` of a hugely negative quantity)
underflow to ``0.0`` at level 0, which is the behaviour the series code
wants: tiny terms are certified-zero contributions.

Precision degrades with level: at level 1 the value is known to a factor
``exp(ulp(x))``, and at level >= 2 entries are order-of-magnitude
bookkeeping only.  That is sufficient for the growth classification and
index-set comparisons this package performs; nothing downstream asks a
level-2 magnitude for more than its ordering.

All values are immutable; operations return new instances.
"""

from __future__ import annotations

import math
from typing import Union

__all__ = ["Mag", "MagSum", "mag_prod", "LOG_MAX"]

LOG_MAX = 709.782712893384  # log of the largest double
_LOG_TINY = -745.0  # below this, exp underflows even subnormals

LogVal = Union[float, "Mag"]  # result of Mag.log(): huge logs stay Mags


class Mag:
    """Nonnegative extended magnitude ``exp^level(x)``."""

    __slots__ = ("level", "x")

    def __init__(self, level: int, x: float, _raw: bool = False):
        if not _raw:
            level, x = _normalize(level, x)
        self.level = level
        self.x = x

    # -- constructors ---------------------------------------------------

    @staticmethod
    def from_float(v: float) -> "Mag":
        if not (v >= 0.0) or math.isinf(v):
            raise ValueError(f"Mag.from_float needs a finite nonnegative float, got {v!r}")
        return Mag(0, float(v), _raw=True)

    @staticmethod
    def from_int(i: int) -> "Mag":
        if i < 0:
            raise ValueError("Mag.from_int needs a nonnegative integer")
        try:
            return Mag(0, float(i), _raw=True)
        except OverflowError:
            return Mag(1, math.log(i), _raw=True)

    @staticmethod
    def zero() -> "Mag":
        return Mag(0, 0.0, _raw=True)

    @staticmethod
    def one() -> "Mag":
        return Mag(0, 1.0, _raw=True)

    @staticmethod
    def exp(u: LogVal) -> "Mag":
        """exp of a log-domain value (float of either sign, or a huge Mag)."""
        if isinstance(u, Mag):
            if u.is_zero():
                return Mag(0, 1.0, _raw=True)
            if u.level >= 1:
                return Mag(u.level + 1, u.x, _raw=True)
            return Mag.exp(u.x)
        if u > LOG_MAX:
            return Mag(1, u, _raw=True)
        if u < _LOG_TINY:
            return Mag(0, 0.0, _raw=True)
        return Mag(0, math.exp(u), _raw=True)

    # -- predicates -----------------------------------------------------

    def is_zero(self) -> bool:
        return self.level == 0 and self.x == 0.0

    def is_float(self) -> bool:
        return self.level == 0

    def to_float(self) -> float:
        """Collapse to a float; values beyond range come back as ``inf``."""
        return self.x if self.level == 0 else math.inf

    # -- log ------------------------------------------------------------

    def log(self) -> LogVal:
        """Natural log.  Returns a plain (possibly negative) float when the
        log is float-sized, otherwise a positive Mag one level down."""
        if self.level == 0:
            if self.x == 0.0:
                return -math.inf
            return math.log(self.x)
        if self.level == 1:
            return self.x
        return Mag(self.level - 1, self.x, _raw=True)

    # -- arithmetic -----------------------------------------------------

    def mul(self, other: "Mag") -> "Mag":
        if self.is_zero() or other.is_zero():
            return Mag.zero()
        if self.level == 0 and other.level == 0:
            p = self.x * other.x
            if not math.isinf(p):
                return Mag(0, p, _raw=True)
        s, m = _lv_add(self.log(), other.log())
        return _exp_signed(s, m)

    def div(self, other: "Mag") -> "Mag":
        if other.is_zero():
            raise ZeroDivisionError("Mag division by zero")
        if self.is_zero():
            return Mag.zero()
        if self == other:
            return Mag.one()
        if self.level == 0 and other.level == 0:
            q = self.x / other.x
            if not math.isinf(q):
                return Mag(0, q, _raw=True)
        s, m = _lv_sub(self.log(), other.log())
        return _exp_signed(s, m)

    def add(self, other: "Mag") -> "Mag":
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        if self.level == 0 and other.level == 0:
            t = self.x + other.x
            if not math.isinf(t):
                return Mag(0, t, _raw=True)
            hi, lo = (self.x, other.x) if self.x >= other.x else (other.x, self.x)
            return Mag(1, math.log(hi) + math.log1p(lo / hi), _raw=True)
        hi, lo = (self, other) if self >= other else (other, self)
        r = lo.div(hi).to_float()
        if r == 0.0 or hi.level >= 2:
            return hi
        return Mag(1, hi.x + math.log1p(r))

    def pow(self, p: float) -> "Mag":
        if p == 0.0:
            return Mag.one()
        if p < 0.0:
            return Mag.one().div(self.pow(-p))
        if self.is_zero():
            return Mag.zero()
        if self.level == 0:
            try:
                r = self.x ** p
            except OverflowError:
                r = math.inf
            if not math.isinf(r):
                return Mag(0, r, _raw=True)
        lv = self.log()
        if isinstance(lv, Mag):
            scaled: LogVal = _lv_scale(lv, p)
        else:
            scaled = p * lv
            if scaled == math.inf:  # p*log beyond float: one level up
                scaled = Mag(1, math.log(p) + math.log(lv), _raw=True)
        return _exp_signed(1, scaled)

    def sqrt(self) -> "Mag":
        return self.pow(0.5)

    # -- ordering -------------------------------------------------------

    def _key(self):
        return (self.level, self.x)

    def __eq__(self, other):
        return isinstance(other, Mag) and self._key() == other._key()

    def __lt__(self, other: "Mag") -> bool:
        return self._key() < other._key()

    def __le__(self, other: "Mag") -> bool:
        return self._key() <= other._key()

    def __gt__(self, other: "Mag") -> bool:
        return other < self

    def __ge__(self, other: "Mag") -> bool:
        return other <= self

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        if self.level == 0:
            return f"Mag({self.x!r})"
        return f"Mag(exp^{self.level}({self.x!r}))"


def _normalize(level: int, x: float) -> tuple[int, float]:
    if math.isnan(x):
        raise ValueError("Mag cannot hold NaN")
    while level >= 1 and x <= LOG_MAX:
        x = math.exp(x) if x >= _LOG_TINY else 0.0
        level -= 1
    if level == 0:
        if math.isinf(x):
            raise ValueError("level-0 Mag cannot hold inf; promote explicitly")
        if x < 0.0:
            raise ValueError("Mag is nonnegative")
    return level, x


def _lv_add(u: LogVal, v: LogVal):
    """Add two log-domain values.  Returns (sign, float|Mag magnitude)."""
    if isinstance(u, float) and isinstance(v, float):
        s = u + v
        if math.isinf(s) and not (math.isinf(u) or math.isinf(v)):
            hi, lo = (u, v) if abs(u) >= abs(v) else (v, u)
            return _sign(hi), Mag(1, math.log(abs(hi)) + math.log1p(lo / hi))
        return _sign(s), abs(s)
    if isinstance(u, float):
        u, v = v, u
    # u is a Mag (positive huge log); v is a float or Mag
    if isinstance(v, Mag):
        if u.level == v.level == 1:
            hi, lo = (u, v) if u.x >= v.x else (v, u)
            d = lo.x - hi.x
            if d > _LOG_TINY:
                return 1, Mag(1, hi.x + math.log1p(math.exp(d)))
            return 1, hi
        return 1, max(u, v)
    if u.level >= 2 or v == 0.0:
        return 1, u
    r = v * _safe_exp(-u.x) if u.x <= 745.0 else \
        math.copysign(_safe_exp(math.log(abs(v)) - u.x), v)
    if r > -1.0:
        return 1, Mag(1, u.x + math.log1p(r))
    return 1, u  # unreachable for float v; kept for safety


def _lv_sub(u: LogVal, v: LogVal):
    """Subtract log-domain values: u - v.  Returns (sign, float|Mag)."""
    if isinstance(u, float) and isinstance(v, float):
        d = u - v
        return _sign(d), abs(d)
    if isinstance(u, Mag) and isinstance(v, Mag):
        if u.level != v.level:
            return (1, u) if u.level > v.level else (-1, v)
        if u.x == v.x:
            return 0, 0.0
        sign = 1 if u.x > v.x else -1
        hi, lo = (u, v) if sign == 1 else (v, u)
        if hi.level == 1:
            d = lo.x - hi.x
            corr = math.log1p(-math.exp(d)) if d > _LOG_TINY else 0.0
            return sign, Mag(1, hi.x + corr)
        return sign, hi
    if isinstance(u, Mag):
        if u.level >= 2 or v == 0.0:
            return 1, u
        r = -v * _safe_exp(-u.x) if u.x <= 745.0 else \
            math.copysign(_safe_exp(math.log(abs(v)) - u.x), -v)
        if r > -1.0:
            return 1, Mag(1, u.x + math.log1p(r))
        return 1, u
    s, m = _lv_sub(v, u)
    return -s, m


def _lv_scale(lv: Mag, p: float) -> Mag:
    """p * (huge positive log value), p > 0."""
    if lv.level == 1:
        return Mag(1, lv.x + math.log(p))
    return lv


def _exp_signed(sign: int, m) -> Mag:
    if sign == 0:
        return Mag.one()
    if isinstance(m, Mag):
        if sign > 0:
            return Mag(m.level + 1, m.x, _raw=True) if m.level >= 1 else Mag.exp(m.x)
        return Mag.zero()
    return Mag.exp(m if sign > 0 else -m)


def _safe_exp(u: float) -> float:
    if u < _LOG_TINY:
        return 0.0
    if u > LOG_MAX:
        return math.inf
    return math.exp(u)


def _sign(v: float) -> int:
    return 0 if v == 0.0 else (1 if v > 0.0 else -1)


def mag_prod(pairs) -> Mag:
    """Product of powers ``prod(base_i ** exp_i)`` with symbolic coefficient
    combination.

    Bases that are the *same* extended magnitude (same level and mantissa,
    which is how correlated quantities like ``ln ln Q_{n+1}`` and
    ``ln Q_n`` come out of the log-space recurrence) get their exponents
    summed before anything is materialized, so ratios like
    ``L^2.4 / L^1.1 = L^1.3`` survive at tower heights where a pow/div
    chain would collapse to 1.  When every base log is float-sized the
    result is an ordinary compensated ``exp(sum(e_i * ln(b_i)))``.
    """
    groups: dict[tuple[int, float], list] = {}
    for base, e in pairs:
        if e == 0.0:
            continue
        if not isinstance(base, Mag):
            base = Mag.from_float(base)
        if base.is_zero():
            if e > 0:
                return Mag.zero()
            raise ZeroDivisionError("zero base with negative exponent")
        key = base._key()
        if key in groups:
            groups[key][1] += e
        else:
            groups[key] = [base, e]
    items = [(b, e) for b, e in groups.values() if e != 0.0]
    if not items:
        return Mag.one()
    items.sort(key=lambda be: be[0], reverse=True)
    head_log = items[0][0].log()
    if isinstance(head_log, float):
        # every base log is a float: full-precision path
        s = math.fsum(e * b.log() for b, e in items)
        return Mag.exp(s)
    # dominant log beyond float range
    b0, e0 = items[0]
    lv0 = head_log  # Mag, level >= 1
    if len(items) >= 2:
        b1, e1 = items[1]
        lv1 = b1.log()
        if isinstance(lv1, Mag) and lv1.level == lv0.level == 1:
            # level-1 logs are e^x; close mantissas can interfere through
            # the coefficients (higher levels cannot: their gaps are huge)
            dx = lv0.x - lv1.x
            if dx <= 700.0:
                net = e0 * math.exp(dx) + e1
                if net == 0.0:
                    rest = items[2:]
                    return mag_prod(rest) if rest else Mag.one()
                if net < 0.0:
                    return Mag.zero()
                return Mag.exp(_mag_scale_log(lv1, net))
    if e0 < 0.0:
        return Mag.zero()
    return Mag.exp(_mag_scale_log(lv0, e0))


def _mag_scale_log(lv: Mag, p: float) -> Mag:
    """p * (huge positive log value) for p > 0, coefficient folded where
    the representation can still see it."""
    if lv.level == 1:
        return Mag(1, lv.x + math.log(p))
    return lv


class MagSum:
    """Deterministic accumulator for nonnegative Mag/float terms.

    Float-sized terms go through Neumaier compensation so the float lane
    carries a relative error of a few ulps; terms beyond float range are
    folded on a separate Mag lane.  Addition order is the caller's
    iteration order, fixed and single-threaded, so totals are reproducible.
    """

    __slots__ = ("_s", "_c", "_big", "_count")

    def __init__(self):
        self._s = 0.0
        self._c = 0.0
        self._big = None
        self._count = 0

    def add(self, term) -> None:
        if isinstance(term, Mag):
            if term.level > 0:
                self._big = term if self._big is None else self._big.add(term)
                self._count += 1
                return
            term = term.x
        if term < 0.0:
            raise ValueError("MagSum accumulates nonnegative terms")
        if math.isinf(term):
            raise ValueError("use a Mag for beyond-float terms")
        t = self._s + term
        if abs(self._s) >= abs(term):
            self._c += (self._s - t) + term
        else:
            self._c += (term - t) + self._s
        self._s = t
        self._count += 1

    @property
    def count(self) -> int:
        return self._count

    def float_total(self) -> float:
        return self._s + self._c

    def total(self) -> Mag:
        f = Mag.from_float(self.float_total())
        return f if self._big is None else self._big.add(f)
