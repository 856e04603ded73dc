"""The two capacity kernels and the two Hausdorff gauge functions.

Stateless pure functions; safe under any parallel use.  Kernel K1 is
``ln^2(d) * |ln ln(e + 1/d)|^sigma`` and K2 is
``ln^2 ln(e + 1/d) * ln^sigma ln ln(e^3 + 1/d)``; both blow up at d = 0
and K1 vanishes at d = 1.  The inner log of K1 satisfies
``ln(e + 1/d) > 1`` for every d > 0, so the absolute value never
activates; it is kept for fidelity to the definition.

Distances far below float range enter through their natural log
(`kernel_eval_log`), which is how potentials at witness numbers with
astronomically close rational approximations are evaluated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

__all__ = ["KernelSpec", "GaugeSpec", "kernel_eval", "kernel_eval_log",
           "kernel_eval_interval", "kernel_grid", "gauge_eval", "GUARD_REL"]

# multiplicative guard covering accumulated libm rounding (a few ulp per
# transcendental, chained at most ~6 deep)
GUARD_REL = 1e-13

_E = math.e
_E3 = math.e ** 3


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family selector.  ``sigma > 0`` is accepted; capacity-grade
    statements need ``sigma > 2`` and callers can check `theorem_grade`."""

    family: str
    sigma: float

    def __post_init__(self):
        if self.family not in ("K1", "K2"):
            raise DomainError(f"unknown kernel family {self.family!r}")
        if not (self.sigma > 0):
            raise DomainError("kernel sigma must be > 0")

    @property
    def theorem_grade(self) -> bool:
        return self.sigma > 2


@dataclass(frozen=True)
class GaugeSpec:
    """Gauge family selector.  H1 lives on [0, e^-2], H2 on [0, e^-10].
    LINEAR is the test gauge h(t) = t on [0, 1]."""

    family: str
    sigma: float = 3.0
    domain_max: float = field(init=False)

    def __post_init__(self):
        if self.family == "H1":
            object.__setattr__(self, "domain_max", math.exp(-2.0))
        elif self.family == "H2":
            object.__setattr__(self, "domain_max", math.exp(-10.0))
        elif self.family == "LINEAR":
            object.__setattr__(self, "domain_max", 1.0)
        else:
            raise DomainError(f"unknown gauge family {self.family!r}")
        if self.family != "LINEAR" and not (self.sigma > 2):
            raise DomainError("gauge sigma must be > 2")


def kernel_eval(spec: KernelSpec, d: float) -> float:
    """Kernel value at distance d >= 0; +inf at coincidence."""
    if d < 0:
        raise DomainError("distance must be >= 0")
    if d == 0.0:
        return math.inf
    if spec.family == "K1":
        ld = math.log(d)
        return ld * ld * abs(math.log(math.log(_E + 1.0 / d))) ** spec.sigma
    lu = math.log(math.log(_E + 1.0 / d))
    lv = math.log(math.log(math.log(_E3 + 1.0 / d)))
    return lu * lu * lv ** spec.sigma


def kernel_eval_log(spec: KernelSpec, ln_d: float) -> float:
    """Kernel value at distance exp(ln_d), usable when the distance itself
    underflows floats.  For ln_d <= -40, ln(e + 1/d) = -ln_d to relative
    error below e*exp(ln_d), far under the guard."""
    if ln_d > -40.0:
        return kernel_eval(spec, math.exp(ln_d))
    u = -ln_d  # ln(e + 1/d) and ln(e^3 + 1/d), error < e^3 * d
    if spec.family == "K1":
        return ln_d * ln_d * math.log(u) ** spec.sigma
    lu = math.log(u)
    return lu * lu * math.log(lu) ** spec.sigma


def kernel_grid(spec: KernelSpec, d: np.ndarray) -> np.ndarray:
    """Vectorized kernel over an array of distances (zeros give +inf)."""
    d = np.asarray(d, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        if spec.family == "K1":
            ld = np.log(d)
            return ld * ld * np.abs(np.log(np.log(_E + 1.0 / d))) ** spec.sigma
        lu = np.log(np.log(_E + 1.0 / d))
        lv = np.log(np.log(np.log(_E3 + 1.0 / d)))
        return lu * lu * lv ** spec.sigma


def kernel_eval_interval(spec: KernelSpec, d_lo: float,
                         d_hi: float) -> tuple[float, float]:
    """Enclosure of the kernel over a distance interval, outward-guarded.

    K2 is strictly decreasing on (0, inf).  K1 is strictly decreasing on
    (0, 1] with a zero at d = 1 and grows again past 1, so an interval
    straddling 1 has minimum 0."""
    if d_lo < 0 or d_hi < d_lo:
        raise DomainError("bad distance interval")
    va = kernel_eval(spec, d_hi)
    vb = kernel_eval(spec, d_lo) if d_lo > 0 else math.inf
    if spec.family == "K1" and d_lo < 1.0 < d_hi:
        lo, hi = 0.0, max(va, vb)
    else:
        lo, hi = min(va, vb), max(va, vb)
    hi_out = hi if math.isinf(hi) else hi * (1.0 + GUARD_REL)
    return lo * (1.0 - GUARD_REL), hi_out


def gauge_eval(spec: GaugeSpec, t: float) -> float:
    """Gauge value; increasing on (0, domain_max], h(0) = 0."""
    if t < 0 or t > spec.domain_max * (1.0 + 1e-15):
        raise DomainError(
            f"gauge {spec.family} defined on [0, {spec.domain_max:.6g}], got {t!r}")
    if t == 0.0:
        return 0.0
    if spec.family == "LINEAR":
        return t
    u = math.log(1.0 / t)
    if spec.family == "H1":
        return u ** -2.0 * math.log(u) ** -spec.sigma
    lu = math.log(u)
    return lu ** -2.0 * math.log(lu) ** -spec.sigma
