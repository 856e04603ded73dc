"""Atomic measures on rationals, their potentials and discrete energies.

The canonical measure puts weight ``1/(q^2 ln^{1+eps} q)`` on *every*
fraction p/q with 10 <= q <= q_max and 1 <= p <= q-1, fractions not
reduced (so 5/10 and 1/2 are distinct atoms at the same point).  Layers
are stored implicitly by denominator, which keeps q_max = 10^4 (about
5*10^7 atoms) cheap; a reduced-only variant exists for experiments.

Potentials are evaluated with a certified split: atoms farther than a
cutoff from the target go through a vectorized float lane (distance error
below 3e-16 absolute, validated against high-precision references in the
test suite), atoms near the target are handled exactly through rational
arithmetic and log-distance kernel evaluation.  Targets may be exact
rationals, certified intervals, or digit-rule anchors whose radius is an
explicit power of e (witnesses with astronomically close approximations).

Measures are immutable after construction; evaluations are data-parallel
over atoms with fixed reduction order, so results are reproducible.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional, Sequence, Union

import numpy as np

from .contfrac import CertifiedReal, ConvergentTable, PartialQuotients, convergents
from .constructions import DigitAnchor
from .errors import DomainError, PrecisionExhausted
from .kernels import GUARD_REL, KernelSpec, kernel_eval_log, kernel_grid

__all__ = ["AtomicMeasure", "PotentialValue", "EnergyResult",
           "build_paper_measure", "potential", "potential_sweep", "energy"]

_MIN_Q = 10
_NEAR_CUTOFF = 3e-6       # below this float distance, atoms go exact
_FLOAT_LANE_GUARD = 2e-10  # validated relative bound on the float lane
_MATERIALIZE_CAP = 2_000_000

Target = Union[Fraction, int, CertifiedReal, PartialQuotients, DigitAnchor]


def _layer_weight(q: int, epsilon: float) -> float:
    return 1.0 / (q * q * math.log(q) ** (1.0 + epsilon))


class AtomicMeasure:
    """Finite nonnegative atomic measure on rationals in [0, 1]."""

    def __init__(self, *, q_max: Optional[int] = None,
                 epsilon: Optional[float] = None,
                 reduced_only: bool = False,
                 points: Optional[Sequence[Fraction]] = None,
                 weights: Optional[Sequence[float]] = None):
        if (q_max is None) == (points is None):
            raise DomainError("measure is either layered or explicit")
        self.q_max = q_max
        self.epsilon = epsilon
        self.reduced_only = reduced_only
        if points is not None:
            pts = tuple(Fraction(p) for p in points)
            w = np.asarray(weights, dtype=float)
            if len(pts) != len(w):
                raise DomainError("points/weights length mismatch")
            if np.any(w <= 0):
                raise DomainError("weights must be > 0")
            if any(p < 0 or p > 1 for p in pts):
                raise DomainError("atoms must lie in [0, 1]")
            self._points = pts
            self._weights = w
        else:
            if q_max < _MIN_Q:
                raise DomainError(f"q_max must be >= {_MIN_Q}")
            if not (epsilon > 0):
                raise DomainError("epsilon must be > 0")
            self._points = None
            self._weights = None

    @classmethod
    def from_atoms(cls, atoms: Sequence[tuple[Union[Fraction, str], float]]
                   ) -> "AtomicMeasure":
        pts = [Fraction(p) for p, _ in atoms]
        ws = [w for _, w in atoms]
        return cls(points=pts, weights=ws)

    @property
    def is_layered(self) -> bool:
        return self._points is None

    def layers(self) -> Iterator[tuple[int, np.ndarray, float]]:
        """Yield (q, numerators, weight) for the layered form."""
        if not self.is_layered:
            raise DomainError("explicit measures have no layers")
        for q in range(_MIN_Q, self.q_max + 1):
            ps = np.arange(1, q)
            if self.reduced_only:
                ps = ps[np.gcd(ps, q) == 1]
            yield q, ps, _layer_weight(q, self.epsilon)

    def atom_count(self) -> int:
        if not self.is_layered:
            return len(self._points)
        if self.reduced_only:
            return sum(len(ps) for _, ps, _ in self.layers())
        return sum(q - 1 for q in range(_MIN_Q, self.q_max + 1))

    def total_mass(self) -> float:
        s = c = 0.0
        if self.is_layered:
            contributions = (len(ps) * w for _, ps, w in self.layers())
        else:
            contributions = iter(self._weights)
        for v in contributions:
            t = s + v
            c += (s - t) + v if abs(s) >= abs(v) else (v - t) + s
            s = t
        return s + c

    def atoms(self) -> Iterator[tuple[Fraction, float]]:
        if self.is_layered:
            for q, ps, w in self.layers():
                for p in ps:
                    yield Fraction(int(p), q), w
        else:
            yield from zip(self._points, self._weights)

    def materialized(self) -> tuple[tuple[Fraction, ...], np.ndarray]:
        if not self.is_layered:
            return self._points, self._weights
        if self.atom_count() > _MATERIALIZE_CAP:
            raise DomainError(
                f"refusing to materialize {self.atom_count()} atoms")
        pts, ws = zip(*self.atoms())
        return tuple(pts), np.asarray(ws, dtype=float)

    def __add__(self, other: "AtomicMeasure") -> "AtomicMeasure":
        p1, w1 = self.materialized()
        p2, w2 = other.materialized()
        return AtomicMeasure(points=p1 + p2,
                             weights=np.concatenate([w1, w2]))

    def to_json(self) -> str:
        pts, ws = self.materialized()
        return json.dumps({
            "epsilon": self.epsilon,
            "q_max": self.q_max,
            "atoms": [[f"{p.numerator}/{p.denominator}", w]
                      for p, w in zip(pts, ws)],
        })

    @classmethod
    def from_json(cls, text: str) -> "AtomicMeasure":
        obj = json.loads(text)
        return cls.from_atoms([(Fraction(a[0]), float(a[1]))
                               for a in obj["atoms"]])


def build_paper_measure(q_max: int, epsilon: float, *,
                        reduced_only: bool = False) -> AtomicMeasure:
    """The canonical layered measure: an atom of weight 1/(q^2 ln^{1+eps} q)
    at p/q for every q in [10, q_max] and p in [1, q-1], not reduced."""
    return AtomicMeasure(q_max=q_max, epsilon=epsilon,
                         reduced_only=reduced_only)


def comparison_mass_bound(q_max: int, epsilon: float) -> float:
    """The layer-count bound sum_{q=10}^{q_max} 1/(q ln^{1+eps} q), which
    strictly dominates the measure's total mass."""
    s = c = 0.0
    for q in range(_MIN_Q, q_max + 1):
        v = 1.0 / (q * math.log(q) ** (1.0 + epsilon))
        t = s + v
        c += (s - t) + v if abs(s) >= abs(v) else (v - t) + s
        s = t
    return s + c


@dataclass(frozen=True)
class PotentialValue:
    """A certified potential evaluation."""

    value: float
    rel_err: float
    target_kind: str
    tail_bound: Optional[float] = None
    on_atom: Optional[tuple[int, int]] = None

    @property
    def diverged(self) -> bool:
        return math.isinf(self.value)


@dataclass(frozen=True)
class EnergyResult:
    value: float
    diagonal_divergent: bool
    pairs: int


class _Target:
    """Resolved target: float proxy plus an exact near-distance oracle."""

    def __init__(self, alpha: Target):
        if isinstance(alpha, (Fraction, int)):
            a = Fraction(alpha)
            self.kind = "exact-rational"
            self.x = float(a)
            self.exact = a
            self.log_radius = -math.inf
            self.anchor = None
        elif isinstance(alpha, CertifiedReal):
            self.kind = "certified-real"
            mid = alpha.midpoint()
            self.x = float(mid)
            self.exact = mid
            w = alpha.width
            self.log_radius = math.log(float(w / 2)) if w > 0 else -math.inf
            self.anchor = None
        elif isinstance(alpha, DigitAnchor):
            self.kind = "prescribed-digits"
            self.x = float(alpha.value)
            self.exact = alpha.value
            self.log_radius = alpha.log_radius
            self.anchor = alpha
        elif isinstance(alpha, PartialQuotients):
            if len(alpha.digits) < 2:
                raise DomainError("need at least two digits to localize")
            m = len(alpha.digits)
            table = convergents(alpha, m)
            self.kind = "prescribed-digits"
            self.exact = table.value(m)
            self.x = float(self.exact)
            self.log_radius = -(math.log(table.qs[m]) + math.log(table.qs[m - 1]))
            self.anchor = DigitAnchor(
                value=self.exact, m=m,
                convergent_values=tuple(table.value(k) for k in range(m + 1)),
                log_q=tuple(math.log(q) if q > 1 else 0.0 for q in table.qs),
                log_q_next=math.log(table.qs[m - 1]),
                log_q_next_saturated=True,
                source="digits")
        else:
            raise DomainError(f"unsupported potential target {type(alpha)!r}")

    def near_log_bounds(self, p: int, q: int) -> Optional[tuple[float, float]]:
        """Certified [ln d_lo, ln d_hi] for the distance to atom p/q.

        Returns None when the target *is* the atom (exact rationals only);
        raises :class:`PrecisionExhausted` when the target interval cannot
        be separated from the atom."""
        d0 = self.exact - Fraction(p, q)
        if d0 < 0:
            d0 = -d0
        if d0 == 0:
            if self.kind == "exact-rational":
                return None  # genuinely on the atom
            if self.anchor is not None:
                return self._anchor_self_bounds()
            raise PrecisionExhausted(
                f"certified interval contains the atom {p}/{q}; refine")
        ln_d0 = math.log(d0.numerator) - math.log(d0.denominator)
        delta = self.log_radius - ln_d0
        if delta >= -1e-9:  # radius comparable to the distance
            raise PrecisionExhausted(
                f"target radius exp({self.log_radius:.3g}) not separated "
                f"from atom {p}/{q}")
        eps = math.exp(delta) if delta > -745 else 0.0
        return ln_d0 + math.log1p(-eps), ln_d0 + math.log1p(eps)

    def _anchor_self_bounds(self) -> tuple[float, float]:
        a = self.anchor
        if a.log_q_next_saturated:
            raise PrecisionExhausted(
                "atom coincides with the anchor and the next denominator "
                "is beyond float range; cannot certify the kernel there")
        # 1/(2 Q_m Q_{m+1}) < |alpha - P_m/Q_m| < 1/(Q_m Q_{m+1})
        base = -(a.log_q[a.m] + a.log_q_next)
        return base - math.log(2.0), base


def potential(measure: AtomicMeasure, spec: KernelSpec, alpha: Target, *,
              rel_tol: float = 1e-9,
              with_tail_bound: bool = False) -> PotentialValue:
    """Potential of the measure at a point: sum of weight * kernel(distance).

    A target sitting exactly on an atom gives value +inf (reported, not an
    error).  Raises :class:`PrecisionExhausted` when interval widths cannot
    certify the requested relative tolerance."""
    tgt = _Target(alpha)
    lo_sum, hi_sum, on_atom = _accumulate(measure, spec, tgt)
    if on_atom is not None:
        return PotentialValue(math.inf, 0.0, tgt.kind, on_atom=on_atom)
    value = 0.5 * (lo_sum + hi_sum)
    err = _FLOAT_LANE_GUARD * value + 0.5 * (hi_sum - lo_sum)
    rel = err / value if value > 0 else 0.0
    if rel > rel_tol:
        raise PrecisionExhausted(
            f"potential certified only to {rel:.3g} relative "
            f"(requested {rel_tol:.3g})")
    tail = None
    if with_tail_bound:
        tail = _tail_bound(measure, spec, tgt)
    return PotentialValue(value, rel, tgt.kind, tail_bound=tail)


def potential_sweep(epsilon: float, spec: KernelSpec, alpha: Target,
                    q_max_list: Sequence[int], *,
                    reduced_only: bool = False,
                    rel_tol: float = 1e-9) -> list[tuple[int, PotentialValue]]:
    """Potentials of the layered measure at increasing q_max, computed in a
    single pass over layers (each layer is shared by every larger q_max)."""
    qs = sorted(set(int(q) for q in q_max_list))
    if qs[0] < _MIN_Q:
        raise DomainError(f"q_max must be >= {_MIN_Q}")
    tgt = _Target(alpha)
    out: list[tuple[int, PotentialValue]] = []
    lo = _Neumaier()
    hi = _Neumaier()
    on_atom = None
    idx = 0
    big = AtomicMeasure(q_max=qs[-1], epsilon=epsilon,
                        reduced_only=reduced_only)
    for q, ps, w in big.layers():
        if on_atom is None:
            llo, lhi, hit = _layer_sums(spec, tgt, q, ps, w)
            if hit is not None:
                on_atom = hit
            else:
                lo.add(llo)
                hi.add(lhi)
        while idx < len(qs) and q == qs[idx]:
            if on_atom is not None:
                out.append((qs[idx], PotentialValue(math.inf, 0.0, tgt.kind,
                                                    on_atom=on_atom)))
            else:
                v = 0.5 * (lo.total + hi.total)
                err = _FLOAT_LANE_GUARD * v + 0.5 * (hi.total - lo.total)
                rel = err / v if v > 0 else 0.0
                if rel > rel_tol:
                    raise PrecisionExhausted(
                        f"sweep value at q_max={q} certified only to {rel:.3g}")
                out.append((qs[idx], PotentialValue(v, rel, tgt.kind)))
            idx += 1
    return out


class _Neumaier:
    __slots__ = ("s", "c")

    def __init__(self):
        self.s = 0.0
        self.c = 0.0

    def add(self, v: float) -> None:
        t = self.s + v
        if abs(self.s) >= abs(v):
            self.c += (self.s - t) + v
        else:
            self.c += (v - t) + self.s
        self.s = t

    @property
    def total(self) -> float:
        return self.s + self.c


def _layer_sums(spec, tgt, q, ps, w):
    """(lo, hi, on_atom) contribution of one denominator layer."""
    d = np.abs(tgt.x - ps / float(q))
    far = d >= _NEAR_CUTOFF
    far_sum = float(np.sum(kernel_grid(spec, d[far]))) * w if far.any() else 0.0
    lo = far_sum * (1.0 - GUARD_REL)
    hi = far_sum * (1.0 + GUARD_REL)
    for p in ps[~far]:
        bounds = tgt.near_log_bounds(int(p), q)
        if bounds is None:
            return 0.0, 0.0, (int(p), q)
        k_lo = kernel_eval_log(spec, bounds[1]) * (1.0 - GUARD_REL)
        k_hi = kernel_eval_log(spec, bounds[0]) * (1.0 + GUARD_REL)
        lo += w * k_lo
        hi += w * k_hi
    return lo, hi, None


def _accumulate(measure, spec, tgt):
    lo = _Neumaier()
    hi = _Neumaier()
    if measure.is_layered:
        for q, ps, w in measure.layers():
            llo, lhi, hit = _layer_sums(spec, tgt, q, ps, w)
            if hit is not None:
                return 0.0, 0.0, hit
            lo.add(llo)
            hi.add(lhi)
        return lo.total, hi.total, None
    pts, ws = measure.materialized()
    x = np.array([float(p) for p in pts])
    d = np.abs(tgt.x - x)
    far = d >= _NEAR_CUTOFF
    if far.any():
        vals = kernel_grid(spec, d[far]) * ws[far]
        s = float(np.sum(vals))
        lo.add(s * (1.0 - GUARD_REL))
        hi.add(s * (1.0 + GUARD_REL))
    for i in np.nonzero(~far)[0]:
        p = pts[int(i)]
        bounds = tgt.near_log_bounds(p.numerator, p.denominator)
        if bounds is None:
            return 0.0, 0.0, (p.numerator, p.denominator)
        lo.add(ws[int(i)] * kernel_eval_log(spec, bounds[1]) * (1.0 - GUARD_REL))
        hi.add(ws[int(i)] * kernel_eval_log(spec, bounds[0]) * (1.0 + GUARD_REL))
    return lo.total, hi.total, None


# ---------------------------------------------------------------------------
# tail bound for truncation at q_max (exact rational targets)


def _kernel_half_integral_upper(spec: KernelSpec) -> float:
    """Crude certified upper bound for the integral of the kernel over
    (0, 1/2): left-endpoint upper sums on a geometric grid (the kernel is
    decreasing there) plus an analytic head."""
    total = 0.0
    t = 0.5
    while t > 1e-12:
        t_lo = t / 2
        total += kernel_grid(spec, np.array([t_lo]))[0] * (t - t_lo)
        t = t_lo
    # head (0, 1e-12): bounded via the K1 form, which dominates K2 there
    eps = 1e-12
    c = math.log(math.log(-math.log(eps))) if spec.family == "K2" else \
        math.log(-math.log(eps))
    head = eps * (math.log(eps) ** 2 - 2 * math.log(eps) + 2) * \
        max(1.0, c) ** spec.sigma
    return (total + head) * 1.01


def _tail_bound(measure: AtomicMeasure, spec: KernelSpec,
                tgt: _Target) -> Optional[float]:
    """Upper bound on the q > q_max remainder of the layered potential, for
    exact rational targets only (distance >= 1/(qD) per layer)."""
    if not measure.is_layered or tgt.kind != "exact-rational":
        return None
    d_den = tgt.exact.denominator
    eps = measure.epsilon
    i_half = _kernel_half_integral_upper(spec)
    total = 0.0
    a = measure.q_max + 1
    for _ in range(200):
        b = 2 * a
        # on [a, b): spike at most k(1/(b*D)) each, bulk at most 2*b*I
        spike = kernel_eval_log(spec, -math.log(b) - math.log(d_den))
        w_max = _layer_weight(a, eps)
        block = (b - a) * w_max * (spike + 2.0 * b * i_half + 2.0)
        total += block
        if block < 1e-18 * max(total, 1.0):
            return total * (1.0 + GUARD_REL)
        a = b
    return None  # did not converge within the block budget


# ---------------------------------------------------------------------------
# energy


def energy(measure: AtomicMeasure, spec: KernelSpec, *,
           block: int = 256) -> EnergyResult:
    """Off-diagonal energy 2 * sum_{i<j} w_i w_j k(|x_i - x_j|).

    The literal bilinear energy of an atomic measure diverges on the
    diagonal (kernel singularity at coincidence); that divergence is
    reported as a flag, not folded into the value.

    Pairs are partitioned into fixed row blocks; blocks run in parallel,
    each block is summed sequentially and block totals are combined in
    block order, so the value is bit-identical for any thread count."""
    pts, ws = measure.materialized()
    n = len(pts)
    if n == 0:
        return EnergyResult(0.0, False, 0)
    x = np.array([float(p) for p in pts])
    w = np.asarray(ws, dtype=float)
    is_k1 = spec.family == "K1"
    partials = _pair_energy_blocks(x, w, spec.sigma, is_k1, block)
    acc = _Neumaier()
    for v in partials:
        acc.add(float(v))
    return EnergyResult(2.0 * acc.total, True, n * (n - 1) // 2)


def _pair_energy_numpy(x, w, sigma, is_k1, block):
    n = len(x)
    partials = np.zeros((n + block - 1) // block)
    for b, r0 in enumerate(range(0, n, block)):
        r1 = min(r0 + block, n)
        total = 0.0
        for i in range(r0, r1):
            d = np.abs(x[i] - x[i + 1:])
            total += w[i] * float(np.sum(kernel_grid_sigma(d, sigma, is_k1)
                                         * w[i + 1:]))
        partials[b] = total
    return partials


def kernel_grid_sigma(d, sigma, is_k1):
    with np.errstate(divide="ignore", over="ignore"):
        if is_k1:
            ld = np.log(d)
            return ld * ld * np.log(np.log(math.e + 1.0 / d)) ** sigma
        lu = np.log(np.log(math.e + 1.0 / d))
        lv = np.log(np.log(np.log(math.e ** 3 + 1.0 / d)))
        return lu * lu * lv ** sigma


try:
    from numba import njit, prange

    # ln(e + 1/d) = log1p(e*d) - ln(d): reuses ln(d), no division

    @njit(cache=True, parallel=True, fastmath=False)
    def _pair_energy_k1_jit(x, w, sigma, block):  # pragma: no cover
        n = x.shape[0]
        nblocks = (n + block - 1) // block
        partials = np.zeros(nblocks)
        for b in prange(nblocks):
            r0 = b * block
            r1 = min(r0 + block, n)
            total = 0.0
            for i in range(r0, r1):
                xi = x[i]
                row = 0.0
                for j in range(i + 1, n):
                    d = abs(xi - x[j])
                    if d == 0.0:
                        row = math.inf
                        break
                    ld = math.log(d)
                    u = math.log1p(math.e * d) - ld
                    row += w[j] * (ld * ld * math.log(u) ** sigma)
                total += w[i] * row
            partials[b] = total
        return partials

    @njit(cache=True, parallel=True, fastmath=False)
    def _pair_energy_k2_jit(x, w, sigma, block):  # pragma: no cover
        n = x.shape[0]
        nblocks = (n + block - 1) // block
        partials = np.zeros(nblocks)
        e3 = math.e ** 3
        for b in prange(nblocks):
            r0 = b * block
            r1 = min(r0 + block, n)
            total = 0.0
            for i in range(r0, r1):
                xi = x[i]
                row = 0.0
                for j in range(i + 1, n):
                    d = abs(xi - x[j])
                    if d == 0.0:
                        row = math.inf
                        break
                    ld = math.log(d)
                    lu = math.log(math.log1p(math.e * d) - ld)
                    lv = math.log(math.log1p(e3 * d) - ld)
                    row += w[j] * (lu * lu * math.log(lv) ** sigma)
                total += w[i] * row
            partials[b] = total
        return partials

    def _pair_energy_blocks(x, w, sigma, is_k1, block):
        fn = _pair_energy_k1_jit if is_k1 else _pair_energy_k2_jit
        return fn(x, w, float(sigma), block)

except ImportError:  # pragma: no cover
    def _pair_energy_blocks(x, w, sigma, is_k1, block):
        return _pair_energy_numpy(x, w, sigma, is_k1, block)
