"""Discrete capacity estimation and greedy gauge covers.

The discrete proxy for the equilibrium problem minimizes the clamped
quadratic energy

    E(w) = sum_{i,j} w_i w_j k(max(|x_i - x_j|, clamp/2))

over the probability simplex.  The solver is a pairwise conditional
gradient: each step moves mass from the active node of largest current
potential onto the node of smallest current potential, with exact line
search.  The optimality certificate is the standard linearization gap
``2 (<w, phi> - min_i phi_i)``, where ``phi = K w`` is the discrete
potential; at an optimum the potential is equalized on the support.

Node sets are clamped to diameter <= 1/2 so both kernels are strictly
positive and decreasing over every occurring distance.  Matrix assembly
and potential updates are vectorized; optimizer state updates are
sequential, and all reductions have a fixed order, so estimates are
reproducible bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, IncompatibleClamp
from .kernels import GaugeSpec, KernelSpec, gauge_eval, kernel_grid

__all__ = ["NodeSet", "CapacityEstimate", "PropertyReport", "CoverEstimate",
           "energy_matrix", "discrete_capacity", "check_capacity_properties",
           "greedy_cover"]


@dataclass(frozen=True)
class NodeSet:
    """Strictly increasing exact rationals in [0, 1], diameter <= 1/2."""

    nodes: tuple[Fraction, ...]
    clamp_delta: Fraction

    def __post_init__(self):
        nodes = self.nodes
        if len(nodes) < 1:
            raise DomainError("node set is empty")
        if any(nodes[i] >= nodes[i + 1] for i in range(len(nodes) - 1)):
            raise DomainError("nodes must be strictly increasing")
        if nodes[0] < 0 or nodes[-1] > 1:
            raise DomainError("nodes must lie in [0, 1]")
        if nodes[-1] - nodes[0] > Fraction(1, 2):
            raise DomainError("node set diameter must be <= 1/2")
        if not (self.clamp_delta > 0):
            raise DomainError("clamp_delta must be > 0")
        if len(nodes) >= 2 and self.clamp_delta > self.min_gap:
            raise DomainError("clamp_delta must be <= the smallest node gap")

    @property
    def min_gap(self) -> Fraction:
        return min(b - a for a, b in zip(self.nodes, self.nodes[1:]))

    def __len__(self) -> int:
        return len(self.nodes)

    @classmethod
    def uniform_grid(cls, lo: Fraction, hi: Fraction, count: int,
                     clamp_delta: Optional[Fraction] = None) -> "NodeSet":
        lo, hi = Fraction(lo), Fraction(hi)
        if count < 2:
            raise DomainError("grid needs at least 2 nodes")
        step = (hi - lo) / (count - 1)
        nodes = tuple(lo + k * step for k in range(count))
        return cls(nodes, clamp_delta if clamp_delta is not None else step)

    def is_subset_of(self, other: "NodeSet") -> bool:
        return set(self.nodes) <= set(other.nodes)

    def union(self, other: "NodeSet") -> "NodeSet":
        if self.clamp_delta != other.clamp_delta:
            raise IncompatibleClamp(
                "united node sets must share clamp_delta")
        merged = tuple(sorted(set(self.nodes) | set(other.nodes)))
        return NodeSet(merged, self.clamp_delta)


def energy_matrix(nodes: NodeSet, spec: KernelSpec,
                  diagonal: str = "clamp") -> np.ndarray:
    """Kernel matrix with the self-interaction clamped at clamp_delta/2
    (or zeroed, for the exclusion variant)."""
    x = np.array([float(v) for v in nodes.nodes])
    d = np.abs(x[:, None] - x[None, :])
    clamp = float(nodes.clamp_delta) / 2.0
    k = kernel_grid(spec, np.maximum(d, clamp))
    if diagonal == "exclude":
        np.fill_diagonal(k, 0.0)
    elif diagonal != "clamp":
        raise DomainError(f"unknown diagonal mode {diagonal!r}")
    return k


@dataclass(frozen=True)
class CapacityEstimate:
    W: float
    C: float
    weights: np.ndarray = field(repr=False)
    duality_gap: float
    iterations: int
    converged: bool

    def to_json_dict(self) -> dict:
        return {"W": self.W, "C": self.C, "gap": self.duality_gap,
                "iters": self.iterations,
                "weights": [float(w) for w in self.weights]}


def discrete_capacity(nodes: NodeSet, spec: KernelSpec,
                      tol: float = 1e-8, *,
                      max_iter: int = 500_000,
                      diagonal: str = "clamp") -> CapacityEstimate:
    """Minimize the clamped discrete energy over the probability simplex.

    Pairwise conditional gradient with exact line search; terminates when
    the linearization gap drops below ``tol``.  On hitting the iteration
    cap the best iterate is returned with ``converged=False`` and the gap
    reported; nothing is raised."""
    n = len(nodes)
    k = energy_matrix(nodes, spec, diagonal=diagonal)
    w = np.full(n, 1.0 / n)
    phi = k @ w
    e = float(w @ phi)
    gap = math.inf
    it = 0
    for it in range(1, max_iter + 1):
        i_min = int(np.argmin(phi))
        gap = 2.0 * (float(w @ phi) - phi[i_min])
        if gap <= tol:
            break
        support = np.nonzero(w > 0.0)[0]
        i_away = int(support[np.argmax(phi[support])])
        if i_away == i_min:
            break
        col = k[:, i_min] - k[:, i_away]
        dkd = k[i_min, i_min] - 2.0 * k[i_min, i_away] + k[i_away, i_away]
        slope = 2.0 * (phi[i_min] - phi[i_away])
        g_max = float(w[i_away])
        if dkd > 0:
            g = min(g_max, max(0.0, -slope / (2.0 * dkd)))
        else:
            g = g_max
        if g == 0.0:
            break
        w[i_min] += g
        w[i_away] -= g
        if w[i_away] < 1e-15:
            w[i_away] = 0.0
        e += g * slope + g * g * dkd
        phi += g * col
        if it % 512 == 0:  # refresh against float drift
            phi = k @ w
            e = float(w @ phi)
    phi = k @ w
    e = float(w @ phi)
    gap = 2.0 * (e - float(phi[int(np.argmin(phi))]))
    total = float(np.sum(w))
    w = w / total
    if e <= 0:
        raise DomainError("discrete energy must be positive; check the clamp")
    return CapacityEstimate(W=e, C=1.0 / e, weights=w,
                            duality_gap=max(gap, 0.0), iterations=it,
                            converged=gap <= tol)


@dataclass(frozen=True)
class PropertyCheck:
    kind: str
    left_index: int
    right_index: int
    lhs: float
    rhs: float
    ok: bool


@dataclass(frozen=True)
class PropertyReport:
    checks: tuple[PropertyCheck, ...]
    skipped: tuple[str, ...]
    inner_outer_note: str = ("inner/outer capacity agreement is not testable "
                             "on a fixed discretization; noted, not asserted")

    @property
    def violations(self) -> list[PropertyCheck]:
        return [c for c in self.checks if not c.ok]


def check_capacity_properties(family: Sequence[NodeSet], spec: KernelSpec,
                              *, tol: float = 1e-6,
                              solver_tol: float = 1e-9) -> PropertyReport:
    """Monotonicity under set inclusion and subadditivity under unions,
    verified on discrete estimates across a family of node sets."""
    if len(family) < 2:
        raise DomainError("need at least two node sets")
    clamp = family[0].clamp_delta
    if any(s.clamp_delta != clamp for s in family):
        raise IncompatibleClamp("family members must share clamp_delta")
    caps = [discrete_capacity(s, spec, tol=solver_tol) for s in family]
    checks: list[PropertyCheck] = []
    skipped: list[str] = []
    for i in range(len(family)):
        for j in range(len(family)):
            if i != j and family[i].is_subset_of(family[j]):
                ok = caps[i].C <= caps[j].C + tol
                checks.append(PropertyCheck("monotone", i, j,
                                            caps[i].C, caps[j].C, ok))
    for i in range(len(family)):
        for j in range(i + 1, len(family)):
            try:
                u = family[i].union(family[j])
            except (DomainError, IncompatibleClamp) as exc:
                skipped.append(f"union({i},{j}): {exc}")
                continue
            cu = discrete_capacity(u, spec, tol=solver_tol)
            rhs = caps[i].C + caps[j].C
            checks.append(PropertyCheck("subadditive", i, j,
                                        cu.C, rhs, cu.C <= rhs + tol))
    return PropertyReport(tuple(checks), tuple(skipped))


@dataclass(frozen=True)
class CoverEstimate:
    scale: float
    intervals: tuple[tuple[Fraction, Fraction], ...]  # (center, radius)
    gauge_sum: float

    @property
    def count(self) -> int:
        return len(self.intervals)

    def covers(self, samples: Sequence[Fraction]) -> bool:
        """Exact check that every sample lies in some open interval."""
        idx = 0
        for s in sorted(samples):
            while idx < len(self.intervals):
                c, r = self.intervals[idx]
                if s < c - r:
                    return False
                if s < c + r:
                    break
                idx += 1
            else:
                return False
        return True


def greedy_cover(samples: Sequence[Fraction], epsilon: float,
                 gauge: GaugeSpec) -> CoverEstimate:
    """Left-to-right greedy cover by open intervals of radius epsilon/2.

    Each interval is centered on the leftmost uncovered sample.  The sum
    ``count * h(epsilon/2)`` is an upper bound for the gauge covering
    value at scale epsilon, since any admissible cover dominates the
    infimum."""
    if not samples:
        raise DomainError("need at least one sample")
    if not (epsilon > 0) or epsilon > 2.0 * gauge.domain_max:
        raise DomainError(
            f"need 0 < epsilon <= 2*domain_max = {2 * gauge.domain_max:.6g}")
    pts = sorted(Fraction(s) for s in samples)
    radius = Fraction(epsilon) / 2
    intervals: list[tuple[Fraction, Fraction]] = []
    i = 0
    while i < len(pts):
        center = pts[i]
        intervals.append((center, radius))
        hi = center + radius
        while i < len(pts) and pts[i] < hi:
            i += 1
    h = gauge_eval(gauge, float(radius))
    return CoverEstimate(scale=epsilon, intervals=tuple(intervals),
                         gauge_sum=len(intervals) * h)
