import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from diocap.errors import DomainError
from diocap.kernels import (GaugeSpec, KernelSpec, gauge_eval, kernel_eval,
                            kernel_eval_interval, kernel_eval_log, kernel_grid)

from .oracles import mpmath_gauge, mpmath_kernel

K1 = KernelSpec("K1", 2.4)
K2 = KernelSpec("K2", 2.4)


def test_spec_validation():
    with pytest.raises(DomainError):
        KernelSpec("K3", 2.4)
    with pytest.raises(DomainError):
        KernelSpec("K1", 0.0)
    assert not KernelSpec("K1", 1.5).theorem_grade
    assert KernelSpec("K1", 2.5).theorem_grade


def test_k1_zero_at_one():
    assert kernel_eval(K1, 1.0) == 0.0


def test_singularity_at_zero():
    assert kernel_eval(K1, 0.0) == math.inf
    assert kernel_eval(K2, 0.0) == math.inf


def test_k1_at_inverse_e_frozen():
    # oracle: high-precision evaluation, frozen
    got = kernel_eval(K1, math.exp(-1.0))
    assert got == pytest.approx(0.21455189085426268, rel=1e-14)
    assert got == pytest.approx(mpmath_kernel("K1", 2.4, math.exp(-1.0)),
                                rel=1e-13)


@pytest.mark.parametrize("family", ["K1", "K2"])
@pytest.mark.parametrize("d", [1e-12, 1e-6, 1e-3, 0.08, 0.37, 0.93])
def test_kernels_match_high_precision(family, d):
    spec = KernelSpec(family, 2.4)
    assert kernel_eval(spec, d) == pytest.approx(
        mpmath_kernel(family, 2.4, d), rel=1e-12)


def test_kernel_grid_matches_scalar():
    ds = np.array([1e-9, 1e-4, 0.02, 0.4, 1.0])
    for spec in (K1, K2):
        grid = kernel_grid(spec, ds)
        for d, v in zip(ds, grid):
            assert v == pytest.approx(kernel_eval(spec, float(d)),
                                      rel=1e-14, abs=1e-300)


def test_kernel_eval_log_deep():
    # distances like e^-2440 cannot be floats at all
    for spec in (K1, K2):
        v = kernel_eval_log(spec, -2440.5)
        assert math.isfinite(v) and v > 0
    # K1 ~ ln^2 d * (ln(-ln d))^sigma out there
    want = 2440.5 ** 2 * math.log(2440.5) ** 2.4
    assert kernel_eval_log(K1, -2440.5) == pytest.approx(want, rel=1e-10)


def test_kernel_eval_log_agrees_with_direct():
    for spec in (K1, K2):
        for d in (1e-30, 1e-17, 1e-8, 0.3):
            assert kernel_eval_log(spec, math.log(d)) == pytest.approx(
                kernel_eval(spec, d), rel=1e-10)


def test_monotone_decreasing_on_unit_interval():
    # certified comparisons on a dense grid
    d = np.linspace(1e-6, 1.0, 10_000)
    for spec in (K1, K2):
        k = kernel_grid(spec, d)
        assert np.all(np.diff(k) < 0)


def test_k2_monotone_past_one():
    d = np.linspace(0.5, 3.0, 1000)
    k = kernel_grid(K2, d)
    assert np.all(np.diff(k) < 0)


@given(st.floats(min_value=1e-300, max_value=1e6,
                 allow_nan=False, allow_infinity=False))
def test_inner_log_positive_so_abs_never_activates(d):
    assert math.log(math.log(math.e + 1.0 / d)) > 0


@given(st.floats(min_value=0.0, max_value=1.0),
       st.floats(min_value=0.0, max_value=1.0))
def test_two_point_symmetry(z, xi):
    assert kernel_eval(K1, abs(z - xi)) == kernel_eval(K1, abs(xi - z))


def test_interval_enclosure():
    lo, hi = kernel_eval_interval(K1, 0.01, 0.02)
    assert lo <= kernel_eval(K1, 0.015) <= hi
    lo, hi = kernel_eval_interval(K1, 0.5, 1.5)  # straddles the K1 zero
    assert lo <= 0.0 < hi
    lo, hi = kernel_eval_interval(K2, 0.0, 0.5)
    assert math.isinf(hi) and lo <= kernel_eval(K2, 0.5)


# -- gauges ------------------------------------------------------------------


def test_gauge_zero_at_zero():
    for fam in ("H1", "H2", "LINEAR"):
        assert gauge_eval(GaugeSpec(fam, 3.0), 0.0) == 0.0


def test_gauge_h1_boundary_frozen():
    spec = GaugeSpec("H1", 3.0)
    want = 0.25 * math.log(2.0) ** -3.0
    assert gauge_eval(spec, math.exp(-2.0)) == pytest.approx(want, rel=1e-14)
    assert want == pytest.approx(0.7506951767892265, rel=1e-14)


@pytest.mark.parametrize("family,t", [("H1", 1e-3), ("H1", 0.1), ("H2", 1e-5),
                                      ("H2", 4.5e-5)])
def test_gauges_match_high_precision(family, t):
    spec = GaugeSpec(family, 3.0)
    assert gauge_eval(spec, t) == pytest.approx(
        mpmath_gauge(family, 3.0, t), rel=1e-12)


def test_gauge_domain_boundary():
    h2 = GaugeSpec("H2", 3.0)
    edge = math.exp(-10.0)
    assert gauge_eval(h2, edge) > 0
    with pytest.raises(DomainError):
        gauge_eval(h2, edge * 1.01)
    with pytest.raises(DomainError):
        gauge_eval(h2, -0.1)


def test_gauge_strictly_increasing():
    for fam, sig in (("H1", 3.0), ("H2", 2.5), ("LINEAR", 3.0)):
        spec = GaugeSpec(fam, sig)
        ts = np.linspace(spec.domain_max * 1e-6, spec.domain_max, 2000)
        vals = [gauge_eval(spec, float(t)) for t in ts]
        assert all(b > a for a, b in zip(vals, vals[1:]))


def test_gauge_sigma_validation():
    with pytest.raises(DomainError):
        GaugeSpec("H1", 2.0)
    GaugeSpec("LINEAR", 2.0)  # test gauge ignores the constraint
