import math

import mpmath
import pytest
from hypothesis import given, strategies as st

from diocap.xfloat import LOG_MAX, Mag, MagSum, mag_prod

finite_pos = st.floats(min_value=1e-30, max_value=1e30,
                       allow_nan=False, allow_infinity=False)


def test_basic_roundtrips():
    assert Mag.from_float(2.5).to_float() == 2.5
    assert Mag.zero().is_zero()
    assert Mag.exp(-800.0).to_float() == 0.0
    assert Mag.exp(800.0).level == 1
    assert Mag.exp(5.0).to_float() == pytest.approx(math.exp(5.0), rel=1e-15)


def test_from_int_big():
    v = Mag.from_int(10 ** 400)
    assert v.level == 1
    assert v.x == pytest.approx(400 * math.log(10), rel=1e-15)
    assert Mag.from_int(7).to_float() == 7.0


def test_level_bands_are_ordered():
    assert Mag.exp(710.0) > Mag.from_float(1e308)
    assert Mag.exp(Mag.exp(710.0)) > Mag.exp(1e308)
    assert Mag.exp(1e308) > Mag.exp(710.0)


@given(finite_pos, finite_pos)
def test_mul_matches_floats(a, b):
    got = Mag.from_float(a).mul(Mag.from_float(b)).to_float()
    assert got == pytest.approx(a * b, rel=1e-12)


@given(finite_pos, finite_pos)
def test_div_matches_floats(a, b):
    got = Mag.from_float(a).div(Mag.from_float(b)).to_float()
    assert got == pytest.approx(a / b, rel=1e-12)


@given(finite_pos, st.floats(min_value=0.1, max_value=8.0))
def test_pow_matches_mpmath(a, p):
    got = Mag.from_float(a).pow(p)
    with mpmath.workdps(40):
        want = mpmath.mpf(a) ** mpmath.mpf(p)
        if want < 1e300:
            assert got.to_float() == pytest.approx(float(want), rel=1e-12)
        else:
            lg = got.log()
            assert float(lg if isinstance(lg, float) else lg.to_float()) == \
                pytest.approx(float(mpmath.log(want)), rel=1e-12)


def test_huge_algebra():
    a = Mag.exp(1000.0)          # e^1000
    b = Mag.exp(1300.0)
    assert a.mul(b) == Mag.exp(2300.0)
    assert b.div(a).to_float() == pytest.approx(math.exp(300.0), rel=1e-12)
    assert a.div(b).to_float() == pytest.approx(math.exp(-300.0), rel=1e-12)
    assert a.add(b) == b.add(a)
    # e^1000 + e^1300 = e^1300 (1 + e^-300): correction below resolution
    assert a.add(b) == b
    c = Mag.exp(1300.0 - 1e-10)
    assert c < b


def test_deep_tower_ordering():
    t3 = Mag.exp(Mag.exp(Mag.exp(800.0)))
    t2 = Mag.exp(Mag.exp(900.0))
    assert t3 > t2
    assert t3.log() == Mag.exp(Mag.exp(800.0))
    assert t2.log().log() == 900.0


def test_equal_tower_ratio_is_one():
    t = Mag.exp(Mag.exp(4.1e8))
    assert t.div(t).to_float() == 1.0


def test_mag_prod_grouping_keeps_exponent_differences():
    ln_q = Mag.exp(Mag.exp(2432.0))  # a tower standing for ln Q_n
    # L^2.4 / L^1.1 must behave like L^1.3, not collapse to 1
    r = mag_prod([(ln_q, 2.4), (ln_q, -1.1)])
    assert r.level >= 1
    assert r > Mag.from_float(1.0)
    # and full cancellation gives exactly 1
    assert mag_prod([(ln_q, 1.7), (ln_q, -1.7)]) == Mag.one()


def test_mag_prod_float_path_matches_direct():
    vals = [(Mag.from_float(3.0), 2.0), (Mag.from_float(5.0), -1.5),
            (Mag.from_float(1.7), 0.4)]
    want = 3.0 ** 2 * 5.0 ** -1.5 * 1.7 ** 0.4
    assert mag_prod(vals).to_float() == pytest.approx(want, rel=1e-12)


def test_mag_prod_level1_interference():
    a = Mag.exp(801.0)
    b = Mag.exp(800.0)
    # a / b^2 = e^{801 - 1600} -> tiny
    assert mag_prod([(a, 1.0), (b, -2.0)]).to_float() == \
        pytest.approx(math.exp(-799.0), rel=1e-9)
    # b^2 / a = e^{799}, beyond float range: check its log
    got = mag_prod([(b, 2.0), (a, -1.0)])
    assert got.level == 1
    assert got.log() == pytest.approx(799.0, abs=1e-9)


def test_magsum_compensation():
    s = MagSum()
    for _ in range(10 ** 5):
        s.add(0.1)
    assert s.float_total() == pytest.approx(1e4, abs=1e-9)
    s.add(Mag.exp(5000.0))
    assert s.total().level == 1


def test_magsum_rejects_negative_and_inf():
    s = MagSum()
    with pytest.raises(ValueError):
        s.add(-1.0)
    with pytest.raises(ValueError):
        s.add(math.inf)


@given(st.lists(st.floats(min_value=0, max_value=1e6, allow_nan=False),
                min_size=1, max_size=200))
def test_magsum_matches_fsum(xs):
    s = MagSum()
    for v in xs:
        s.add(v)
    assert s.float_total() == pytest.approx(math.fsum(xs), rel=1e-13, abs=1e-9)
