import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from newton_aero import maxwell_stratum as mx
from newton_aero.errors import SingularityError, SlopeBoundError
from newton_aero.resistance import primal_resistance


def test_rhs_frozen_value():
    assert mx.el_rhs(0.0, 1.0, 0.0) == pytest.approx(-0.5, rel=1e-15)


@given(st.floats(-2, 2), st.floats(0.05, 2), st.floats(-1, 1))
def test_rhs_parity(p, gap, dv):
    v = abs(p) + gap
    # mirrored profiles solve the same equation: rhs(-p, v, -v') = rhs(p, v, v')
    assert mx.el_rhs(-p, v, -dv) == pytest.approx(mx.el_rhs(p, v, dv), rel=1e-12, abs=1e-12)


def test_rhs_singular_on_light_cone():
    with pytest.raises(SingularityError):
        mx.el_rhs(1.0, 1.0, 0.0)


@pytest.mark.parametrize("M", [0.5, 1.0, 2.0])
def test_point_stratum_is_cone(M):
    J = mx.maxwell_resistance(mx.point_stratum_curve(M)).value
    assert J == pytest.approx(np.pi / (1 + M * M), abs=1e-11)


def test_reversal_invariance():
    c = mx.quadratic_stratum_curve(1.0)
    assert mx.maxwell_resistance(c.reversed()).value == pytest.approx(
        mx.maxwell_resistance(c).value, abs=1e-12)


def test_fixed_rule_agrees_with_adaptive():
    # this profile meets the light cone tangentially; cancellation near the ends limits both rules
    c = mx.quadratic_stratum_curve(1.0)
    assert mx.maxwell_resistance(c, n=400).value == pytest.approx(
        mx.maxwell_resistance(c).value, rel=1e-7)


def test_profile_matches_hull_body():
    c = mx.quadratic_stratum_curve(1.0, n=257)
    J = mx.maxwell_resistance(c).value
    s = mx.stratum_from_dual(c)
    assert s.is_convex()
    errs = [abs(primal_resistance(mx.assemble_body(s, 1.0, m)).value - J) / J for m in (180, 360)]
    assert errs[1] < errs[0] < 2e-3


def test_stratum_round_trip():
    c = mx.quadratic_stratum_curve(1.0, n=257)
    s = mx.stratum_from_dual(c)
    p = np.linspace(-1.5, 1.5, 31)
    assert mx.dual_from_stratum(s, p) == pytest.approx(c.value(p), abs=1e-4)


def test_shot_stops_at_slope_bound():
    c = mx.shoot(1.0, 0.0)
    assert c.B == pytest.approx(0.73875, abs=1e-4)
    assert c.A == pytest.approx(-c.B, abs=1e-9)
    assert np.abs(c.dv).max() <= 1.0


def test_el_residual_second_order():
    c = mx.shoot(1.0, 0.0, tol=1e-12, max_halvings=14)
    span = 0.8 * (c.B - c.A)
    r = [mx.el_residual(c, h=span / n) for n in (128, 256, 512)]
    assert 3.0 <= r[0] / r[1] <= 4.5 and 3.5 <= r[1] / r[2] <= 4.5


def test_el_residual_detects_non_extremal():
    c = mx.quadratic_stratum_curve(1.0, n=257)
    span = 0.8 * (c.B - c.A)
    r = [mx.el_residual(c, h=span / n) for n in (64, 128)]
    assert r[1] > 0.1 and r[1] / r[0] > 0.5


def test_shoot_rejects_bad_start():
    with pytest.raises(SingularityError):
        mx.shoot(0.5, 0.0, p_start=0.5)
    with pytest.raises(SlopeBoundError):
        mx.shoot(1.0, 1.5)
