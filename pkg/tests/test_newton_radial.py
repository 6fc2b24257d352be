import numpy as np
import pytest

from newton_aero import newton_radial as nr
from newton_aero.convex_core import check_C_M
from newton_aero.errors import CalibrationError, DomainError
from newton_aero.resistance import gradient_histogram, primal_resistance

# high-precision values from an independent mpmath evaluation of the profile integral
J_M1 = 1.17751915317898401127
J_M2 = 0.50399157947537981357
VMAX_M1 = 1.91680124564118488231
P0_M1 = -0.17547128602420547488


def test_profile_point_frozen():
    x, u = nr.profile_point(-1.0, 2.0)
    assert x == pytest.approx(6.25, rel=1e-15)
    assert u == pytest.approx((14.25 - np.log(2.0)) / 2, rel=1e-15)


def test_profile_starts_flat_with_unit_slope():
    prof = nr.calibrate(1.0, 1.0)
    assert prof.u[0] == 0.0 and prof.v[0] == 1.0
    dxdv, dudv = nr.profile_derivatives(prof.p0, 1.0)
    assert dudv / dxdv == 1.0
    assert prof.x_front == pytest.approx(-2 * prof.p0)


def test_calibration_frozen():
    prof = nr.calibrate(1.0, 1.0)
    assert prof.v_max == pytest.approx(VMAX_M1, rel=1e-12)
    assert prof.p0 == pytest.approx(P0_M1, rel=1e-12)
    assert prof.x[-1] == pytest.approx(1.0, abs=1e-12) and prof.u[-1] == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("M, J", [(1.0, J_M1), (2.0, J_M2)])
def test_radial_resistance_frozen(M, J):
    assert nr.radial_resistance(nr.calibrate(1.0, M)).value == pytest.approx(J, rel=1e-12)


def test_height_ratio_increasing():
    v = np.geomspace(1.0, 100.0, 2000)
    assert np.all(np.diff(nr.height_ratio(v)) > 0)


def test_resistance_decreasing_in_height():
    Js = [nr.radial_resistance(nr.calibrate(1.0, M)).value for M in (0.5, 1, 2, 4)]
    assert all(a > b for a, b in zip(Js, Js[1:]))


def test_scaling_in_radius():
    # J scales with area: J(x0, M) = x0^2 J(1, M / x0)
    a = nr.radial_resistance(nr.calibrate(2.0, 2.0)).value
    b = nr.radial_resistance(nr.calibrate(1.0, 1.0)).value
    assert a == pytest.approx(4 * b, rel=1e-12)


def test_revolved_body_matches_and_converges():
    prof = nr.calibrate(1.0, 1.0, samples=256)
    errs = [abs(primal_resistance(nr.revolve(prof, m)).value - J_M1) / J_M1 for m in (180, 360)]
    assert errs[1] < errs[0] < 1e-3
    body = nr.revolve(prof, 90)
    assert check_C_M(body, 1.0)
    assert gradient_histogram(body).band_mass == 0


def test_invalid_inputs():
    with pytest.raises(DomainError):
        nr.profile_point(1.0, 2.0)
    with pytest.raises(DomainError):
        nr.profile_point(-1.0, 0.5)
    with pytest.raises(CalibrationError):
        nr.calibrate(-1.0, 1.0)
