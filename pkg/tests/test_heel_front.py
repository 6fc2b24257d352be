import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from newton_aero import heel_front as heel
from newton_aero.errors import ClassMembershipError, DomainError
from newton_aero.resistance import dual_resistance, primal_resistance


@pytest.mark.parametrize("M", [0.5, 1.0, 2.0, 4.0])
def test_point_front_is_cone(M):
    J = heel.reduced_functional(heel.SupportFn.point([0.0, 0.0]), M).value
    assert J == pytest.approx(np.pi / (1 + M * M), abs=1e-12)


@pytest.mark.parametrize("rho, M", [(0.2, 1.0), (0.5, 2.0)])
def test_disk_front_closed_form(rho, M):
    J = heel.reduced_functional(heel.SupportFn.disk(rho), M).value
    assert J == pytest.approx(heel.disk_front_value(rho, M), rel=1e-12)


def test_legendre_coefficient_closed_form():
    r = np.linspace(1.0, 40.0, 500)
    assert heel.legendre_coefficient(r) == pytest.approx(r * r * (r * r - 1) / (1 + r * r) ** 2,
                                                         abs=1e-14)


@given(st.integers(0, 10_000))
def test_front_area_and_mass(seed):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-0.5, 0.5, size=(rng.integers(3, 9), 2))
    omega = heel.SupportFn.polygon(pts)
    from newton_aero._polygon import area, hull

    assert heel.front_area(omega) == pytest.approx(area(hull(pts)), rel=1e-10, abs=1e-14)
    mu = heel.merge_measure(omega, 1.3)
    assert mu.total_mass == pytest.approx(np.pi, rel=1e-10)
    assert dual_resistance(mu).value == pytest.approx(
        heel.reduced_functional(omega, 1.3).value, abs=1e-10)


@given(st.integers(0, 10_000), st.floats(0, 2 * np.pi))
def test_rotation_invariance(seed, alpha):
    rng = np.random.default_rng(seed)
    omega = heel.SupportFn.polygon(rng.uniform(-0.5, 0.5, size=(5, 2)))
    a = heel.reduced_functional(omega, 1.0).value
    b = heel.reduced_functional(omega.rotated(alpha), 1.0).value
    assert a == pytest.approx(b, abs=1e-10)


def test_primal_heel_body_matches_functional():
    omega = heel.SupportFn.regular(3, 0.5)
    J = heel.reduced_functional(omega, 1.1).value
    errs = [abs(primal_resistance(heel.heel_body(omega, 1.1, m)).value - J) / J
            for m in (180, 360)]
    assert errs[1] < errs[0] < 2e-3


def test_regular_polygon_vectorized_matches_generic():
    R = 0.45
    J = heel.regular_functional(5, 1.0, R)
    assert J == pytest.approx(heel.reduced_functional(heel.SupportFn.regular(5, R), 1.0).value,
                              abs=1e-12)


@pytest.mark.parametrize("M, m, R", [(0.7, 4, 0.6016), (0.9, 3, 0.5748), (1.1, 3, 0.4970)])
def test_best_regular_fronts(M, m, R):
    opt = heel.best_regular(M, 16)
    assert opt.m == m and opt.R == pytest.approx(R, abs=1e-4)
    assert opt.legendre_ok


def test_transition_height():
    rep = heel.sweep_transition(m_max=16)
    assert 1.16 <= rep.M_crit <= 1.19


def test_audit_finds_no_improvement_at_optimum():
    opt = heel.best_regular(0.9, 8)
    rep = heel.perturbation_audit(heel.SupportFn.regular(opt.m, opt.R), 0.9, trials=40, seed=1)
    assert rep.improvements == 0 and rep.legendre_ok


def test_circle_front_not_optimal():
    rho, _ = heel.optimize_disk(2.0)
    n, best, second = heel.circle_mode_audit(rho, 2.0, trials=20, seed=1)
    assert n >= 1 and best < 0
    assert all(v < 0 for v in second.values())


def test_front_must_stay_inside_disk():
    with pytest.raises(ClassMembershipError):
        heel.reduced_functional(heel.SupportFn.disk(1.0), 1.0)
    with pytest.raises(DomainError):
        heel.optimize_regular(1, 1.0)
