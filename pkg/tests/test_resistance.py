import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import body_from_seed
from newton_aero.convex_core import Domain2, PolyConvexFn, check_C_M_star, conjugate
from newton_aero.corpus import band_body
from newton_aero.errors import ClassMembershipError, DomainError
from newton_aero.hessian_measure import f0_polyhedral
from newton_aero.resistance import (boundary_band_sequence, convergence_harness, dual_of,
                                    dual_resistance, gradient_histogram, legendre_eigenvalues,
                                    legendre_matrix, legendre_sign_change, primal_resistance,
                                    resistance_bound_check, scaling_sequence,
                                    strict_convexity_audit, tangent_line_check, tilde_transform)
from newton_aero.serialize import body_from_dict, body_to_dict

seeds = st.integers(0, 2 ** 32 - 1)


def test_flat_body_resistance_is_area():
    d = Domain2.disk(64, 1.0)
    u = PolyConvexFn.constant(d)
    assert primal_resistance(u).value == pytest.approx(d.area, rel=1e-15)
    assert resistance_bound_check(u)


def test_single_plane():
    sq = Domain2.square(1.0)
    u = PolyConvexFn(np.array([[1.0, 2.0]]), np.array([3.0]), sq)
    assert primal_resistance(u).value == pytest.approx(4.0 / 6.0, rel=1e-15)


@given(seeds)
def test_primal_equals_dual(seed):
    u = body_from_seed(seed)
    J = primal_resistance(u).value
    assert dual_of(u).value == pytest.approx(J, rel=1e-12)
    assert resistance_bound_check(u)


@given(seeds)
def test_resistance_monotone_under_steepening(seed):
    # scaling the slopes up lowers the integrand everywhere
    u = body_from_seed(seed)
    steeper = PolyConvexFn(2.0 * u.slopes, 2.0 * u.offsets, u.domain)
    assert primal_resistance(steeper).value <= primal_resistance(u).value


@given(seeds, st.floats(0, 2 * np.pi))
def test_rotation_invariance(seed, alpha):
    u = body_from_seed(seed)
    R = np.array([[np.cos(alpha), -np.sin(alpha)], [np.sin(alpha), np.cos(alpha)]])
    rot = PolyConvexFn(u.slopes @ R.T, u.offsets, Domain2.polygon(u.domain.vertices @ R.T))
    assert primal_resistance(rot).value == pytest.approx(primal_resistance(u).value, rel=1e-12)


def test_serialization_round_trip_is_exact():
    u = body_from_seed(11)
    w = conjugate(u)
    for f in (u, w):
        g = body_from_dict(body_to_dict(f))
        assert primal_resistance(g).value == primal_resistance(f).value


@given(seeds)
def test_tilde_never_increases_dual(seed):
    w = conjugate(body_from_seed(seed))
    t = tilde_transform(w)
    assert check_C_M_star(t, w.primal_domain, w.height_cap)
    before = dual_resistance(f0_polyhedral(w)).value
    after = dual_resistance(f0_polyhedral(t)).value
    assert after <= before


def test_tilde_improves_band_body():
    w = conjugate(band_body())
    gain = dual_resistance(f0_polyhedral(w)).value - dual_resistance(
        f0_polyhedral(tilde_transform(w))).value
    assert gain >= 1e-4


def test_tilde_rejects_primal_input():
    with pytest.raises(ClassMembershipError):
        tilde_transform(body_from_seed(0))


def test_tangent_line():
    assert tangent_line_check()


def test_gradient_histogram_band_body():
    u = band_body()
    h = gradient_histogram(u)
    assert h.band_mass > 0.5
    assert h.zero_mass + h.band_mass + h.steep_mass == pytest.approx(u.domain.area, rel=1e-12)


def test_scaling_sequence_converges():
    u = body_from_seed(2)
    rep = convergence_harness(scaling_sequence(u, [10, 100, 1000]), u)
    assert rep.passed and rep.gaps[0] > rep.gaps[-1]


def test_boundary_band_sequence_in_class():
    from newton_aero.convex_core import check_C_M

    u = body_from_seed(5)
    for k, body in boundary_band_sequence(u, [10, 1000], u.height_cap):
        assert check_C_M(body, u.height_cap)
    rep = convergence_harness(boundary_band_sequence(u, [10, 100, 10_000], u.height_cap), u)
    assert rep.passed


def test_harness_rejects_mixed_domains():
    u = body_from_seed(2)
    other = body_from_seed(3)
    with pytest.raises(DomainError):
        convergence_harness([(1, other)], u)


def test_legendre_frozen_values():
    lam1, lam2 = legendre_eigenvalues(np.array([0.5, 0.0]))
    assert (lam1, lam2) == pytest.approx((1.28, 0.256), rel=1e-15)
    ev = np.sort(np.linalg.eigvalsh(legendre_matrix(np.array([0.3, 0.4]))))
    lam = np.sort(legendre_eigenvalues(np.array([0.3, 0.4])))
    assert ev == pytest.approx(lam, rel=1e-13)


@given(st.floats(0, 10), st.floats(0, 2 * np.pi))
def test_legendre_sign(r, phi):
    if abs(r - 1 / np.sqrt(3)) < 1e-9:
        return
    lam2 = legendre_eigenvalues(r * np.array([np.cos(phi), np.sin(phi)]))[1]
    assert (lam2 < 0) == (r > 1 / np.sqrt(3))


def test_legendre_root():
    assert abs(legendre_sign_change() - 1 / np.sqrt(3)) <= 1e-12


def test_convexity_audit_flags_strict_regions():
    from newton_aero.convex_core import GridConvexFn

    d = Domain2.square(1.0)
    bowl = GridConvexFn.sample(lambda x: (x * x).sum(1), d, 33)
    cone = GridConvexFn.sample(lambda x: np.hypot(x[:, 0], x[:, 1]), d, 33)
    a = strict_convexity_audit(bowl, (0.05, 0.9), n=64)
    b = strict_convexity_audit(cone, (0.2, 0.9), n=64)
    assert a.flagged_fraction > 0.5
    assert b.flagged_fraction < a.flagged_fraction
