import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import body_from_seed
from newton_aero.convex_core import Domain2, PolyConvexFn, conjugate
from newton_aero.errors import MeasureError, OrientationError
from newton_aero.hessian_measure import (AtomicMeasure2, ParamCurve, SmoothPatch, cone_patch,
                                         f0_density_smooth, f0_merge_curve, f0_polyhedral,
                                         homogeneous_patch, polar_merge_curve, steiner_check)
from newton_aero.serialize import measure_from_dict, measure_to_dict

seeds = st.integers(0, 2 ** 32 - 1)


def sqrt_patch():
    """(1 + |p|^2)^(1/2) with its analytic derivatives."""
    def value(p):
        return np.sqrt(1 + (p * p).sum(1))

    def grad(p):
        return p / value(p)[:, None]

    def hess(p):
        s = value(p)
        return (np.eye(2)[None] * s[:, None, None] ** 2
                - np.einsum("ki,kj->kij", p, p)) / s[:, None, None] ** 3

    return SmoothPatch(value, grad, hess)


def test_smooth_density_frozen_values():
    # det of the Hessian of sqrt(1 + |p|^2) is 1 / (1 + |p|^2)^2 (symbolic computation)
    p = np.array([[0.0, 0.0], [0.3, -0.7], [2.0, 1.0]])
    expect = [1.0, 0.40057683063611600705, 0.027777777777777777778]
    assert f0_density_smooth(sqrt_patch(), p) == pytest.approx(expect, rel=1e-14)


def test_smooth_density_rejects_asymmetric_and_nonconvex():
    bad = SmoothPatch(None, None, lambda p: np.array([[[1.0, 1.0], [0.0, 1.0]]] * len(p)))
    with pytest.raises(MeasureError):
        f0_density_smooth(bad, np.zeros((1, 2)))
    neg = SmoothPatch(None, None, lambda p: np.array([[[-1.0, 0.0], [0.0, 1.0]]] * len(p)))
    with pytest.raises(MeasureError):
        f0_density_smooth(neg, np.zeros((1, 2)))


def test_polyhedral_measure_pyramid():
    sq = Domain2.square(1.0)
    u = PolyConvexFn.from_pieces(np.array([[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0]]), sq)
    mu = f0_polyhedral(conjugate(u))
    # atoms at the slopes of u's vertices; mass = area of the primal cell
    assert mu.total_mass == pytest.approx(4.0, rel=1e-15)
    assert mu.atom_mass == pytest.approx(4.0)
    assert mu.mass_in_rect([-0.1, -0.1], [0.1, 0.1]) == pytest.approx(0.0)


def test_monte_carlo_six_piece_body():
    rng = np.random.default_rng(6)
    sq = Domain2.square(1.0)
    A = rng.normal(size=(6, 2))
    u = PolyConvexFn(A, rng.normal(size=6) * 0.3, sq).canonical()
    mu = f0_polyhedral(conjugate(u))
    x = np.random.default_rng(99).uniform(-1, 1, (400_000, 2))
    g = u.slopes[np.argmax(x @ u.slopes.T + u.offsets, axis=1)]
    mc = 4.0 * np.mean(1.0 / (1.0 + (g * g).sum(1)))
    se = 4.0 * np.std(1.0 / (1.0 + (g * g).sum(1))) / np.sqrt(len(x))
    J_star = float((mu.masses / (1 + (mu.atoms ** 2).sum(1))).sum())
    assert abs(J_star - mc) <= 5 * se


@given(seeds)
def test_mass_equals_domain_area(seed):
    u = body_from_seed(seed)
    mu = f0_polyhedral(conjugate(u))
    assert mu.total_mass == pytest.approx(u.domain.area, rel=1e-12)
    assert np.all(mu.masses >= 0)


@given(seeds)
def test_steiner_quadratic_is_atom_mass(seed):
    u = body_from_seed(seed)
    w = conjugate(u)
    mu = f0_polyhedral(w)
    rep = steiner_check(w, mu.atoms)
    assert rep.passed
    assert rep.quadratic == pytest.approx(mu.atom_mass, rel=1e-9)


def test_steiner_rejects_bad_eps():
    u = body_from_seed(1)
    w = conjugate(u)
    with pytest.raises(MeasureError):
        steiner_check(w, f0_polyhedral(w).atoms, eps_list=[0.0, 0.5])


def test_negative_mass_rejected():
    with pytest.raises(MeasureError):
        AtomicMeasure2(np.zeros((1, 2)), np.array([-1.0]))


@pytest.mark.parametrize("rho", [0.0, 0.3, 0.7])
def test_constant_front_merge_density(rho):
    n = 128
    th = 2 * np.pi * np.arange(n) / n
    v = lambda t: np.full_like(t, rho)
    z = np.zeros_like
    c = polar_merge_curve(v, z, 1.0, th, np.full(n, 2 * np.pi / n))
    mu = f0_merge_curve(homogeneous_patch(v, z, z), cone_patch(1.0), c)
    assert np.abs(mu.curves[0].density - 0.5 * (1 - rho ** 2)).max() <= 1e-12
    assert mu.total_mass == pytest.approx(np.pi * (1 - rho ** 2), rel=1e-12)


def test_merge_curve_orientation_check():
    n = 64
    th = 2 * np.pi * np.arange(n) / n
    v = lambda t: np.full_like(t, 0.2)
    z = np.zeros_like
    c = polar_merge_curve(v, z, 1.0, th, np.full(n, 2 * np.pi / n))
    rev = ParamCurve(c.t, c.points, -c.velocity, c.weights)
    with pytest.raises(OrientationError):
        f0_merge_curve(homogeneous_patch(v, z, z), cone_patch(1.0), rev)


def test_measure_round_trip():
    u = body_from_seed(4)
    mu = f0_polyhedral(conjugate(u))
    back = measure_from_dict(measure_to_dict(mu))
    assert np.array_equal(back.atoms, mu.atoms) and np.array_equal(back.masses, mu.masses)
