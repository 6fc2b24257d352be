import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import linprog

from conftest import body_from_seed
from newton_aero.convex_core import (Domain2, GridConvexFn, PolyConvexFn, check_C_M,
                                     check_C_M_star, conjugate, convexify, linearity_cells,
                                     subdifferential)
from newton_aero.errors import CanonicalizationError, DomainError

seeds = st.integers(0, 2 ** 32 - 1)


def lp_conjugate(u, p):
    """sup_x <p, x> - u(x) over the domain, as a linear program in (x, t)."""
    A, b = u.slopes, u.offsets
    n, h = u.domain.halfplanes
    A_ub = np.vstack([np.column_stack([A, -np.ones(len(A))]),
                      np.column_stack([n, np.zeros(len(n))])])
    b_ub = np.concatenate([-b, h])
    res = linprog(np.array([-p[0], -p[1], 1.0]), A_ub=A_ub, b_ub=b_ub,
                  bounds=[(None, None)] * 3, method="highs")
    return -res.fun


def lp_envelope(points, values, x):
    """Lower convex envelope of the data at x: min sum l_i f_i with sum l_i (x_i, 1) = (x, 1)."""
    A_eq = np.vstack([points.T, np.ones(len(points))])
    res = linprog(values, A_eq=A_eq, b_eq=np.array([x[0], x[1], 1.0]), bounds=(0, None),
                  method="highs")
    return res.fun


def test_pyramid_conjugate_is_exact():
    sq = Domain2.square(1.0)
    u = PolyConvexFn.from_pieces(np.array([[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0]]), sq)
    w = conjugate(u)
    for p in ([0.5, 0.2], [2.0, 0.0], [1.5, 1.5], [-3.0, 0.5]):
        # sup over the square of p.x - max|x_i| is max(0, |p1|-1, |p2|-1, |p1|+|p2|-1)
        q = np.abs(p)
        expect = max(0.0, q[0] + q[1] - 1.0)
        assert w.evaluate(np.array(p)) == pytest.approx(expect, abs=1e-14)


@given(seeds)
def test_conjugate_matches_linear_program(seed):
    u = body_from_seed(seed)
    w = conjugate(u)
    rng = np.random.default_rng(seed)
    P = w.domain.bbox[1][0]
    for p in rng.uniform(-P, P, size=(5, 2)):
        assert w.evaluate(p) == pytest.approx(lp_conjugate(u, p), abs=1e-9)


@given(seeds)
def test_biconjugate_returns_body(seed):
    u = body_from_seed(seed)
    uu = conjugate(conjugate(u))
    assert uu.domain.same_as(u.domain)
    X = np.concatenate([u.vertices, u.domain.vertices])
    assert np.abs(uu.evaluate(X) - u.evaluate(X)).max() <= 1e-10


def test_brute_force_grid_conjugate():
    u = body_from_seed(3)
    w = conjugate(u)
    lo, hi = u.domain.bbox
    xs = np.linspace(lo[0], hi[0], 50)
    ys = np.linspace(lo[1], hi[1], 50)
    X = np.stack(np.meshgrid(xs, ys), -1).reshape(-1, 2)
    X = X[u.domain.contains(X)]
    ux = u.evaluate(X)
    for p in ([0.3, -0.2], [1.0, 1.0], [-2.0, 0.5]):
        brute = (X @ np.array(p) - ux).max()
        # grid sup is a lower bound within Lipschitz * spacing
        assert brute <= w.evaluate(np.array(p)) + 1e-12
        assert w.evaluate(np.array(p)) - brute <= 0.2


@given(seeds)
def test_cells_partition_domain(seed):
    u = body_from_seed(seed)
    assert u.cell_areas.sum() == pytest.approx(u.domain.area, rel=1e-12)
    cells = linearity_cells(u.slopes, u.offsets, u.domain)
    assert len(cells) == u.n_pieces


@given(seeds, seeds)
def test_conjugate_order_reversing(seed, seed2):
    u = body_from_seed(seed)
    v = PolyConvexFn(u.slopes, u.offsets + abs(seed2 % 7) * 0.1, u.domain)
    p = np.random.default_rng(seed2).normal(size=(20, 2))
    # u <= v implies u* >= v*
    assert np.all(conjugate(u).evaluate(p) >= conjugate(v).evaluate(p) - 1e-12)


def test_subdifferential_at_pyramid_apex():
    sq = Domain2.square(1.0)
    u = PolyConvexFn.from_pieces(np.array([[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0]]), sq)
    d = subdifferential(u, [0.0, 0.0])
    assert d.kind == "polygon"
    assert d.area == pytest.approx(2.0)
    assert subdifferential(u, [0.5, 0.0]).kind == "point"
    assert subdifferential(u, [0.5, 0.5]).kind == "segment"
    assert subdifferential(u, [3.0, 0.0]).is_empty


def test_canonical_drops_redundant_pieces():
    sq = Domain2.square(1.0)
    u = PolyConvexFn(np.array([[0.0, 0.0], [0.1, 0.0], [0.0, 0.0]]),
                     np.array([0.0, -5.0, 0.0]), sq).canonical()
    assert u.n_pieces == 1


def test_canonical_rejects_bad_cell_hint():
    sq = Domain2.square(1.0)
    bad = (np.array([[-1, -1], [0, -1], [0, 0], [-1, 0]], float),)
    u = PolyConvexFn(np.zeros((1, 2)), np.zeros(1), sq, cells_hint=bad)
    with pytest.raises(CanonicalizationError) as exc:
        u.canonical()
    assert exc.value.code == "canonicalization"


def test_domain_rejects_degenerate_polygon():
    with pytest.raises(DomainError):
        Domain2.polygon(np.array([[0, 0], [1, 0], [2, 0]], float))


def test_disk_polygon_area_and_support():
    d = Domain2.disk(720, 1.0)
    assert d.area == pytest.approx(0.5 * 720 * np.sin(2 * np.pi / 720), rel=1e-14)
    assert d.support(np.array([2.0, 0.0])) == pytest.approx(2.0)


@given(seeds)
def test_check_membership_both_classes(seed):
    u = body_from_seed(seed)
    M = u.height_cap
    assert check_C_M(u, M)
    w = conjugate(u)
    assert check_C_M_star(w, u.domain, M)
    shifted = PolyConvexFn(u.slopes, u.offsets + 0.5, u.domain)
    assert "inf u = 0" in check_C_M(shifted, M + 1).conditions()
    ws = PolyConvexFn(w.slopes, w.offsets - 0.5, w.domain, primal_domain=u.domain)
    assert "(i) w(0) = 0" in check_C_M_star(ws, u.domain, M).conditions()


def test_convexify_matches_linear_program(rng):
    sq = Domain2.square(1.0)
    pts = GridConvexFn.lattice_points(sq, 9)
    vals = rng.normal(size=len(pts))
    from scipy.spatial import Delaunay

    g = GridConvexFn(pts, vals, Delaunay(pts).simplices, sq)
    c = convexify(g)
    for i in rng.choice(len(pts), 15, replace=False):
        assert c.values[i] == pytest.approx(lp_envelope(pts, vals, pts[i]), abs=1e-9)
    assert c.is_convex()


@given(seeds)
def test_convexify_idempotent_and_below(seed):
    rng = np.random.default_rng(seed)
    dom = Domain2.square(1.0)
    g = GridConvexFn.sample(lambda x: rng.normal(size=len(x)), dom, 8, convex=False)
    c = convexify(g)
    assert np.all(c.values <= g.values + 1e-15)
    assert np.abs(convexify(c).values - c.values).max() <= 1e-12


def test_grid_to_poly_is_exact():
    dom = Domain2.square(1.0)
    g = GridConvexFn.sample(lambda x: np.abs(x).sum(axis=1), dom, 9)
    u = g.to_poly()
    assert u.n_pieces == 4
    x = np.random.default_rng(0).uniform(-1, 1, (50, 2))
    assert np.abs(u.evaluate(x) - np.abs(x).sum(axis=1)).max() <= 1e-12


def test_locator_agrees_with_brute_force():
    from newton_aero import newton_radial as nr

    u = nr.revolve(nr.calibrate(1.0, 1.0, samples=64), m=64)
    assert u.n_pieces > 256
    x = np.random.default_rng(1).uniform(-0.9, 0.9, (300, 2)) * 0.7
    brute = (x @ u.slopes.T + u.offsets).max(axis=1)
    assert np.abs(u.evaluate(x) - brute).max() <= 1e-12
