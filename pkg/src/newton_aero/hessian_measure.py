"""Hessian measure F0 of planar convex functions.

For a polyhedral p-space function the measure is atomic: every vertex ``p``
of the subdivision carries the area of its subdifferential.  Smooth patches
carry the density ``det D^2 v``, and the curve where two smooth branches
merge carries a line density.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from shapely import STRtree
from shapely.geometry import Polygon
from shapely.ops import unary_union

from . import _polygon as poly
from .convex_core import PolyConvexFn
from .errors import MeasureError, OrientationError


@dataclass(frozen=True, eq=False)
class CurvePart:
    """Line density along a parameterized p-space curve.

    ``density`` is per unit of the curve's own parameter; ``weights`` are
    quadrature weights in that parameter, so the mass is ``sum(w * density)``.
    """

    param: np.ndarray
    points: np.ndarray
    density: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        for name in ("param", "density", "weights"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).reshape(-1))
        object.__setattr__(self, "points", np.asarray(self.points, dtype=float).reshape(-1, 2))

    @property
    def mass(self):
        return math.fsum(self.weights * self.density)


@dataclass(frozen=True, eq=False)
class AtomicMeasure2:
    """Atoms plus curve densities on p-space."""

    atoms: np.ndarray
    masses: np.ndarray
    curves: tuple = field(default=())

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float).reshape(-1, 2)
        masses = np.asarray(self.masses, dtype=float).reshape(-1)
        if len(atoms) != len(masses):
            raise MeasureError("atoms and masses differ in length",
                               n_atoms=len(atoms), n_masses=len(masses))
        if np.any(masses < 0) or not np.all(np.isfinite(masses)):
            k = int(np.argmin(masses))
            raise MeasureError("negative or non-finite atom mass",
                               atom=atoms[k].tolist(), mass=float(masses[k]))
        for c in self.curves:
            if np.any(c.density < 0):
                k = int(np.argmin(c.density))
                raise MeasureError("negative curve density", point=c.points[k].tolist(),
                                   density=float(c.density[k]))
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "curves", tuple(self.curves))

    @property
    def atom_mass(self):
        return math.fsum(self.masses)

    @property
    def total_mass(self):
        return math.fsum([self.atom_mass] + [c.mass for c in self.curves])

    def mass_in_rect(self, lo, hi):
        """Atom mass inside the closed rectangle [lo, hi] (atoms only)."""
        inside = np.all((self.atoms >= lo) & (self.atoms <= hi), axis=1)
        return math.fsum(self.masses[inside])

    def merged(self, other):
        return AtomicMeasure2(np.concatenate([self.atoms, other.atoms]),
                              np.concatenate([self.masses, other.masses]),
                              self.curves + other.curves)


def _subdiff_polygons(w, points):
    """Subdifferential polygons at many points (hull of the active slopes)."""
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    _, pi, ci = w.active_sets(points)
    cut = np.searchsorted(pi, np.arange(len(points) + 1))
    return [poly.hull(w.slopes[ci[cut[k]:cut[k + 1]]]) for k in range(len(points))]


def f0_polyhedral(w):
    """Atomic F0 of a canonical polyhedral conjugate.

    Atoms sit at the subdivision vertices; each carries the area of the
    subdifferential there (the hull of the active slopes).
    """
    w = w.canonical()
    if w.primal_domain is None:
        raise MeasureError("subdifferentials are unbounded: w is not the conjugate "
                           "of a body with compact domain")
    V = w.vertices
    polys = _subdiff_polygons(w, V)
    masses = np.array([poly.area(q) for q in polys])
    # mass on the bounding box means the box truncated a subdifferential
    n, h = w.domain.halfplanes
    on_box = (V @ n.T - h).max(axis=1) > -1e-9 * (1.0 + w.domain.scale)
    if np.any(masses[on_box] > 0):
        k = int(np.nonzero(on_box & (masses > 0))[0][0])
        raise MeasureError("positive mass on the p-space bounding box", point=V[k].tolist(),
                           mass=float(masses[k]))
    keep = masses > 0
    return AtomicMeasure2(V[keep], masses[keep])


@dataclass
class SteinerReport:
    passed: bool
    eps: np.ndarray
    areas: np.ndarray
    coefficients: tuple  # (F2, 2 F1, F0): constant, linear, quadratic
    residual: float
    atom_mass: float
    overlap: tuple | None = None

    @property
    def quadratic(self):
        return self.coefficients[2]


def steiner_safe_eps(w, eta):
    """Largest eps <= 1 keeping the inflated atoms p + eps * du(p) disjoint."""
    eta = np.asarray(eta, dtype=float).reshape(-1, 2)
    if len(eta) < 2:
        return 1.0
    polys = _subdiff_polygons(w, eta)
    radius = np.array([np.linalg.norm(q, axis=1).max() for q in polys])
    from scipy.spatial import cKDTree
    d, j = cKDTree(eta).query(eta, k=2)
    gaps = d[:, 1] / np.maximum(radius + radius[j[:, 1]], 1e-300)
    # a far-away neighbour with a large subdifferential can still collide
    return float(min(1.0, 0.45 * gaps.min(), 0.45 * d[:, 1].min() / (2 * radius.max() + 1e-300)))


def steiner_check(w, eta, eps_list=None, tol=1e-10):
    """Fit area(union of p + eps * dw(p), p in eta) by a quadratic in eps.

    For a polyhedral w and disjoint inflated atoms the area is exactly
    ``F2 + 2 F1 eps + F0 eps^2`` with ``F0`` the atom mass on eta.
    """
    w = w.canonical()
    eta = np.asarray(eta, dtype=float).reshape(-1, 2)
    if eps_list is None:
        e = steiner_safe_eps(w, eta)
        eps_list = e * np.array([0.25, 0.5, 0.75, 1.0])
    eps = np.asarray(eps_list, dtype=float)
    if np.any(eps <= 0) or np.any(eps > 1):
        raise MeasureError("eps values must lie in (0, 1]", eps=eps.tolist())
    base = _subdiff_polygons(w, eta)
    atom_mass = math.fsum(poly.area(q) for q in base)
    fat = [i for i, q in enumerate(base) if len(q) >= 3]

    overlap = None
    areas = []
    for e in eps:
        shapes = [Polygon(eta[i] + e * base[i]) for i in fat]
        if shapes and overlap is None:
            tree = STRtree(shapes)
            for a, b in zip(*tree.query(shapes, predicate="intersects")):
                if a < b and shapes[a].intersection(shapes[b]).area > 0:
                    overlap = (float(e), eta[fat[a]].tolist(), eta[fat[b]].tolist())
                    break
        areas.append(unary_union(shapes).area if shapes else 0.0)
    areas = np.array(areas)
    if len(eps) >= 3:
        c2, c1, c0 = np.polyfit(eps, areas, 2)
    else:
        c2, c1, c0 = areas[-1] / eps[-1] ** 2, 0.0, 0.0
    resid = float(np.abs(np.polyval([c2, c1, c0], eps) - areas).max()) if len(eps) else 0.0
    passed = overlap is None and resid <= tol * (1.0 + atom_mass)
    return SteinerReport(passed, eps, areas, (c0, c1, c2), resid, atom_mass, overlap)


@dataclass(frozen=True, eq=False)
class SmoothPatch:
    """A C2 function on part of p-space given by value, gradient and Hessian callables.

    Callables take an ``(k, 2)`` array and return ``(k,)``, ``(k, 2)`` and
    ``(k, 2, 2)`` arrays respectively.
    """

    value: object
    grad: object
    hess: object
    convex: bool = True


def f0_density_smooth(patch, p_samples, sym_tol=1e-8):
    """det of the Hessian (the F0 density) at each sample."""
    p = np.asarray(p_samples, dtype=float).reshape(-1, 2)
    H = np.asarray(patch.hess(p), dtype=float).reshape(-1, 2, 2)
    asym = np.abs(H[:, 0, 1] - H[:, 1, 0])
    if np.any(asym > sym_tol * (1.0 + np.abs(H).max(axis=(1, 2)))):
        k = int(np.argmax(asym))
        raise MeasureError("Hessian is not symmetric", point=p[k].tolist(), asymmetry=float(asym[k]))
    det = H[:, 0, 0] * H[:, 1, 1] - H[:, 0, 1] * H[:, 1, 0]
    if patch.convex:
        tr = H[:, 0, 0] + H[:, 1, 1]
        scale = 1e-9 * (1.0 + np.abs(H).max())
        if np.any(tr < -scale) or np.any(det < -scale * (1.0 + np.abs(H).max())):
            k = int(np.argmin(np.minimum(tr, det)))
            raise MeasureError("patch flagged convex has a negative Hessian eigenvalue",
                               point=p[k].tolist())
    return det


@dataclass(frozen=True, eq=False)
class ParamCurve:
    """Sampled curve t -> p(t) with its derivative and quadrature weights in t."""

    t: np.ndarray
    points: np.ndarray
    velocity: np.ndarray
    weights: np.ndarray


def _rot90(v):
    return np.column_stack([-v[:, 1], v[:, 0]])


def f0_merge_curve(v0, v1, curve, match_tol=1e-9, offset=1e-4):
    """Line density of F0 on the curve where v0 and v1 coincide.

    The density per unit parameter is
    ``1/2 <(D^2 v0 + D^2 v1) R (grad v1 - grad v0), p'>`` with ``R`` the
    counter-clockwise quarter turn.  The curve must be oriented so that the
    region ``v0 < v1`` lies on its right; this is checked by sampling the
    difference at a small normal offset on both sides.
    """
    P = np.asarray(curve.points, dtype=float)
    dP = np.asarray(curve.velocity, dtype=float)
    scale = float(np.abs(P).max()) + 1.0
    gap = np.abs(v0.value(P) - v1.value(P))
    if np.any(gap > match_tol * scale):
        k = int(np.argmax(gap))
        raise MeasureError("v0 and v1 differ on the curve", point=P[k].tolist(), gap=float(gap[k]))

    speed = np.linalg.norm(dP, axis=1)
    right = np.column_stack([dP[:, 1], -dP[:, 0]]) / speed[:, None]
    d = offset * scale
    diff_r = v1.value(P + d * right) - v0.value(P + d * right)
    diff_l = v1.value(P - d * right) - v0.value(P - d * right)
    tiny = 1e-13 * scale
    wrong = ((diff_r < -tiny) | (diff_l > tiny))
    if np.any(wrong):
        k = int(np.nonzero(wrong)[0][0])
        raise OrientationError("region v0 < v1 is not on the right of the curve; reverse it",
                               sample=k, point=P[k].tolist())

    H = np.asarray(v0.hess(P)) + np.asarray(v1.hess(P))
    jump = _rot90(np.asarray(v1.grad(P)) - np.asarray(v0.grad(P)))
    dens = 0.5 * np.einsum("ki,kij,kj->k", dP, H, jump)
    dens = np.where(np.abs(dens) < 1e-14, 0.0, dens)
    return AtomicMeasure2(np.zeros((0, 2)), np.zeros(0),
                          (CurvePart(curve.t, P, dens, curve.weights),))


# ---------------------------------------------------------------------------
# patches used by the heel geometry


def homogeneous_patch(v, dv, ddv):
    """Patch of the positively homogeneous function r * v(theta)."""

    def polar(p):
        r = np.hypot(p[:, 0], p[:, 1])
        th = np.arctan2(p[:, 1], p[:, 0])
        er = np.column_stack([np.cos(th), np.sin(th)])
        et = _rot90(er)
        return r, th, er, et

    def value(p):
        r, th, _, _ = polar(np.atleast_2d(p))
        return r * v(th)

    def grad(p):
        _, th, er, et = polar(np.atleast_2d(p))
        return v(th)[:, None] * er + dv(th)[:, None] * et

    def hess(p):
        r, th, _, et = polar(np.atleast_2d(p))
        c = (v(th) + ddv(th)) / r
        return c[:, None, None] * np.einsum("ki,kj->kij", et, et)

    return SmoothPatch(value, grad, hess)


def cone_patch(M):
    """Patch of |p| - M."""
    return _shifted(homogeneous_patch(np.ones_like, np.zeros_like, np.zeros_like), -M)


def _shifted(patch, c):
    return SmoothPatch(lambda p: patch.value(p) + c, patch.grad, patch.hess, patch.convex)


def polar_merge_curve(v, dv, M, theta, weights):
    """Merge curve r(theta) = M / (1 - v(theta)) traversed counter-clockwise."""
    theta = np.asarray(theta, dtype=float)
    vv = v(theta)
    r = M / (1.0 - vv)
    dr = M * dv(theta) / (1.0 - vv) ** 2
    er = np.column_stack([np.cos(theta), np.sin(theta)])
    et = _rot90(er)
    return ParamCurve(theta, r[:, None] * er, dr[:, None] * er + r[:, None] * et,
                      np.asarray(weights, dtype=float))
