"""Resistance functionals and the transforms acting on them.

``J(u) = integral over Omega of 1 / (1 + |grad u|^2)`` in primal form, and
``J*(w) = integral of 1 / (1 + |p|^2) F0(dp)`` over the Hessian measure of
the conjugate.  For polyhedral bodies both sums are finite and agree to
rounding.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import _polygon as poly
from .convex_core import (GridConvexFn, PolyConvexFn, check_C_M_star,
                          lower_hull_body)
from .errors import ClassMembershipError, DomainError, MeasureError
from .hessian_measure import f0_polyhedral

#: width of the zero bin used to separate the flat front from the open band (0, 1)
BAND_EPS = 1e-6


@dataclass(frozen=True)
class ResistanceResult:
    value: float
    method: str
    error_estimate: float = 0.0

    def to_dict(self):
        return {"value": self.value, "method": self.method, "error_estimate": self.error_estimate}

    def __float__(self):
        return float(self.value)


def _weight(p):
    p = np.asarray(p, dtype=float).reshape(-1, 2)
    return 1.0 / (1.0 + np.einsum("ij,ij->i", p, p))


def _cells_and_gradients(u):
    if isinstance(u, GridConvexFn):
        return u.triangle_areas, u.gradients
    u = u.canonical()
    return u.cell_areas, u.slopes


def primal_resistance(u):
    """Exact J for a polyhedral or triangulated body (piecewise constant integrand)."""
    if u.domain.area <= 0:
        raise DomainError("empty domain")
    areas, grads = _cells_and_gradients(u)
    value = math.fsum(areas * _weight(grads))
    return ResistanceResult(value, "primal_exact", 0.0)


def dual_resistance(F0):
    """J* as the integral of 1/(1+|p|^2) against an atomic/curve measure."""
    if np.any(F0.masses < 0):
        raise MeasureError("negative mass")
    terms = list(F0.masses * _weight(F0.atoms))
    method = "dual_atoms"
    for c in F0.curves:
        terms.extend(c.weights * c.density * _weight(c.points))
        method = "dual_curve"
    return ResistanceResult(math.fsum(terms), method, 0.0)


def dual_of(u):
    """J* computed through the conjugate and its Hessian measure."""
    from .convex_core import conjugate

    return dual_resistance(f0_polyhedral(conjugate(u)))


def resistance_bound_check(u):
    """0 < J <= area, with equality iff the gradient vanishes a.e."""
    J = primal_resistance(u).value
    areas, grads = _cells_and_gradients(u)
    flat = bool(np.all(np.linalg.norm(grads, axis=1)[areas > 0] == 0))
    A = u.domain.area
    return 0 < J <= A * (1 + 1e-15) and ((abs(J - A) <= 1e-15 * A) == flat)


# ---------------------------------------------------------------------------
# tilde transform


def _implied_height(w, Omega):
    V = w.vertices
    return float(max(0.0, (Omega.support(V) - w.evaluate(V)).max()))


def _circle_angles(w, n_min):
    angles = [2 * np.pi * np.arange(n_min) / n_min]
    for c in w.cells:
        k = len(c)
        for i in range(k):
            a, b = c[i], c[(i + 1) % k]
            for t in poly.segment_circle_crossings(a, b):
                q = a + t * (b - a)
                angles.append([math.atan2(q[1], q[0])])
    th = np.unique(np.mod(np.concatenate(angles), 2 * np.pi))
    keep = np.concatenate([[True], np.diff(th) > 1e-12])
    return th[keep]


def tilde_transform(w, M=None, n_angles=1440):
    """Replace w inside the unit disk by the convexification of its radial extension.

    Returns ``conv max{w(p), |p| w(p/|p|)}``: unchanged for |p| >= 1 and
    positively homogeneous on the unit disk.  Computed as the lower hull of
    the graph sampled at the origin, on the unit circle (uniform angles plus
    every crossing of a cell edge) and at the vertices of w outside the disk.
    """
    w = w.canonical()
    Omega = w.primal_domain
    if Omega is None:
        raise ClassMembershipError("tilde transform needs a conjugate (p-space) function")
    if M is None:
        M = w.height_cap if w.height_cap is not None else _implied_height(w, Omega)
    report = check_C_M_star(w, Omega, M)
    if not report:
        raise ClassMembershipError("input is not in the dual class",
                                   violated=report.conditions())
    th = _circle_angles(w, n_angles)
    ring = np.column_stack([np.cos(th), np.sin(th)])
    V = w.vertices
    outer = V[np.linalg.norm(V, axis=1) >= 1.0]
    pts = np.concatenate([np.zeros((1, 2)), ring, outer, w.domain.vertices])
    vals = w.evaluate(pts)
    vals[0] = 0.0
    out = lower_hull_body(np.column_stack([pts, vals]), w.domain, M, Omega)
    return _snap_pieces(out, w)


def _snap_pieces(f, ref, tol=1e-9):
    """Replace hull planes that coincide with a piece of ``ref`` by that exact piece."""
    A, b = f.slopes.copy(), f.offsets.copy()
    d = np.abs(A[:, None, :] - ref.slopes[None, :, :]).max(axis=2) \
        + np.abs(b[:, None] - ref.offsets[None, :])
    j = d.argmin(axis=1)
    hit = d[np.arange(len(A)), j] <= tol
    if np.all(hit) and len(np.unique(j)) == ref.n_pieces:
        # fixed point: hand back the input so downstream values are bit-identical
        return ref
    A[hit] = ref.slopes[j[hit]]
    b[hit] = ref.offsets[j[hit]]
    return PolyConvexFn(A, b, f.domain, f.height_cap, f.primal_domain).canonical()


def tangent_line_check(n=10_001):
    """h(r) = 1 - r/2 touches f(r) = 1/(1+r^2) at r = 0 and r = 1 and stays below."""
    r = np.linspace(0.0, 1.0, n)
    f = 1.0 / (1.0 + r * r)
    h = 1.0 - 0.5 * r
    return bool(h[0] == f[0] and h[-1] == f[-1] and np.all(h <= f + 1e-15))


# ---------------------------------------------------------------------------
# gradient moduli


@dataclass
class GradientHistogram:
    edges: np.ndarray
    masses: np.ndarray
    zero_mass: float
    band_mass: float
    steep_mass: float
    total: float


def gradient_histogram(u, edges=None, eps=BAND_EPS, exclude=None):
    """Area-weighted histogram of |grad u| with the open band (0, 1) split out.

    The zero bin is ``[0, eps)``, the band ``[eps, 1)`` and the steep part
    ``[1, inf)``.  ``exclude`` is an optional boolean mask over cells to leave
    out (e.g. seam faces).
    """
    areas, grads = _cells_and_gradients(u)
    mod = np.linalg.norm(grads, axis=1)
    if exclude is not None:
        areas = np.where(exclude, 0.0, areas)
    # a modulus within rounding of 1 is counted as steep
    one = mod >= 1.0 - 1e-12
    zero = mod < eps
    band = ~zero & ~one
    if edges is None:
        top = max(float(mod.max()), 1.0) * (1 + 1e-12) + 1e-12
        edges = np.concatenate([[0.0, eps, 1.0], np.linspace(1.0, top, 11)[1:]])
    hist, _ = np.histogram(np.minimum(mod, edges[-1]), bins=edges, weights=areas)
    return GradientHistogram(np.asarray(edges), hist, math.fsum(areas[zero]),
                             math.fsum(areas[band]), math.fsum(areas[one]), math.fsum(areas))


# ---------------------------------------------------------------------------
# convergence harness


@dataclass
class ConvergenceReport:
    ks: list
    values: list
    gaps: list
    limit: float
    tol: float
    passed: bool = field(default=False)


def convergence_harness(u_seq, u_limit, tol=1e-3, domain=None):
    """Track |J(u_k) - J(u)| along a sequence of bodies.

    ``u_seq`` yields ``(k, body)`` pairs.  ``u_limit`` is a body or a number
    (a closed-form limit value); all bodies must share one domain.
    """
    if isinstance(u_limit, (PolyConvexFn, GridConvexFn)):
        limit = primal_resistance(u_limit).value
        domain = u_limit.domain
    else:
        limit = float(u_limit)
    ks, vals, gaps = [], [], []
    for k, body in u_seq:
        if domain is None:
            domain = body.domain
        elif not _same_domain(domain, body.domain):
            raise DomainError("sequence member has a different domain", k=k)
        J = primal_resistance(body).value
        ks.append(k)
        vals.append(J)
        gaps.append(abs(J - limit))
    passed = bool(gaps) and gaps[-1] < tol
    return ConvergenceReport(ks, vals, gaps, limit, tol, passed)


def _same_domain(a, b):
    if a is b:
        return True
    if a.kind == "disk_approx" and b.kind == "disk_approx":
        return a.m == b.m and a.radius == b.radius
    return a.same_as(b, tol=1e-12)


def scaling_sequence(u, ks):
    """u_k = (1 - 1/k) u."""
    u = u.canonical()
    for k in ks:
        s = 1.0 - 1.0 / k
        yield k, PolyConvexFn(s * u.slopes, s * u.offsets, u.domain, u.height_cap,
                              cells_hint=tuple(u.cells), is_canonical=True)


def boundary_band_sequence(u, ks, M):
    """u_k = max(u, M + k M (<n_j, x> - h_j)) - min: steep walls within 1/k of the boundary.

    The walls reach height M on the boundary; subtracting the minimum keeps
    inf u_k = 0 when u attains its minimum near the boundary, so every member
    stays in C_M.
    """
    u = u.canonical()
    n, h = u.domain.halfplanes
    for k in ks:
        A = np.concatenate([u.slopes, k * M * n])
        b = np.concatenate([u.offsets, M - k * M * h])
        body = PolyConvexFn(A, b, u.domain, M).canonical()
        low = float(body.evaluate(body.vertices).min())
        yield k, PolyConvexFn(body.slopes, body.offsets - low, u.domain, M,
                              cells_hint=tuple(body.cells), is_canonical=True)


# ---------------------------------------------------------------------------
# Legendre condition and strict convexity


def legendre_eigenvalues(p):
    """Eigenvalues of the second-variation matrix of 1/(1+|p|^2).

    lambda1 = 2/(1+|p|^2)^2 and lambda2 = 2(1 - 3|p|^2)/(1+|p|^2)^3.
    """
    p = np.asarray(p, dtype=float)
    q = np.sum(p * p, axis=-1)
    return 2.0 / (1.0 + q) ** 2, 2.0 * (1.0 - 3.0 * q) / (1.0 + q) ** 3


def legendre_matrix(p):
    """-adj(D^2 f) for f(p) = 1/(1+|p|^2), from the analytic Hessian."""
    p = np.asarray(p, dtype=float)
    q = float(p @ p)
    H = (8.0 * np.outer(p, p) / (1 + q) - 2.0 * np.eye(2)) / (1 + q) ** 2
    return np.array([[-H[1, 1], H[0, 1]], [H[1, 0], -H[0, 0]]])


def legendre_sign_change():
    """Radius where lambda2 changes sign, located by root finding."""
    return brentq(lambda r: legendre_eigenvalues(np.array([r, 0.0]))[1], 0.1, 1.0,
                  xtol=1e-16, maxiter=200)


@dataclass
class ConvexityAudit:
    n_audited: int
    n_flagged: int
    flagged_fraction: float
    h: float
    max_det: float


def strict_convexity_audit(g, band, n=128, threshold=1e-6):
    """Flag lattice points where the discrete Hessian determinant is positive.

    The body is sampled on an n x n lattice over its bounding box; only points
    whose whole 3x3 stencil lies in the domain and where ``band[0] < g < band[1]``
    are audited.
    """
    lo, hi = g.domain.bbox
    h = float(max(hi - lo)) / (n - 1)
    xs = lo[0] + h * np.arange(n)
    ys = lo[1] + h * np.arange(n)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    P = np.stack([X, Y], axis=-1)
    Z = np.asarray(g.evaluate(P.reshape(-1, 2))).reshape(n, n)
    inside = g.domain.contains(P.reshape(-1, 2), tol=-h * 1e-9).reshape(n, n)
    c = (slice(1, -1), slice(1, -1))
    zxx = (Z[2:, 1:-1] - 2 * Z[c] + Z[:-2, 1:-1]) / h ** 2
    zyy = (Z[1:-1, 2:] - 2 * Z[c] + Z[1:-1, :-2]) / h ** 2
    zxy = (Z[2:, 2:] - Z[2:, :-2] - Z[:-2, 2:] + Z[:-2, :-2]) / (4 * h * h)
    det = zxx * zyy - zxy ** 2
    ok = np.ones_like(det, dtype=bool)
    for dx in (-1, 0, 1):
        for dy in (-1, 0, 1):
            ok &= inside[1 + dx:n - 1 + dx, 1 + dy:n - 1 + dy]
    ok &= (Z[c] > band[0]) & (Z[c] < band[1])
    flagged = ok & (det > threshold)
    n_ok = int(ok.sum())
    return ConvexityAudit(n_ok, int(flagged.sum()), flagged.sum() / max(n_ok, 1), h,
                          float(det[ok].max()) if n_ok else 0.0)
