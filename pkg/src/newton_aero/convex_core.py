"""Polyhedral convex functions on planar convex domains.

A body is ``u(x) = max_i (<a_i, x> + b_i)`` on a convex polygon ``Omega`` and
``+inf`` outside.  Conjugates live in p-space on a large box and remember the
primal domain they came from, so ``conjugate(conjugate(u))`` lands back on
``Omega``.  Everything here is exact up to floating point: cells come from
half-plane clipping, conjugates from the subdivision vertices.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import shapely
from scipy.spatial import ConvexHull, Delaunay, QhullError
from shapely import STRtree

from . import _polygon as poly
from .errors import CanonicalizationError, DomainError

#: scale-aware active-piece tolerance factor: tol = TOL_ACTIVE * (1 + |u(x)|)
TOL_ACTIVE = 1e-9
#: cells smaller than this are dropped by canonicalization
MIN_CELL_AREA = 1e-14
#: below this many pieces the cell complex is built from all pairs
_ALL_PAIRS_MAX = 48
#: above this many pieces evaluation searches nearby cells instead of all pieces
_LOCATE_MIN = 256


@dataclass(frozen=True, eq=False)
class Domain2:
    """Convex compact polygon with nonempty interior (counter-clockwise)."""

    vertices: np.ndarray
    kind: str = "polygon"
    m: int | None = None
    radius: float | None = None

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float).reshape(-1, 2)
        object.__setattr__(self, "vertices", v)
        if not poly.is_convex_ccw(v):
            raise DomainError("domain vertices must form a convex CCW polygon "
                              "with positive area", n_vertices=len(v))

    @classmethod
    def polygon(cls, points):
        h = poly.hull(points)
        if len(h) < 3 or poly.area(h) <= 0:
            raise DomainError("degenerate domain", n_points=len(np.atleast_2d(points)))
        return cls(h)

    @classmethod
    def disk(cls, m=720, radius=1.0):
        """Regular m-gon inscribed in the circle of the given radius."""
        if m < 16:
            raise DomainError("disk approximant needs m >= 16", m=m)
        t = 2 * np.pi * np.arange(m) / m
        v = radius * np.column_stack([np.cos(t), np.sin(t)])
        return cls(v, kind="disk_approx", m=int(m), radius=float(radius))

    @classmethod
    def square(cls, half=1.0):
        h = float(half)
        return cls(np.array([[-h, -h], [h, -h], [h, h], [-h, h]]))

    @classmethod
    def box(cls, P):
        return cls.square(P)

    @cached_property
    def area(self):
        return poly.area(self.vertices)

    @cached_property
    def halfplanes(self):
        return poly.halfplanes(self.vertices)

    @cached_property
    def scale(self):
        return float(np.abs(self.vertices).max())

    @cached_property
    def bbox(self):
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return lo, hi

    def support(self, p):
        """Support function s_Omega(p) = max over vertices of <p, x>."""
        p = np.asarray(p, dtype=float)
        return (p.reshape(-1, 2) @ self.vertices.T).max(axis=1).reshape(p.shape[:-1])

    def contains(self, x, tol=1e-12):
        x = np.asarray(x, dtype=float)
        n, h = self.halfplanes
        d = x.reshape(-1, 2) @ n.T - h
        return (d <= tol * (1.0 + self.scale)).all(axis=1).reshape(x.shape[:-1])

    def same_as(self, other, tol=1e-12):
        return (self.vertices.shape == other.vertices.shape
                and np.allclose(self.vertices, other.vertices, rtol=0, atol=tol))


def _neighbours(A, b):
    """Candidate neighbour lists for the cells of max_i(<a_i,x> + b_i).

    Cell i can only touch cells j joined to i by an edge of the lower convex
    hull of the lifted points (a_i, -b_i).  ``None`` marks pieces that are not
    lower-hull vertices; their cells are empty.
    """
    n = len(A)
    if n <= _ALL_PAIRS_MAX:
        idx = np.arange(n)
        return [np.delete(idx, i) for i in range(n)]
    pts = np.column_stack([A, -b])
    try:
        hull = ConvexHull(pts)
    except QhullError:
        hull = ConvexHull(pts, qhull_options="QJ")
    scale = 1e-12 * (1.0 + np.abs(pts).max())
    simp = hull.simplices[hull.equations[:, 2] < -scale]
    nb = [set() for _ in range(n)]
    for a, b_, c in simp:
        nb[a].update((b_, c))
        nb[b_].update((a, c))
        nb[c].update((a, b_))
    return [np.fromiter(s, dtype=int) if s else None for s in nb]


def linearity_cells(A, b, domain):
    """Cells {x in domain : piece i is maximal}, one polygon per piece."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    n = len(A)
    if n == 1:
        return [domain.vertices.copy()]
    lo, hi = domain.bbox
    pad = 1e-3 * (1.0 + float(np.max(hi - lo)))
    rect = np.array([[lo[0] - pad, lo[1] - pad], [hi[0] + pad, lo[1] - pad],
                     [hi[0] + pad, hi[1] + pad], [lo[0] - pad, hi[1] + pad]])
    dn, dh = domain.halfplanes
    cells = []
    for i, nb in enumerate(_neighbours(A, b)):
        if nb is None:
            cells.append(rect[:0])
            continue
        c = rect
        for j in nb:
            c = poly.clip(c, A[j] - A[i], b[i] - b[j])
            if len(c) == 0:
                break
        if len(c):
            viol = np.nonzero((c @ dn.T - dh).max(axis=0) > 0)[0]
            for k in viol:
                c = poly.clip(c, dn[k], dh[k])
                if len(c) == 0:
                    break
        cells.append(c)
    return cells


def _dedupe_pieces(A, b):
    scale = 1e-12 * (1.0 + np.abs(A).max() + np.abs(b).max())
    key = np.round(np.column_stack([A, b]) / scale).astype(np.int64)
    _, first = np.unique(key, axis=0, return_index=True)
    first.sort()
    return first


@dataclass(frozen=True, eq=False)
class PolyConvexFn:
    """Max of affine pieces on a polygonal domain (``+inf`` outside).

    ``primal_domain`` is set for conjugates: the function then lives on a
    p-space bounding box and its conjugate is returned on ``primal_domain``.
    """

    slopes: np.ndarray
    offsets: np.ndarray
    domain: Domain2
    height_cap: float | None = None
    primal_domain: Domain2 | None = None
    cells_hint: tuple | None = field(default=None, repr=False)
    is_canonical: bool = field(default=False, repr=False)

    def __post_init__(self):
        a = np.asarray(self.slopes, dtype=float).reshape(-1, 2)
        b = np.asarray(self.offsets, dtype=float).reshape(-1)
        if len(a) != len(b) or len(a) == 0:
            raise CanonicalizationError("need a nonempty, matching set of slopes and offsets",
                                        n_slopes=len(a), n_offsets=len(b))
        object.__setattr__(self, "slopes", a)
        object.__setattr__(self, "offsets", b)

    @classmethod
    def from_pieces(cls, pieces, domain, **kw):
        pieces = np.asarray(pieces, dtype=float).reshape(-1, 3)
        return cls(pieces[:, :2], pieces[:, 2], domain, **kw)

    @classmethod
    def constant(cls, domain, value=0.0, **kw):
        return cls(np.zeros((1, 2)), np.array([float(value)]), domain, **kw)

    @property
    def pieces(self):
        return np.column_stack([self.slopes, self.offsets])

    @property
    def n_pieces(self):
        return len(self.offsets)

    def evaluate(self, x):
        """max of the pieces, ignoring the domain."""
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, 2)
        if self.n_pieces > _LOCATE_MIN and (self.is_canonical or self.cells_hint is not None):
            out, _, _ = self.active_sets(flat)
            miss = ~np.isfinite(out)
            if np.any(miss):
                out[miss] = _max_affine(self.slopes, self.offsets, flat[miss])
        else:
            out = _max_affine(self.slopes, self.offsets, flat)
        return out.reshape(x.shape[:-1])

    @cached_property
    def _locator(self):
        cells = self.cells
        idx = np.array([i for i, c in enumerate(cells) if len(c)], dtype=int)
        lo = np.array([cells[i].min(axis=0) for i in idx])
        hi = np.array([cells[i].max(axis=0) for i in idx])
        return STRtree(shapely.box(lo[:, 0], lo[:, 1], hi[:, 0], hi[:, 1])), idx

    def active_sets(self, points, tol_factor=TOL_ACTIVE):
        """Values and active pieces at many points, searching only nearby cells.

        Returns ``(values, point_index, piece_index)``; values are ``-inf`` for
        points that lie in no cell.
        """
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        tree, idx = self._locator
        dist = 1e-9 * (1.0 + self.domain.scale)
        pi, ci = tree.query(shapely.points(pts), predicate="dwithin", distance=dist)
        ci = idx[ci]
        val = np.einsum("ij,ij->i", self.slopes[ci], pts[pi]) + self.offsets[ci]
        top = np.full(len(pts), -np.inf)
        np.maximum.at(top, pi, val)
        keep = top[pi] - val <= tol_factor * (1.0 + np.abs(top[pi]))
        pi, ci = pi[keep], ci[keep]
        order = np.lexsort((ci, pi))
        return top, pi[order], ci[order]

    def __call__(self, x):
        val = np.asarray(self.evaluate(x), dtype=float)
        inside = self.domain.contains(x)
        return np.where(inside, val, np.inf)

    @cached_property
    def cells(self):
        if self.cells_hint is not None:
            return list(self.cells_hint)
        return linearity_cells(self.slopes, self.offsets, self.domain)

    @cached_property
    def cell_areas(self):
        cells = self.cells
        out = np.zeros(len(cells))
        sizes = np.array([len(c) for c in cells])
        for k in np.unique(sizes):
            if k < 3:
                continue
            sel = np.nonzero(sizes == k)[0]
            P = np.stack([cells[i] for i in sel])
            P = P - P[:, :1]
            x, y = P[..., 0], P[..., 1]
            out[sel] = 0.5 * np.abs((x * np.roll(y, -1, axis=1) - np.roll(x, -1, axis=1) * y).sum(axis=1))
        return out

    def canonical(self):
        """Drop duplicate pieces and pieces whose cell has (near) zero area."""
        if self.is_canonical:
            return self
        if self.cells_hint is None:
            keep = _dedupe_pieces(self.slopes, self.offsets)
            base = PolyConvexFn(self.slopes[keep], self.offsets[keep], self.domain,
                                self.height_cap, self.primal_domain)
        else:
            base = self
        areas = base.cell_areas
        active = np.nonzero(areas >= MIN_CELL_AREA)[0]
        total = float(areas[active].sum())
        if abs(total - self.domain.area) > 1e-9 * self.domain.area:
            bad = _offending_cell(base, active)
            raise CanonicalizationError(
                "linearity cells do not partition the domain",
                cell_area_sum=total, domain_area=self.domain.area, offending_cell=bad)
        cells = tuple(base.cells[i] for i in active)
        return PolyConvexFn(base.slopes[active], base.offsets[active], self.domain,
                            self.height_cap, self.primal_domain, cells_hint=cells,
                            is_canonical=True)

    @cached_property
    def _vertex_data(self):
        cells = self.cells
        pts = np.concatenate([c for c in cells if len(c)] + [self.domain.vertices])
        tol = 1e-10 * (1.0 + self.domain.scale)
        reps, _ = poly.merge_points(pts, tol)
        return reps

    @property
    def vertices(self):
        """Vertices of the linearity-cell subdivision (domain vertices included)."""
        return self._vertex_data

    def active(self, x, tol_factor=TOL_ACTIVE):
        """Indices of pieces active at a single point x."""
        vals = self.slopes @ np.asarray(x, dtype=float) + self.offsets
        top = vals.max()
        return np.nonzero(top - vals <= tol_factor * (1.0 + abs(top)))[0]

    def gradient_moduli(self):
        return np.linalg.norm(self.slopes, axis=1)

    def with_cap(self, M):
        return PolyConvexFn(self.slopes, self.offsets, self.domain, M, self.primal_domain,
                            self.cells_hint, self.is_canonical)


def _max_affine(A, b, pts):
    out = np.empty(len(pts))
    step = max(1, 4_000_000 // len(b))
    for s in range(0, len(pts), step):
        out[s:s + step] = (pts[s:s + step] @ A.T + b).max(axis=1)
    return out


def _offending_cell(f, active):
    for i in active:
        c = f.cells[i]
        centroid = c.mean(axis=0)
        gap = float(f.evaluate(centroid) - (f.slopes[i] @ centroid + f.offsets[i]))
        if gap > TOL_ACTIVE * (1.0 + abs(gap)):
            return int(i)
    return None


@dataclass(frozen=True)
class Subdiff:
    """Convex polygon of slopes (possibly a point, a segment, or empty)."""

    vertices: np.ndarray

    @property
    def is_empty(self):
        return len(self.vertices) == 0

    @property
    def kind(self):
        return {0: "empty", 1: "point", 2: "segment"}.get(len(self.vertices), "polygon")

    @property
    def area(self):
        return poly.area(self.vertices)

    def contains(self, q, tol=1e-9):
        if self.is_empty:
            return False
        q = np.asarray(q, dtype=float)
        v = self.vertices
        if len(v) == 1:
            return bool(np.linalg.norm(q - v[0]) <= tol)
        if len(v) == 2:
            d = v[1] - v[0]
            t = np.clip((q - v[0]) @ d / (d @ d), 0.0, 1.0)
            return bool(np.linalg.norm(v[0] + t * d - q) <= tol)
        n, h = poly.halfplanes(v)
        return bool(np.all(n @ q - h <= tol))


def subdifferential(u, x, tol_factor=TOL_ACTIVE):
    """Hull of the slopes of the pieces active at ``x``.

    Outside the domain the result is empty.
    """
    x = np.asarray(x, dtype=float)
    if not bool(u.domain.contains(x)):
        return Subdiff(np.zeros((0, 2)))
    idx = u.active(x, tol_factor)
    return Subdiff(poly.hull(u.slopes[idx]))


def conjugate(u):
    """Exact Legendre-Fenchel conjugate of a polyhedral body.

    The pieces of ``u*`` are ``(x_v, -u(x_v))`` over the vertices ``x_v`` of
    the cell subdivision.  A primal body maps to p-space on the box
    ``[-P, P]^2`` with ``P = max |a_i| + M + 2``; a p-space function maps back
    onto its ``primal_domain``.
    """
    u = u.canonical()
    V = u.vertices
    vals = u.evaluate(V)
    if u.primal_domain is None:
        M = float(vals.max()) if u.height_cap is None else max(float(u.height_cap), float(vals.max()))
        P = float(np.linalg.norm(u.slopes, axis=1).max()) + max(M, 0.0) + 2.0
        w = PolyConvexFn(V, -vals, Domain2.box(P), height_cap=u.height_cap,
                         primal_domain=u.domain)
    else:
        w = PolyConvexFn(V, -vals, u.primal_domain, height_cap=u.height_cap)
    return w.canonical()


# ---------------------------------------------------------------------------
# grid bodies


@dataclass(frozen=True, eq=False)
class GridConvexFn:
    """Piecewise-linear function on a triangulation of a domain."""

    points: np.ndarray
    values: np.ndarray
    triangles: np.ndarray
    domain: Domain2
    M: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "points", np.asarray(self.points, dtype=float).reshape(-1, 2))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float).reshape(-1))
        object.__setattr__(self, "triangles", np.asarray(self.triangles, dtype=int).reshape(-1, 3))

    @classmethod
    def lattice_points(cls, domain, n):
        """Regular n x n lattice clipped to the domain, plus boundary samples."""
        lo, hi = domain.bbox
        xs = np.linspace(lo[0], hi[0], n)
        ys = np.linspace(lo[1], hi[1], n)
        X, Y = np.meshgrid(xs, ys)
        grid = np.column_stack([X.ravel(), Y.ravel()])
        h = max(hi - lo) / (n - 1)
        n_, h_ = domain.halfplanes
        inner = ((grid @ n_.T - h_) < -0.25 * h).all(axis=1)
        bnd = [domain.vertices]
        v = domain.vertices
        for i in range(len(v)):
            a, b = v[i], v[(i + 1) % len(v)]
            k = int(np.ceil(np.linalg.norm(b - a) / h))
            if k > 1:
                t = np.arange(1, k) / k
                bnd.append(a + t[:, None] * (b - a))
        return np.concatenate([grid[inner]] + bnd)

    @classmethod
    def sample(cls, fn, domain, n, M=None, convex=True):
        pts = cls.lattice_points(domain, n)
        vals = np.asarray(fn(pts), dtype=float)
        tri = Delaunay(pts).simplices
        g = cls(pts, vals, tri, domain, M)
        return convexify(g) if convex else g

    @cached_property
    def _planes(self):
        P = self.points[self.triangles]
        z = self.values[self.triangles]
        e1 = P[:, 1] - P[:, 0]
        e2 = P[:, 2] - P[:, 0]
        dz1 = z[:, 1] - z[:, 0]
        dz2 = z[:, 2] - z[:, 0]
        det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        gx = (dz1 * e2[:, 1] - dz2 * e1[:, 1]) / det
        gy = (e1[:, 0] * dz2 - e2[:, 0] * dz1) / det
        grad = np.column_stack([gx, gy])
        off = z[:, 0] - np.einsum("ij,ij->i", grad, P[:, 0])
        return grad, off, 0.5 * np.abs(det)

    @property
    def gradients(self):
        return self._planes[0]

    @property
    def triangle_areas(self):
        return self._planes[2]

    def evaluate(self, x):
        """Evaluate as the max of triangle planes (valid for convex data)."""
        grad, off, _ = self._planes
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, 2)
        out = np.empty(len(flat))
        for s in range(0, len(flat), 2048):
            out[s:s + 2048] = (flat[s:s + 2048] @ grad.T + off).max(axis=1)
        return out.reshape(x.shape[:-1])

    def is_convex(self, tol=1e-9):
        hull_vals = _lower_envelope(self.points, self.values)[0]
        return bool(np.all(self.values - hull_vals <= tol * (1.0 + np.abs(self.values).max())))

    def to_poly(self):
        """Exact polyhedral view: one piece per distinct triangle plane."""
        grad, off, area = self._planes
        ok = area > 0
        pieces = np.column_stack([grad[ok], off[ok]])
        tris = self.triangles[ok]
        scale = 1e-9 * (1.0 + np.abs(pieces).max())
        key = np.round(pieces / scale).astype(np.int64)
        _, inv = np.unique(key, axis=0, return_inverse=True)
        inv = inv.reshape(-1)
        slopes, offsets, cells = [], [], []
        for g in range(inv.max() + 1):
            members = np.nonzero(inv == g)[0]
            slopes.append(pieces[members[0], :2])
            offsets.append(pieces[members[0], 2])
            cells.append(poly.hull(self.points[tris[members]].reshape(-1, 2)))
        return PolyConvexFn(np.array(slopes), np.array(offsets), self.domain, self.M,
                            cells_hint=tuple(cells)).canonical()


def _lower_envelope(points, values):
    """Values of the lower convex hull at the points, and its lower facets."""
    lifted = np.column_stack([points, values])
    try:
        hull = ConvexHull(lifted)
    except QhullError:
        # affine (flat) data: already convex
        return values.copy(), Delaunay(points).simplices
    lower = hull.equations[:, 2] < -1e-12
    eq = hull.equations[lower]
    simp = hull.simplices[lower]
    slope = -eq[:, :2] / eq[:, 2:3]
    off = -eq[:, 3] / eq[:, 2]
    out = values.copy()
    on_hull = np.zeros(len(points), dtype=bool)
    on_hull[np.unique(simp)] = True
    rest = np.nonzero(~on_hull)[0]
    for s in range(0, len(rest), 512):
        idx = rest[s:s + 512]
        out[idx] = (points[idx] @ slope.T + off).max(axis=1)
    return out, simp


def convexify(g):
    """Project grid values onto their lower convex hull (same vertices).

    The result is re-triangulated by the projection of the lower hull, so its
    piecewise-linear interpolant is convex.  Output <= input pointwise and the
    operation is idempotent.
    """
    vals, simp = _lower_envelope(g.points, g.values)
    vals = np.minimum(vals, g.values)
    return GridConvexFn(g.points, vals, simp, g.domain, g.M)


# ---------------------------------------------------------------------------
# class membership reports


@dataclass(frozen=True)
class Violation:
    condition: str
    witness: tuple
    value: float


@dataclass
class CheckReport:
    passed: bool
    violations: list

    def __bool__(self):
        return self.passed

    def conditions(self):
        return sorted({v.condition for v in self.violations})


def check_C_M(u, M, tol=1e-9):
    """Report whether u is in C_M: dom u = Omega, inf u = 0, u <= M on Omega."""
    viol = []
    scale = tol * (1.0 + abs(M))
    if isinstance(u, GridConvexFn):
        pts, vals = u.points, u.values
        if not u.is_convex():
            viol.append(Violation("convex", (), float("nan")))
        rim_pts, rim_vals = pts, vals
    else:
        u = u.canonical()
        pts = u.vertices
        vals = u.evaluate(pts)
        rim_pts = u.domain.vertices
        rim_vals = u.evaluate(rim_pts)
    if not np.all(np.isfinite(vals)):
        viol.append(Violation("dom u = Omega", (), float("inf")))
    i = int(np.argmin(vals))
    if abs(vals[i]) > scale:
        viol.append(Violation("inf u = 0", tuple(pts[i]), float(vals[i])))
    j = int(np.argmax(rim_vals))
    if rim_vals[j] > M + scale:
        viol.append(Violation("u <= M", tuple(rim_pts[j]), float(rim_vals[j])))
    return CheckReport(not viol, viol)


def check_C_M_star(w, Omega, M, tol=1e-9):
    """Report whether a p-space function satisfies the dual class conditions.

    (i) w(0) = 0; (ii) w >= s_Omega - M, checked at the cell vertices (on each
    cell ``s_Omega - w`` is convex); (iii) every subgradient lies in Omega,
    checked on the slopes of the active pieces.  The bound ``w <= s_Omega`` is
    reported as condition ``upper``.
    """
    w = w.canonical()
    viol = []
    V = w.vertices
    wv = w.evaluate(V)
    scale = tol * (1.0 + abs(M) + float(np.abs(wv).max()))
    w0 = float(w.evaluate(np.zeros(2)))
    if abs(w0) > scale:
        viol.append(Violation("(i) w(0) = 0", (0.0, 0.0), w0))
    gap = Omega.support(V) - wv
    k = int(np.argmax(gap))
    if gap[k] > M + scale:
        viol.append(Violation("(ii) w >= s_Omega - M", tuple(V[k]), float(gap[k])))
    inside = Omega.contains(w.slopes, tol=tol)
    if not np.all(inside):
        k = int(np.nonzero(~inside)[0][0])
        viol.append(Violation("(iii) subgradients in Omega", tuple(w.slopes[k]), 0.0))
    if np.any(w.offsets > scale) or not np.all(inside):
        k = int(np.argmax(w.offsets))
        viol.append(Violation("upper: w <= s_Omega", tuple(w.slopes[k]), float(w.offsets[k])))
    return CheckReport(not viol, viol)


def lower_hull_body(points3, domain, height_cap=None, primal_domain=None):
    """Body whose graph is the lower convex hull of lifted points.

    The planes of the lower facets become the pieces; near-duplicate planes
    from the triangulated facets are merged by canonicalization.
    """
    pts = np.asarray(points3, dtype=float).reshape(-1, 3)
    tol = 1e-12 * (1.0 + np.abs(pts).max())
    pts, _ = _unique_rows(pts, tol)
    try:
        hull = ConvexHull(pts)
    except QhullError:
        hull = ConvexHull(pts, qhull_options="QJ")
    eq = hull.equations[hull.equations[:, 2] < -1e-12]
    slopes = -eq[:, :2] / eq[:, 2:3]
    offsets = -eq[:, 3] / eq[:, 2]
    return PolyConvexFn(slopes, offsets, domain, height_cap, primal_domain).canonical()


def _unique_rows(pts, tol):
    key = np.round(pts / tol).astype(np.int64)
    _, idx = np.unique(key, axis=0, return_index=True)
    idx.sort()
    return pts[idx], idx
