"""Bodies with a flat front set and a developable side over the unit disk.

The body is ``u = (delta_Omega + M) v delta_omega``: the convex hull of the
rim circle at height M and a compact convex front set ``omega`` at height 0.
``omega`` is described by its support function ``v(theta)`` and the side is
carried in p-space by the merge curve ``r(theta) = M / (1 - v(theta))``.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from . import _polygon as poly
from .convex_core import Domain2, lower_hull_body
from .errors import ClassMembershipError, DomainError
from .hessian_measure import AtomicMeasure2, CurvePart
from .resistance import ResistanceResult

N_THETA = 4096
GAUSS_ORDER = 8
_GX, _GW = np.polynomial.legendre.leggauss(GAUSS_ORDER)
TWO_PI = 2 * np.pi


def newton_f(r):
    return 1.0 / (1.0 + r * r)


def newton_df(r):
    return -2.0 * r / (1.0 + r * r) ** 2


def legendre_coefficient(r):
    """1 - f(r) + r f'(r), which equals r^2 (r^2 - 1) / (1 + r^2)^2."""
    return 1.0 - newton_f(r) + r * newton_df(r)


@dataclass(frozen=True, eq=False)
class SupportFn:
    """Support function of a front set, piecewise smooth in theta.

    ``breaks`` are the switch angles (polygon edge normals) where v' jumps;
    they are always quadrature panel boundaries.
    """

    theta: np.ndarray
    v: np.ndarray
    generator: str
    value: object
    deriv: object
    deriv2: object
    breaks: np.ndarray = field(default_factory=lambda: np.zeros(0))
    vertices: np.ndarray | None = None
    radius: float | None = None

    # -- constructors -------------------------------------------------------

    @classmethod
    def _build(cls, value, deriv, deriv2, generator, breaks=(), n=N_THETA, **kw):
        theta = TWO_PI * np.arange(n) / n
        return cls(theta, value(theta), generator, value, deriv, deriv2,
                   np.sort(np.mod(np.asarray(breaks, dtype=float), TWO_PI)), **kw)

    @classmethod
    def polygon(cls, points, n=N_THETA):
        W = poly.hull(points)
        if len(W) == 1:
            return cls.point(W[0], n)
        if len(W) == 2:
            W = np.array([W[0], W[1]])
        k = len(W)
        e = np.roll(W, -1, axis=0) - W
        # outward normal angles of the edges are the switch angles
        normals = np.arctan2(-e[:, 0], e[:, 1]) if k > 2 else None
        if k == 2:
            d = W[1] - W[0]
            normals = np.array([np.arctan2(-d[0], d[1]), np.arctan2(d[0], -d[1])])

        def active(theta):
            t = np.asarray(theta, dtype=float)
            dirs = np.stack([np.cos(t), np.sin(t)], axis=-1)
            return np.argmax(dirs @ W.T, axis=-1)

        def value(theta):
            t = np.asarray(theta, dtype=float)
            w = W[active(t)]
            return w[..., 0] * np.cos(t) + w[..., 1] * np.sin(t)

        def deriv(theta):
            t = np.asarray(theta, dtype=float)
            w = W[active(t)]
            return -w[..., 0] * np.sin(t) + w[..., 1] * np.cos(t)

        def deriv2(theta):
            return -value(theta)

        return cls._build(value, deriv, deriv2, "polygon", normals, n, vertices=W)

    @classmethod
    def point(cls, w, n=N_THETA):
        w = np.asarray(w, dtype=float)
        return cls._build(lambda t: w[0] * np.cos(t) + w[1] * np.sin(t),
                          lambda t: -w[0] * np.sin(t) + w[1] * np.cos(t),
                          lambda t: -(w[0] * np.cos(t) + w[1] * np.sin(t)),
                          "polygon", (), n, vertices=w[None, :])

    @classmethod
    def disk(cls, rho, n=N_THETA):
        return cls._build(lambda t: np.full(np.shape(t), float(rho)),
                          lambda t: np.zeros(np.shape(t)), lambda t: np.zeros(np.shape(t)),
                          "disk", (), n, radius=float(rho))

    @classmethod
    def regular(cls, m, R, phase=0.0, n=N_THETA):
        """Regular m-gon of circumradius R (m = 2 gives a segment of length 2R)."""
        t = phase + TWO_PI * np.arange(m) / m
        return cls.polygon(R * np.column_stack([np.cos(t), np.sin(t)]), n)

    @classmethod
    def from_callable(cls, value, deriv, deriv2, breaks=(), n=N_THETA):
        return cls._build(value, deriv, deriv2, "free", breaks, n)

    @classmethod
    def from_samples(cls, theta, v, n=N_THETA):
        """Project periodic samples onto support functions of convex polygons.

        The samples define points ``v e_theta + v' e_theta^perp`` of the
        would-be boundary; their convex hull is the admissible front.
        """
        theta = np.asarray(theta, dtype=float)
        v = np.asarray(v, dtype=float)
        h = theta[1] - theta[0]
        dv = (np.roll(v, -1) - np.roll(v, 1)) / (2 * h)
        c, s = np.cos(theta), np.sin(theta)
        pts = np.column_stack([v * c - dv * s, v * s + dv * c])
        return cls.polygon(pts, n)

    # -- geometry -----------------------------------------------------------

    def rotated(self, alpha):
        if self.generator == "polygon":
            c, s = np.cos(alpha), np.sin(alpha)
            return SupportFn.polygon(self.vertices @ np.array([[c, s], [-s, c]]), len(self.theta))
        f, d, d2 = self.value, self.deriv, self.deriv2
        out = SupportFn._build(lambda t: f(t - alpha), lambda t: d(t - alpha),
                               lambda t: d2(t - alpha), self.generator, self.breaks + alpha,
                               len(self.theta), radius=self.radius)
        return out

    def translated(self, shift):
        if self.generator != "polygon":
            raise DomainError("translation is implemented for polygon fronts")
        return SupportFn.polygon(self.vertices + np.asarray(shift), len(self.theta))

    @property
    def max_value(self):
        if self.generator == "polygon":
            return float(np.linalg.norm(self.vertices, axis=1).max())
        nodes, _ = self.quadrature()
        return float(max(self.value(nodes).max(), self.v.max()))

    def quadrature(self, n_panels=None):
        """Gauss nodes and weights on panels bounded by the uniform grid and the breaks."""
        n = len(self.theta) if n_panels is None else n_panels
        edges = np.union1d(TWO_PI * np.arange(n + 1) / n, self.breaks)
        a, b = edges[:-1], edges[1:]
        keep = b - a > 1e-15
        a, b = a[keep], b[keep]
        half = 0.5 * (b - a)
        nodes = (0.5 * (a + b))[:, None] + half[:, None] * _GX[None, :]
        weights = half[:, None] * _GW[None, :]
        return nodes.ravel(), weights.ravel()

    def convexity_defect(self):
        """Most negative v + v'' on the arcs (0 for polygons and disks)."""
        nodes, _ = self.quadrature()
        return float(min(0.0, (self.value(nodes) + self.deriv2(nodes)).min()))

    def polygon_vertices(self, n=None):
        """Vertices of the front (sampled boundary for non-polygons)."""
        if self.generator == "polygon":
            return self.vertices
        k = n or len(self.theta)
        t = TWO_PI * np.arange(k) / k
        v, dv = self.value(t), self.deriv(t)
        c, s = np.cos(t), np.sin(t)
        return poly.hull(np.column_stack([v * c - dv * s, v * s + dv * c]))


def _check_front(omega):
    vmax = omega.max_value
    if vmax >= 1.0:
        raise ClassMembershipError("front set touches the boundary (v >= 1)", v_max=vmax)


def _integrand(v, dv, M):
    r = M / (1.0 - v)
    f = newton_f(r)
    return v * v + (1.0 - v * v) * f - legendre_coefficient(r) * dv * dv


def reduced_functional(omega, M, n_panels=None):
    """J* = 1/2 integral of v^2 + (1 - v^2) f(r) - (1 - f + r f') v'^2 over theta."""
    _check_front(omega)
    nodes, w = omega.quadrature(n_panels)
    val = 0.5 * np.dot(w, _integrand(omega.value(nodes), omega.deriv(nodes), M))
    n = len(omega.theta) if n_panels is None else n_panels
    nodes2, w2 = omega.quadrature(max(n // 2, 1))
    coarse = 0.5 * np.dot(w2, _integrand(omega.value(nodes2), omega.deriv(nodes2), M))
    return ResistanceResult(float(val), "dual_curve", float(abs(val - coarse)))


def front_area(omega):
    """Area of the front set as 1/2 integral of v^2 - v'^2."""
    nodes, w = omega.quadrature()
    v, dv = omega.value(nodes), omega.deriv(nodes)
    return float(0.5 * np.dot(w, v * v - dv * dv))


def merge_radius(omega, M, theta):
    return M / (1.0 - omega.value(np.asarray(theta, dtype=float)))


def merge_density(omega, M, theta):
    """Line density 1/2 (1 + v + v'') (1 - v) of F0 on the merge curve, per d theta.

    Valid inside smooth arcs; switch angles carry atoms, see ``merge_atoms``.
    """
    t = np.asarray(theta, dtype=float)
    v = omega.value(t)
    return 0.5 * (1.0 + v + omega.deriv2(t)) * (1.0 - v)


def merge_atoms(omega, M):
    """Switch angles, their atom masses 1/2 lambda (1 - v) and p-space positions.

    ``lambda`` is the jump of v' across the switch angle (the edge length for
    polygon fronts), always positive.
    """
    th = omega.breaks
    if len(th) == 0:
        return th, np.zeros(0), np.zeros((0, 2))
    d = 1e-9
    if omega.generator == "polygon":
        W = omega.vertices
        e = lambda t: np.column_stack([np.cos(t), np.sin(t)])
        w_after = W[np.argmax(e(th + d) @ W.T, axis=1)]
        w_before = W[np.argmax(e(th - d) @ W.T, axis=1)]
        jump = np.einsum("ij,ij->i", w_after - w_before, np.column_stack([-np.sin(th), np.cos(th)]))
    else:
        jump = omega.deriv(th + d) - omega.deriv(th - d) - d * (omega.deriv2(th + d)
                                                              + omega.deriv2(th - d))
    v = omega.value(th)
    r = M / (1.0 - v)
    pts = r[:, None] * np.column_stack([np.cos(th), np.sin(th)])
    return th, 0.5 * jump * (1.0 - v), pts


def merge_measure(omega, M):
    """F0 of the body's conjugate: the front atom at 0 plus the merge-curve part."""
    _check_front(omega)
    nodes, w = omega.quadrature()
    r = merge_radius(omega, M, nodes)
    pts = r[:, None] * np.column_stack([np.cos(nodes), np.sin(nodes)])
    curve = CurvePart(nodes, pts, merge_density(omega, M, nodes), w)
    _, masses, apts = merge_atoms(omega, M)
    atoms = np.concatenate([np.zeros((1, 2)), apts])
    return AtomicMeasure2(atoms, np.concatenate([[front_area(omega)], masses]), (curve,))


def heel_body(omega, M, m=720):
    """Polyhedral body: convex hull of the front at height 0 and the rim m-gon at height M."""
    dom = Domain2.disk(m, 1.0)
    front = omega.polygon_vertices()
    pts = np.concatenate([np.column_stack([front, np.zeros(len(front))]),
                          np.column_stack([dom.vertices, np.full(m, float(M))])])
    return lower_hull_body(pts, dom, M)


# ---------------------------------------------------------------------------
# regular polygons


def _arc_nodes(m, n=N_THETA):
    """Gauss nodes on one arc [-pi/m, pi/m] of a regular m-gon with a vertex at angle 0."""
    k = max(1, n // m)
    edges = np.linspace(-np.pi / m, np.pi / m, k + 1)
    a, b = edges[:-1], edges[1:]
    half = 0.5 * (b - a)
    nodes = (0.5 * (a + b))[:, None] + half[:, None] * _GX[None, :]
    return nodes.ravel(), (half[:, None] * _GW[None, :]).ravel()


def regular_functional(m, M, R, n=N_THETA):
    """reduced_functional of the regular m-gon of circumradius R (vectorized in R)."""
    R = np.atleast_1d(np.asarray(R, dtype=float))
    t, w = _arc_nodes(m, n)
    v = R[:, None] * np.cos(t)[None, :]
    dv = -R[:, None] * np.sin(t)[None, :]
    out = 0.5 * m * (_integrand(v, dv, M) @ w)
    return out if out.size > 1 else float(out[0])


@dataclass
class RegularOptimum:
    m: int
    M: float
    R: float
    J: float
    r_min: float
    legendre_ok: bool


def optimize_regular(m, M, n=N_THETA, r_cap=1.0 - 1e-9):
    """Minimize the resistance over the circumradius of the regular m-gon."""
    if m < 2 or M <= 0:
        raise DomainError("need m >= 2 and M > 0", m=m, M=M)
    grid = np.linspace(0.0, r_cap, 201)
    vals = regular_functional(m, M, grid, n)
    k = int(np.argmin(vals))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    res = minimize_scalar(lambda R: regular_functional(m, M, R, n), bounds=(lo, hi),
                          method="bounded", options={"xatol": 1e-10})
    R, J = float(res.x), float(res.fun)
    if vals[k] < J:
        R, J = float(grid[k]), float(vals[k])
    if R > 1.0 - 1e-6:
        raise ClassMembershipError("optimal front reaches the boundary", m=m, M=M, R=R)
    v_min = 0.0 if m == 2 else R * np.cos(np.pi / m)
    r_min = M / (1.0 - v_min)
    return RegularOptimum(m, float(M), R, J, float(r_min), bool(r_min >= 1.0 - 1e-9))


def disk_front_value(rho, M):
    """Closed form for v = rho: pi (rho^2 + (1 - rho^2) / (1 + M^2 / (1 - rho)^2))."""
    return np.pi * (rho ** 2 + (1.0 - rho ** 2) / (1.0 + (M / (1.0 - rho)) ** 2))


def optimize_disk(M):
    grid = np.linspace(0.0, 1.0 - 1e-9, 2001)
    k = int(np.argmin(disk_front_value(grid, M)))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    res = minimize_scalar(lambda r: disk_front_value(r, M), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12})
    return float(res.x), float(res.fun)


def best_regular(M, m_max=64, n=N_THETA, m_min=3):
    """Best regular polygon with m_min <= m <= m_max."""
    best = None
    for m in range(m_min, m_max + 1):
        opt = optimize_regular(m, M, n)
        if best is None or opt.J < best.J:
            best = opt
    return best


@dataclass
class TransitionReport:
    M_crit: float
    bracket: tuple
    evaluations: int


def sweep_transition(M_range=(0.5, 3.0), m_max=64, n=N_THETA, xtol=1e-8):
    """Height above which the biangle front beats every regular m-gon, 3 <= m <= m_max."""
    count = [0]

    def gap(M):
        count[0] += 1
        return optimize_regular(2, M, n).J - best_regular(M, m_max, n).J

    lo, hi = M_range
    g_lo, g_hi = gap(lo), gap(hi)
    if g_lo * g_hi > 0:
        raise ClassMembershipError("no crossover between biangle and polygon fronts",
                                   M_range=list(M_range), gaps=[g_lo, g_hi])
    M_crit = brentq(gap, lo, hi, xtol=xtol)
    return TransitionReport(float(M_crit), (lo, hi), count[0])


def sweep_table(M_values, m_max=64, n=N_THETA):
    """Rows (M, m, R*, J*) for every M and 2 <= m <= m_max."""
    rows = []
    for M in M_values:
        for m in range(2, m_max + 1):
            opt = optimize_regular(m, M, n)
            rows.append((float(M), m, opt.R, opt.J))
    return rows


# ---------------------------------------------------------------------------
# perturbation audit


@dataclass
class PerturbationReport:
    M: float
    base_value: float
    trials: int
    improvements: int
    best_delta: float
    kinds: dict
    legendre_ok: bool


def _round_corner(W, k, frac):
    """Replace vertex k by a circular arc tangent to both adjacent edges."""
    n = len(W)
    a, c, b = W[k - 1], W[k], W[(k + 1) % n]
    u1 = (a - c) / np.linalg.norm(a - c)
    u2 = (b - c) / np.linalg.norm(b - c)
    half = 0.5 * np.arccos(np.clip(u1 @ u2, -1, 1))
    t = frac * min(np.linalg.norm(a - c), np.linalg.norm(b - c))
    rad = t * np.tan(half)
    bis = (u1 + u2) / np.linalg.norm(u1 + u2)
    centre = c + bis * (t / np.cos(half))
    p1, p2 = c + t * u1, c + t * u2
    a1 = np.arctan2(*(p1 - centre)[::-1])
    a2 = np.arctan2(*(p2 - centre)[::-1])
    da = np.mod(a2 - a1 + np.pi, TWO_PI) - np.pi
    arc = centre + rad * np.column_stack([np.cos(a1 + np.linspace(0, 1, 64) * da),
                                          np.sin(a1 + np.linspace(0, 1, 64) * da)])
    return np.concatenate([np.delete(W, k, axis=0), arc])


def _truncate(W, k, frac):
    n = len(W)
    a, c, b = W[k - 1], W[k], W[(k + 1) % n]
    return np.concatenate([np.delete(W, k, axis=0), [c + frac * (a - c), c + frac * (b - c)]])


def perturbation_audit(omega, M, trials=200, seed=0, scale=1e-2, tol=1e-9):
    """Random admissible perturbations of a polygon front; count those that lower J.

    Perturbation kinds: vertex jitter, corner truncation, corner rounding,
    translation, and smooth trigonometric bumps projected back onto convex
    fronts.  All are kept strictly inside the unit disk.
    """
    if omega.generator != "polygon":
        raise DomainError("perturbation audit expects a polygon front")
    rng = np.random.default_rng(seed)
    W = omega.vertices
    R = float(np.linalg.norm(W, axis=1).max())
    J0 = reduced_functional(omega, M).value
    kinds = ("jitter", "truncate", "round", "translate", "smooth")
    stats = {k: 0 for k in kinds}
    improvements = 0
    best = np.inf
    theta = omega.theta
    for _ in range(trials):
        kind = kinds[rng.integers(len(kinds))]
        amp = scale * R * rng.uniform(0.05, 1.0)
        if kind == "jitter":
            cand = SupportFn.polygon(W + amp * rng.normal(size=W.shape))
        elif kind == "truncate" and len(W) > 2:
            cand = SupportFn.polygon(_truncate(W, rng.integers(len(W)), rng.uniform(0.01, 0.2)))
        elif kind == "round" and len(W) > 2:
            cand = SupportFn.polygon(_round_corner(W, rng.integers(len(W)), rng.uniform(0.01, 0.2)))
        elif kind == "translate":
            cand = omega.translated(amp * rng.normal(size=2))
        else:
            k = rng.integers(1, 9)
            bump = amp * (rng.normal() * np.cos(k * theta) + rng.normal() * np.sin(k * theta)) / k ** 2
            cand = SupportFn.from_samples(theta, omega.v + bump)
        if cand.max_value >= 1.0:
            continue
        stats[kind] += 1
        delta = reduced_functional(cand, M).value - J0
        best = min(best, delta)
        if delta < -tol:
            improvements += 1
    r = np.linspace(1.0, 50.0, 1000)
    closed = r * r * (r * r - 1) / (1 + r * r) ** 2
    leg_ok = bool(np.all(legendre_coefficient(r) >= -1e-15)
                  and np.allclose(legendre_coefficient(r), closed, rtol=0, atol=1e-14))
    return PerturbationReport(float(M), J0, trials, improvements, float(best), stats, leg_ok)


def circle_mode_audit(rho, M, modes=range(2, 13), trials=200, seed=0, tol=1e-9):
    """Perturb the disk front by eps cos(k theta + phase) with eps (k^2 - 1) <= rho.

    Returns the number of improving perturbations and the most negative
    second variation found.
    """
    rng = np.random.default_rng(seed)
    base = SupportFn.disk(rho)
    J0 = reduced_functional(base, M).value
    modes = list(modes)
    improvements, best = 0, np.inf
    second = {}
    for _ in range(trials):
        k = modes[rng.integers(len(modes))]
        eps = rho / (k * k - 1) * rng.uniform(0.01, 1.0)
        ph = rng.uniform(0, TWO_PI)
        cand = SupportFn.from_callable(lambda t: rho + eps * np.cos(k * t + ph),
                                       lambda t: -eps * k * np.sin(k * t + ph),
                                       lambda t: -eps * k * k * np.cos(k * t + ph))
        if cand.max_value >= 1.0:
            continue
        delta = reduced_functional(cand, M).value - J0
        best = min(best, delta)
        improvements += int(delta < -tol)
    for k in modes:
        e = 1e-4 * rho / (k * k - 1)

        def J(s):
            return reduced_functional(SupportFn.from_callable(
                lambda t: rho + s * np.cos(k * t), lambda t: -s * k * np.sin(k * t),
                lambda t: -s * k * k * np.cos(k * t)), M).value

        second[k] = (J(e) + J(-e) - 2 * J0) / e ** 2
    return improvements, float(best), second
