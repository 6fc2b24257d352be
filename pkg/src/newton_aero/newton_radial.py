"""The classical Newtonian body of revolution.

The side profile is given parametrically by the slope ``v >= 1``:

    u(v) = -p0/2 (ln(1/v) + v^2 + 3/4 v^4 - 7/4)
    x(v) = -p0/2 (1/v + 2v + v^3)

with ``p0 < 0``.  At ``v = 1`` the profile leaves the flat front disk of
radius ``x(1) = -2 p0`` with slope 1.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import bisect

from .convex_core import Domain2, PolyConvexFn
from .errors import CalibrationError, DomainError
from .resistance import ResistanceResult

V_BRACKET = (1.0 + 1e-12, 1e6)


def _shape_u(v):
    return np.log(1.0 / v) + v * v + 0.75 * v ** 4 - 1.75


def _shape_x(v):
    return 1.0 / v + 2.0 * v + v ** 3


def profile_point(p0, v):
    """(x, u) of the side profile at slope v."""
    v = np.asarray(v, dtype=float)
    if p0 >= 0:
        raise DomainError("p0 must be negative", p0=p0)
    if np.any(v < 1.0):
        raise DomainError("slope v must be >= 1 on the optimal branch", v_min=float(np.min(v)))
    return -0.5 * p0 * _shape_x(v), -0.5 * p0 * _shape_u(v)


def profile_derivatives(p0, v):
    """(dx/dv, du/dv) along the side profile; their ratio is the slope v."""
    v = np.asarray(v, dtype=float)
    return (-0.5 * p0 * (-1.0 / v ** 2 + 2.0 + 3.0 * v * v),
            -0.5 * p0 * (-1.0 / v + 2.0 * v + 3.0 * v ** 3))


def height_ratio(v):
    """u(v) / x(v); independent of p0 and increasing on (1, inf)."""
    v = np.asarray(v, dtype=float)
    return _shape_u(v) / _shape_x(v)


@dataclass(frozen=True, eq=False)
class RadialProfile:
    p0: float
    v: np.ndarray
    x: np.ndarray
    u: np.ndarray
    x0: float
    M: float
    residual: float

    @property
    def x_front(self):
        return -2.0 * self.p0

    @property
    def v_max(self):
        return float(self.v[-1])

    def value(self, r):
        """u as a function of the radius |x| (0 on the front disk)."""
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        side = r > self.x_front
        if np.any(side):
            out[side] = np.interp(r[side], self.x, self.u)
        return out


def calibrate(x0, M, samples=512):
    """Fit p0 and the top slope v_max so that the profile ends at (x0, M)."""
    if x0 <= 0 or M <= 0:
        raise CalibrationError("x0 and M must be positive", x0=x0, M=M)
    target = M / x0
    lo, hi = V_BRACKET
    g_lo = float(height_ratio(lo)) - target
    g_hi = float(height_ratio(hi)) - target
    if g_lo * g_hi > 0:
        raise CalibrationError("height ratio not bracketed", bracket=[lo, hi],
                               values=[g_lo, g_hi], target=target)
    vmax = bisect(lambda v: float(height_ratio(v)) - target, lo, hi,
                  xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    p0 = -x0 / (0.5 * _shape_x(vmax))
    # geometric spacing resolves the steep part near v = 1
    v = np.concatenate([[1.0], np.geomspace(1.0, vmax, samples)[1:]])
    v[-1] = vmax
    x, u = profile_point(p0, v)
    res = max(abs(u[-1] - M), abs(x[-1] - x0))
    if res > 1e-10 * (1 + M + x0):
        raise CalibrationError("calibration residual too large", residual=res)
    return RadialProfile(p0, v, x, u, float(x0), float(M), res)


def radial_resistance(profile):
    """pi x_front^2 + 2 pi * integral of x / (1 + v^2) dx over the side.

    The side integral is taken in the slope variable v, with dx = x'(v) dv.
    """
    p0 = profile.p0

    def integrand(v):
        dxdv = profile_derivatives(p0, v)[0]
        return -0.5 * p0 * _shape_x(v) * dxdv / (1.0 + v * v)

    side, err = quad(integrand, 1.0, profile.v_max, epsabs=1e-14, epsrel=1e-13, limit=200)
    front = np.pi * profile.x_front ** 2
    return ResistanceResult(front + 2 * np.pi * side, "primal_quadrature", 2 * np.pi * err)


def revolve(profile, m=720):
    """Polyhedral body of revolution on the regular m-gon of radius x0.

    Each of the m sectors carries one plane per profile interval: the plane
    rising with the secant slope along the sector's mid-normal, exact at the
    sector's two vertex rays.  The cells are the front m-gon and trapezoids.
    """
    X, U = profile.x, profile.u
    dom = Domain2.disk(m, profile.x0)
    c = np.cos(np.pi / m)
    mid = (2 * np.arange(m) + 1) * np.pi / m
    normals = np.column_stack([np.cos(mid), np.sin(mid)])
    sig = np.diff(U) / np.diff(X)
    ang = 2 * np.pi * np.arange(m + 1) / m
    rays = np.column_stack([np.cos(ang), np.sin(ang)])

    n = len(sig)
    slopes = sig[None, :, None] * normals[:, None, :] / c
    offsets = np.broadcast_to(U[:-1] - sig * X[:-1], (m, n))
    r0 = rays[:-1, None, :]
    r1 = rays[1:, None, :]
    x_in = X[None, :-1, None]
    x_out = X[None, 1:, None]
    trap = np.stack([x_in * r0, x_out * r0, x_out * r1, x_in * r1], axis=2)
    cells = (rays[:-1] * X[0],) + tuple(trap.reshape(m * n, 4, 2))
    # pieces are ordered front first, then sector-major and interval-minor like the cells
    return PolyConvexFn(np.concatenate([np.zeros((1, 2)), slopes.reshape(-1, 2)]),
                        np.concatenate([[0.0], offsets.reshape(-1)]), dom,
                        height_cap=profile.M, cells_hint=cells).canonical()


def radial_grid_body(profile, n_r=256, n_theta=256, m=720):
    """Triangulated body on a polar lattice that has a ring on the front edge."""
    from .convex_core import GridConvexFn, convexify

    dom = Domain2.disk(m, profile.x0)
    xf = profile.x_front
    n_front = max(4, int(round(n_r * xf / profile.x0)))
    radii = np.concatenate([np.linspace(0, xf, n_front + 1)[1:],
                            np.linspace(xf, profile.x0, n_r + 1)[1:]])
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    R, T = np.meshgrid(radii, th, indexing="ij")
    pts = np.column_stack([(R * np.cos(T)).ravel(), (R * np.sin(T)).ravel()])
    # keep inside the m-gon and add its vertices
    pts = pts[dom.contains(pts, tol=-1e-12)]
    pts = np.concatenate([[[0.0, 0.0]], pts, dom.vertices])
    vals = profile.value(np.linalg.norm(pts, axis=1))
    from scipy.spatial import Delaunay

    g = GridConvexFn(pts, vals, Delaunay(pts).simplices, dom, profile.M)
    return convexify(g)
