"""Plane-symmetric bodies: convex hull of the rim at height M and a planar stratum.

The stratum ``u0(x1)`` lives on the segment x2 = 0.  In p-space the body is
described by the profile ``v(p1) = u0*(p1) + M`` on ``[A, B]`` where the
profile closes onto the light cone ``v = |p1|``.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicHermiteSpline

from .convex_core import Domain2, lower_hull_body
from .errors import ClassMembershipError, DomainError, SingularityError, SlopeBoundError
from .resistance import ResistanceResult

SINGULAR_TOL = 1e-12


def el_rhs(p, v, dv):
    """v'' from the Euler-Lagrange equation of the profile functional."""
    p, v, dv = (np.asarray(a, dtype=float) for a in (p, v, dv))
    den = p * p - v * v
    if np.any(np.abs(den) < SINGULAR_TOL):
        k = np.unravel_index(np.argmin(np.abs(den)), np.shape(den)) if np.ndim(den) else ()
        raise SingularityError("profile touches the light cone v = |p|",
                               p=float(np.asarray(p)[k] if np.ndim(p) else p),
                               v=float(np.asarray(v)[k] if np.ndim(v) else v))
    return (v - p * dv) / den + 2 * v * dv * dv / (v * v + 1) + v * (dv * dv - 1) / (2 * den)


def lagrangian(p, v, dv):
    """Integrand of the profile functional (complex-safe)."""
    s = np.sqrt(v * v - p * p)
    return 2 * s * dv * dv / (1 + v * v) ** 2 - (p * dv - v) / (s * v * (1 + v * v))


@dataclass(frozen=True, eq=False)
class MaxwellCurve:
    """Dual profile v(p) on [A, B], with derivative samples for Hermite interpolation."""

    p: np.ndarray
    v: np.ndarray
    dv: np.ndarray
    M: float
    source: str = "ode_shot"
    exits: dict = field(default_factory=dict)
    value_fn: object = None
    deriv_fn: object = None

    @classmethod
    def from_function(cls, value, deriv, a, b, M, n=2049, source="from_u0"):
        p = np.linspace(a, b, n)
        return cls(p, value(p), deriv(p), float(M), source, {}, value, deriv)

    @property
    def A(self):
        return float(self.p[0])

    @property
    def B(self):
        return float(self.p[-1])

    def _spline(self):
        return CubicHermiteSpline(self.p, self.v, self.dv)

    def value(self, p):
        if self.value_fn is not None:
            return self.value_fn(np.asarray(p, dtype=float))
        return self._spline()(p)

    def deriv(self, p):
        if self.deriv_fn is not None:
            return self.deriv_fn(np.asarray(p, dtype=float))
        return self._spline().derivative()(p)

    def reversed(self):
        """The mirrored profile p -> -p."""
        vf, df = self.value_fn, self.deriv_fn
        return MaxwellCurve(-self.p[::-1], self.v[::-1], -self.dv[::-1], self.M, self.source,
                            dict(self.exits),
                            None if vf is None else (lambda q: vf(-q)),
                            None if df is None else (lambda q: -df(-q)))


# ---------------------------------------------------------------------------
# shooting


def _rk4_march(p0, y0, p_end, h, max_steps=10_000_000):
    """March y = (v, v') from p0 toward p_end; stop on a singularity or |v'| > 1."""
    direction = np.sign(p_end - p0)
    h = direction * abs(h)
    ps, ys = [p0], [np.array(y0, dtype=float)]
    exit_kind, exit_point = "range", None

    def f(p, y):
        return np.array([y[1], float(el_rhs(p, y[0], y[1]))])

    p, y = p0, np.array(y0, dtype=float)
    for _ in range(max_steps):
        if (p_end - p) * direction <= 1e-14:
            break
        step = h if (p_end - p - h) * direction >= 0 else p_end - p
        try:
            k1 = f(p, y)
            k2 = f(p + step / 2, y + step / 2 * k1)
            k3 = f(p + step / 2, y + step / 2 * k2)
            k4 = f(p + step, y + step * k3)
        except SingularityError:
            exit_kind, exit_point = "singularity", (p, float(y[0]))
            break
        y_new = y + step / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        p_new = p + step
        if not np.all(np.isfinite(y_new)) or y_new[0] <= abs(p_new):
            exit_kind, exit_point = "singularity", (p, float(y[0]))
            break
        if abs(y_new[1]) > 1.0:
            exit_kind, exit_point = "slope_bound", (p, float(y[0]))
            break
        p, y = p_new, y_new
        ps.append(p)
        ys.append(y)
    return np.array(ps), np.array(ys), exit_kind, exit_point


def _shoot_once(v0, dv0, p_range, h, p_start):
    a, b = p_range
    pf, yf, kf, ef = _rk4_march(p_start, (v0, dv0), b, h)
    pb, yb, kb, eb = _rk4_march(p_start, (v0, dv0), a, h)
    p = np.concatenate([pb[::-1], pf[1:]])
    y = np.concatenate([yb[::-1], yf[1:]])
    return p, y, {"left": (kb, eb), "right": (kf, ef)}


def shoot(v0, dv0=0.0, p_range=(-4.0, 4.0), step=1e-2, p_start=0.0, tol=1e-9,
          max_halvings=10, M=None):
    """Integrate the Euler-Lagrange equation from ``p_start`` in both directions.

    Classical RK4 with fixed step, halved until the sup-norm change on the
    coarse nodes falls below ``tol``.  Integration stops cleanly where the
    profile meets the light cone or where |v'| leaves [-1, 1]; the exit kind
    and point are recorded in ``exits``.
    """
    if v0 <= abs(p_start):
        raise SingularityError("start point lies on or below the light cone", v0=v0, p=p_start)
    if abs(dv0) > 1:
        raise SlopeBoundError("initial slope outside [-1, 1]", dv0=dv0)
    h = step
    p, y, exits = _shoot_once(v0, dv0, p_range, h, p_start)
    change = np.inf
    for _ in range(max_halvings):
        p2, y2, exits2 = _shoot_once(v0, dv0, p_range, h / 2, p_start)
        # coarse nodes are every other fine node, counted from the start point
        i0 = int(np.argmin(np.abs(p - p_start)))
        j0 = int(np.argmin(np.abs(p2 - p_start)))
        lo = min(i0, j0 // 2)
        hi = min(len(p) - 1 - i0, (len(p2) - 1 - j0) // 2)
        idx = np.arange(-lo, hi + 1)
        change = float(np.abs(y[i0 + idx, 0] - y2[j0 + 2 * idx, 0]).max())
        p, y, exits, h = p2, y2, exits2, h / 2
        # a comparison on fewer than 3 coarse nodes says nothing about convergence
        if change < tol and len(idx) >= 3:
            break
    if len(p) < 3:
        raise SingularityError("shot leaves the admissible region within one step; reduce step",
                               step=h, exits=exits)
    exits["step"] = h
    exits["change"] = change
    return MaxwellCurve(p, y[:, 0], y[:, 1], float(v0 if M is None else M), "ode_shot", exits)


# ---------------------------------------------------------------------------
# functional


def _sin2_map(a, b, s):
    """p = a + (b - a) sin^2(pi s / 2) and dp/ds; clusters nodes at both ends."""
    p = a + (b - a) * np.sin(0.5 * np.pi * s) ** 2
    dp = (b - a) * 0.5 * np.pi * np.sin(np.pi * s)
    return p, dp


def _check_interior(c):
    gap = c.v[1:-1] - np.abs(c.p[1:-1])
    if len(gap) and gap.min() <= 0:
        k = int(np.argmin(gap)) + 1
        raise ClassMembershipError("profile touches the light cone inside the interval",
                                   p=float(c.p[k]), v=float(c.v[k]))


def maxwell_resistance(c, n=None):
    """Resistance of the profile, integrated after p = A + (B - A) sin^2(pi s / 2).

    The map removes the inverse square-root behaviour where the profile closes
    onto the light cone.  With ``n`` given, a fixed n-point Gauss rule in s is
    used instead of adaptive quadrature.
    """
    _check_interior(c)
    a, b = c.A, c.B

    def g(s):
        p, dp = _sin2_map(a, b, s)
        v, dv = c.value(p), c.deriv(p)
        gap = np.maximum(v * v - p * p, 0.0)
        out = np.zeros_like(np.asarray(s, dtype=float))
        ok = gap > 0
        if np.any(ok):
            pk, vk, dk, sq = p[ok], v[ok], dv[ok], np.sqrt(gap[ok])
            out[ok] = (2 * sq * dk * dk / (1 + vk * vk) ** 2
                       - (pk * dk - vk) / (sq * vk * (1 + vk * vk))) * dp[ok]
        return out

    if n is not None:
        x, w = np.polynomial.legendre.leggauss(n)
        s = 0.5 * (x + 1)
        return ResistanceResult(float(0.5 * np.dot(w, g(s))), "dual_curve", float("nan"))
    val, err = quad(lambda s: float(g(np.array([s]))[0]), 0.0, 1.0, epsabs=1e-12, epsrel=1e-11,
                    limit=400)
    return ResistanceResult(float(val), "dual_curve", float(err))


def _action_gradient(p, v):
    """d/dv_i of the midpoint-rule action, divided by h, at interior nodes."""
    h = p[1] - p[0]
    pm = 0.5 * (p[1:] + p[:-1])
    vm = 0.5 * (v[1:] + v[:-1])
    dm = np.diff(v) / h
    d = 1e-30
    Lv = lagrangian(pm, vm + 1j * d, dm).imag / d
    Ld = lagrangian(pm, vm, dm + 1j * d).imag / d
    # node i touches intervals i-1 and i
    grad = h * (0.5 * Lv[:-1] + Ld[:-1] / h + 0.5 * Lv[1:] - Ld[1:] / h)
    return grad / h


def el_residual(c, h=None, trim=0.1):
    """Max-norm of the discrete action gradient on a uniform grid.

    The profile is resampled on a uniform grid of spacing ``h`` over its
    interval with a fraction ``trim`` cut from each end.
    """
    a, b = c.A, c.B
    span = b - a
    if span <= 0:
        raise DomainError("profile interval is empty", A=a, B=b)
    lo, hi = a + trim * span, b - trim * span
    if h is None:
        h = (hi - lo) / 256
    n = max(int(round((hi - lo) / h)), 2)
    p = np.linspace(lo, hi, n + 1)
    v = np.asarray(c.value(p), dtype=float)
    return float(np.abs(_action_gradient(p, v)).max())


# ---------------------------------------------------------------------------
# strata and bodies


@dataclass(frozen=True, eq=False)
class Stratum:
    """Convex profile u0 on a sub-interval of [-1, 1] (piecewise linear between samples)."""

    x: np.ndarray
    u: np.ndarray
    M: float

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        u = np.asarray(self.u, dtype=float)
        order = np.argsort(x, kind="stable")
        object.__setattr__(self, "x", x[order])
        object.__setattr__(self, "u", u[order])

    @classmethod
    def from_function(cls, f, M, n=513, interval=(-1.0, 1.0)):
        x = np.linspace(*interval, n)
        return cls(x, f(x), float(M))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.interp(x, self.x, self.u)
        return np.where((x < self.x[0] - 1e-12) | (x > self.x[-1] + 1e-12), np.inf, out)

    def is_convex(self, tol=1e-10):
        s = np.diff(self.u) / np.maximum(np.diff(self.x), 1e-300)
        return bool(np.all(np.diff(s) >= -tol * (1 + np.abs(s).max())))


def stratum_from_dual(c, tol=1e-12):
    """u0 from the profile by 1D conjugation, sampled at x = v'(p).

    Each profile node gives the exact point (v'(p), p v'(p) - v(p) + M) of
    the stratum's graph.
    """
    if np.any(np.abs(c.dv) > 1 + tol):
        k = int(np.argmax(np.abs(c.dv)))
        raise SlopeBoundError("profile slope exceeds 1; stratum would leave [-1, 1]",
                              p=float(c.p[k]), dv=float(c.dv[k]))
    dv = np.clip(c.dv, -1.0, 1.0)
    x = dv
    u = c.p * dv - c.v + c.M
    # collapse repeated abscissae (flat pieces of v') to their lowest value
    xs, inv = np.unique(np.round(x, 14), return_inverse=True)
    us = np.full(len(xs), np.inf)
    np.minimum.at(us, inv.reshape(-1), u)
    return Stratum(xs, us, c.M)


def dual_from_stratum(s, p):
    """v(p) = M + max over stratum samples of (p x - u0(x))."""
    p = np.asarray(p, dtype=float)
    return s.M + (p[:, None] * s.x[None, :] - s.u[None, :]).max(axis=1)


def assemble_body(u0, M, m=720):
    """Lower convex hull of the stratum samples (x, 0, u0) and the rim m-gon at height M."""
    if abs(float(np.min(u0.u))) > 1e-12 * (1 + M):
        raise ClassMembershipError("stratum minimum must be 0", min=float(np.min(u0.u)))
    if float(np.max(u0.u)) > M * (1 + 1e-12):
        raise ClassMembershipError("stratum exceeds the height cap", max=float(np.max(u0.u)), M=M)
    if u0.x[0] < -1 - 1e-12 or u0.x[-1] > 1 + 1e-12:
        raise DomainError("stratum leaves [-1, 1]", x_min=float(u0.x[0]), x_max=float(u0.x[-1]))
    dom = Domain2.disk(m, 1.0)
    pts = np.concatenate([np.column_stack([u0.x, np.zeros_like(u0.x), u0.u]),
                          np.column_stack([dom.vertices, np.full(m, float(M))])])
    return lower_hull_body(pts, dom, M)


def quadratic_stratum_curve(M, n=2049):
    """Profile of the stratum u0 = M x^2: v = M + p^2 / (4M) on [-2M, 2M]."""
    return MaxwellCurve.from_function(lambda p: M + p * p / (4 * M), lambda p: p / (2 * M),
                                      -2 * M, 2 * M, M, n)


def point_stratum_curve(M, n=2049):
    """Profile of the point stratum (cone body): v = M on [-M, M]."""
    return MaxwellCurve.from_function(lambda p: np.full(np.shape(p), float(M)),
                                      lambda p: np.zeros(np.shape(p)), -M, M, M, n)
