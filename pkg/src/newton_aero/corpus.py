"""Seeded random polyhedral bodies in C_M for property checks."""

import numpy as np

from .convex_core import Domain2, PolyConvexFn


def random_domain(rng, n_points=(5, 12), min_area=0.2):
    while True:
        k = int(rng.integers(*n_points, endpoint=True))
        r = np.sqrt(rng.uniform(0.2, 1.0, k))
        t = rng.uniform(0, 2 * np.pi, k)
        pts = np.column_stack([r * np.cos(t), r * np.sin(t)])
        try:
            dom = Domain2.polygon(pts)
        except ValueError:
            continue
        if dom.area >= min_area:
            return dom


def random_body(rng, domain=None, n_pieces=(3, 20), slope_scale=1.5):
    """max of random planes on a random polygon, shifted so that min u = 0.

    Returns the canonical body with ``height_cap`` set to its maximum.
    """
    dom = random_domain(rng) if domain is None else domain
    k = int(rng.integers(*n_pieces, endpoint=True))
    A = rng.normal(scale=slope_scale, size=(k, 2))
    b = rng.normal(size=k)
    u = PolyConvexFn(A, b, dom).canonical()
    low = float(u.evaluate(u.vertices).min())
    u = PolyConvexFn(u.slopes, u.offsets - low, dom).canonical()
    M = float(u.evaluate(dom.vertices).max())
    return u.with_cap(M)


def corpus(n, seed=0, **kw):
    rng = np.random.default_rng(seed)
    return [random_body(rng, **kw) for _ in range(n)]


def band_body(inner=0.3, outer=0.6, band_slope=0.5, wall_slope=3.0, m=64):
    """Radial-like body on the m-gon: flat core, slope-1/2 annulus, steep outer wall.

    Each of the m directions contributes two planes, so the gradient modulus
    is exactly ``band_slope`` on the annulus ``inner < <n_k, x> < outer``.
    """
    dom = Domain2.disk(m, 1.0)
    mid = (2 * np.arange(m) + 1) * np.pi / m
    n = np.column_stack([np.cos(mid), np.sin(mid)])
    slopes = np.concatenate([np.zeros((1, 2)), band_slope * n, wall_slope * n])
    offsets = np.concatenate([[0.0], np.full(m, -band_slope * inner),
                              np.full(m, band_slope * (outer - inner) - wall_slope * outer)])
    u = PolyConvexFn(slopes, offsets, dom).canonical()
    return u.with_cap(float(u.evaluate(dom.vertices).max()))
