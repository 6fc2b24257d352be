"""Small exact-as-floats helpers for convex polygons in the plane.

Polygons are ``(k, 2)`` float arrays listed counter-clockwise without a
repeated closing vertex.  Degenerate results (points, segments) are allowed
and simply have zero area.
"""

import numpy as np
from scipy.spatial import cKDTree


def signed_area(poly):
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    # shift to the first vertex to limit cancellation for far-away polygons
    x = x - x[0]
    y = y - y[0]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def area(poly):
    return abs(signed_area(poly))


def hull(points):
    """Counter-clockwise convex hull (Andrew's monotone chain).

    Collinear boundary points are dropped.  Works for 1 or 2 points and for
    collinear input, where it returns the extreme points.
    """
    pts = np.unique(np.asarray(points, dtype=float).reshape(-1, 2), axis=0)
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper = []
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


def clip(poly, normal, offset, eps=0.0):
    """Intersect ``poly`` with the half-plane ``<normal, x> <= offset``."""
    if len(poly) == 0:
        return poly
    d = poly @ normal - offset
    if np.all(d <= eps):
        return poly
    if np.all(d > -eps):
        return poly[:0]
    out = []
    k = len(poly)
    for i in range(k):
        j = (i + 1) % k
        pi, di, pj, dj = poly[i], d[i], poly[j], d[j]
        if di <= 0.0:
            out.append(pi)
        if (di < 0.0 < dj) or (dj < 0.0 < di):
            t = di / (di - dj)
            out.append(pi + t * (pj - pi))
    if not out:
        return poly[:0]
    res = np.array(out)
    # drop consecutive near-duplicates produced by vertices on the line
    keep = np.ones(len(res), dtype=bool)
    scale = 1e-14 * (1.0 + np.abs(res).max())
    for i in range(1, len(res)):
        if np.all(np.abs(res[i] - res[i - 1]) <= scale):
            keep[i] = False
    res = res[keep]
    if len(res) > 1 and np.all(np.abs(res[0] - res[-1]) <= scale):
        res = res[:-1]
    return res


def halfplanes(poly):
    """Outward unit normals ``n_j`` and offsets ``h_j`` with poly = {n.x <= h}."""
    e = np.roll(poly, -1, axis=0) - poly
    n = np.column_stack([e[:, 1], -e[:, 0]])
    n /= np.linalg.norm(n, axis=1)[:, None]
    h = np.einsum("ij,ij->i", n, poly)
    return n, h


def is_convex_ccw(poly, tol=1e-12):
    if len(poly) < 3:
        return False
    e = np.roll(poly, -1, axis=0) - poly
    e2 = np.roll(e, -1, axis=0)
    cr = e[:, 0] * e2[:, 1] - e[:, 1] * e2[:, 0]
    scale = tol * max(1.0, float(np.abs(poly).max()) ** 2)
    return bool(np.all(cr > -scale)) and signed_area(poly) > 0


def merge_points(points, tol):
    """Cluster points closer than ``tol``; return (representatives, labels)."""
    points = np.asarray(points, dtype=float)
    if len(points) == 0:
        return points.reshape(0, 2), np.zeros(0, dtype=int)
    tree = cKDTree(points)
    labels = -np.ones(len(points), dtype=int)
    reps = []
    for i in range(len(points)):
        if labels[i] >= 0:
            continue
        idx = tree.query_ball_point(points[i], tol)
        lab = len(reps)
        for j in idx:
            if labels[j] < 0:
                labels[j] = lab
        reps.append(points[i])
    return np.array(reps), labels


def segment_circle_crossings(a, b, radius=1.0):
    """Parameters t in [0, 1] where a + t(b - a) meets the circle |p| = radius."""
    d = b - a
    qa = float(d @ d)
    if qa == 0.0:
        return []
    qb = 2.0 * float(a @ d)
    qc = float(a @ a) - radius * radius
    disc = qb * qb - 4 * qa * qc
    if disc < 0:
        return []
    s = np.sqrt(disc)
    return [t for t in ((-qb - s) / (2 * qa), (-qb + s) / (2 * qa)) if 0.0 <= t <= 1.0]
