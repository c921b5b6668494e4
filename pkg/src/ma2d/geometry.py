"""Convex polygon primitives and quadrature rules used across the toolkit.

Everything operates on plain float64 arrays: polygons are (k, 2) arrays of
vertices in counterclockwise order, half-planes are given by unit-free
normals ``d`` and offsets ``c`` meaning ``{p : p . d <= c}``.
"""
from __future__ import annotations

import numpy as np


def polygon_area(vertices) -> float:
    """Absolute area of a simple polygon by the shoelace formula."""
    v = np.asarray(vertices, dtype=float)
    if v.ndim != 2 or v.shape[0] < 3:
        return 0.0
    x, y = v[:, 0], v[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def polygon_centroid(vertices) -> np.ndarray:
    """Area-weighted centroid; falls back to the vertex mean when degenerate."""
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    cross = x * np.roll(y, -1) - np.roll(x, -1) * y
    a = 0.5 * np.sum(cross)
    if abs(a) < 1e-300:
        return v.mean(axis=0)
    cx = np.sum((x + np.roll(x, -1)) * cross) / (6.0 * a)
    cy = np.sum((y + np.roll(y, -1)) * cross) / (6.0 * a)
    return np.array([cx, cy])


def convex_hull(points) -> np.ndarray:
    """Counterclockwise convex hull of a 2D point set (monotone chain).

    Collinear points interior to hull edges are dropped.  Degenerate inputs
    (all points collinear) return the extreme segment, a 1- or 2-point array.
    """
    pts = np.asarray(points, dtype=float)
    pts = np.unique(pts, axis=0)
    if len(pts) <= 2:
        return pts
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]

    def chain(seq):
        out = []
        for p in seq:
            while len(out) >= 2:
                o, a = out[-2], out[-1]
                if (a[0] - o[0]) * (p[1] - o[1]) - (a[1] - o[1]) * (p[0] - o[0]) <= 0.0:
                    out.pop()
                else:
                    break
            out.append(p)
        return out

    lower = chain(pts)
    upper = chain(pts[::-1])
    hull = np.array(lower[:-1] + upper[:-1])
    if len(hull) < 3:
        return np.array([pts[0], pts[-1]])
    return hull


def clip_halfplane(poly: np.ndarray, d, c: float) -> np.ndarray:
    """Clip a convex polygon against {p : p . d <= c} (Sutherland-Hodgman step)."""
    if len(poly) == 0:
        return poly
    s = poly @ np.asarray(d, dtype=float)
    inside = s <= c
    if inside.all():
        return poly
    if not inside.any():
        return poly[:0]
    out = []
    n = len(poly)
    for i in range(n):
        j = (i + 1) % n
        if inside[i]:
            out.append(poly[i])
        if inside[i] != inside[j]:
            t = (c - s[i]) / (s[j] - s[i])
            out.append(poly[i] + t * (poly[j] - poly[i]))
    return np.array(out)


def clip_convex(subject: np.ndarray, clipper: np.ndarray) -> np.ndarray:
    """Intersection of two convex ccw polygons."""
    poly = np.asarray(subject, dtype=float)
    cl = np.asarray(clipper, dtype=float)
    n = len(cl)
    for i in range(n):
        a, b = cl[i], cl[(i + 1) % n]
        edge = b - a
        # inward normal for ccw clipper is (-edge_y, edge_x); keep left side
        d = np.array([edge[1], -edge[0]])
        poly = clip_halfplane(poly, d, float(d @ a))
        if len(poly) == 0:
            break
    return poly


def point_in_convex(poly: np.ndarray, points, tol: float = 1e-12) -> np.ndarray:
    """Membership of points in a ccw convex polygon (boundary counts inside)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    ok = np.ones(len(pts), dtype=bool)
    n = len(poly)
    for i in range(n):
        a, b = poly[i], poly[(i + 1) % n]
        cross = (b[0] - a[0]) * (pts[:, 1] - a[1]) - (b[1] - a[1]) * (pts[:, 0] - a[0])
        ok &= cross >= -tol
    return ok


# Symmetric Gauss rules on the reference triangle, (barycentric coords, weights).
# Degrees of exactness: 1, 2, 4, 5.
_TRI_RULES = {}


def _orbit(a):
    return [(1 - 2 * a, a, a), (a, 1 - 2 * a, a), (a, a, 1 - 2 * a)]


_TRI_RULES[1] = (np.array([(1 / 3, 1 / 3, 1 / 3)]), np.array([1.0]))
_TRI_RULES[2] = (np.array(_orbit(1 / 6)), np.full(3, 1 / 3))
_a1, _a2 = 0.445948490915965, 0.091576213509771
_w1, _w2 = 0.223381589678011, 0.109951743655322
_TRI_RULES[4] = (
    np.array(_orbit(_a1) + _orbit(_a2)),
    np.array([_w1] * 3 + [_w2] * 3),
)
_b1, _b2 = 0.470142064105115, 0.101286507323456
_v1, _v2 = 0.132394152788506, 0.125939180544827
_TRI_RULES[5] = (
    np.array([(1 / 3, 1 / 3, 1 / 3)] + _orbit(_b1) + _orbit(_b2)),
    np.array([9 / 40] + [_v1] * 3 + [_v2] * 3),
)


def triangle_rule(order: int):
    """Smallest stored symmetric rule exact for polynomials of the given degree."""
    for deg in (1, 2, 4, 5):
        if deg >= order:
            return _TRI_RULES[deg]
    return _TRI_RULES[5]


def polygon_quadrature(poly: np.ndarray, fn, order: int = 4) -> float:
    """Integrate ``fn`` over a convex polygon by a triangle fan from its centroid."""
    poly = np.asarray(poly, dtype=float)
    if len(poly) < 3:
        return 0.0
    c = polygon_centroid(poly)
    bary, w = triangle_rule(order)
    n = len(poly)
    a = poly
    b = np.roll(poly, -1, axis=0)
    # quadrature nodes for every fan triangle at once: (n, k, 2)
    pts = (
        bary[None, :, 0, None] * c[None, None, :]
        + bary[None, :, 1, None] * a[:, None, :]
        + bary[None, :, 2, None] * b[:, None, :]
    )
    cross = (a[:, 0] - c[0]) * (b[:, 1] - c[1]) - (a[:, 1] - c[1]) * (b[:, 0] - c[0])
    areas = 0.5 * cross  # signed; convex ccw fans are positive
    vals = np.asarray(fn(pts.reshape(-1, 2)), dtype=float).reshape(n, len(w))
    return float(np.sum(areas * (vals @ w)))


def disk_rule():
    """Quadrature on the closed unit disk, exact for polynomials of degree <= 7.

    Product of a 3-point Gauss-Legendre rule in r**2 with 8 equispaced angles;
    returns (points (24, 2), weights summing to pi).
    """
    u = np.array([0.5 - np.sqrt(15) / 10, 0.5, 0.5 + np.sqrt(15) / 10])
    wu = np.array([5 / 18, 8 / 18, 5 / 18])
    r = np.sqrt(u)
    theta = 2 * np.pi * np.arange(8) / 8
    pts = np.stack(
        [np.outer(r, np.cos(theta)).ravel(), np.outer(r, np.sin(theta)).ravel()],
        axis=1,
    )
    w = np.repeat(wu * np.pi / 8, 8)
    return pts, w
