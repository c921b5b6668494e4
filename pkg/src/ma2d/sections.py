"""Sections of convex functions, John-ellipse normalization, balance radii,
doubling constants, and sub-level compactness.

A section S is the sub-level polygon {v <= v(x0) + p.(x - x0) + t}.  For
callable convex functions the boundary is traced along rays from the base
point (root-finding to near machine accuracy); for grid samples it is the
marching-squares contour with linear interpolation along lattice edges.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import optimize

from .errors import (
    DegeneratePolygon,
    DivideByZeroMass,
    SectionNotCompact,
)
from .grid import Domain2D, GridFunction
from .geometry import (
    disk_rule,
    polygon_area,
    polygon_centroid,
    polygon_quadrature,
)


@dataclass(frozen=True)
class Section:
    """Sub-level polygon of a convex function above a supporting plane."""

    base_point: np.ndarray
    slope: np.ndarray
    height: float
    polygon: np.ndarray  # (k, 2) ccw

    @property
    def area(self) -> float:
        return polygon_area(self.polygon)

    def mass(self, density, order: int = 4) -> float:
        """Integral of a density over the section polygon."""
        return polygon_quadrature(self.polygon, density, order=order)


def extract_section(v, x0, p, t, n_dirs: int = 512, r_max: float = 1e9) -> Section:
    """Section polygon of v at height t above the supporting plane at x0.

    ``v`` may be a GridFunction (marching squares on lattice edges), a
    PLConvexFunction, or any callable of (N, 2) arrays (polar boundary trace).
    """
    if t <= 0:
        raise ValueError("section height t must be positive")
    x0 = np.asarray(x0, dtype=float)
    p = np.asarray(p, dtype=float)
    if isinstance(v, GridFunction):
        return _section_from_grid(v, x0, p, t)
    # PLConvexFunction instances evaluate as max-affine callables
    return _section_from_callable(v, x0, p, t, n_dirs=n_dirs, r_max=r_max)


def _section_from_callable(fn, x0, p, t, n_dirs: int, r_max: float) -> Section:
    v0 = float(np.asarray(fn(x0[None, :]))[0])

    def w_scalar(x):
        return float(np.asarray(fn(x[None, :]))[0]) - v0 - float(p @ (x - x0)) - t

    theta = 2 * np.pi * np.arange(n_dirs) / n_dirs
    dirs = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    verts = np.empty((n_dirs, 2))
    for k, u in enumerate(dirs):
        lo, hi = 0.0, 1.0
        # expand until the shifted function turns positive along the ray
        guard = 0
        while w_scalar(x0 + hi * u) <= 0.0:
            lo = hi
            hi *= 2.0
            guard += 1
            if hi > r_max or guard > 80:
                raise SectionNotCompact(
                    f"level set is unbounded along direction {theta[k]:.3f}"
                )
        root = optimize.brentq(
            lambda s: w_scalar(x0 + s * u), lo, hi, xtol=1e-13, rtol=1e-14
        )
        verts[k] = x0 + root * u
    return Section(base_point=x0, slope=p, height=float(t), polygon=verts)


def _section_from_grid(gf: GridFunction, x0, p, t) -> Section:
    v0 = _grid_value_at(gf, x0)
    w = gf.values - v0 - (gf.nodes - x0) @ p - t
    inside = w <= 0.0
    if not inside.any():
        raise SectionNotCompact("section height below the function minimum")
    if np.any(inside & gf.boundary_mask):
        raise SectionNotCompact("level set touches the computational boundary")
    crossings = []
    for off in ((1, 0), (0, 1)):
        nb = gf.neighbor_ids(off)
        ok = nb >= 0
        i = np.flatnonzero(ok)
        j = nb[ok]
        sign = inside[i] != inside[j]
        for a, b in zip(i[sign], j[sign]):
            lam = w[a] / (w[a] - w[b])
            crossings.append(gf.nodes[a] + lam * (gf.nodes[b] - gf.nodes[a]))
    if len(crossings) < 3:
        raise SectionNotCompact("level set too small for the lattice resolution")
    pts = np.unique(np.round(np.asarray(crossings), 12), axis=0)
    center = pts.mean(axis=0)
    ang = np.arctan2(pts[:, 1] - center[1], pts[:, 0] - center[0])
    poly = pts[np.argsort(ang, kind="stable")]
    return Section(base_point=x0, slope=np.asarray(p, dtype=float), height=float(t), polygon=poly)


def _grid_value_at(gf: GridFunction, x) -> float:
    """Bilinear interpolation of grid values (exact at nodes)."""
    k = np.asarray(x, dtype=float) / gf.h
    k0 = np.floor(k).astype(np.int64)
    frac = k - k0
    ids = []
    for dx, dy in ((0, 0), (1, 0), (0, 1), (1, 1)):
        grid, lo = gf._id_grid
        kk = k0 + (dx, dy) - lo
        if not (0 <= kk[0] < grid.shape[0] and 0 <= kk[1] < grid.shape[1]):
            ids.append(-1)
        else:
            ids.append(grid[kk[0], kk[1]])
    if min(ids) < 0:
        # fall back to the nearest node
        j = int(np.argmin(np.hypot(gf.nodes[:, 0] - x[0], gf.nodes[:, 1] - x[1])))
        return float(gf.values[j])
    v00, v10, v01, v11 = gf.values[ids]
    fx, fy = frac
    return float(
        v00 * (1 - fx) * (1 - fy)
        + v10 * fx * (1 - fy)
        + v01 * (1 - fx) * fy
        + v11 * fx * fy
    )


@dataclass(frozen=True)
class EllipsoidFit:
    """Maximum-volume inscribed ellipse {x : (x-c)^T M (x-c) <= 1} with its
    unimodular normalization A = S^(1/2)/det(S)^(1/4), S = M^(-1)."""

    center: np.ndarray
    shape_matrix: np.ndarray  # M
    normalized: np.ndarray    # A, symmetric, det A = 1
    scale: float              # det(S)^(1/4): radius of the equal-area disk
    r: float = float("nan")   # balance radius, filled by the balance step
    k0: float = float("nan")  # measured balance constant


def john_ellipsoid(polygon, tol: float = 1e-12) -> EllipsoidFit:
    """Maximum-volume inscribed ellipse of a convex polygon.

    Solves max log det B over ellipses c + B(unit disk) subject to the edge
    constraints a_i . c + |B a_i| <= b_i (B symmetric positive definite via
    its Cholesky parameters); SLSQP with analytic gradients.
    """
    poly = np.asarray(polygon, dtype=float)
    poly = poly[np.r_[True, np.any(np.diff(poly, axis=0) != 0, axis=1)]]
    if polygon_area(poly) < 1e-14:
        raise DegeneratePolygon("polygon area below 1e-14")
    edges = np.roll(poly, -1, axis=0) - poly
    normals = np.stack([edges[:, 1], -edges[:, 0]], axis=1)
    lens = np.hypot(normals[:, 0], normals[:, 1])
    ok = lens > 0
    normals = normals[ok] / lens[ok, None]
    b = np.sum(normals * poly[ok], axis=1)

    c0 = polygon_centroid(poly)
    rad0 = float(np.min(b - normals @ c0))
    if rad0 <= 0:
        raise DegeneratePolygon("polygon is not star-shaped around its centroid")
    x0 = np.array([c0[0], c0[1], 0.5 * rad0, 0.0, 0.5 * rad0])

    def unpack(z):
        c = z[:2]
        L = np.array([[z[2], 0.0], [z[3], z[4]]])
        return c, L

    def fun(z):
        return -(np.log(z[2]) + np.log(z[4]))

    def jac(z):
        g = np.zeros(5)
        g[2] = -1.0 / z[2]
        g[4] = -1.0 / z[4]
        return g

    def cons_f(z):
        c, L = unpack(z)
        Ba = (L @ L.T) @ normals.T
        return b - normals @ c - np.hypot(Ba[0], Ba[1])

    def cons_j(z):
        c, L = unpack(z)
        B = L @ L.T
        Ba = (B @ normals.T).T  # (m, 2)
        norm = np.hypot(Ba[:, 0], Ba[:, 1])
        norm = np.where(norm > 0, norm, 1.0)
        u = Ba / norm[:, None]
        m = len(normals)
        J = np.zeros((m, 5))
        J[:, 0] = -normals[:, 0]
        J[:, 1] = -normals[:, 1]
        # dB/dl11 = [[2 l11, l21], [l21, 0]], dB/dl21 = [[0, l11], [l11, 2 l21]],
        # dB/dl22 = [[0, 0], [0, 2 l22]]
        l11, l21, l22 = z[2], z[3], z[4]
        a1, a2 = normals[:, 0], normals[:, 1]
        d11 = np.stack([2 * l11 * a1 + l21 * a2, l21 * a1], axis=1)
        d21 = np.stack([l11 * a2, l11 * a1 + 2 * l21 * a2], axis=1)
        d22 = np.stack([np.zeros(m), 2 * l22 * a2], axis=1)
        J[:, 2] = -np.sum(u * d11, axis=1)
        J[:, 3] = -np.sum(u * d21, axis=1)
        J[:, 4] = -np.sum(u * d22, axis=1)
        return J

    res = optimize.minimize(
        fun,
        x0,
        jac=jac,
        method="SLSQP",
        constraints=[{"type": "ineq", "fun": cons_f, "jac": cons_j}],
        bounds=[(None, None), (None, None), (1e-12, None), (None, None), (1e-12, None)],
        options={"maxiter": 400, "ftol": tol},
    )
    z = res.x
    c, L = unpack(z)
    B = L @ L.T
    S = B @ B.T  # ellipse covariance: x = c + B u, so (x-c)^T (B B^T)^-1 (x-c) <= 1
    M = np.linalg.inv(S)
    M = 0.5 * (M + M.T)
    evals, evecs = np.linalg.eigh(S)
    evals = np.maximum(evals, 1e-300)
    sqrtS = (evecs * np.sqrt(evals)) @ evecs.T
    detS = float(evals[0] * evals[1])
    A = sqrtS / detS**0.25
    return EllipsoidFit(
        center=c,
        shape_matrix=M,
        normalized=A,
        scale=detS**0.25,
    )


def eccentricity(fit: EllipsoidFit) -> float:
    """Operator norm of the unimodular normalization A."""
    return float(np.linalg.eigvalsh(fit.normalized).max())


def caffarelli_radius(t: float, mass: float) -> float:
    """Balance radius r = t / sqrt(section mass)."""
    if not mass > 0:
        raise DivideByZeroMass("section mass must be positive")
    return float(t) / np.sqrt(mass)


def balance_check(section: Section, fit: EllipsoidFit, r: float) -> float:
    """Measured balance constant k0 with A^(-1) B_(r/k0) inside the recentred
    section and the section inside A(B_(k0 r))."""
    A = fit.normalized
    Ainv = np.linalg.inv(A)
    w = (section.polygon - section.base_point) @ Ainv.T
    outer = float(np.hypot(w[:, 0], w[:, 1]).max()) / r
    # inner radius: distance from the origin to each edge line
    a = w
    bshift = np.roll(w, -1, axis=0)
    e = bshift - a
    elen = np.hypot(e[:, 0], e[:, 1])
    ok = elen > 0
    cross = np.abs(a[ok, 0] * bshift[ok, 1] - a[ok, 1] * bshift[ok, 0])
    dist = cross / elen[ok]
    inner = r / float(dist.min())
    return max(outer, inner)


def section_balance(v, density, x0, p, t, order: int = 4, **kwargs):
    """Convenience pipeline: section -> John fit -> balance constant.

    Returns (section, fit) with the fit's ``r`` and ``k0`` fields filled.
    """
    sec = extract_section(v, x0, p, t, **kwargs)
    fit = john_ellipsoid(sec.polygon)
    mass = sec.mass(density, order=order)
    r = caffarelli_radius(t, mass)
    k0 = balance_check(sec, fit, r)
    return sec, replace(fit, r=r, k0=k0)


def doubling_constant(f, region: Domain2D, n_samples: int, rng_seed: int) -> float:
    """Estimated doubling constant sup mu(E)/mu(E/2) over random ellipses in
    the region; mu = f dx by a degree-7 disk rule mapped through each ellipse.

    Centers are uniform in the region, semi-axes log-uniform in
    [1e-2, diam/4], orientations uniform; ellipses not contained in the
    region are rejected.  Deterministic for a fixed seed, and the estimate is
    monotone in n_samples for a common seed prefix.
    """
    if n_samples < 100:
        raise ValueError("need at least 100 samples")
    rng = np.random.default_rng(rng_seed)
    lo, hi = region.bbox()
    diam = region.diameter
    pts, wts = disk_rule()
    best = 0.0
    accepted = 0
    guard = 0
    while accepted < n_samples:
        guard += 1
        if guard > 200 * n_samples:
            raise RuntimeError("ellipse sampler rejection rate too high")
        center = lo + rng.random(2) * (hi - lo)
        if not region.contains(center[None, :])[0]:
            continue
        s = np.exp(rng.uniform(np.log(1e-2), np.log(diam / 4.0), size=2))
        phi = rng.uniform(0.0, np.pi)
        cph, sph = np.cos(phi), np.sin(phi)
        T = np.array([[cph * s[0], -sph * s[1]], [sph * s[0], cph * s[1]]])
        if not _ellipse_inside(region, center, T):
            continue
        accepted += 1
        x_full = center + pts @ T.T
        x_half = center + 0.5 * (pts @ T.T)
        mu_full = float(wts @ np.asarray(f(x_full), dtype=float))
        mu_half = 0.25 * float(wts @ np.asarray(f(x_half), dtype=float))
        if mu_half > 0:
            best = max(best, mu_full / mu_half)
    return 4.0 if best == 0.0 else best


def _ellipse_inside(region: Domain2D, center, T) -> bool:
    if region.kind == "disk":
        smax = float(np.linalg.norm(T, ord=2))
        return bool(np.hypot(*center) + smax <= region.size)
    if region.kind == "square":
        # support of the ellipse in the axis directions: row norms of T
        ext = np.array([np.hypot(T[0, 0], T[0, 1]), np.hypot(T[1, 0], T[1, 1])])
        return bool(np.all(np.abs(center) + ext <= region.size))
    v = region.vertices
    for i in range(len(v)):
        a, b = v[i], v[(i + 1) % len(v)]
        e = b - a
        n = np.array([e[1], -e[0]])
        n = n / np.hypot(*n)  # outward for ccw
        support = float(n @ center) + float(np.hypot(*(T.T @ n)))
        if support > float(n @ a):
            return False
    return True


def sublevel_compactness(v: GridFunction, levels) -> list:
    """Per-level verdicts: does {v <= level} stay 2h clear of the boundary?"""
    out = []
    x0 = v.nodes[v.argmin_node()]
    vmin = float(v.values.min())
    for lvl in np.atleast_1d(np.asarray(levels, dtype=float)):
        t = float(lvl) - vmin
        if t <= 0:
            out.append(False)
            continue
        try:
            sec = extract_section(v, x0, np.zeros(2), t)
        except SectionNotCompact:
            out.append(False)
            continue
        margin = v.domain.boundary_distance(sec.polygon)
        out.append(bool(np.min(margin) >= 2.0 * v.h))
    return out
