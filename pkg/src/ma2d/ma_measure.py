"""Exact Monge-Ampere measures of piecewise-linear convex functions.

A PL convex function is the lower convex envelope of lifted sites
(x_i, height_i).  Its Monge-Ampere measure is atomic: the mass at an
interior site is the area of the polygonal subdifferential there, which
equals the convex hull of the gradients of the incident envelope faces.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.spatial import ConvexHull
from scipy.spatial import QhullError

from .errors import DegenerateInput
from .geometry import convex_hull, polygon_area, polygon_quadrature


@dataclass(frozen=True)
class PLConvexFunction:
    """Lower convex envelope of a lifted planar point cloud."""

    sites: np.ndarray          # (N, 2)
    heights: np.ndarray        # (N,)
    triangulation: np.ndarray  # (F, 3) site-index triples, ccw in the plane
    gradients: np.ndarray      # (F, 2) per-face gradient
    offsets: np.ndarray        # (F,) per-face affine offset: z = g.x + c
    active: np.ndarray         # (N,) bool, site lies on the envelope

    @cached_property
    def hull_interior(self) -> np.ndarray:
        """True for sites strictly inside the convex hull of all sites."""
        hull = convex_hull(self.sites)
        if len(hull) < 3:
            return np.zeros(len(self.sites), dtype=bool)
        scale = float(np.abs(self.sites).max()) + 1.0
        inside = np.ones(len(self.sites), dtype=bool)
        for i in range(len(hull)):
            a, b = hull[i], hull[(i + 1) % len(hull)]
            cross = (b[0] - a[0]) * (self.sites[:, 1] - a[1]) - (b[1] - a[1]) * (
                self.sites[:, 0] - a[0]
            )
            inside &= cross > 1e-12 * scale**2
        return inside

    @cached_property
    def incident_faces(self) -> list:
        inc = [[] for _ in range(len(self.sites))]
        for f, tri in enumerate(self.triangulation):
            for s in tri:
                inc[s].append(f)
        return inc

    def __call__(self, points) -> np.ndarray:
        """Evaluate the envelope as the max of its affine faces (exact inside the hull)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        vals = np.full(len(pts), -np.inf)
        chunk = 4096
        for start in range(0, len(pts), chunk):
            p = pts[start : start + chunk]
            vals[start : start + chunk] = np.max(
                p @ self.gradients.T + self.offsets[None, :], axis=1
            )
        return vals


@dataclass(frozen=True)
class SubgradientCell:
    """Polygonal subdifferential of the envelope at one site."""

    site_index: int
    polygon: np.ndarray  # (k, 2) ccw in gradient space; may be empty/degenerate
    area: float


@dataclass(frozen=True)
class MAMeasure:
    """Per-site Monge-Ampere masses (zero at boundary and inactive sites)."""

    masses: np.ndarray
    total: float


def lower_envelope(sites, heights) -> PLConvexFunction:
    """Lower convex hull of the lifted points (x_i, heights_i).

    Sites strictly above the envelope are flagged inactive.  Qhull's
    deterministic triangulated output resolves cocircular degeneracies.
    """
    sites = np.asarray(sites, dtype=float)
    heights = np.asarray(heights, dtype=float)
    if sites.ndim != 2 or sites.shape[1] != 2:
        raise ValueError("sites must be an (N, 2) array")
    if len(sites) != len(heights):
        raise ValueError("sites and heights must have equal length")
    if len(convex_hull(sites)) < 3:
        raise DegenerateInput("all sites are collinear")

    lifted = np.column_stack([sites, heights])
    spread = float(np.ptp(heights)) + float(np.ptp(sites)) + 1.0
    apex = np.array([[sites[:, 0].mean(), sites[:, 1].mean(), heights.max() + 10.0 * spread]])
    pts3 = np.vstack([lifted, apex])
    try:
        hull = ConvexHull(pts3, qhull_options="Qt")
    except QhullError as exc:  # pragma: no cover - apex makes inputs full rank
        raise DegenerateInput(str(exc)) from exc

    apex_id = len(sites)
    eq = hull.equations  # outward normals
    keep = (eq[:, 2] < -1e-12) & ~np.any(hull.simplices == apex_id, axis=1)
    tris = hull.simplices[keep]

    # orient each triangle ccw in the plane
    a, b, c = sites[tris[:, 0]], sites[tris[:, 1]], sites[tris[:, 2]]
    cross = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (
        c[:, 0] - a[:, 0]
    )
    flip = cross < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]

    # per-face affine data from the (unit) outward normal (nx, ny, nz), nz < 0:
    # z = -(nx x + ny y + off) / nz
    n = eq[keep]
    grads = -n[:, :2] / n[:, 2:3]
    offs = -n[:, 3] / n[:, 2]
    active = np.zeros(len(sites), dtype=bool)
    active[np.unique(tris)] = True
    return PLConvexFunction(
        sites=sites,
        heights=heights,
        triangulation=tris,
        gradients=grads,
        offsets=offs,
        active=active,
    )


def subgradient_cells(f: PLConvexFunction) -> list:
    """Subdifferential polygons of every hull-interior site.

    Boundary sites carry unbounded subdifferentials and are skipped; inactive
    interior sites get an empty cell of zero area.
    """
    cells = []
    interior = f.hull_interior
    inc = f.incident_faces
    for i in np.flatnonzero(interior):
        faces = inc[i]
        if not faces:
            cells.append(SubgradientCell(site_index=int(i), polygon=np.empty((0, 2)), area=0.0))
            continue
        g = f.gradients[faces]
        poly = convex_hull(g)
        cells.append(
            SubgradientCell(site_index=int(i), polygon=poly, area=polygon_area(poly))
        )
    return cells


def ma_measure(f: PLConvexFunction) -> MAMeasure:
    masses = np.zeros(len(f.sites))
    for cell in subgradient_cells(f):
        masses[cell.site_index] = cell.area
    return MAMeasure(masses=masses, total=float(masses.sum()))


def ma_mass(cells, site_subset=None) -> float:
    """Total subgradient area over a subset of site indices (all cells if None)."""
    if site_subset is None:
        return float(sum(c.area for c in cells))
    subset = set(int(s) for s in site_subset)
    return float(sum(c.area for c in cells if c.site_index in subset))


def weighted_mass(cells, weight, order: int = 4) -> np.ndarray:
    """Per-cell integrals of a weight over the subdifferential polygons.

    The weight is a function of the gradient variable; integration uses a
    centroid triangle fan with a symmetric rule exact to the given degree.
    """
    out = np.zeros(len(cells))
    for k, cell in enumerate(cells):
        if cell.area > 0.0 and len(cell.polygon) >= 3:
            out[k] = polygon_quadrature(cell.polygon, weight, order=order)
    return out


def gauss_map_mass(cells, order: int = 4) -> float:
    """Spherical area of the Gauss image over the cells' sites.

    The lower-hemisphere pullback of surface measure along y -> (y, -1)/sqrt(1+|y|^2)
    has Jacobian (1 + |y|^2)^(-3/2).
    """
    w = lambda y: (1.0 + y[:, 0] ** 2 + y[:, 1] ** 2) ** (-1.5)
    return float(weighted_mass(cells, w, order=order).sum())


def site_weighted_mass(f: PLConvexFunction, cells, weight) -> float:
    """Sum of weight(site) * cell-area; the atomic-measure pairing for the
    dual-equation identity where the weight lives on the domain variable."""
    total = 0.0
    for cell in cells:
        total += float(weight(f.sites[cell.site_index : cell.site_index + 1])[0]) * cell.area
    return total


@dataclass(frozen=True)
class TranslatorIdentityReport:
    """Two independent evaluations of the graph-equation balance on a site subset."""

    measure_side: float   # sum of subgradient-cell areas
    integral_side: float  # face-quadrature of (1 + |grad|^2)^(2 - 1/(2 alpha))
    residual: float
    relative_residual: float


def check_translator_identity(f: PLConvexFunction, alpha: float, site_subset) -> TranslatorIdentityReport:
    """Compare the Monge-Ampere mass of a site subset with the graph-equation
    integral int (1 + |Du|^2)^(2 - 1/(2 alpha)) over the matching region.

    The region of a subset is the union of its sites' nearest-site cells:
    every face is integrated with a degree-2 rule and each quadrature node
    contributes when its nearest site belongs to the subset.  alpha = 1/4 is
    allowed here (the weight becomes 1 and the identity reduces to
    mass = area).
    """
    if not 0.0 < float(alpha) <= 0.25:
        from .errors import AlphaOutOfRange

        raise AlphaOutOfRange(f"alpha must lie in (0, 1/4], got {alpha!r}")
    subset = np.zeros(len(f.sites), dtype=bool)
    subset[np.asarray(list(site_subset), dtype=int)] = True

    cells = subgradient_cells(f)
    lhs = float(sum(c.area for c in cells if subset[c.site_index]))

    from scipy.spatial import cKDTree

    tris = f.triangulation
    a, b, c = (f.sites[tris[:, k]] for k in range(3))
    areas = 0.5 * np.abs(
        (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
        - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
    )
    g2 = f.gradients[:, 0] ** 2 + f.gradients[:, 1] ** 2
    density = (1.0 + g2) ** (2.0 - 1.0 / (2.0 * alpha))
    bary, wq = _TRI_RULE_DEG2
    tree = cKDTree(f.sites)
    rhs = 0.0
    for k in range(len(wq)):
        pts = bary[k, 0] * a + bary[k, 1] * b + bary[k, 2] * c
        _, owner = tree.query(pts)
        rhs += wq[k] * float(np.sum(density * areas * subset[owner]))

    res = abs(lhs - rhs)
    rel = res / rhs if rhs > 0 else (0.0 if res == 0 else np.inf)
    return TranslatorIdentityReport(
        measure_side=lhs, integral_side=rhs, residual=res, relative_residual=rel
    )


_TRI_RULE_DEG2 = (
    np.array([[2 / 3, 1 / 6, 1 / 6], [1 / 6, 2 / 3, 1 / 6], [1 / 6, 1 / 6, 2 / 3]]),
    np.array([1 / 3, 1 / 3, 1 / 3]),
)


def is_convex_grid(values_nodes, nodes=None, tol: float = 1e-9) -> bool:
    """Whether grid samples coincide with their own lower convex envelope.

    Accepts either a GridFunction or (values, nodes) arrays.
    """
    if nodes is None:
        gf = values_nodes
        nodes, values = gf.nodes, gf.values
    else:
        values = np.asarray(values_nodes, dtype=float)
        nodes = np.asarray(nodes, dtype=float)
    env = lower_envelope(nodes, values)
    gap = values - env(nodes)
    scale = max(1.0, float(np.abs(values).max()))
    return bool(np.max(np.abs(gap)) <= tol * scale)


def cells_to_csv(cells, path) -> None:
    """Export cells as rows: site_index, area, v1x, v1y, v2x, v2y, ..."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        for cell in cells:
            row = [cell.site_index, repr(float(cell.area))]
            for vx, vy in cell.polygon:
                row.extend([repr(float(vx)), repr(float(vy))])
            writer.writerow(row)


def cells_from_csv(path) -> list:
    cells = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if not row:
                continue
            idx = int(row[0])
            area = float(row[1])
            coords = np.array([float(t) for t in row[2:]], dtype=float).reshape(-1, 2)
            cells.append(SubgradientCell(site_index=idx, polygon=coords, area=area))
    return cells
