"""Planar domains, lattice-sampled scalar fields, and right-hand-side families.

The lattice is always anchored at the origin so that symmetric domains
produce symmetric node sets, and nodes are ordered lexicographically by
(x2, x1) so every downstream computation is deterministic.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import (
    AlphaOutOfRange,
    EmptyDomain,
    MalformedFile,
    NonfiniteValue,
)

_SNAP = 1e-9  # relative slack when testing lattice membership at the boundary


@dataclass(frozen=True)
class Domain2D:
    """Convex planar domain: origin-centered square or disk, or a ccw polygon."""

    kind: str
    size: float | None = None
    vertices: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("square", "disk", "polygon"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.kind in ("square", "disk"):
            if self.size is None or not np.isfinite(self.size) or self.size <= 0:
                raise ValueError("square/disk domains need a positive size")
        else:
            v = np.asarray(self.vertices, dtype=float)
            if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
                raise ValueError("polygon needs at least 3 planar vertices")
            object.__setattr__(self, "vertices", v)
            scale = float(np.abs(v).max()) + 1.0
            for i in range(len(v)):
                a, b, c = v[i - 1], v[i], v[(i + 1) % len(v)]
                cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
                if cross <= 1e-12 * scale**2:
                    raise ValueError(
                        "polygon vertices must be in strictly convex ccw position"
                    )

    @staticmethod
    def square(halfwidth: float) -> "Domain2D":
        return Domain2D("square", size=float(halfwidth))

    @staticmethod
    def disk(radius: float) -> "Domain2D":
        return Domain2D("disk", size=float(radius))

    @staticmethod
    def polygon(vertices) -> "Domain2D":
        return Domain2D("polygon", vertices=np.asarray(vertices, dtype=float))

    def contains(self, points, slack: float = 0.0) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.kind == "square":
            return np.abs(pts).max(axis=1) <= self.size + slack
        if self.kind == "disk":
            return np.hypot(pts[:, 0], pts[:, 1]) <= self.size + slack
        ok = np.ones(len(pts), dtype=bool)
        v = self.vertices
        for i in range(len(v)):
            a, b = v[i], v[(i + 1) % len(v)]
            cross = (b[0] - a[0]) * (pts[:, 1] - a[1]) - (b[1] - a[1]) * (pts[:, 0] - a[0])
            ok &= cross >= -slack * max(1.0, np.abs(v).max())
        return ok

    def boundary_distance(self, points) -> np.ndarray:
        """Distance from points to the domain boundary (negative outside)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.kind == "square":
            return self.size - np.abs(pts).max(axis=1)
        if self.kind == "disk":
            return self.size - np.hypot(pts[:, 0], pts[:, 1])
        v = self.vertices
        dists = []
        for i in range(len(v)):
            a, b = v[i], v[(i + 1) % len(v)]
            e = b - a
            n = np.array([-e[1], e[0]]) / np.hypot(*e)  # inward for ccw
            dists.append((pts - a) @ n)
        return np.min(dists, axis=0)

    def bbox(self):
        if self.kind == "square":
            s = self.size
            return np.array([-s, -s]), np.array([s, s])
        if self.kind == "disk":
            s = self.size
            return np.array([-s, -s]), np.array([s, s])
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    @property
    def diameter(self) -> float:
        if self.kind == "disk":
            return 2.0 * self.size
        if self.kind == "square":
            return 2.0 * np.sqrt(2.0) * self.size
        v = self.vertices
        d2 = np.sum((v[:, None, :] - v[None, :, :]) ** 2, axis=2)
        return float(np.sqrt(d2.max()))

    def _params(self):
        if self.kind == "polygon":
            return list(self.vertices.ravel())
        return [self.size]


@dataclass(frozen=True)
class RhsField:
    """Right-hand-side density f for det D2 v = f.

    Kinds:
      constant          f = value (default 1)
      dual_translator   f(x) = (eta + |x|^2) ** (1/(2 alpha) - 2), eta in [0, 1]
      degenerate        f(x) = |x1| ** (1/alpha - 4), zero on the x2-axis
      custom_radial     f(x) = profile(|x|) for a user callable profile
    """

    kind: str
    alpha: float | None = None
    eta: float | None = None
    value: float = 1.0
    profile: object = None

    def __post_init__(self):
        if self.kind not in ("constant", "dual_translator", "degenerate", "custom_radial"):
            raise ValueError(f"unknown rhs kind {self.kind!r}")
        if self.kind in ("dual_translator", "degenerate"):
            check_alpha(self.alpha)
        if self.kind == "dual_translator":
            eta = 1.0 if self.eta is None else float(self.eta)
            if not 0.0 <= eta <= 1.0:
                raise ValueError("eta must lie in [0, 1]")
            object.__setattr__(self, "eta", eta)
        if self.kind == "custom_radial" and not callable(self.profile):
            raise ValueError("custom_radial needs a callable profile")

    def __call__(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.kind == "constant":
            return np.full(len(pts), float(self.value))
        if self.kind == "dual_translator":
            r2 = pts[:, 0] ** 2 + pts[:, 1] ** 2
            return (self.eta + r2) ** (1.0 / (2.0 * self.alpha) - 2.0)
        if self.kind == "degenerate":
            return np.abs(pts[:, 0]) ** (1.0 / self.alpha - 4.0)
        return np.asarray(self.profile(np.hypot(pts[:, 0], pts[:, 1])), dtype=float)


def check_alpha(alpha) -> float:
    """Validate the flow power; the admissible range is the open interval (0, 1/4)."""
    if alpha is None or not np.isfinite(alpha) or not 0.0 < float(alpha) < 0.25:
        raise AlphaOutOfRange(f"alpha must lie in (0, 1/4), got {alpha!r}")
    return float(alpha)


@dataclass(frozen=True)
class GridFunction:
    """Scalar samples on the intersection of the pitch-h lattice with a domain."""

    domain: Domain2D
    h: float
    nodes: np.ndarray   # (N, 2), lexicographic by (x2, x1)
    values: np.ndarray  # (N,)

    def __post_init__(self):
        object.__setattr__(self, "nodes", np.asarray(self.nodes, dtype=float))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if len(self.nodes) != len(self.values):
            raise ValueError("nodes and values must have equal length")

    def __len__(self):
        return len(self.nodes)

    @cached_property
    def lattice_indices(self) -> np.ndarray:
        """Integer lattice coordinates (k1, k2) of each node."""
        return np.rint(self.nodes / self.h).astype(np.int64)

    @cached_property
    def _id_grid(self) -> tuple:
        k = self.lattice_indices
        lo = k.min(axis=0)
        shape = k.max(axis=0) - lo + 1
        grid = np.full(shape, -1, dtype=np.int64)
        grid[k[:, 0] - lo[0], k[:, 1] - lo[1]] = np.arange(len(k))
        return grid, lo

    def neighbor_ids(self, offset) -> np.ndarray:
        """Node index of (node + h * offset) per node, or -1 when absent."""
        grid, lo = self._id_grid
        k = self.lattice_indices - lo + np.asarray(offset, dtype=np.int64)
        out = np.full(len(k), -1, dtype=np.int64)
        ok = (
            (k[:, 0] >= 0)
            & (k[:, 1] >= 0)
            & (k[:, 0] < grid.shape[0])
            & (k[:, 1] < grid.shape[1])
        )
        out[ok] = grid[k[ok, 0], k[ok, 1]]
        return out

    @cached_property
    def interior_mask(self) -> np.ndarray:
        """True where all four axis neighbors exist on the lattice."""
        ok = np.ones(len(self), dtype=bool)
        for off in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            ok &= self.neighbor_ids(off) >= 0
        return ok

    @property
    def boundary_mask(self) -> np.ndarray:
        return ~self.interior_mask

    def argmin_node(self) -> int:
        return int(np.argmin(self.values))


def sample(field, domain: Domain2D, h: float) -> GridFunction:
    """Sample a scalar field on the origin-anchored pitch-h lattice inside domain.

    ``field`` may be vectorized over an (N, 2) array or a plain scalar callable.
    """
    if not np.isfinite(h) or h <= 0:
        raise ValueError("spacing h must be positive")
    lo, hi = domain.bbox()
    slack = _SNAP * max(1.0, float(np.abs([lo, hi]).max()))
    k_lo = np.ceil((lo - slack) / h).astype(np.int64)
    k_hi = np.floor((hi + slack) / h).astype(np.int64)
    k1 = np.arange(k_lo[0], k_hi[0] + 1)
    k2 = np.arange(k_lo[1], k_hi[1] + 1)
    g1, g2 = np.meshgrid(k1, k2, indexing="xy")
    nodes = np.stack([g1.ravel() * h, g2.ravel() * h], axis=1)
    nodes = nodes[domain.contains(nodes, slack=slack)]
    if len(nodes) == 0:
        raise EmptyDomain("no lattice node falls inside the domain")
    order = np.lexsort((nodes[:, 0], nodes[:, 1]))
    nodes = nodes[order]
    values = _evaluate(field, nodes)
    if not np.all(np.isfinite(values)):
        bad = nodes[~np.isfinite(values)][0]
        raise NonfiniteValue(f"field is not finite at node ({bad[0]}, {bad[1]})")
    return GridFunction(domain=domain, h=float(h), nodes=nodes, values=values)


def _evaluate(field, nodes: np.ndarray) -> np.ndarray:
    if callable(field):
        try:
            out = np.asarray(field(nodes), dtype=float)
            if out.shape == (len(nodes),):
                return out
        except Exception:
            pass
        return np.array([float(field(p)) for p in nodes])
    return np.full(len(nodes), float(field))


@dataclass(frozen=True)
class RhsConditionReport:
    """Per-radius sup deviation of |x|**(4 - 1/alpha) f(x) from 1."""

    radii: np.ndarray
    deviations: np.ndarray
    epsilon: float
    eventually_below: bool


def check_rhs_condition(f, alpha: float, eps: float, radii, n_angles: int = 128) -> RhsConditionReport:
    """Measure sup_{|x|=R} | |x|**(4-1/alpha) f(x) - 1 | on growing circles.

    The verdict ``eventually_below`` uses the three largest radii.
    """
    alpha = check_alpha(alpha)
    radii = np.asarray(radii, dtype=float)
    if len(radii) == 0 or np.any(radii <= 0) or np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be positive and strictly increasing")
    if n_angles < 64:
        raise ValueError("need at least 64 angular samples per circle")
    theta = 2 * np.pi * np.arange(n_angles) / n_angles
    unit = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    devs = np.empty(len(radii))
    for i, r in enumerate(radii):
        vals = np.asarray(f(r * unit), dtype=float)
        devs[i] = np.max(np.abs(r ** (4.0 - 1.0 / alpha) * vals - 1.0))
    tail = devs[-3:] if len(devs) >= 3 else devs
    return RhsConditionReport(
        radii=radii, deviations=devs, epsilon=float(eps),
        eventually_below=bool(np.all(tail <= eps)),
    )


# ---------------------------------------------------------------------------
# .gfn persistence: a 4-line header followed by one "x1 x2 value" row per node.
# ---------------------------------------------------------------------------

def save(gf: GridFunction, path) -> None:
    lines = ["GFN 1"]
    lines.append(
        "domain " + gf.domain.kind + " "
        + " ".join(repr(float(p)) for p in gf.domain._params())
    )
    lines.append("h " + repr(float(gf.h)))
    lines.append("n " + str(len(gf)))
    for (x1, x2), v in zip(gf.nodes, gf.values):
        lines.append(f"{float(x1)!r} {float(x2)!r} {float(v)!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load(path) -> GridFunction:
    with open(path, "r", encoding="utf-8") as fh:
        raw = fh.read().splitlines()

    def fail(lineno, why):
        raise MalformedFile(f"{path}: line {lineno}: {why}")

    def tokens(lineno):
        if lineno - 1 >= len(raw):
            fail(lineno, "unexpected end of file")
        return raw[lineno - 1].split()

    t = tokens(1)
    if t != ["GFN", "1"]:
        fail(1, "expected header 'GFN 1'")
    t = tokens(2)
    if len(t) < 3 or t[0] != "domain":
        fail(2, "expected 'domain <kind> <params...>'")
    kind = t[1]
    try:
        params = [float(s) for s in t[2:]]
    except ValueError:
        fail(2, "domain parameters must be numbers")
    try:
        if kind in ("square", "disk"):
            if len(params) != 1:
                fail(2, f"{kind} takes exactly one parameter")
            domain = Domain2D(kind, size=params[0])
        elif kind == "polygon":
            if len(params) % 2 or len(params) < 6:
                fail(2, "polygon needs an even number (>= 6) of coordinates")
            domain = Domain2D.polygon(np.array(params).reshape(-1, 2))
        else:
            fail(2, f"unknown domain kind {kind!r}")
    except ValueError as exc:
        fail(2, str(exc))
    t = tokens(3)
    if len(t) != 2 or t[0] != "h":
        fail(3, "expected 'h <spacing>'")
    try:
        h = float(t[1])
    except ValueError:
        fail(3, "spacing must be a number")
    if not h > 0:
        fail(3, "spacing must be positive")
    t = tokens(4)
    if len(t) != 2 or t[0] != "n":
        fail(4, "expected 'n <node-count>'")
    try:
        n = int(t[1])
    except ValueError:
        fail(4, "node count must be an integer")
    nodes = np.empty((n, 2))
    values = np.empty(n)
    for i in range(n):
        lineno = 5 + i
        t = tokens(lineno)
        if len(t) != 3:
            fail(lineno, "expected 'x1 x2 value'")
        try:
            nodes[i] = (float(t[0]), float(t[1]))
            values[i] = float(t[2])
        except ValueError:
            fail(lineno, "entries must be numbers")
        if not np.isfinite(values[i]):
            fail(lineno, "value is not finite")
        k = nodes[i] / h
        if np.max(np.abs(k - np.rint(k))) > 1e-9:
            fail(lineno, "node is not on the pitch-h lattice")
    extra = 5 + n
    while extra - 1 < len(raw):
        if raw[extra - 1].strip():
            fail(extra, "trailing data after declared node count")
        extra += 1
    return GridFunction(domain=domain, h=h, nodes=nodes, values=values)
