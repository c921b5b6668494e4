"""The exact discrete solution concept: envelopes, cells, masses.

A piecewise-linear convex function is the lower convex hull of lifted sites;
its Monge-Ampere measure is atomic, with the mass at a site equal to the
area of the polygonal subdifferential there.  Everything below is exact up
to floating point, no discretization parameter involved.
"""
import numpy as np

from ma2d import grid, ma_measure

# a square pyramid: the apex collects all the curvature
sites = np.array([[-1.0, -1], [1, -1], [1, 1], [-1, 1], [0, 0]])
heights = np.array([1.0, 1, 1, 1, 0])
pyramid = ma_measure.lower_envelope(sites, heights)
cells = ma_measure.subgradient_cells(pyramid)
print("pyramid max(|x1|, |x2|)-style lift:")
for c in cells:
    print(f"  site {c.site_index} at {pyramid.sites[c.site_index]}: cell area {c.area}")
print("  (the apex cell is the hull of the four face gradients, area 2)")

# a sampled cone: the apex mass approaches the area pi of the unit disk of slopes
gf = grid.sample(lambda p: np.hypot(p[:, 0], p[:, 1]), grid.Domain2D.disk(1.0), 0.04)
cone = ma_measure.lower_envelope(gf.nodes, gf.values)
cells = ma_measure.subgradient_cells(cone)
apex = [c for c in cells if np.allclose(cone.sites[c.site_index], 0.0)][0]
print(f"\ncone |x| sampled at h = 0.04: apex mass {apex.area:.5f} vs pi = {np.pi:.5f}")

# the Gauss-map weight turns cell areas into spherical areas
gm = ma_measure.gauss_map_mass([apex])
closed = 2 * np.pi * (1 - 1 / np.sqrt(2))
print(f"gauss-map mass of the apex cell {gm:.5f} vs closed form {closed:.5f}")

# the graph-equation identity on the sampled rotationally symmetric solution
from ma2d import oracle

prof = oracle.RadialProfile(alpha=1 / 8, kind="primal_translator")
gf = grid.sample(prof, grid.Domain2D.disk(1.0), 0.03)
pl = ma_measure.lower_envelope(gf.nodes, gf.values)
radii = np.hypot(gf.nodes[:, 0], gf.nodes[:, 1])
subset = np.flatnonzero((radii >= 0.3) & (radii <= 0.7) & pl.hull_interior)
rep = ma_measure.check_translator_identity(pl, 1 / 8, subset)
print(
    f"\ngraph-equation balance on an annulus: measure side {rep.measure_side:.6f}, "
    f"integral side {rep.integral_side:.6f}, relative residual {rep.relative_residual:.2e}"
)
