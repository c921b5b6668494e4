"""Section geometry: John ellipses, balance constants, cascades, doubling.

Sections are sub-level polygons above a supporting plane.  Their John
(maximum-volume inscribed) ellipse yields a unimodular normalization A whose
operator norm measures eccentricity; the balance constant k0 compares the
section with the ball of radius t / sqrt(section mass).
"""
import numpy as np

from ma2d import analysis, grid, oracle, sections

ones = lambda p: np.ones(len(np.atleast_2d(p)))
quadratic = lambda p: 0.5 * (p[:, 0] ** 2 + p[:, 1] ** 2)

print("balanced family (quadratic, f = 1): k0 is level-independent")
for t in (1.0, 8.0, 128.0):
    _, fit = sections.section_balance(quadratic, ones, np.zeros(2), np.zeros(2), t)
    print(f"  t = {t:5.0f}: k0 = {fit.k0:.6f}   (sqrt(4 pi) = {np.sqrt(4*np.pi):.6f})")

print("\nanisotropic model a|x1|^6 + b x2^2: eccentricity grows like t^(1/6)")
sep = oracle.SeparableSolution(alpha=1 / 8, a=1.0)
series = analysis.eccentricity_cascade(sep, np.zeros(2), np.zeros(2), 2.0 ** np.arange(8))
for t, n in zip(series.levels, series.norms):
    print(f"  t = {t:5.0f}: |A_t| = {n:.4f}")
print(f"  fitted slope {series.slope:.4f} vs closed form {sep.eccentricity_slope():.4f}")

print("\nrotationally symmetric dual solution: sections stay round")
prof = oracle.RadialProfile(alpha=1 / 8, kind="dual_translator")
flat = analysis.eccentricity_cascade(prof, np.zeros(2), np.zeros(2), 2.0 ** np.arange(6))
print(f"  |A_t| in [{flat.norms.min():.6f}, {flat.norms.max():.6f}], slope {flat.slope:.2e}")

print("\ndoubling constants of the model densities over random ellipses:")
est = sections.doubling_constant(ones, grid.Domain2D.disk(10.0), 500, rng_seed=42)
print(f"  f = 1: {est}")
f = grid.RhsField("dual_translator", alpha=1 / 8, eta=1.0)
est = sections.doubling_constant(f, grid.Domain2D.disk(1000.0), 2000, rng_seed=42)
print(f"  dual density, |x| <= 1000: {est:.3f} (finite, the measure is doubling)")
