"""Closed-form radial solutions and their growth rates.

The toolkit ships two rotationally symmetric reference solutions: the graph
equation det D2 u = (1 + |Du|^2)^(2 - 1/(2a)) and its Legendre dual
det D2 v = (1 + |y|^2)^(1/(2a) - 2).  Both reduce to first-order ODEs in the
radial slope, solved in closed form; values come from a cached quadrature
table.  This script prints the slopes, checks them against a brute-force ODE
integration, and shows the predicted growth rates emerging.
"""
import numpy as np
from scipy.integrate import solve_ivp

from ma2d import oracle

alpha = 1 / 8
primal = oracle.RadialProfile(alpha=alpha, kind="primal_translator")
dual = oracle.RadialProfile(alpha=alpha, kind="dual_translator")

print(f"alpha = {alpha}: slopes at r = 1")
print(f"  graph equation   p(1) = {primal.slope(1.0):.10f}  (sqrt(4^(1/3)-1) = {np.sqrt(4**(1/3)-1):.10f})")
print(f"  dual equation    q(1) = {dual.slope(1.0):.10f}  (sqrt(7/3)      = {np.sqrt(7/3):.10f})")

# independent check: integrate p' p / r = rhs from the origin
r0 = 1e-8
ode = solve_ivp(
    lambda r, p: r * (1 + p[0] ** 2) ** (2 - 1 / (2 * alpha)) / p[0],
    [r0, 1.0], [r0], rtol=1e-12, atol=1e-14,
)
print(f"  ODE cross-check  p(1) = {ode.y[0, -1]:.10f}  (diff {abs(ode.y[0,-1]-primal.slope(1.0)):.2e})")

print("\ngrowth of the values (log v / log r drifts, the log-derivative converges):")
for r in (16.0, 64.0, 256.0):
    u, v = primal.value(r)[0], dual.value(r)[0]
    su = r * primal.slope(r) / u
    sv = r * dual.slope(r) / v
    print(f"  r = {r:6.0f}: primal log-slope {su:.4f} (-> {1/(1-2*alpha):.4f}), "
          f"dual log-slope {sv:.4f} (-> {1/(2*alpha):.4f})")
