"""Closed-form reference solutions used as ground truth everywhere.

Radial reduction: for u(x) = v(|x|) with slope p(r) = v'(r), the determinant
of the Hessian is det D2 u = v''(r) v'(r) / r, so any radial right-hand side
f(r) gives the first integral

    d/dr [ P(p(r)) ] = r f(r),     P(p) = integral of q dq / ...

Concretely:

* graph equation  det D2 u = (1 + |Du|^2)^(2 - 1/(2 alpha)):
      (1 + p^2)^(1/(2 alpha) - 1) = 1 + (1/alpha - 2) r^2 / 2,
  hence p(r) = sqrt((1 + c r^2)^(2 alpha / (1 - 2 alpha)) - 1) with
  c = (1/alpha - 2)/2.

* dual equation  det D2 v = (eta + r^2)^(1/(2 alpha) - 2):
      q(r) = sqrt(((eta + r^2)^k - eta^k) / k),  k = 1/(2 alpha) - 1
  (for eta = 0 the profile is the pure power sqrt(2/(1/alpha - 2)) r^(k)).

Values are slope integrals, tabulated once on a dense geometric grid and
corrected locally with Gauss-Legendre panels (absolute error well below 1e-10).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .grid import check_alpha

_TABLE_RMIN = 1e-6
_TABLE_RMAX = 4e3
_TABLE_N = 1024
_GL_X, _GL_W = np.polynomial.legendre.leggauss(15)


def radial_primal_slope(alpha: float, r) -> np.ndarray:
    """Slope p(r) of the rotationally symmetric graph-equation solution."""
    alpha = check_alpha(alpha)
    r = np.asarray(r, dtype=float)
    c = (1.0 / alpha - 2.0) / 2.0
    expo = 2.0 * alpha / (1.0 - 2.0 * alpha)
    inner = np.maximum((1.0 + c * r**2) ** expo - 1.0, 0.0)
    return np.sqrt(inner)


def radial_dual_slope(alpha: float, r, eta: float = 1.0) -> np.ndarray:
    """Slope q(r) of the rotationally symmetric dual-equation solution."""
    alpha = check_alpha(alpha)
    r = np.asarray(r, dtype=float)
    k = 1.0 / (2.0 * alpha) - 1.0
    if eta == 0.0:
        return np.sqrt(2.0 / (1.0 / alpha - 2.0)) * r**k
    inner = np.maximum(((eta + r**2) ** k - eta**k) / k, 0.0)
    return np.sqrt(inner)


@dataclass(frozen=True)
class RadialProfile:
    """Radial slope/value pair for one of the two rotationally symmetric solutions.

    kind is "primal_translator" or "dual_translator"; values come from the
    cached cumulative slope integral.
    """

    alpha: float
    kind: str
    eta: float = 1.0

    def __post_init__(self):
        check_alpha(self.alpha)
        if self.kind not in ("primal_translator", "dual_translator"):
            raise ValueError(f"unknown profile kind {self.kind!r}")

    def slope(self, r) -> np.ndarray:
        if self.kind == "primal_translator":
            return radial_primal_slope(self.alpha, r)
        return radial_dual_slope(self.alpha, r, eta=self.eta)

    @cached_property
    def _table(self):
        knots = np.concatenate(
            [[0.0], np.geomspace(_TABLE_RMIN, _TABLE_RMAX, _TABLE_N)]
        )
        segs = self._panel_integrals(knots[:-1], knots[1:])
        cum = np.concatenate([[0.0], np.cumsum(segs)])
        return knots, cum

    def _panel_integrals(self, a, b) -> np.ndarray:
        """15-point Gauss-Legendre slope integrals over the panels [a, b]."""
        mid = 0.5 * (a + b)
        half = 0.5 * (b - a)
        nodes = mid[:, None] + half[:, None] * _GL_X[None, :]
        vals = self.slope(nodes.ravel()).reshape(nodes.shape)
        return half * (vals @ _GL_W)

    def value(self, r) -> np.ndarray:
        """v(r) = integral of the slope from 0, vectorized over radii."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        if np.any(r < 0):
            raise ValueError("radius must be nonnegative")
        if np.any(r > _TABLE_RMAX):
            raise ValueError(f"radius beyond table range {_TABLE_RMAX}")
        knots, cum = self._table
        idx = np.searchsorted(knots, r, side="right") - 1
        return cum[idx] + self._panel_integrals(knots[idx], r)

    def __call__(self, points) -> np.ndarray:
        """Evaluate as a function of the plane (vectorized over (N, 2))."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return self.value(np.hypot(pts[:, 0], pts[:, 1]))

    def rhs(self, points) -> np.ndarray:
        """The radial right-hand side this profile solves."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        r2 = pts[:, 0] ** 2 + pts[:, 1] ** 2
        if self.kind == "primal_translator":
            p2 = self.slope(np.sqrt(r2)) ** 2
            return (1.0 + p2) ** (2.0 - 1.0 / (2.0 * self.alpha))
        return (self.eta + r2) ** (1.0 / (2.0 * self.alpha) - 2.0)


def radial_primal_value(alpha: float, r) -> np.ndarray:
    return RadialProfile(alpha=alpha, kind="primal_translator").value(r)


def radial_dual_value(alpha: float, r, eta: float = 1.0) -> np.ndarray:
    return RadialProfile(alpha=alpha, kind="dual_translator", eta=eta).value(r)


@dataclass(frozen=True)
class SeparableSolution:
    """Separable solution a |x1|^p + b x2^2 of det D2 u = |x1|^(1/alpha - 4).

    With p = 1/alpha - 2 the power balance requires 2 a b p (p - 1) = 1;
    b is derived from a.  The level-t sub-level set has semi-axes
    (t/a)^(1/p) and (t/b)^(1/2).
    """

    alpha: float
    a: float = 1.0

    def __post_init__(self):
        check_alpha(self.alpha)
        if not self.a > 0:
            raise ValueError("coefficient a must be positive")

    @property
    def p(self) -> float:
        return 1.0 / self.alpha - 2.0

    @property
    def b(self) -> float:
        return 1.0 / (2.0 * self.a * self.p * (self.p - 1.0))

    def __call__(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return self.a * np.abs(pts[:, 0]) ** self.p + self.b * pts[:, 1] ** 2

    def section_semi_axes(self, t: float):
        """Semi-axes of {x : value <= t}, along x1 and x2 respectively."""
        return (t / self.a) ** (1.0 / self.p), np.sqrt(t / self.b)

    def eccentricity_slope(self) -> float:
        """Exact log-log slope of the normalized section matrix norm in t.

        Semi-axes scale like t^(1/p) and t^(1/2), p = 1/alpha - 2, so
        |A_t| = (s2/s1)^(1/2) has slope (1/2 - 1/p)/2 = (1/2 - alpha/(1-2*alpha))/2.
        """
        return 0.5 * (0.5 - self.alpha / (1.0 - 2.0 * self.alpha))


def separable_value(alpha: float, a: float, x) -> np.ndarray:
    return SeparableSolution(alpha=alpha, a=a)(x)
