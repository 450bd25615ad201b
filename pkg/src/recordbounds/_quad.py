"""Knot-aligned adaptive quadrature against the weight w_alpha, in the L coordinate.

With x = x(L) and u = 1 - exp(-L), ``int f(x) w(x) dx = int f(x(L)) exp(-L) dL``
over [0, inf) for every alpha, so one integrator serves all families.
"""
from __future__ import annotations

import math

from scipy.integrate import quad

EPSREL = 1e-13
EPSABS = 1e-15
_FIXED_BREAKS = (0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0)
# exp(-L) below double precision relative to the O(1) mass near the origin
_L_FAR = 800.0


def breakpoints(knots_L=()) -> list[float]:
    pts = {p for p in _FIXED_BREAKS}
    pts.update(float(t) for t in knots_L if 0.0 < t < math.inf)
    return sorted(pts)


def integrate_L(f, knots_L=(), *, upper: float = math.inf) -> float:
    """Integral of f(L) * exp(-L) over [0, upper)."""
    pts = [p for p in breakpoints(knots_L) if p < upper]
    hi_end = min(upper, _L_FAR)
    pts.append(hi_end)
    total = 0.0

    def integrand(t):
        return float(f(t)) * math.exp(-t)

    for lo, hi in zip(pts, pts[1:]):
        if hi <= lo:
            continue
        # full_output keeps quadpack's roundoff notices (which fire when the
        # integrand is already at noise level) out of the warning stream
        val = quad(integrand, lo, hi, epsabs=EPSABS, epsrel=EPSREL, limit=200, full_output=1)[0]
        total += val
    return total
