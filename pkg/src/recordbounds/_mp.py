"""Extended-precision closed forms for the linear-then-h shape.

For k = 1 and alpha < 0 the knot can sit far out (x ~ 1e4 and beyond),
where the line through (y, h(y)) has an intercept that cancels several
digits in double precision.  The knot equation and the bound are
therefore evaluated with mpmath.
"""
from __future__ import annotations

import mpmath as mp

DPS = 40


def _P(a, x):
    return mp.gammainc(a, 0, x, regularized=True)


def _Q(a, x):
    return mp.gammainc(a, x, mp.inf, regularized=True)


class LinearH:
    """Closed forms at log-survival L for given (alpha, k, n)."""

    def __init__(self, alpha: float, k: int, n: int):
        self.a, self.k, self.n = mp.mpf(alpha), k, n

    def parts(self, L):
        a, k, n = self.a, self.k, self.n
        L = mp.mpf(L)
        y = L if a == 0 else -mp.expm1(-a * L) / a
        u = -mp.expm1(-L)
        e1 = mp.exp(-(1 + a) * L)
        i1 = y + mp.expm1(-(1 + a) * L) / (1 + a)
        ixw = y * y / 2 + e1 * y / (1 + a) + mp.expm1(-(1 + 2 * a) * L) / ((1 + a) * (1 + 2 * a))
        i2 = 2 * (y * i1 - ixw)
        ka = k + a
        ig = y - mp.fsum((k / ka) ** i / ka * _P(i + 1, ka * L) for i in range(n + 1))
        g = mp.mpf(k) ** (n + 1) / mp.factorial(n) * L**n * mp.exp(-(k - 1) * L)
        lam = (g * i1 - ig) / i2
        return dict(y=y, u=u, i1=i1, i2=i2, g=g, G=_P(n + 1, k * L), lam=lam)

    def Y(self, L):
        a, k, n = self.a, self.k, self.n
        L = mp.mpf(L)
        kk = mp.mpf(k)

        def g(m):
            return kk ** (m + 1) / mp.factorial(m) * L**m * mp.exp(-(k - 1) * L)

        dh = mp.exp(a * L) * (k * g(n - 1) - (k - 1) * g(n))
        return self.parts(L)["lam"] - dh

    def Z(self, L):
        p = self.parts(L)
        return p["G"] - p["u"] * p["g"] + p["lam"] * p["i1"]

    def norm_sq(self, L):
        k, n = self.k, self.n
        p = self.parts(L)
        hy = p["g"] - 1
        line = hy * hy * p["u"] - 2 * hy * p["lam"] * p["i1"] + p["lam"] ** 2 * p["i2"]
        c = mp.mpf(k) ** (2 * n + 2) * mp.factorial(2 * n) / (mp.factorial(n) ** 2 * mp.mpf(2 * k - 1) ** (2 * n + 1))
        tail = c * _Q(2 * n + 1, (2 * k - 1) * mp.mpf(L)) - 2 * _Q(n + 1, k * mp.mpf(L)) + mp.exp(-mp.mpf(L))
        return line + tail


def lh_knot(alpha: float, k: int, n: int, lo: float, hi: float, *, npts: int = 256, y_tol: float = -1e-10):
    """First admissible root of Z on [lo, hi].

    Returns ``(L, lambda, intercept, sign_changes)`` with floats, or None
    when Z does not change sign on a root with Y >= y_tol.
    """
    with mp.workdps(DPS):
        f = LinearH(alpha, k, n)
        grid = [mp.mpf(lo) + (mp.mpf(hi) - lo) * i / (npts - 1) for i in range(npts)]
        zs = [f.Z(t) for t in grid]
        changes = [i for i in range(npts - 1) if zs[i] * zs[i + 1] < 0]
        L = None
        for i in changes:
            r = mp.findroot(f.Z, (grid[i], grid[i + 1]), solver="anderson", tol=mp.mpf(10) ** (-30))
            if f.Y(r) >= y_tol:
                L = r
                break
        if L is None:
            return None
        # round the knot first so line coefficients match the float knot
        L = mp.mpf(float(L))
        p = f.parts(L)
        return float(L), float(p["lam"]), float(p["g"] - 1 - p["lam"] * p["y"]), len(changes)


def lh_norm_sq(alpha: float, k: int, n: int, L: float) -> float:
    with mp.workdps(DPS):
        return float(LinearH(alpha, k, n).norm_sq(L))
