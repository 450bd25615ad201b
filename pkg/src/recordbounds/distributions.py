"""Generalized Pareto weights, uniform k-th record laws and their compositions.

Most routines work internally in the log-survival coordinate
``L = -log(1 - u)`` with ``u = W_alpha(x)``.  In that coordinate every
quantity below has one closed form valid for all ``alpha > -1/2`` and
there is no loss of precision as ``u`` approaches 1.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc, gammaincc, gammaln, xlogy

__all__ = [
    "DomainError",
    "GfrAlpha",
    "RecordIndex",
    "ID",
    "IFR",
    "x_of_L",
    "L_of_x",
    "gpd_cdf",
    "gpd_pdf",
    "gpd_quantile",
    "record_pdf",
    "record_cdf",
    "composed_pdf",
    "composed_cdf",
    "int_W",
    "int_xW",
    "int_Ghat",
    "h_fn",
    "h_deriv",
    "h_norm_sq",
    "ghat_L",
    "Ghat_L",
]


class DomainError(ValueError):
    """Argument outside the admissible domain of an operation."""


@dataclass(frozen=True)
class GfrAlpha:
    """Parameter of the IGFR(alpha) family and of the weight cdf W_alpha.

    ``alpha = 1`` gives the uniform weight (increasing density family),
    ``alpha = 0`` the standard exponential (increasing failure rate).
    """

    alpha: float

    def __post_init__(self):
        a = float(self.alpha)
        if not math.isfinite(a) or a <= -0.5:
            raise DomainError(f"alpha must satisfy alpha > -1/2, got {self.alpha!r}")
        if abs(a) < sys.float_info.min:
            # subnormal alpha loses bits in alpha * L; the O(alpha) difference
            # from the exponential weight is far below double resolution
            a = 0.0
        object.__setattr__(self, "alpha", a)

    @property
    def support_end(self) -> float:
        return 1.0 / self.alpha if self.alpha > 0 else math.inf

    @property
    def label(self) -> str:
        if self.alpha == 1.0:
            return "ID"
        if self.alpha == 0.0:
            return "IFR"
        return f"GFR({self.alpha:g})"

    @property
    def mean(self) -> float:
        """Mean of W_alpha."""
        return 1.0 / (1.0 + self.alpha)

    @property
    def variance(self) -> float:
        """Variance of W_alpha."""
        a = self.alpha
        return 1.0 / ((1.0 + a) ** 2 * (1.0 + 2.0 * a))


ID = GfrAlpha(1.0)
IFR = GfrAlpha(0.0)


@dataclass(frozen=True)
class RecordIndex:
    """Index (k, n) of the n-th value of the k-th record sequence."""

    k: int
    n: int

    def __post_init__(self):
        for name in ("k", "n"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v:
                raise DomainError(f"{name} must be an integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if self.k < 1:
            raise DomainError(f"k must be >= 1, got {self.k}")
        if self.n < 1:
            raise DomainError(f"n must be >= 1, got {self.n} (n = 0 is not supported)")


# -- coordinate maps ---------------------------------------------------------

def x_of_L(alpha: float, L):
    """Map log-survival ``L`` to ``x = W_alpha^{-1}(1 - exp(-L))``."""
    L = np.asarray(L, dtype=float)
    if alpha == 0.0:
        return L + 0.0
    with np.errstate(over="ignore"):
        return -np.expm1(-alpha * L) / alpha


def L_of_x(alpha: float, x):
    """Inverse of :func:`x_of_L`; ``-log(1 - W_alpha(x))``."""
    x = np.asarray(x, dtype=float)
    if alpha == 0.0:
        return x + 0.0
    with np.errstate(divide="ignore"):
        return -np.log1p(-alpha * x) / alpha


def _check_support(fam: GfrAlpha, x, *, closed: bool = False):
    x = np.asarray(x, dtype=float)
    d = fam.support_end
    bad = (x < 0) | ~np.isfinite(x) | ((x > d) if closed else (x >= d))
    if np.any(bad):
        raise DomainError(f"x outside the support [0, {d}) of W_{fam.alpha:g}")
    return x


def _check_prob(u, *, lo_open=False, hi_open=True):
    u = np.asarray(u, dtype=float)
    bad = (u <= 0 if lo_open else u < 0) | (u >= 1 if hi_open else u > 1) | np.isnan(u)
    if np.any(bad):
        raise DomainError("probability argument outside its admissible interval")
    return u


def _scalar(v):
    return float(v) if np.ndim(v) == 0 else v


# -- GPD weight --------------------------------------------------------------

def gpd_cdf(fam: GfrAlpha, x):
    """W_alpha(x) for 0 <= x < d."""
    x = _check_support(fam, x)
    return _scalar(-np.expm1(-L_of_x(fam.alpha, x)))


def gpd_pdf(fam: GfrAlpha, x):
    """Density w_alpha(x) = (1 - alpha x)^(1/alpha - 1)."""
    x = _check_support(fam, x)
    L = L_of_x(fam.alpha, x)
    return _scalar(np.exp(-(1.0 - fam.alpha) * L))


def gpd_quantile(fam: GfrAlpha, u):
    """W_alpha^{-1}(u) for 0 <= u < 1."""
    u = _check_prob(u)
    return _scalar(x_of_L(fam.alpha, -np.log1p(-u)))


# -- uniform record laws -----------------------------------------------------

def ghat_L(k: int, n: int, L):
    """g_n^(k) evaluated at u = 1 - exp(-L); n = -1 returns zeros."""
    L = np.asarray(L, dtype=float)
    if n < 0:
        return np.zeros_like(L)
    with np.errstate(divide="ignore", invalid="ignore"):
        logv = (n + 1) * math.log(k) - gammaln(n + 1) + xlogy(n, L) - (k - 1) * L
    # at the support end (L = inf) the density vanishes for k >= 2
    end = 0.0 if k > 1 else (math.inf if n > 0 else 1.0)
    return np.where(np.isinf(L), end, np.exp(logv))


def Ghat_L(k: int, n: int, L):
    """G_n^(k) at u = 1 - exp(-L), i.e. the regularized lower gamma P(n+1, kL)."""
    return gammainc(n + 1, k * np.asarray(L, dtype=float))


def record_pdf(idx: RecordIndex, u, *, n: int | None = None):
    """Density g_n^(k)(u) of the n-th uniform k-th record value.

    ``n`` may be overridden (including ``n = 0``) for internal recurrences.
    """
    u = _check_prob(u, lo_open=True)
    nn = idx.n if n is None else n
    return _scalar(ghat_L(idx.k, nn, -np.log1p(-u)))


def record_cdf(idx: RecordIndex, u):
    """Distribution function G_n^(k)(u) on [0, 1]."""
    u = _check_prob(u, hi_open=False)
    with np.errstate(divide="ignore"):
        L = -np.log1p(-u)
    return _scalar(np.where(u >= 1.0, 1.0, Ghat_L(idx.k, idx.n, np.where(u >= 1.0, 0.0, L))))


def composed_pdf(fam: GfrAlpha, idx: RecordIndex, x):
    """g_n^(k)(W_alpha(x))."""
    x = _check_support(fam, x)
    return _scalar(ghat_L(idx.k, idx.n, L_of_x(fam.alpha, x)))


def composed_cdf(fam: GfrAlpha, idx: RecordIndex, x):
    """G_n^(k)(W_alpha(x))."""
    x = _check_support(fam, x)
    return _scalar(Ghat_L(idx.k, idx.n, L_of_x(fam.alpha, x)))


# -- closed-form integrals over [0, y] ----------------------------------------
# The *_L variants take the log-survival coordinate of the upper limit and
# accept L = inf (upper limit at the support end).

def int_W_L(alpha: float, L):
    y = x_of_L(alpha, L)
    return y + np.expm1(-(1.0 + alpha) * L) / (1.0 + alpha)


def int_xW_L(alpha: float, L):
    y = x_of_L(alpha, L)
    a1, a2 = 1.0 + alpha, 1.0 + 2.0 * alpha
    with np.errstate(invalid="ignore"):
        tail = np.where(np.isinf(y), 0.0, np.exp(-a1 * L) * y / a1)
    return 0.5 * y * y + tail + np.expm1(-a2 * L) / (a1 * a2)


def int_Ghat_L(alpha: float, k: int, n: int, L):
    L = np.asarray(L, dtype=float)
    y = x_of_L(alpha, L)
    ka = k + alpha
    s = sum((k / ka) ** i / ka * gammainc(i + 1, ka * L) for i in range(n + 1))
    return y - s


def int_W(fam: GfrAlpha, y):
    """Integral of W_alpha over [0, y]."""
    y = _check_support(fam, y)
    return _scalar(int_W_L(fam.alpha, L_of_x(fam.alpha, y)))


def int_xW(fam: GfrAlpha, y):
    """Integral of x W_alpha(x) over [0, y]."""
    y = _check_support(fam, y)
    return _scalar(int_xW_L(fam.alpha, L_of_x(fam.alpha, y)))


def int_Ghat(fam: GfrAlpha, idx: RecordIndex, y, *, allow_end: bool = False):
    """Integral of G_n^(k)(W_alpha(x)) over [0, y].

    With ``allow_end`` the upper limit may equal a finite support end.
    """
    y = _check_support(fam, y, closed=allow_end)
    return _scalar(int_Ghat_L(fam.alpha, idx.k, idx.n, L_of_x(fam.alpha, y)))


# -- the centred record density ----------------------------------------------

def h_L(k: int, n: int, L):
    return ghat_L(k, n, L) - 1.0


def h_deriv_L(alpha: float, k: int, n: int, L):
    L = np.asarray(L, dtype=float)
    with np.errstate(over="ignore"):
        return np.exp(alpha * L) * (k * ghat_L(k, n - 1, L) - (k - 1) * ghat_L(k, n, L))


def h_fn(fam: GfrAlpha, idx: RecordIndex, x):
    """h(x) = g_n^(k)(W_alpha(x)) - 1."""
    x = _check_support(fam, x)
    return _scalar(h_L(idx.k, idx.n, L_of_x(fam.alpha, x)))


def h_deriv(fam: GfrAlpha, idx: RecordIndex, x):
    """Analytic derivative of h via the record-density recurrence."""
    x = _check_support(fam, x)
    return _scalar(h_deriv_L(fam.alpha, idx.k, idx.n, L_of_x(fam.alpha, x)))


def h_norm_sq(idx: RecordIndex) -> float:
    """Squared weighted L2 norm of h; the same for every alpha."""
    k, n = idx.k, idx.n
    logc = (
        2 * (n + 1) * math.log(k)
        + math.lgamma(2 * n + 1)
        - 2 * math.lgamma(n + 1)
        - (2 * n + 1) * math.log(2 * k - 1)
    )
    return math.exp(logc) - 1.0


def tail_mean_L(k: int, n: int, L):
    """Mean of h over [y, d) with respect to w, y at log-survival L."""
    L = np.asarray(L, dtype=float)
    # (1 - G(u) - (1 - u)) / (1 - u) = e^{-(k-1)L} sum_i (kL)^i / i! - 1
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = [np.exp(xlogy(i, k * L) - gammaln(i + 1) - (k - 1) * L) for i in range(n + 1)]
    end = -1.0 if k > 1 else math.inf
    return np.where(np.isinf(L), end, sum(terms) - 1.0)


def survival_L(k: int, n: int, L):
    """1 - G_n^(k) at log-survival L."""
    return gammaincc(n + 1, k * np.asarray(L, dtype=float))
