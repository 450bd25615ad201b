"""Optimal bounds on the standardized mean of the n-th k-th record value.

The bound is the weighted L2 norm of the projection built in
:mod:`recordbounds.projection`.  It is computed twice: once by adaptive
quadrature of the assembled curve (authoritative) and once by the
case-specific closed form, and the gap is kept on the result.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammainc

from . import _mp, _quad
from .distributions import (
    GfrAlpha,
    RecordIndex,
    DomainError,
    Ghat_L,
    L_of_x,
    h_L,
    h_norm_sq,
    int_Ghat_L,
    int_W_L,
    int_xW_L,
    tail_mean_L,
    x_of_L,
)
from .projection import (
    KnotCase,
    KnotDiagnostics,
    KnotSolve,
    ProjectionCurve,
    build_projection,
    lc_norm_sq_L,
)

__all__ = [
    "BoundResult",
    "QuantileModel",
    "bound",
    "bound_k1",
    "bound_hc",
    "bound_lhc",
    "bound_lc",
    "c_alpha_sq",
    "quad_norm",
    "equality_quantile",
]


@dataclass
class BoundResult:
    fam: GfrAlpha
    idx: RecordIndex
    case_tag: KnotCase
    bound: float
    bound_quadrature: float
    bound_closed_form: float | None
    agreement_gap: float
    y_star: float | None = None
    beta_star: float | None = None
    lambda_at_y: float | None = None
    slope: float | None = None
    intercept: float | None = None
    diagnostics: KnotDiagnostics = field(default_factory=KnotDiagnostics)
    # alternative readings of a closed form, kept for logging
    variants: dict = field(default_factory=dict)
    curve: ProjectionCurve | None = field(default=None, repr=False)

    @property
    def degenerate_flag(self) -> bool:
        return self.diagnostics.degenerate_flag


# -- building blocks ---------------------------------------------------------

def _square_C(k: int, n: int) -> float:
    """int_0^1 g_n^(k)(u)^2 du."""
    return math.exp(
        2 * (n + 1) * math.log(k) + math.lgamma(2 * n + 1) - 2 * math.lgamma(n + 1)
        - (2 * n + 1) * math.log(2 * k - 1)
    )


def _h_sq_head(k, n, L):
    """int of h^2 w over [0, y], y at log-survival L (alpha-free)."""
    u = -math.expm1(-L)
    return _square_C(k, n) * float(gammainc(2 * n + 1, (2 * k - 1) * L)) - 2.0 * float(Ghat_L(k, n, L)) + u


def _line_sq(alpha, k, n, L, lam):
    """int over [0, y] of (h(y) + lam (x - y))^2 w."""
    y = float(x_of_L(alpha, L))
    i1 = float(int_W_L(alpha, L))
    i2 = 2.0 * (y * i1 - float(int_xW_L(alpha, L)))
    hy = float(h_L(k, n, L))
    u = -math.expm1(-L)
    return hy * hy * u - 2.0 * hy * lam * i1 + lam * lam * i2


def quad_norm(curve: ProjectionCurve) -> float:
    """Weighted L2 norm of a projection curve by knot-aligned quadrature."""
    v = _quad.integrate_L(lambda t: curve.eval_L(t) ** 2, curve.knots_L)
    return math.sqrt(max(v, 0.0))


# -- closed forms ------------------------------------------------------------

def bound_hc(fam: GfrAlpha, idx: RecordIndex, beta: float | None = None) -> float:
    """Closed-form bound for the trace-then-constant shape (n = 1)."""
    k, n = idx.k, idx.n
    L = 1.0 / (k * (k - 1)) if beta is None else float(L_of_x(fam.alpha, beta))
    hb = float(h_L(k, n, L))
    return math.sqrt(_h_sq_head(k, n, L) + hb * hb * math.exp(-L))


def bound_lhc(fam: GfrAlpha, idx: RecordIndex, y: float, beta: float, lam: float | None = None) -> float:
    """Closed-form bound for the linear / trace / constant shape.

    ``lam`` defaults to the least-squares slope at ``y``.
    """
    from .projection import lambda_L

    a, k, n = fam.alpha, idx.k, idx.n
    Ly, Lb = float(L_of_x(a, y)), float(L_of_x(a, beta))
    if lam is None:
        lam = float(lambda_L(a, k, n, Ly)) if Ly > 0 else 0.0
    mid = _h_sq_head(k, n, Lb) - _h_sq_head(k, n, Ly)
    hb = float(h_L(k, n, Lb))
    return math.sqrt(_line_sq(a, k, n, Ly, lam) + mid + hb * hb * math.exp(-Lb))


def bound_lc(fam: GfrAlpha, idx: RecordIndex, y: float) -> float:
    """Closed-form bound for the linear-then-constant shape with knot y."""
    a, k, n = fam.alpha, idx.k, idx.n
    L = float(L_of_x(a, y))
    y = float(x_of_L(a, L))
    i1 = float(int_W_L(a, L))
    i2 = 2.0 * (y * i1 - float(int_xW_L(a, L)))
    # (W - G) / (1 - W) evaluated without cancellation
    m = float(tail_mean_L(k, n, L))
    return m / i1 * math.sqrt(i2 - i1 * i1)


def c_alpha_sq(fam: GfrAlpha, n: int, y: float, variant: str = "derived") -> float:
    """Squared bound for k = 1, alpha < 0 with linear-then-trace shape.

    ``variant``:
      * ``"printed"``: the reference closed form read with a ``+`` in the
        operator-less gap and its ``(1 - 2 alpha)`` factor;
      * ``"conjectured"``: the same with ``(1 + 2 alpha)``;
      * ``"derived"``: line part on [0, y] plus the h^2 tail on [y, inf),
        in extended precision.
    """
    a = fam.alpha
    L = float(L_of_x(a, y))
    if variant == "derived":
        return _mp.lh_norm_sq(a, 1, n, L)
    if variant not in ("printed", "conjectured"):
        raise ValueError(f"unknown variant {variant!r}")
    y = float(x_of_L(a, L))
    g = float(h_L(1, n, L)) + 1.0
    G = float(Ghat_L(1, n, L))
    IG = float(int_Ghat_L(a, 1, n, L))
    u = -math.expm1(-L)
    s1 = math.exp(-(1.0 + a) * L)  # (1 - alpha y)^{1/alpha + 1}
    s2 = math.exp(-(1.0 + 2.0 * a) * L)  # (1 - alpha y)^{1/alpha + 2}
    den = 2.0 - 2.0 * s2 + y * (1.0 + 2.0 * a) * (a * y + y - 2.0)
    p1 = u * (1.0 + (g - 1.0) ** 2) - G
    p2 = (
        2.0 * (1.0 + 2.0 * a) * (g - 1.0) * (1.0 - y * (1.0 + a) - s1) / den
        * (g * (y * (1.0 + a) - 1.0 + s1) / (1.0 + a) - IG)
    )
    coef = (1.0 - 2.0 * a) if variant == "printed" else (1.0 + 2.0 * a)
    p3 = coef * ((y * (1.0 + a) - 1.0 + s1) * g - (1.0 + a) * IG) ** 2 / ((1.0 + a) * den)
    return p1 + p2 + p3


# -- dispatch ----------------------------------------------------------------

def _closed_form(fam, idx, curve, knots: KnotSolve):
    a, k, n = fam.alpha, idx.k, idx.n
    tag = knots.case_tag
    variants = {}
    if tag is KnotCase.COINCIDE:
        cf = math.sqrt(h_norm_sq(idx))
    elif tag is KnotCase.LINEAR_WHOLE:
        cf = knots.slope * math.sqrt(fam.variance)
    elif tag is KnotCase.HC:
        cf = bound_hc(fam, idx, knots.beta_star)
    elif tag is KnotCase.LHC:
        cf = bound_lhc(fam, idx, knots.y_star, knots.beta_star, knots.lambda_at_y)
    elif tag is KnotCase.LC:
        cf = math.sqrt(float(lc_norm_sq_L(a, k, n, knots.y_L)))
        variants["B2_display"] = bound_lc(fam, idx, knots.y_star)
    else:  # LH
        cf = math.sqrt(c_alpha_sq(fam, n, knots.y_star, "derived"))
        for v in ("printed", "conjectured"):
            sq = c_alpha_sq(fam, n, knots.y_star, v)
            variants[f"C_alpha_{v}"] = math.sqrt(sq) if sq >= 0 else float("nan")
    return cf, variants


def bound(fam: GfrAlpha, idx: RecordIndex, *, force_case: KnotCase | None = None) -> BoundResult:
    """Optimal upper bound on E[(R_n^(k) - mu) / sigma] over IGFR(alpha).

    Examples
    --------
    >>> from recordbounds import IFR, RecordIndex
    >>> round(bound(IFR, RecordIndex(2, 3)).bound, 4)
    1.1321
    """
    curve, knots = build_projection(fam, idx, force_case=force_case)
    q = quad_norm(curve)
    cf, variants = _closed_form(fam, idx, curve, knots)
    return BoundResult(
        fam=fam,
        idx=idx,
        case_tag=knots.case_tag,
        bound=q,
        bound_quadrature=q,
        bound_closed_form=cf,
        agreement_gap=abs(cf - q),
        y_star=knots.y_star,
        beta_star=knots.beta_star,
        lambda_at_y=knots.lambda_at_y,
        slope=knots.slope,
        intercept=knots.intercept,
        diagnostics=knots.diagnostics,
        variants=variants,
        curve=curve,
    )


def bound_k1(fam: GfrAlpha, n: int) -> BoundResult:
    """Bound for classic upper records (k = 1)."""
    return bound(fam, RecordIndex(1, n))


# -- equality-attaining law ----------------------------------------------------

@dataclass(frozen=True)
class QuantileModel:
    """Parent quantile F^{-1}(u) = mu + sigma Ph(W^{-1}(u)) / ||Ph||."""

    mu: float
    sigma: float
    curve: ProjectionCurve
    norm: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError("sigma must be positive")
        if not self.norm > 0:
            raise DomainError("projection norm must be positive")

    def quantile_L(self, L):
        return self.mu + self.sigma * self.curve.eval_L(L) / self.norm

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore"):
            return self.quantile_L(-np.log1p(-u))

    def moments(self) -> tuple[float, float]:
        """Mean and standard deviation by quadrature."""
        knots = self.curve.knots_L
        m = _quad.integrate_L(lambda t: self.quantile_L(t), knots)
        v = _quad.integrate_L(lambda t: (self.quantile_L(t) - m) ** 2, knots)
        return m, math.sqrt(v)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.quantile_L(rng.standard_exponential(size))


def equality_quantile(
    fam: GfrAlpha, idx: RecordIndex, mu: float = 0.0, sigma: float = 1.0, *, result: BoundResult | None = None
) -> QuantileModel:
    """Parent distribution for which the bound is attained."""
    res = bound(fam, idx) if result is None else result
    return QuantileModel(float(mu), float(sigma), res.curve, res.bound)
