"""Projection of the centred record density onto nondecreasing concave functions.

The projected curve is piecewise: linear, tracing ``h`` itself, or
constant.  Knots are located in the log-survival coordinate ``L`` by a
sign-change scan followed by bracketed refinement.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import gammaln, xlogy

from . import _mp
from .distributions import (
    GfrAlpha,
    RecordIndex,
    Ghat_L,
    L_of_x,
    h_L,
    h_deriv_L,
    int_Ghat_L,
    int_W_L,
    int_xW_L,
    tail_mean_L,
    x_of_L,
)
from .shape import ShapeCase, ShapeReport, classify

__all__ = [
    "KnotCase",
    "Segment",
    "ProjectionCurve",
    "KnotDiagnostics",
    "KnotSolve",
    "ProjectionError",
    "T_fn",
    "lambda_fn",
    "Y_fn",
    "Z_fn",
    "lc_condition",
    "lc_norm_sq",
    "find_beta_star",
    "find_lhc_knot",
    "find_lc_knot",
    "find_lh_knot",
    "linear_coefficients",
    "build_projection",
]

SCAN_POINTS = 2048
Y_TOL = -1e-10
TIE_TOL = 1e-12
# below this L the closed form for lambda loses too many digits
SMALL_L = 1e-3
# exp(-L) is below double precision relative to O(1) mass past this L
LH_FAR_L = 700.0


class ProjectionError(RuntimeError):
    """A knot equation that must have a solution has none on the scanned range."""


class KnotCase(str, enum.Enum):
    HC = "h-c"
    LHC = "l-h-c"
    LC = "l-c"
    LH = "l-h"
    LINEAR_WHOLE = "linear"
    COINCIDE = "coincide"


# -- piecewise curve ---------------------------------------------------------

@dataclass(frozen=True)
class Segment:
    """One piece of a projection curve, delimited in the L coordinate."""

    kind: str  # "linear" | "trace_h" | "constant"
    L_lo: float
    L_hi: float
    slope: float = 0.0
    intercept: float = 0.0
    level: float = 0.0

    def x_bounds(self, alpha: float) -> tuple[float, float]:
        return float(x_of_L(alpha, self.L_lo)), float(x_of_L(alpha, self.L_hi))


@dataclass(frozen=True)
class ProjectionCurve:
    segments: tuple[Segment, ...]
    fam: GfrAlpha
    idx: RecordIndex

    def __post_init__(self):
        segs = self.segments
        if not segs or segs[0].L_lo != 0.0 or segs[-1].L_hi != math.inf:
            raise ValueError("segments must cover [0, d)")
        for s, t in zip(segs, segs[1:]):
            if s.L_hi != t.L_lo:
                raise ValueError("segments must be contiguous")

    @property
    def knots_L(self) -> list[float]:
        return [s.L_hi for s in self.segments[:-1]]

    @property
    def knots(self) -> list[float]:
        return [float(x_of_L(self.fam.alpha, L)) for L in self.knots_L]

    def eval_L(self, L):
        L = np.asarray(L, dtype=float)
        x = x_of_L(self.fam.alpha, L)
        out = np.empty_like(L)
        k, n = self.idx.k, self.idx.n
        for i, s in enumerate(self.segments):
            last = i == len(self.segments) - 1
            mask = (L >= s.L_lo) & ((L <= s.L_hi) if last else (L < s.L_hi))
            if not np.any(mask):
                continue
            if s.kind == "linear":
                out[mask] = s.intercept + s.slope * x[mask]
            elif s.kind == "trace_h":
                out[mask] = h_L(k, n, L[mask])
            else:
                out[mask] = s.level
        return out if out.ndim else float(out)

    def __call__(self, x):
        return self.eval_L(L_of_x(self.fam.alpha, x))

    def describe(self) -> list[dict]:
        rows = []
        for s in self.segments:
            lo, hi = s.x_bounds(self.fam.alpha)
            row = {"kind": s.kind, "x_lo": lo, "x_hi": hi}
            if s.kind == "linear":
                row.update(slope=s.slope, intercept=s.intercept)
            elif s.kind == "constant":
                row.update(level=s.level)
            rows.append(row)
        return rows


@dataclass
class KnotDiagnostics:
    T_at_b: float | None = None
    roots_scanned: int = 0
    degenerate_flag: bool = False
    overlap_flag: bool = False
    tie_flag: bool = False
    lambda_limit_flag: bool = False
    notes: list[str] = field(default_factory=list)


@dataclass
class KnotSolve:
    case_tag: KnotCase
    beta_star: float | None = None
    y_star: float | None = None
    lambda_at_y: float | None = None
    beta_L: float | None = None
    y_L: float | None = None
    slope: float | None = None
    intercept: float | None = None
    diagnostics: KnotDiagnostics = field(default_factory=KnotDiagnostics)

    def __post_init__(self):
        if self.case_tag is KnotCase.LHC and not self.y_star < self.beta_star:
            raise ValueError("l-h-c knots require y* < beta*")
        if (
            self.case_tag is KnotCase.LC
            and self.beta_star is not None
            and self.y_L < self.beta_L
        ):
            raise ValueError("l-c knot must lie at or beyond beta*")


# -- auxiliary functionals (L coordinate) ------------------------------------

def T_L(k: int, n: int, L):
    """h(beta)(1 - W(beta)) - int_beta^d h w, at log-survival L."""
    L = np.asarray(L, dtype=float)
    with np.errstate(divide="ignore"):
        lead = np.exp(math.log(k - 1) + xlogy(n, k * L) - gammaln(n + 1) - k * L) if k > 1 else 0.0
        rest = sum(np.exp(xlogy(i, k * L) - gammaln(i + 1) - k * L) for i in range(n))
    return lead - rest


def _moments_L(alpha, L):
    y = x_of_L(alpha, L)
    i1 = int_W_L(alpha, L)
    i2 = 2.0 * (y * i1 - int_xW_L(alpha, L))
    return y, i1, i2


def lambda_L(alpha, k, n, L):
    L = np.asarray(L, dtype=float)
    _, i1, i2 = _moments_L(alpha, L)
    num = (h_L(k, n, L) + 1.0) * i1 - int_Ghat_L(alpha, k, n, L)
    return num / i2


def lambda_quad_L(alpha, k, n, L) -> float:
    """Defining ratio of lambda by direct quadrature (small-y fallback)."""
    y = float(x_of_L(alpha, L))
    hy = float(h_L(k, n, L))

    def num(t):
        x = x_of_L(alpha, t)
        return (x - y) * (h_L(k, n, t) - hy) * math.exp(-t)

    def den(t):
        x = x_of_L(alpha, t)
        return (x - y) ** 2 * math.exp(-t)

    a = quad(num, 0.0, L, epsabs=0, epsrel=1e-12, full_output=1)[0]
    b = quad(den, 0.0, L, epsabs=0, epsrel=1e-12, full_output=1)[0]
    return a / b


def Y_L(alpha, k, n, L):
    return lambda_L(alpha, k, n, L) - h_deriv_L(alpha, k, n, L)


def Z_L(alpha, k, n, L):
    L = np.asarray(L, dtype=float)
    u = -np.expm1(-L)
    return Ghat_L(k, n, L) - u * (h_L(k, n, L) + 1.0) + lambda_L(alpha, k, n, L) * int_W_L(alpha, L)


def lc_condition_L(alpha, k, n, L):
    """Tail mean of h minus the level of the best linear-constant fit."""
    L = np.asarray(L, dtype=float)
    _, i1, i2 = _moments_L(alpha, L)
    J = i1 - int_Ghat_L(alpha, k, n, L)
    return tail_mean_L(k, n, L) - J * i1 / (i2 - i1 * i1)


def lc_norm_sq_L(alpha, k, n, L):
    L = np.asarray(L, dtype=float)
    _, i1, i2 = _moments_L(alpha, L)
    m = tail_mean_L(k, n, L)
    return (m / i1) ** 2 * (i2 - i1 * i1)


# -- public x-coordinate wrappers --------------------------------------------

def T_fn(fam: GfrAlpha, idx: RecordIndex, beta):
    """Balance function whose zero fixes the constant tail of the projection."""
    v = T_L(idx.k, idx.n, L_of_x(fam.alpha, beta))
    return float(v) if np.ndim(v) == 0 else v


def lambda_fn(fam: GfrAlpha, idx: RecordIndex, y, *, return_flag: bool = False):
    """Least-squares slope of h on [0, y] for lines through (y, h(y)).

    For very small ``y`` the closed form cancels badly and the defining
    ratio is integrated directly; ``return_flag`` reports that fallback.
    """
    L = float(L_of_x(fam.alpha, y))
    if not L > 0:
        raise ValueError("lambda requires y > 0")
    if L < SMALL_L:
        v = lambda_quad_L(fam.alpha, idx.k, idx.n, L)
        return (v, True) if return_flag else v
    v = float(lambda_L(fam.alpha, idx.k, idx.n, L))
    return (v, False) if return_flag else v


def Y_fn(fam: GfrAlpha, idx: RecordIndex, y):
    v = Y_L(fam.alpha, idx.k, idx.n, L_of_x(fam.alpha, y))
    return float(v) if np.ndim(v) == 0 else v


def Z_fn(fam: GfrAlpha, idx: RecordIndex, y):
    v = Z_L(fam.alpha, idx.k, idx.n, L_of_x(fam.alpha, y))
    return float(v) if np.ndim(v) == 0 else v


def lc_condition(fam: GfrAlpha, idx: RecordIndex, y):
    v = lc_condition_L(fam.alpha, idx.k, idx.n, L_of_x(fam.alpha, y))
    return float(v) if np.ndim(v) == 0 else v


def lc_norm_sq(fam: GfrAlpha, idx: RecordIndex, y):
    """Squared norm of the linear-constant candidate with knot y."""
    v = lc_norm_sq_L(fam.alpha, idx.k, idx.n, L_of_x(fam.alpha, y))
    return float(v) if np.ndim(v) == 0 else v


# -- root location -------------------------------------------------------------

def _scan_roots(f, lo: float, hi: float, npts: int) -> list[float]:
    """All sign changes of f on a uniform grid over [lo, hi], refined."""
    grid = np.linspace(lo, hi, npts)
    with np.errstate(all="ignore"):
        vals = np.asarray(f(grid), dtype=float)
    roots = []
    for i in range(npts - 1):
        a, b = vals[i], vals[i + 1]
        if not (np.isfinite(a) and np.isfinite(b)):
            continue
        if a == 0.0:
            roots.append(float(grid[i]))
        elif a * b < 0:
            roots.append(brentq(lambda t: float(f(t)), grid[i], grid[i + 1], xtol=1e-15, rtol=1e-15))
    if vals[-1] == 0.0:
        roots.append(float(grid[-1]))
    return roots


def beta_star_L(idx: RecordIndex) -> float:
    k, n = idx.k, idx.n
    if n == 1:
        return 1.0 / (k * (k - 1))
    Lc = n / (k - 1)
    return brentq(lambda t: float(T_L(k, n, t)), 0.0, Lc, xtol=1e-15, rtol=1e-15)


def find_beta_star(fam: GfrAlpha, idx: RecordIndex, report: ShapeReport | None = None) -> float:
    """Unique zero of :func:`T_fn` on (0, c); requires k >= 2."""
    if idx.k < 2:
        raise ValueError("beta* is defined for k >= 2 only")
    return float(x_of_L(fam.alpha, beta_star_L(idx)))


def _first_admissible_Z_root(alpha, k, n, lo, hi, npts, diag):
    roots = _scan_roots(lambda t: Z_L(alpha, k, n, t), lo, hi, npts)
    diag.roots_scanned += len(roots)
    for r in roots:
        if Y_L(alpha, k, n, r) >= Y_TOL:
            return r
    return None


def find_lhc_knot(
    fam: GfrAlpha, idx: RecordIndex, b: float, beta_star: float, *, npts: int = SCAN_POINTS,
    diagnostics: KnotDiagnostics | None = None,
) -> float | None:
    """Smallest y in (b, beta*) with Z(y) = 0 and Y(y) >= 0, else None."""
    diag = diagnostics if diagnostics is not None else KnotDiagnostics()
    a = fam.alpha
    r = _first_admissible_Z_root(
        a, idx.k, idx.n, float(L_of_x(a, b)), float(L_of_x(a, beta_star)), npts, diag
    )
    return None if r is None else float(x_of_L(a, r))


def _lc_upper_L(idx: RecordIndex) -> float:
    return max(-math.log(1e-9), 4.0 * (idx.n + 1) / (idx.k - 1) + 10.0)


def _find_lc_knot_L(alpha, idx, beta_L, npts, diag):
    k, n = idx.k, idx.n
    hi = _lc_upper_L(idx)
    roots = _scan_roots(lambda t: lc_condition_L(alpha, k, n, t), beta_L, hi, npts)
    diag.roots_scanned += len(roots)
    roots = [r for r in roots if tail_mean_L(k, n, r) > 0]
    if not roots:
        raise ProjectionError(
            f"no admissible linear-constant knot on [beta*, d) for alpha={alpha:g}, k={k}, n={n}"
        )
    norms = [float(lc_norm_sq_L(alpha, k, n, r)) for r in roots]
    best = max(norms)
    ties = [r for r, v in zip(roots, norms) if best - v <= TIE_TOL * max(1.0, best)]
    if len(ties) > 1:
        diag.tie_flag = True
        diag.notes.append(f"{len(ties)} l-c roots tie within {TIE_TOL:g}; smallest kept")
    y_L = min(ties)
    step = (hi - beta_L) / (npts - 1)
    if y_L >= hi - step:
        diag.degenerate_flag = True
        diag.notes.append("l-c knot at the scan cap; limit value reported")
    return y_L


def find_lc_knot(
    fam: GfrAlpha, idx: RecordIndex, beta_star: float, *, npts: int = SCAN_POINTS,
    diagnostics: KnotDiagnostics | None = None,
) -> float:
    """Knot of the linear-constant projection maximizing its norm."""
    diag = diagnostics if diagnostics is not None else KnotDiagnostics()
    a = fam.alpha
    y_L = _find_lc_knot_L(a, idx, float(L_of_x(a, beta_star)), npts, diag)
    return float(x_of_L(a, y_L))


def _lh_upper_L(alpha, b_L):
    return b_L + max(60.0, 8.0 * b_L)


def find_lh_knot(
    fam: GfrAlpha, idx: RecordIndex, b: float, *, npts: int = 4 * SCAN_POINTS,
    diagnostics: KnotDiagnostics | None = None,
) -> float:
    """Smallest y > b with Z(y) = 0 and Y(y) >= 0 (unbounded increasing h)."""
    diag = diagnostics if diagnostics is not None else KnotDiagnostics()
    a = fam.alpha
    b_L = float(L_of_x(a, b))
    return float(x_of_L(a, _find_lh_knot_L(a, idx, b_L, npts, diag)[0]))


def _find_lh_knot_L(a, idx, b_L, npts, diag):
    # The closed-form Z cancels terms of size h(y) ~ L^n / n!, which makes
    # a double-precision sign scan unreliable far out; scan and refine in
    # extended precision instead, widening the range if needed.
    k, n = idx.k, idx.n
    hi = _lh_upper_L(a, b_L)
    for _ in range(4):
        found = _mp.lh_knot(a, k, n, b_L, hi, y_tol=Y_TOL)
        if found is not None:
            L, lam, icpt, changes = found
            diag.roots_scanned += changes
            return L, lam, icpt
        hi = b_L + 2.0 * (hi - b_L)
    raise ProjectionError(f"no linear-h knot found beyond b for alpha={a:g}, n={n}")


# -- assembly ----------------------------------------------------------------

def linear_coefficients(fam: GfrAlpha, idx: RecordIndex) -> tuple[float, float]:
    """Slope and intercept of the best zero-mean line for k = 1."""
    a, n = fam.alpha, idx.n
    if a == 0.0:
        slope = float(n)
    else:
        # covariance of x and h under w; stable as alpha -> 0
        cov = -math.expm1(-(n + 1) * math.log1p(a)) / a - 1.0 / (1.0 + a)
        slope = (1.0 + a) ** 2 * (2.0 * a + 1.0) * cov
    return slope, -slope / (1.0 + a)


def _linear_const_curve(fam, idx, y_L):
    a = fam.alpha
    y = float(x_of_L(a, y_L))
    i1 = float(int_W_L(a, y_L))
    m = float(tail_mean_L(idx.k, idx.n, y_L))
    slope = m / i1
    segs = (
        Segment("linear", 0.0, y_L, slope=slope, intercept=m - slope * y),
        Segment("constant", y_L, math.inf, level=m),
    )
    return ProjectionCurve(segs, fam, idx), slope


def build_projection(
    fam: GfrAlpha, idx: RecordIndex, *, force_case: KnotCase | None = None, npts: int = SCAN_POINTS,
) -> tuple[ProjectionCurve, KnotSolve]:
    """Projection of h onto the cone of nondecreasing concave functions.

    ``force_case=KnotCase.HC`` applies the trace-then-constant shape to an
    n = 1 cell regardless of its classification (diagnostic use only).
    """
    report = classify(fam, idx)
    a, k, n = fam.alpha, idx.k, idx.n
    diag = KnotDiagnostics(overlap_flag=report.overlap_flag)
    if report.overlap_flag:
        diag.notes.append("n = 1 cell where the h-c closed form is also admissible")

    if report.case_tag is ShapeCase.COINCIDE_CONCAVE:
        curve = ProjectionCurve((Segment("trace_h", 0.0, math.inf),), fam, idx)
        return curve, KnotSolve(KnotCase.COINCIDE, diagnostics=diag)

    if report.case_tag is ShapeCase.LINEAR_PROJECTION:
        slope, intercept = linear_coefficients(fam, idx)
        curve = ProjectionCurve(
            (Segment("linear", 0.0, math.inf, slope=slope, intercept=intercept),), fam, idx
        )
        return curve, KnotSolve(KnotCase.LINEAR_WHOLE, slope=slope, intercept=intercept, diagnostics=diag)

    if report.case_tag is ShapeCase.A_TILDE_CASE and report.b_L > LH_FAR_L:
        # alpha -> 0-: the trace part would start where the weight is
        # below double precision, leaving the best line on the whole range
        diag.notes.append("l-h knot beyond the representable tail; linear projection used")
        slope, intercept = linear_coefficients(fam, idx)
        curve = ProjectionCurve(
            (Segment("linear", 0.0, math.inf, slope=slope, intercept=intercept),), fam, idx
        )
        return curve, KnotSolve(KnotCase.LINEAR_WHOLE, slope=slope, intercept=intercept, diagnostics=diag)

    if report.case_tag is ShapeCase.A_TILDE_CASE:
        y_L, lam, icpt = _find_lh_knot_L(a, idx, report.b_L, 4 * npts, diag)
        y = float(x_of_L(a, y_L))
        segs = (
            Segment("linear", 0.0, y_L, slope=lam, intercept=icpt),
            Segment("trace_h", y_L, math.inf),
        )
        knots = KnotSolve(
            KnotCase.LH, y_star=y, y_L=y_L, lambda_at_y=lam, slope=lam, intercept=icpt, diagnostics=diag
        )
        return ProjectionCurve(segs, fam, idx), knots

    beta_L = beta_star_L(idx)
    beta = float(x_of_L(a, beta_L))
    use_hc = report.case_tag is ShapeCase.HC_CASE or (force_case is KnotCase.HC and n == 1)
    if use_hc:
        level = float(h_L(k, n, beta_L))
        segs = (Segment("trace_h", 0.0, beta_L), Segment("constant", beta_L, math.inf, level=level))
        knots = KnotSolve(KnotCase.HC, beta_star=beta, beta_L=beta_L, diagnostics=diag)
        return ProjectionCurve(segs, fam, idx), knots

    b_L = report.b_L
    diag.T_at_b = float(T_L(k, n, b_L))
    if diag.T_at_b == 0.0:
        diag.notes.append("T(b) = 0 exactly; treated as l-c")
    if diag.T_at_b < 0 and force_case is not KnotCase.LC:
        r = _first_admissible_Z_root(a, k, n, b_L, beta_L, npts, diag)
        if r is not None:
            y = float(x_of_L(a, r))
            lam = float(lambda_L(a, k, n, r))
            segs = (
                Segment("linear", 0.0, r, slope=lam, intercept=float(h_L(k, n, r)) - lam * y),
                Segment("trace_h", r, beta_L),
                Segment("constant", beta_L, math.inf, level=float(h_L(k, n, beta_L))),
            )
            knots = KnotSolve(
                KnotCase.LHC, beta_star=beta, y_star=y, lambda_at_y=lam,
                beta_L=beta_L, y_L=r, slope=lam, diagnostics=diag,
            )
            return ProjectionCurve(segs, fam, idx), knots

    y_L = _find_lc_knot_L(a, idx, beta_L, npts, diag)
    curve, slope = _linear_const_curve(fam, idx, y_L)
    y = float(x_of_L(a, y_L))
    if math.isfinite(fam.support_end) and fam.support_end - y < 5e-5:
        diag.degenerate_flag = True
        diag.notes.append("l-c knot indistinguishable from the support end at 4 decimals")
    knots = KnotSolve(
        KnotCase.LC, beta_star=beta, y_star=y, lambda_at_y=slope,
        beta_L=beta_L, y_L=y_L, slope=slope, diagnostics=diag,
    )
    return curve, knots
