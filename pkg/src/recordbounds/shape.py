"""Shape classification of the composed record density.

Landmarks are found in the log-survival coordinate ``L`` and mapped back
to ``x`` through ``W_alpha^{-1}``; this keeps the formulas uniform in
alpha.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .distributions import GfrAlpha, RecordIndex, x_of_L

__all__ = [
    "ShapeCase",
    "ShapeReport",
    "mode_L",
    "inflection_L",
    "mode_point",
    "inflection_point",
    "classify",
]


class ShapeCase(str, enum.Enum):
    COINCIDE_CONCAVE = "CoincideConcave"
    LINEAR_PROJECTION = "LinearProjection"
    HC_CASE = "HCCase"
    A_CASE = "ACase"
    A_TILDE_CASE = "ATildeCase"


@dataclass(frozen=True)
class ShapeReport:
    case_tag: ShapeCase
    a: float
    b: float | None
    c: float | None
    d: float
    b_L: float | None = None
    c_L: float | None = None
    # n = 1 with 2k - 2 < alpha <= 2k - 1: the concave-start projection
    # would also be admissible by the n = 1 closed-form result.
    overlap_flag: bool = False


def mode_L(idx: RecordIndex) -> float:
    """Log-survival coordinate of the mode of g_n^(k); requires k >= 2."""
    if idx.k < 2:
        raise ValueError("k = 1 has no finite mode")
    return idx.n / (idx.k - 1)


def inflection_L(alpha: float, idx: RecordIndex) -> float | None:
    """Convex-to-concave inflection of the composed density, or None.

    Smaller positive root of
    ``(k-1)(k-1-alpha) L^2 - (2k-alpha-2) n L + n(n-1) = 0``.
    """
    k, n = idx.k, idx.n
    qa = (k - 1) * (k - 1 - alpha)
    qb = (2 * (k - 1) - alpha) * n  # exact -alpha n for k = 1
    qc = n * (n - 1)
    if n == 1:
        # roots 0 and qb/qa; an inflection exists only for a convex start
        if qb < 0 and qa < 0:
            return qb / qa
        return None
    disc = qb * qb - 4.0 * qa * qc
    if disc < 0:
        return None
    den = qb + math.sqrt(disc)
    if den <= 0:
        return None
    root = 2.0 * qc / den
    if k >= 2 and not root < n / (k - 1):
        return None
    return root


def mode_point(fam: GfrAlpha, idx: RecordIndex) -> float:
    """Mode c of the composed density (k >= 2)."""
    return float(x_of_L(fam.alpha, mode_L(idx)))


def inflection_point(fam: GfrAlpha, idx: RecordIndex) -> float:
    """Inflection b where the composed density turns from convex to concave."""
    Lb = inflection_L(fam.alpha, idx)
    if Lb is None:
        raise ValueError(
            f"no convex-to-concave inflection for alpha={fam.alpha:g}, k={idx.k}, n={idx.n}"
        )
    return float(x_of_L(fam.alpha, Lb))


def classify(fam: GfrAlpha, idx: RecordIndex) -> ShapeReport:
    """Map the shape of the composed density to a projection strategy."""
    a, k, n = fam.alpha, idx.k, idx.n
    d = fam.support_end
    if k == 1:
        if a < 0:
            if n == 1:
                return ShapeReport(ShapeCase.COINCIDE_CONCAVE, 0.0, None, None, d)
            Lb = inflection_L(a, idx)
            return ShapeReport(
                ShapeCase.A_TILDE_CASE, 0.0, float(x_of_L(a, Lb)), math.inf, d, b_L=Lb, c_L=math.inf
            )
        return ShapeReport(ShapeCase.LINEAR_PROJECTION, 0.0, None, None, d)

    Lc = mode_L(idx)
    c = float(x_of_L(a, Lc))
    Lb = inflection_L(a, idx)
    if n == 1 and Lb is None:
        return ShapeReport(ShapeCase.HC_CASE, 0.0, None, c, d, c_L=Lc)
    overlap = n == 1 and 2 * k - 2 < a <= 2 * k - 1
    return ShapeReport(
        ShapeCase.A_CASE, 0.0, float(x_of_L(a, Lb)), c, d, b_L=Lb, c_L=Lc, overlap_flag=overlap
    )
