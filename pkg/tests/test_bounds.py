import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import GRID, cached_bound
from recordbounds.bounds import (
    bound,
    bound_hc,
    bound_k1,
    bound_lc,
    bound_lhc,
    c_alpha_sq,
    equality_quantile,
)
from recordbounds.distributions import ID, IFR, GfrAlpha, RecordIndex, h_norm_sq
from recordbounds.projection import KnotCase, find_beta_star
from recordbounds.verify import attainment_integral

I = RecordIndex
NEG = GfrAlpha(-0.25)


def test_hc_examples():
    r = bound(ID, I(2, 1))
    assert r.case_tag is KnotCase.HC
    assert r.bound == pytest.approx(0.3451, abs=5e-5)
    assert r.beta_star == pytest.approx(0.3935, abs=5e-5)
    assert bound(IFR, I(2, 1)).beta_star == pytest.approx(0.5, abs=1e-10)
    assert bound(IFR, I(3, 1)).beta_star == pytest.approx(1 / 6, abs=1e-12)
    assert bound_hc(IFR, I(2, 1)) == pytest.approx(r.bound, abs=1e-12)


def test_table_examples():
    assert bound_k1(ID, 5).bound == pytest.approx(1.6779, abs=5e-5)
    assert bound_k1(IFR, 7).bound == pytest.approx(7.0, abs=1e-12)
    assert bound(IFR, I(2, 3)).bound == pytest.approx(1.1321, abs=5e-5)
    assert bound(ID, I(3, 5)).bound == pytest.approx(1.1209, abs=5e-5)
    assert bound(IFR, I(1, 5)).bound == pytest.approx(5.0, abs=1e-12)


def test_lhc_reduces_to_lc_when_knots_meet():
    fam, idx = ID, I(2, 2)
    beta = find_beta_star(fam, idx)
    lc = bound_lc(fam, idx, beta)
    from recordbounds.distributions import L_of_x, int_W_L, tail_mean_L

    L = float(L_of_x(fam.alpha, beta))
    lam = float(tail_mean_L(2, 2, L)) / float(int_W_L(fam.alpha, L))
    assert bound_lhc(fam, idx, beta, beta, lam) == pytest.approx(lc, abs=1e-12)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_c_alpha_variants(n):
    r = cached_bound(-0.25, 1, n)
    assert r.case_tag is KnotCase.LH
    assert math.sqrt(c_alpha_sq(NEG, n, r.y_star)) == pytest.approx(r.bound_quadrature, abs=1e-8)
    printed, conj = r.variants["C_alpha_printed"], r.variants["C_alpha_conjectured"]
    print(f"alpha=-0.25 k=1 n={n}: derived={r.bound:.10f} printed={printed:.10f} conjectured={conj:.10f}")
    assert abs(printed - r.bound) > 1e-6
    assert abs(conj - r.bound) > 1e-8
    with pytest.raises(ValueError):
        c_alpha_sq(NEG, n, r.y_star, "bogus")


@pytest.mark.parametrize("a, k, n", GRID)
def test_closed_form_matches_quadrature(a, k, n):
    r = cached_bound(a, k, n)
    assert r.agreement_gap < 1e-6
    assert r.bound == r.bound_quadrature


@pytest.mark.parametrize("a, k, n", GRID)
def test_schwarz_ceiling(a, k, n):
    assert cached_bound(a, k, n).bound <= math.sqrt(h_norm_sq(I(k, n))) + 1e-12


@pytest.mark.parametrize("a, k, n", GRID)
def test_attainment(a, k, n):
    r = cached_bound(a, k, n)
    model = equality_quantile(GfrAlpha(a), I(k, n), result=r)
    assert attainment_integral(model, I(k, n)) == pytest.approx(r.bound, abs=1e-6)


def test_equality_quantile_coincide_case():
    model = equality_quantile(NEG, I(1, 1))
    u = np.array([0.1, 0.5, 0.9, 0.999])
    assert model.quantile(u) == pytest.approx(-1 - np.log1p(-u), abs=1e-12)


@pytest.mark.parametrize("a, k, n", [(0.0, 2, 2), (1.0, 3, 4), (-0.25, 1, 3), (2.0, 2, 1), (0.5, 1, 2)])
def test_equality_quantile_moments(a, k, n):
    model = equality_quantile(GfrAlpha(a), I(k, n), mu=2.0, sigma=3.0)
    m, s = model.moments()
    assert m == pytest.approx(2.0, abs=1e-9)
    assert s == pytest.approx(3.0, abs=1e-9)


def test_equality_quantile_rejects_bad_sigma():
    from recordbounds.distributions import DomainError

    with pytest.raises(DomainError):
        equality_quantile(IFR, I(2, 2), sigma=0.0)


@settings(max_examples=40, deadline=None)
@given(
    a=st.floats(-0.45, 4.0),
    b=st.floats(-0.45, 4.0),
    k=st.integers(1, 5),
    n=st.integers(1, 5),
)
def test_bound_nonincreasing_in_alpha(a, b, k, n):
    lo, hi = min(a, b), max(a, b)
    assert bound(GfrAlpha(hi), I(k, n)).bound <= bound(GfrAlpha(lo), I(k, n)).bound + 1e-9


@settings(max_examples=40, deadline=None)
@given(a=st.floats(-0.45, 6.0), k=st.integers(1, 6), n=st.integers(1, 6))
def test_bound_positive_and_consistent(a, k, n):
    r = bound(GfrAlpha(a), I(k, n))
    assert 0 < r.bound <= math.sqrt(h_norm_sq(I(k, n))) + 1e-12
    assert r.agreement_gap < 1e-6
