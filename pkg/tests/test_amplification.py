"""Amplification maxima, analytic family values, a-priori bounds."""

import math
from fractions import Fraction

import pytest

from _regions import taylor_region
from rkistab import amplification as amp
from rkistab.catalog import (MethodSpec, build, classic_natural_form,
                             internal_stability_closed_form)
from rkistab.region import trace_region
from rkistab.stability import derive_internal_stability

F = Fraction

# printed values, rounded up to 3 decimals
_SSP3_LISTED = {2: 1.575, 3: 1.794, 4: 1.956, 5: 2.091, 6: 2.209,
                7: 2.314, 8: 2.411, 9: 2.501, 10: 2.585}


@pytest.mark.parametrize("n", sorted(_SSP3_LISTED))
def test_ssp3_analytic_matches_printed(n):
    m = amp.ssp3_analytic(n).m_value
    assert math.ceil(m * 1000.0 - 1e-9) / 1000.0 == _SSP3_LISTED[n]


def test_ssp3_branch_never_dominates():
    for n in range(2, 30):
        ana = amp.ssp3_analytic(n)
        assert ana.branch_value <= ana.m_value * (1.0 + 1e-12)


def test_ssp3_sandwich_strict():
    for n in range(9, 13):
        lo_s, lo, m, hi, hi_s = amp.ssp3_analytic(n).bound_check
        assert lo_s < lo < m < hi < hi_s


def test_ssp3_generic_cross_check():
    for n in (2, 3):
        iss = internal_stability_closed_form(MethodSpec("ssp3", n))
        reg = trace_region(iss.P)
        m, _ = amp.amplification_factor(iss, reg)
        assert m == pytest.approx(amp.ssp3_analytic(n).m_value, rel=5e-3)


_EE_ZERO = {2: F(2), 3: F(9, 2), 4: F(27, 2), 5: F(128, 3), 6: F(3125, 24),
            7: F(1944, 5), 8: F(5832, 5)}
_EM_ZERO = {2: F(1), 4: F(4, 3), 6: F(81, 40), 8: F(1024, 315),
            10: F(16384, 2835)}


@pytest.mark.parametrize("p", sorted(_EE_ZERO))
def test_ee_zero_closed_form_exact(p):
    assert amp.amplification_closed_form_ee_zero(p) == _EE_ZERO[p]


@pytest.mark.parametrize("p", sorted(_EM_ZERO))
def test_em_zero_closed_form_exact(p):
    assert amp.amplification_closed_form_em_zero(p) == _EM_ZERO[p]


def test_zero_closed_forms_match_derived():
    for p in (3, 5, 8):
        iss = derive_internal_stability(build(MethodSpec("ee_extrap", p)))
        assert amp.amplification_at_zero(iss) == \
            amp.amplification_closed_form_ee_zero(p)
    for p in (4, 8):
        iss = derive_internal_stability(build(MethodSpec("em_extrap", p)))
        assert amp.amplification_at_zero(iss) == \
            amp.amplification_closed_form_em_zero(p)


def test_ssp104_zero_value_exact():
    iss = derive_internal_stability(classic_natural_form("ssp104"))
    assert amp.amplification_at_zero(iss) == F(3, 5)


def test_first_stage_excluded():
    # the seed stage of the extrapolation family has |Q_1(0)| = 1, larger
    # than the update-chain weights at low order; it must not be counted
    iss = internal_stability_closed_form(MethodSpec("ee_extrap", 2))
    assert abs(iss.Q[0].coeff(0)) == 1
    assert amp.amplification_at_zero(iss) == F(2)


@pytest.mark.parametrize("s", range(2, 8))
def test_ssp2_region_bound(s):
    iss = internal_stability_closed_form(MethodSpec("ssp2", s))
    reg = trace_region(iss.P)
    rep = amp.report(iss, reg, f"ssp2:{s}")
    assert rep.m_full <= (s + 1) / s + 1e-9
    checks = amp.verify_bounds(rep, "ssp2", s, iss)
    assert all(c.satisfied is not False for c in checks), checks


def test_verify_bounds_families():
    cases = [("ssp3", 3, MethodSpec("ssp3", 3)),
             ("ee_extrap", 5, MethodSpec("ee_extrap", 5)),
             ("em_extrap", 6, MethodSpec("em_extrap", 6))]
    for fam, p, spec in cases:
        iss = internal_stability_closed_form(spec)
        reg = taylor_region(p) if fam.endswith("extrap") else \
            trace_region(iss.P)
        rep = amp.report(iss, reg, fam)
        checks = amp.verify_bounds(rep, fam, p, iss)
        assert all(c.satisfied is not False for c in checks), \
            [(c.name, c.margin) for c in checks if c.satisfied is False]


def test_nesting():
    iss = internal_stability_closed_form(MethodSpec("ee_extrap", 6))
    rep = amp.report(iss, taylor_region(6), "ee:6")
    assert rep.m_zero <= rep.m_half * (1 + 1e-9)
    assert rep.m_half <= rep.m_full * (1 + 1e-9)
    assert rep.m_zero <= rep.m_main * (1 + 1e-9)
    assert rep.m_main <= rep.m_full * (1 + 1e-9)


def test_ssp3_analytic_rejects_bad_n():
    with pytest.raises(ValueError):
        amp.ssp3_analytic(1)
    with pytest.raises(ValueError):
        amp.ssp3_analytic(500)
