"""Form conversions, residual mapping, JSON round trips, validation."""

import json
from fractions import Fraction

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from rkistab.forms import (ButcherTableau, ResidualVector, ShuOsherForm,
                           butcher_to_shu_osher,
                           residual_butcher_from_shu_osher,
                           shu_osher_to_butcher, validate)
from rkistab.catalog import CLASSIC_NAMES, build_ssp2, classic_natural_form

F = Fraction


def two_stage_chain() -> ShuOsherForm:
    """Euler then average with the start state; the smallest form with a
    nontrivial alpha."""
    return build_ssp2(2)


def test_two_stage_chain_to_butcher():
    bt = shu_osher_to_butcher(two_stage_chain())
    assert bt.A == ((0, 0), (F(1), 0))
    assert bt.b == (F(1, 2), F(1, 2))
    assert bt.c == (0, F(1))
    assert all(isinstance(x, (int, Fraction)) for row in bt.A for x in row)


def test_derived_v():
    so = two_stage_chain()
    assert so.v == (1, 0, F(1, 2))


def test_butcher_embedding_round_trip():
    for name in CLASSIC_NAMES:
        so = classic_natural_form(name)
        bt = shu_osher_to_butcher(so)
        bt2 = shu_osher_to_butcher(butcher_to_shu_osher(bt))
        assert bt2.A == bt.A and bt2.b == bt.b and bt2.c == bt.c
        assert bt2.b_embedded == bt.b_embedded


def test_residual_transform_oracle():
    r = residual_butcher_from_shu_osher(two_stage_chain(),
                                        ResidualVector((0, 1, 0)))
    assert r.entries == (0, 1, F(1, 2))


@st.composite
def random_so(draw, s_max=4):
    s = draw(st.integers(min_value=2, max_value=s_max))
    q = st.fractions(min_value=-2, max_value=2, max_denominator=8)
    alpha = [[draw(q) if j < i else F(0) for j in range(s)]
             for i in range(s + 1)]
    beta = [[draw(q) if j < i else F(0) for j in range(s)]
            for i in range(s + 1)]
    for j in range(s):
        alpha[s][j] = draw(q)
        beta[s][j] = draw(q)
    return ShuOsherForm.from_rows(alpha, beta, 1)


@given(random_so())
@settings(max_examples=40)
def test_conversion_round_trip_exact(so):
    bt = shu_osher_to_butcher(so)
    bt2 = shu_osher_to_butcher(butcher_to_shu_osher(bt))
    assert bt2.A == bt.A and bt2.b == bt.b


@given(random_so())
@settings(max_examples=40)
def test_residual_transform_is_linear(so):
    s = so.s
    r1 = ResidualVector(tuple(F(k + 1, 3) for k in range(s + 1)))
    r2 = ResidualVector(tuple(F(2 - k, 5) for k in range(s + 1)))
    both = ResidualVector(tuple(a + b for a, b in zip(r1.entries, r2.entries)))
    w1 = residual_butcher_from_shu_osher(so, r1).entries
    w2 = residual_butcher_from_shu_osher(so, r2).entries
    wb = residual_butcher_from_shu_osher(so, both).entries
    assert wb == tuple(a + b for a, b in zip(w1, w2))


def test_residual_transform_identity_for_butcher_form():
    bt = shu_osher_to_butcher(two_stage_chain())
    so0 = butcher_to_shu_osher(bt)
    r = ResidualVector((F(1, 3), F(1, 7), F(2, 9)))
    assert residual_butcher_from_shu_osher(so0, r).entries == r.entries


def test_json_round_trip_preserves_rationals():
    bt = shu_osher_to_butcher(classic_natural_form("fehlberg54"))
    d = json.loads(json.dumps(bt.to_json_dict()))
    assert d["A"][3][0] == "1932/2197"
    bt2 = ButcherTableau.from_json_dict(d)
    assert bt2.A == bt.A and bt2.b == bt.b and bt2.c == bt.c
    assert bt2.b_embedded == bt.b_embedded
    assert bt2.order == 5 and bt2.order_embedded == 4

    so = classic_natural_form("ssp104")
    so2 = ShuOsherForm.from_json_dict(json.loads(json.dumps(so.to_json_dict())))
    assert so2.alpha == so.alpha and so2.beta == so.beta


def test_validate_accepts_catalog():
    for name in CLASSIC_NAMES:
        assert validate(classic_natural_form(name)) == []
        assert validate(shu_osher_to_butcher(classic_natural_form(name))) == []


def test_validate_rejects_upper_triangle():
    bad = ButcherTableau(A=((0, F(1, 2)), (1, 0)), b=(F(1, 2), F(1, 2)),
                         c=(F(1, 2), 1), order=1)
    issues = validate(bad)
    assert any("triangular" in m for m in issues)


def test_validate_rejects_inconsistent_c():
    bad = ButcherTableau(A=((0, 0), (1, 0)), b=(F(1, 2), F(1, 2)),
                         c=(0, F(1, 3)), order=1)
    issues = validate(bad)
    assert any("c - sum" in m for m in issues)


def test_validate_shu_osher_shape():
    so = two_stage_chain()
    assert validate(so) == []
    bad = ShuOsherForm(alpha=so.alpha[:2], beta=so.beta[:2], order=2)
    assert validate(bad)


def test_butcher_arrays_are_float_views():
    bt = shu_osher_to_butcher(two_stage_chain())
    assert np.allclose(bt.A_array, [[0.0, 0.0], [1.0, 0.0]])
    assert np.allclose(bt.b_array, [0.5, 0.5])
