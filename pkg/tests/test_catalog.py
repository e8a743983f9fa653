"""Method construction: orders via rooted trees, structure, dispatch."""

from fractions import Fraction

import pytest

from _trees import attained_order, attained_order_float
from rkistab.catalog import (CLASSIC_NAMES, MethodSpec, OddOrder,
                             UnknownMethod, UnsupportedFamily, build,
                             build_ee_extrapolation, build_em_extrapolation,
                             build_ssp2, build_ssp3, classic_natural_form,
                             classic_tableau, ee_weights, em_weights,
                             midpoint_chain_poly, ssp3_indices)
from rkistab.forms import shu_osher_to_butcher, validate
from rkistab.poly import Poly
from rkistab.sim import _canonical_radius

F = Fraction

_EXACT_ORDER = {"ssp33": 3, "heun3": 3, "rk4": 4, "merson43": 4,
                "fehlberg54": 5, "bogacki_shampine54": 5, "ssp104": 4}


@pytest.mark.parametrize("name", sorted(_EXACT_ORDER))
def test_classic_orders_exact(name):
    bt = classic_tableau(name)
    assert bt.order == _EXACT_ORDER[name]
    assert attained_order(bt.A, bt.b, max_order=bt.order + 1) == bt.order


def test_prince_dormand_order_in_floats():
    # the published entries are rationalized decimals, mutually consistent
    # only to ~1e-17 absolute, so the order check runs on float residuals
    bt = classic_tableau("prince_dormand8")
    assert attained_order_float(bt.A, bt.b, max_order=8) == 8
    assert attained_order_float(bt.A, bt.b_embedded, max_order=8) == 7


@pytest.mark.parametrize("name,emb", [("merson43", 3), ("fehlberg54", 4),
                                      ("bogacki_shampine54", 4)])
def test_classic_embedded_orders(name, emb):
    bt = classic_tableau(name)
    assert bt.order_embedded == emb
    assert attained_order(bt.A, bt.b_embedded, max_order=emb + 1) == emb


@pytest.mark.parametrize("p", range(1, 7))
def test_ee_order(p):
    bt = shu_osher_to_butcher(build_ee_extrapolation(p))
    assert bt.s == 1 + p * (p - 1) // 2
    assert attained_order(bt.A, bt.b, max_order=min(p + 1, 8)) >= min(p, 7)


@pytest.mark.parametrize("p", (2, 4, 6))
def test_em_order(p):
    bt = shu_osher_to_butcher(build_em_extrapolation(p))
    assert bt.s == 1 + (p // 2) ** 2
    assert attained_order(bt.A, bt.b, max_order=min(p + 1, 7)) >= min(p, 6)


@pytest.mark.parametrize("p", (3, 4, 5))
def test_ee_embedded_order(p):
    bt = shu_osher_to_butcher(build_ee_extrapolation(p, embedded=True))
    assert attained_order(bt.A, bt.b_embedded, max_order=p) == p - 1


def test_em_embedded_order():
    bt = shu_osher_to_butcher(build_em_extrapolation(6, embedded=True))
    assert attained_order(bt.A, bt.b_embedded, max_order=5) == 4


@pytest.mark.parametrize("p", range(1, 13))
def test_ee_weights_sum_to_one(p):
    assert sum(ee_weights(p)) == 1


@pytest.mark.parametrize("r", range(1, 7))
def test_em_weights_sum_to_one(r):
    assert sum(em_weights(r)) == 1


@pytest.mark.parametrize("s", range(2, 9))
def test_ssp2_contractivity_radius(s):
    assert _canonical_radius(build_ssp2(s)) == pytest.approx(s - 1, abs=1e-12)


@pytest.mark.parametrize("n", range(2, 6))
def test_ssp3_contractivity_radius(n):
    assert _canonical_radius(build_ssp3(n)) == pytest.approx(n * n - n,
                                                            abs=1e-12)


@pytest.mark.parametrize("n", range(2, 6))
def test_ssp3_convex_structure(n):
    """alpha = C beta entrywise, except at the one stage assembled as a
    convex combination of two earlier stages."""
    so = build_ssp3(n)
    C = F(n * n - n)
    k_n, m_n = ssp3_indices(n)
    for i, (ar, br) in enumerate(zip(so.alpha, so.beta), start=1):
        for j, (a, b) in enumerate(zip(ar, br), start=1):
            if (i, j) == (k_n, m_n):
                assert a > 0 and b == 0
            else:
                assert a == C * b, (i, j)


def test_ssp3_special_row_is_convex():
    so = build_ssp3(3)
    k_n, _ = ssp3_indices(3)
    assert sum(so.alpha[k_n - 1]) == 1


def test_em_chain_poly_recurrence():
    m = 3
    z_over_m = Poly([F(0), F(1, m)])
    for j in range(2, 7):
        assert midpoint_chain_poly(m, j) == (
            z_over_m * midpoint_chain_poly(m, j - 1)
            + midpoint_chain_poly(m, j - 2))
    assert midpoint_chain_poly(m, 0) == Poly([0])
    assert midpoint_chain_poly(m, 1) == Poly([1])


def test_ee_abscissae():
    bt = shu_osher_to_butcher(build_ee_extrapolation(4))
    # chains of m substeps of size 1/m: abscissae j/m
    assert bt.c[0] == 0
    assert F(1, 2) in bt.c and F(2, 3) in bt.c and F(3, 4) in bt.c


def test_catalog_validates():
    for p in (1, 4, 8):
        assert validate(build_ee_extrapolation(p)) == []
    for p in (2, 6):
        assert validate(build_em_extrapolation(p)) == []
    for s in (2, 5):
        assert validate(build_ssp2(s)) == []
    for n in (2, 4):
        assert validate(build_ssp3(n)) == []


def test_dispatch_errors():
    with pytest.raises(UnsupportedFamily):
        build(MethodSpec("nope", 3))
    with pytest.raises(UnknownMethod):
        classic_tableau("zzz")
    with pytest.raises(OddOrder):
        build_em_extrapolation(3)
    with pytest.raises(ValueError):
        build_ssp2(1)
    with pytest.raises(ValueError):
        build_ssp3(1)


def test_build_form_preference():
    so = build(MethodSpec("ssp2", 3))
    bt = build(MethodSpec("ssp2", 3, form_preference="butcher"))
    assert shu_osher_to_butcher(so).A == bt.A


def test_ssp104_natural_form_is_low_storage():
    so = classic_natural_form("ssp104")
    # every stage row references at most two earlier stages
    for row in so.alpha:
        assert sum(1 for x in row if x != 0) <= 3
    assert shu_osher_to_butcher(so).A == classic_tableau("ssp104").A
