"""Construction of the method families under study, with exact coefficients.

Families:
  ssp2      -- s-stage second-order strong-stability-preserving, s >= 2
  ssp3      -- n^2-stage third-order low-storage family, n >= 2
  ee_extrap -- extrapolation of explicit Euler, harmonic step sequence
  em_extrap -- extrapolation of the explicit midpoint scheme, even order
  classic   -- a fixed shelf of widely used tableaus

The natural implementation of each family keeps the number of nonzeros per
stage row constant; its internal stability polynomials are available in
closed form and cross-checked against the generic derivation in the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .forms import ButcherTableau, ShuOsherForm, shu_osher_to_butcher, butcher_to_shu_osher
from .poly import Poly, taylor_exp
from .stability import InternalStabilitySet

F = Fraction


class UnknownMethod(KeyError):
    """Name not on the classic shelf."""


class UnsupportedFamily(ValueError):
    """Family string not recognized, or operation not defined for it."""


class OddOrder(ValueError):
    """The symmetric-seed extrapolation only exists at even orders."""


@dataclass(frozen=True)
class MethodSpec:
    family: str
    parameter: int | str | None = None
    embedded: bool = False
    form_preference: str = "natural"


# -- ssp2 ------------------------------------------------------------------

def build_ssp2(s: int) -> ShuOsherForm:
    """s-1 Euler substeps of size tau/(s-1), then a convex combination with
    U_n; radius of contractivity s-1."""
    if s < 2:
        raise ValueError("s must be at least 2")
    h = F(1, s - 1)
    alpha = [[F(0)] * s for _ in range(s + 1)]
    beta = [[F(0)] * s for _ in range(s + 1)]
    for i in range(1, s):
        alpha[i][i - 1] = F(1)
        beta[i][i - 1] = h
    alpha[s][s - 1] = F(s - 1, s)
    beta[s][s - 1] = F(1, s)
    return ShuOsherForm.from_rows(alpha, beta, 2)


# -- ssp3 ------------------------------------------------------------------

def ssp3_indices(n: int) -> tuple[int, int]:
    """(k_n, m_n): the one stage built as a convex combination, and the
    earlier stage it reaches back to (both 1-based)."""
    return n * (n + 1) // 2 + 1, (n - 1) * (n - 2) // 2 + 1


def build_ssp3(n: int) -> ShuOsherForm:
    """n^2 stages, order three, radius of contractivity n^2 - n."""
    if n < 2:
        raise ValueError("n must be at least 2")
    s = n * n
    k_n, m_n = ssp3_indices(n)
    h = F(1, n * n - n)
    alpha = [[F(0)] * s for _ in range(s + 1)]
    beta = [[F(0)] * s for _ in range(s + 1)]
    for i in range(1, s):
        stage = i + 1  # 1-based
        if stage == k_n:
            alpha[i][i - 1] = F(n - 1, 2 * n - 1)
            alpha[i][m_n - 1] = F(n, 2 * n - 1)
            beta[i][i - 1] = F(1, n * (2 * n - 1))
        else:
            alpha[i][i - 1] = F(1)
            beta[i][i - 1] = h
    alpha[s][s - 1] = F(1)
    beta[s][s - 1] = h
    return ShuOsherForm.from_rows(alpha, beta, 3)


# -- extrapolation ---------------------------------------------------------

def extrapolation_weights(nodes, power: int) -> list[Fraction]:
    """Lagrange weights at h = 0 for values computed at step sizes 1/n,
    with error expansions in h**power."""
    nodes = list(nodes)
    out = []
    for m in nodes:
        w = F(1)
        for l in nodes:
            if l != m:
                w *= F(m ** power, m ** power - l ** power)
        out.append(w)
    return out


def ee_weights(p: int) -> list[Fraction]:
    return extrapolation_weights(range(1, p + 1), 1)


def em_weights(r: int) -> list[Fraction]:
    return extrapolation_weights(range(1, r + 1), 2)


def _ee_positions(p: int) -> dict:
    """Flat stage index (0-based) of chain point (m, j); stage 0 is U_n."""
    pos = {}
    idx = 1
    for m in range(2, p + 1):
        for j in range(1, m):
            pos[(m, j)] = idx
            idx += 1
    return pos


def build_ee_extrapolation(p: int, embedded: bool = False) -> ShuOsherForm:
    """Order p from p Euler chains with m substeps of size tau/m each;
    chains share the seed stage and the last substep of every chain is
    folded into the update row."""
    if p < 1:
        raise ValueError("p must be positive")
    if embedded and p < 2:
        raise ValueError("no embedded companion below order 2")
    pos = _ee_positions(p)
    s = 1 + p * (p - 1) // 2
    alpha = [[F(0)] * s for _ in range(s + 1)]
    beta = [[F(0)] * s for _ in range(s + 1)]
    for m in range(2, p + 1):
        h = F(1, m)
        for j in range(1, m):
            i = pos[(m, j)]
            src = 0 if j == 1 else pos[(m, j - 1)]
            alpha[i][src] = F(1)
            beta[i][src] = h
    w = ee_weights(p)
    for m in range(1, p + 1):
        src = 0 if m == 1 else pos[(m, m - 1)]
        alpha[s][src] += w[m - 1]
        beta[s][src] += w[m - 1] * F(1, m)
    a_emb = b_emb = None
    o_emb = None
    if embedded:
        a_emb = [F(0)] * s
        b_emb = [F(0)] * s
        wh = extrapolation_weights(range(2, p + 1), 1)
        for k, m in enumerate(range(2, p + 1)):
            src = pos[(m, m - 1)]
            a_emb[src] += wh[k]
            b_emb[src] += wh[k] * F(1, m)
        o_emb = p - 1
    return ShuOsherForm.from_rows(alpha, beta, p, a_emb, b_emb, o_emb)


def _em_positions(r: int) -> dict:
    pos = {}
    idx = 1
    for m in range(1, r + 1):
        for j in range(1, 2 * m):
            pos[(m, j)] = idx
            idx += 1
    return pos


def build_em_extrapolation(p: int, embedded: bool = False) -> ShuOsherForm:
    """Even order p = 2r from r midpoint chains with 2m substeps of size
    tau/(2m), tau/m, ..., sharing the seed stage."""
    if p < 2 or p % 2:
        raise OddOrder(f"order must be even and >= 2, got {p}")
    r = p // 2
    if embedded and r < 2:
        raise ValueError("no embedded companion below order 4")
    pos = _em_positions(r)
    s = 1 + r * r
    alpha = [[F(0)] * s for _ in range(s + 1)]
    beta = [[F(0)] * s for _ in range(s + 1)]
    for m in range(1, r + 1):
        h = F(1, m)
        for j in range(1, 2 * m):
            i = pos[(m, j)]
            if j == 1:
                alpha[i][0] = F(1)
                beta[i][0] = F(1, 2 * m)
            elif j == 2:
                alpha[i][0] = F(1)
                beta[i][pos[(m, 1)]] = h
            else:
                alpha[i][pos[(m, j - 2)]] = F(1)
                beta[i][pos[(m, j - 1)]] = h
    w = em_weights(r)
    for m in range(1, r + 1):
        a_src = 0 if m == 1 else pos[(m, 2 * m - 2)]
        alpha[s][a_src] += w[m - 1]
        beta[s][pos[(m, 2 * m - 1)]] += w[m - 1] * F(1, m)
    a_emb = b_emb = None
    o_emb = None
    if embedded:
        a_emb = [F(0)] * s
        b_emb = [F(0)] * s
        wh = extrapolation_weights(range(2, r + 1), 2)
        for k, m in enumerate(range(2, r + 1)):
            a_emb[pos[(m, 2 * m - 2)]] += wh[k]
            b_emb[pos[(m, 2 * m - 1)]] += wh[k] * F(1, m)
        o_emb = p - 2
    return ShuOsherForm.from_rows(alpha, beta, p, a_emb, b_emb, o_emb)


def midpoint_chain_poly(m: int, j: int) -> Poly:
    """q_{m,j}: z-transfer from a chain residual j positions before the
    chain end; satisfies q_j = (z/m) q_{j-1} + q_{j-2}."""
    qm2, qm1 = Poly([F(0)]), Poly([F(1)])
    if j == 0:
        return qm2
    step = Poly([F(0), F(1, m)])
    for _ in range(j - 1):
        qm2, qm1 = qm1, step * qm1 + qm2
    return qm1


# -- closed-form internal stability ---------------------------------------

def internal_stability_closed_form(spec: MethodSpec) -> InternalStabilitySet:
    """Stage polynomials of the natural implementation, written down
    directly instead of derived from the coefficients."""
    fam, p = spec.family, spec.parameter
    if fam == "ssp2":
        s = int(p)
        nu = Poly([F(1), F(1, s - 1)])
        scale = F(s - 1, s)
        Q = [scale * nu ** (s if j == 0 else s - j) for j in range(s)]
        P = F(1, s) + scale * nu ** s
        return InternalStabilitySet(P, tuple(Q))
    if fam == "ssp3":
        n = int(p)
        s = n * n
        k_n, m_n = ssp3_indices(n)
        nu = Poly([F(1), F(1, n * n - n)])
        a, b = F(n - 1, 2 * n - 1), F(n, 2 * n - 1)
        P = a * nu ** (n * n) + b * nu ** ((n - 1) ** 2)
        Q = [P]
        for stage in range(2, s + 1):
            if stage <= m_n:
                q = a * nu ** (n * n - stage + 1) + b * nu ** ((n - 1) ** 2 - stage + 1)
            elif stage < k_n:
                q = a * nu ** (n * n - stage + 1)
            else:
                q = nu ** (n * n - stage + 1)
            Q.append(q)
        return InternalStabilitySet(P, tuple(Q))
    if fam == "ee_extrap":
        p = int(p)
        pos = _ee_positions(p)
        s = 1 + p * (p - 1) // 2
        w = ee_weights(p)
        Q = [None] * s
        Q[0] = taylor_exp(p)
        for (m, j), i in pos.items():
            Q[i] = w[m - 1] * Poly([F(1), F(1, m)]) ** (m - j)
        return InternalStabilitySet(taylor_exp(p), tuple(Q))
    if fam == "em_extrap":
        p = int(p)
        if p % 2:
            raise OddOrder(f"order must be even, got {p}")
        r = p // 2
        pos = _em_positions(r)
        s = 1 + r * r
        w = em_weights(r)
        Q = [None] * s
        Q[0] = taylor_exp(p)
        for (m, j), i in pos.items():
            Q[i] = w[m - 1] * midpoint_chain_poly(m, 2 * m - j + 1)
        return InternalStabilitySet(taylor_exp(p), tuple(Q))
    raise UnsupportedFamily(f"no closed form for family {fam!r}")


# -- classic shelf ---------------------------------------------------------

def _ssp104_shu_osher() -> ShuOsherForm:
    s = 10
    alpha = [[F(0)] * s for _ in range(s + 1)]
    beta = [[F(0)] * s for _ in range(s + 1)]
    h = F(1, 6)
    for i in list(range(1, 5)) + list(range(6, 10)):
        alpha[i][i - 1] = F(1)
        beta[i][i - 1] = h
    alpha[5][0] = F(3, 5)
    alpha[5][4] = F(2, 5)
    beta[5][4] = F(1, 15)
    alpha[10][0] = F(1, 25)
    alpha[10][4] = F(9, 25)
    beta[10][4] = F(3, 50)
    alpha[10][9] = F(3, 5)
    beta[10][9] = F(1, 10)
    return ShuOsherForm.from_rows(alpha, beta, 4)


def _classic_tables() -> dict:
    t = {}
    t["ssp33"] = ButcherTableau.from_A_b(
        [[0, 0, 0], [1, 0, 0], [F(1, 4), F(1, 4), 0]],
        [F(1, 6), F(1, 6), F(2, 3)], 3)
    t["heun3"] = ButcherTableau.from_A_b(
        [[0, 0, 0], [F(1, 3), 0, 0], [0, F(2, 3), 0]],
        [F(1, 4), 0, F(3, 4)], 3)
    t["rk4"] = ButcherTableau.from_A_b(
        [[0, 0, 0, 0], [F(1, 2), 0, 0, 0], [0, F(1, 2), 0, 0], [0, 0, 1, 0]],
        [F(1, 6), F(1, 3), F(1, 3), F(1, 6)], 4)
    t["merson43"] = ButcherTableau.from_A_b(
        [[0] * 5,
         [F(1, 3), 0, 0, 0, 0],
         [F(1, 6), F(1, 6), 0, 0, 0],
         [F(1, 8), 0, F(3, 8), 0, 0],
         [F(1, 2), 0, F(-3, 2), 2, 0]],
        [F(1, 6), 0, 0, F(2, 3), F(1, 6)], 4,
        b_embedded=[F(1, 10), 0, F(3, 10), F(2, 5), F(1, 5)],
        order_embedded=3)
    t["fehlberg54"] = ButcherTableau.from_A_b(
        [[0] * 6,
         [F(1, 4), 0, 0, 0, 0, 0],
         [F(3, 32), F(9, 32), 0, 0, 0, 0],
         [F(1932, 2197), F(-7200, 2197), F(7296, 2197), 0, 0, 0],
         [F(439, 216), -2 * F(4), F(3680, 513), F(-845, 4104), 0, 0],
         [F(-8, 27), 2, F(-3544, 2565), F(1859, 4104), F(-11, 40), 0]],
        [F(16, 135), 0, F(6656, 12825), F(28561, 56430), F(-9, 50), F(2, 55)],
        5,
        b_embedded=[F(25, 216), 0, F(1408, 2565), F(2197, 4104), F(-1, 5), 0],
        order_embedded=4)
    t["bogacki_shampine54"] = ButcherTableau.from_A_b(
        [[0] * 8,
         [F(1, 6), 0, 0, 0, 0, 0, 0, 0],
         [F(2, 27), F(4, 27), 0, 0, 0, 0, 0, 0],
         [F(183, 1372), F(-162, 343), F(1053, 1372), 0, 0, 0, 0, 0],
         [F(68, 297), F(-4, 11), F(42, 143), F(1960, 3861), 0, 0, 0, 0],
         [F(597, 22528), F(81, 352), F(63099, 585728), F(58653, 366080),
          F(4617, 20480), 0, 0, 0],
         [F(174197, 959244), F(-30942, 79937), F(8152137, 19744439),
          F(666106, 1039181), F(-29421, 29068), F(482048, 414219), 0, 0],
         [F(587, 8064), 0, F(4440339, 15491840), F(24353, 124800),
          F(387, 44800), F(2152, 5985), F(7267, 94080), 0]],
        [F(587, 8064), 0, F(4440339, 15491840), F(24353, 124800),
         F(387, 44800), F(2152, 5985), F(7267, 94080), 0], 5,
        b_embedded=[F(2479, 34992), 0, F(123, 416), F(612941, 3411720),
                    F(43, 1440), F(2272, 6561), F(79937, 1113912),
                    F(3293, 556956)],
        order_embedded=4)
    t["prince_dormand8"] = ButcherTableau.from_A_b(
        [[0] * 13,
         [F(1, 18)] + [0] * 12,
         [F(1, 48), F(1, 16)] + [0] * 11,
         [F(1, 32), 0, F(3, 32)] + [0] * 10,
         [F(5, 16), 0, F(-75, 64), F(75, 64)] + [0] * 9,
         [F(3, 80), 0, 0, F(3, 16), F(3, 20)] + [0] * 8,
         [F(29443841, 614563906), 0, 0, F(77736538, 692538347),
          F(-28693883, 1125000000), F(23124283, 1800000000)] + [0] * 7,
         [F(16016141, 946692911), 0, 0, F(61564180, 158732637),
          F(22789713, 633445777), F(545815736, 2771057229),
          F(-180193667, 1043307555)] + [0] * 6,
         [F(39632708, 573591083), 0, 0, F(-433636366, 683701615),
          F(-421739975, 2616292301), F(100302831, 723423059),
          F(790204164, 839813087), F(800635310, 3783071287)] + [0] * 5,
         [F(246121993, 1340847787), 0, 0, F(-37695042795, 15268766246),
          F(-309121744, 1061227803), F(-12992083, 490766935),
          F(6005943493, 2108947869), F(393006217, 1396673457),
          F(123872331, 1001029789)] + [0] * 4,
         [F(-1028468189, 846180014), 0, 0, F(8478235783, 508512852),
          F(1311729495, 1432422823), F(-10304129995, 1701304382),
          F(-48777925059, 3047939560), F(15336726248, 1032824649),
          F(-45442868181, 3398467696), F(3065993473, 597172653)] + [0] * 3,
         [F(185892177, 718116043), 0, 0, F(-3185094517, 667107341),
          F(-477755414, 1098053517), F(-703635378, 230739211),
          F(5731566787, 1027545527), F(5232866602, 850066563),
          F(-4093664535, 808688257), F(3962137247, 1805957418),
          F(65686358, 487910083)] + [0] * 2,
         [F(403863854, 491063109), 0, 0, F(-5068492393, 434740067),
          F(-411421997, 543043805), F(652783627, 914296604),
          F(11173962825, 925320556), F(-13158990841, 6184727034),
          F(3936647629, 1978049680), F(-160528059, 685178525),
          F(248638103, 1413531060), 0] + [0]],
        [F(14005451, 335480064), 0, 0, 0, 0, F(-59238493, 1068277825),
         F(181606767, 758867731), F(561292985, 797845732),
         F(-1041891430, 1371343529), F(760417239, 1151165299),
         F(118820643, 751138087), F(-528747749, 2220607170), F(1, 4)], 8,
        b_embedded=[F(13451932, 455176623), 0, 0, 0, 0,
                    F(-808719846, 976000145), F(1757004468, 5645159321),
                    F(656045339, 265891186), F(-3867574721, 1518517206),
                    F(465885868, 322736535), F(53011238, 667516719),
                    F(2, 45), 0],
        order_embedded=7)
    t["ssp104"] = shu_osher_to_butcher(_ssp104_shu_osher())
    return t


_CLASSIC_CACHE: dict | None = None

CLASSIC_NAMES = ("ssp33", "heun3", "rk4", "merson43", "fehlberg54",
                 "bogacki_shampine54", "prince_dormand8", "ssp104")


def classic_tableau(name: str) -> ButcherTableau:
    global _CLASSIC_CACHE
    if _CLASSIC_CACHE is None:
        _CLASSIC_CACHE = _classic_tables()
    try:
        return _CLASSIC_CACHE[name]
    except KeyError:
        raise UnknownMethod(
            f"unknown method {name!r}; choices: {', '.join(CLASSIC_NAMES)}")


def classic_natural_form(name: str) -> ShuOsherForm:
    """Low-storage implementation where one is in common use, otherwise the
    tableau run as written."""
    if name == "ssp104":
        return _ssp104_shu_osher()
    return butcher_to_shu_osher(classic_tableau(name))


# -- dispatch --------------------------------------------------------------

def build(spec: MethodSpec):
    """Materialize a method spec.

    Returns a ShuOsherForm for form_preference 'natural', a ButcherTableau
    for 'butcher'.
    """
    fam = spec.family
    if fam == "ssp2":
        so = build_ssp2(int(spec.parameter))
    elif fam == "ssp3":
        so = build_ssp3(int(spec.parameter))
    elif fam == "ee_extrap":
        so = build_ee_extrapolation(int(spec.parameter), spec.embedded)
    elif fam == "em_extrap":
        so = build_em_extrapolation(int(spec.parameter), spec.embedded)
    elif fam == "classic":
        so = classic_natural_form(str(spec.parameter))
    else:
        raise UnsupportedFamily(f"unknown family {spec.family!r}")
    if spec.form_preference == "butcher":
        return shu_osher_to_butcher(so)
    if spec.form_preference == "natural":
        return so
    raise ValueError(f"unknown form preference {spec.form_preference!r}")
