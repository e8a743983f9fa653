"""Worst-case amplification of stage residuals over a stability region.

M(S) = max_j sup_{z in S} |Q_j(z)| bounds how much injected stage noise can
grow per step while the step size still keeps tau*lambda inside S.  The
first stage is excluded from the maximum: it copies the accepted state, so
its residual is identically zero.  Variants restrict S to the closed left
half-plane, to the component of S connected to the origin, or to the origin
itself; the values nest: M({0}) <= M(S intersect C-) <= M(S).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .region import (StabilityRegion, UntracedRegion, _GOLDEN,
                     _candidate_points, _refine_candidate)
from .stability import InternalStabilitySet

#: relative tie window when picking the argmax stage/point
TIE_TOL = 1e-12


@dataclass(frozen=True)
class AmplificationReport:
    method_id: str
    m_full: float
    m_half: float
    #: restricted to the component of S connected to the origin
    m_main: float
    m_zero: float
    #: (stage index 1..s, z) attaining each maximum
    argmax_full: tuple
    argmax_half: tuple
    argmax_main: tuple


@dataclass(frozen=True)
class Ssp3Analysis:
    """Analytic amplification of the third-order low-storage family with
    s = n^2 stages."""

    n: int
    nu_star: float
    m_value: float
    #: sup over the shorter chain branch, always <= m_value
    branch_value: float
    #: five-term chain (lower_simple, lower, m, upper, upper_simple) for
    #: n >= 9, else None
    bound_check: tuple | None


@dataclass(frozen=True)
class BoundCheck:
    name: str
    #: True/False, or None when skipped
    satisfied: bool | None
    #: bound - value (positive margin means satisfied); nan when skipped
    margin: float
    note: str = ""


def _golden_max_1d(f, a: float, b: float, iters: int = 60) -> tuple[float, float]:
    c1 = b - _GOLDEN * (b - a)
    c2 = a + _GOLDEN * (b - a)
    f1, f2 = f(c1), f(c2)
    best = max((f(a), a), (f(b), b), (f1, c1), (f2, c2), key=lambda t: t[0])
    for _ in range(iters):
        if f1 < f2:
            a, c1, f1 = c1, c2, f2
            c2 = a + _GOLDEN * (b - a)
            f2 = f(c2)
            if f2 > best[0]:
                best = (f2, c2)
        else:
            b, c2, f2 = c2, c1, f1
            c1 = b - _GOLDEN * (b - a)
            f1 = f(c1)
            if f1 > best[0]:
                best = (f1, c1)
        if b - a < 1e-13:
            break
    return best


def _segment_slides(region: StabilityRegion, origin_component_only: bool):
    segs = region.axis_segments
    if origin_component_only:
        segs = tuple(s for s in segs if s[0] <= 0.0 <= s[1])
    return [s for s in segs if s[1] > s[0]]


def amplification_factor(iss: InternalStabilitySet, region: StabilityRegion,
                         half_plane_only: bool = False,
                         origin_component_only: bool = False
                         ) -> tuple[float, tuple]:
    """(M, (stage, z)) over S, optionally restricted to Re z <= 0 and/or to
    the origin-connected component.

    Ties within a relative window resolve to the smallest stage index, then
    the smallest principal argument of z.
    """
    if not isinstance(region, StabilityRegion):
        raise UntracedRegion("amplification_factor needs a traced region")
    Pf = region.P.to_float().trimmed(0.0)
    pts, kinds, idxs = _candidate_points(region, half_plane_only,
                                         origin_component_only)
    Qf = [q.to_float() for q in iss.Q]
    s = len(Qf)
    # the first stage carries no residual; keep it only when it is the sole
    # stage
    start = 1 if s > 1 else 0
    segs = _segment_slides(region, origin_component_only)

    coarse = []  # (value, stage index 0-based, candidate index)
    for j in range(start, s):
        vals = np.abs(Qf[j](pts))
        for k in np.argsort(vals)[::-1][:3]:
            coarse.append((float(vals[k]), j, int(k)))
    if not coarse:
        raise UntracedRegion("no stages carry residuals")
    coarse_best = max(v for v, *_ in coarse)

    finals = []  # (value, stage 1-based, z)
    for val, j, k in coarse:
        if val < 0.995 * coarse_best:
            continue
        q = Qf[j]
        rval, rz = _refine_candidate(region, Pf, int(kinds[k]), int(idxs[k]),
                                     complex(pts[k]), lambda w: abs(q(w)))
        if half_plane_only and rz.real > 1e-9:
            rval, rz = val, complex(pts[k])
        finals.append((max(val, rval), j + 1,
                       rz if rval >= val else complex(pts[k])))
    for j in range(start, s):
        q = Qf[j]
        for lo, hi in segs:
            val, y = _golden_max_1d(lambda t: abs(q(1j * t)), lo, hi)
            finals.append((val, j + 1, 1j * y))

    best = max(v for v, *_ in finals)
    tied = [(j, z) for v, j, z in finals if v >= best * (1.0 - TIE_TOL)]
    tied.sort(key=lambda t: (t[0], cmath.phase(t[1])))
    return best, tied[0]


def amplification_at_zero(iss: InternalStabilitySet):
    """max_j |Q_j(0)| over residual-carrying stages; exact (Fraction) when
    the coefficients are exact."""
    start = 1 if len(iss.Q) > 1 else 0
    vals = [q.coeff(0) for q in iss.Q[start:]]
    if all(isinstance(v, (int, Fraction)) for v in vals):
        return max(abs(Fraction(v)) for v in vals)
    return max(abs(complex(v)) for v in vals)


def report(iss: InternalStabilitySet, region: StabilityRegion,
           method_id: str) -> AmplificationReport:
    m_full, arg_full = amplification_factor(iss, region)
    m_half, arg_half = amplification_factor(iss, region, half_plane_only=True)
    m_main, arg_main = amplification_factor(iss, region,
                                            origin_component_only=True)
    return AmplificationReport(method_id, m_full, m_half, m_main,
                               float(amplification_at_zero(iss)),
                               arg_full, arg_half, arg_main)


# -- analytic results for the s = n^2 third-order family ------------------

def _ssp3_mu_minus(n: int, rho: float) -> float:
    """Strictly increasing reparametrization whose unique root on
    [rho_n, inf) locates the boundary crossing of the negative real nu-axis.

    Overflow-safe: the large power is only exponentiated when the bracketed
    factor is positive.
    """
    inner = (1.0 - 1.0 / n) * rho ** (2 * n - 1) - 1.0
    if inner <= 0.0:
        return -1.0
    log_term = (n - 1) ** 2 * math.log(rho) + math.log(n * inner / (2 * n - 1))
    if log_term > 700.0:
        return math.inf
    return math.exp(log_term) - 1.0


def ssp3_analytic(n: int) -> Ssp3Analysis:
    """Closed-form amplification of the n^2-stage method via the extremal
    point on the negative real axis of the nu-plane."""
    if n < 2:
        raise ValueError("n must be at least 2")
    if n > 400:
        raise ValueError("n capped at 400 to keep the powers finite")
    rho_n = (1.0 + 1.0 / (n - 1)) ** (1.0 / (2 * n - 1))
    lo = rho_n
    delta = 1e-6
    hi = rho_n * (1.0 + delta)
    while _ssp3_mu_minus(n, hi) < 0.0:
        delta *= 2.0
        hi = rho_n * (1.0 + delta)
        if delta > 1e6:
            raise RuntimeError("failed to bracket nu_star")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _ssp3_mu_minus(n, mid) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12:
            break
    nu_star = 0.5 * (lo + hi)

    half_exp = (n * n - n) // 2
    m_value = math.exp(half_exp * math.log(nu_star))
    branch = ((n - 1) / (2 * n - 1)) * math.exp(
        ((n * n + 3 * n - 4) / 2) * math.log(nu_star))

    bound_check = None
    if n >= 9:
        ln_n = math.log(n)
        lower_simple = 0.9 * math.sqrt(n / ln_n)
        lower = math.exp(half_exp * math.log1p(
            ln_n / n**2 - math.log(ln_n) / n**2))
        upper = math.exp(half_exp * math.log1p(
            ln_n / n**2 - math.log(ln_n) / (8 * n**2)))
        upper_simple = math.sqrt(n) / ln_n ** 0.0625
        bound_check = (lower_simple, lower, m_value, upper, upper_simple)
    return Ssp3Analysis(n, nu_star, m_value, branch, bound_check)


# -- closed forms at z = 0 for the extrapolation families ------------------

def amplification_closed_form_ee_zero(p: int) -> Fraction:
    """Exact M({0}) of the first-order-seed extrapolation of order p."""
    if p < 1:
        raise ValueError("p must be positive")
    return max(Fraction(m ** p, math.factorial(p - m) * math.factorial(m))
               for m in range(1, p + 1))


def amplification_closed_form_em_zero(p: int) -> Fraction:
    """Exact M({0}) of the symmetric-seed extrapolation of even order p."""
    if p < 2 or p % 2:
        raise ValueError("p must be even and >= 2")
    r = p // 2
    return max(Fraction(2 * m ** (2 * r),
                        math.factorial(r - m) * math.factorial(r + m))
               for m in range(1, r + 1))


# -- a-priori bounds -------------------------------------------------------

def _check(name: str, value: float, bound: float, upper: bool = True,
           note: str = "") -> BoundCheck:
    margin = (bound - value) if upper else (value - bound)
    return BoundCheck(name, bool(margin >= 0.0), float(margin), note)


def _skip(name: str, note: str) -> BoundCheck:
    return BoundCheck(name, None, math.nan, note)


def _disk_check(iss: InternalStabilitySet, radius: float) -> BoundCheck:
    """Sampled sup over the disk of radius C centered at -C, where the
    canonical implementation must not amplify at all."""
    th = np.linspace(0.0, 2.0 * math.pi, 720, endpoint=False)
    zs = -radius + radius * np.exp(1j * th)
    start = 1 if len(iss.Q) > 1 else 0
    worst = 0.0
    for q in iss.Q[start:]:
        worst = max(worst, float(np.max(np.abs(q.to_float()(zs)))))
    return _check("disk_no_amplification", worst, 1.0 + 1e-9)


def verify_bounds(rep: AmplificationReport, family: str,
                  parameter: int | None = None,
                  iss: InternalStabilitySet | None = None) -> list[BoundCheck]:
    """Compare a measured report against every published bound that applies
    to the family; inapplicable bounds are reported as skipped."""
    out = []
    p = parameter
    if family == "ssp2":
        s = p
        out.append(_check("ssp2_full_region", rep.m_full, (s + 1) / s + 1e-9))
        if iss is not None:
            out.append(_disk_check(iss, float(s - 1)))
        else:
            out.append(_skip("disk_no_amplification", "no stage polynomials supplied"))
    elif family == "ssp3":
        n = p
        ana = ssp3_analytic(n)
        out.append(_check("ssp3_matches_analytic",
                          abs(rep.m_full - ana.m_value),
                          1e-6 * ana.m_value,
                          note=f"analytic {ana.m_value:.12g}"))
        out.append(_check("ssp3_branch_dominance", ana.branch_value,
                          ana.m_value * (1.0 + 1e-12)))
        if ana.bound_check is not None:
            lo_s, lo, m, hi, hi_s = ana.bound_check
            ok = lo_s < lo < m < hi < hi_s
            out.append(BoundCheck("ssp3_sandwich", bool(ok),
                                  float(min(lo - lo_s, m - lo, hi - m, hi_s - hi)),
                                  f"{lo_s:.6g} < {lo:.6g} < {m:.6g} < {hi:.6g} < {hi_s:.6g}"))
        else:
            out.append(_skip("ssp3_sandwich", f"needs n >= 9, got n = {n}"))
        if iss is not None:
            out.append(_disk_check(iss, float(n * n - n)))
        else:
            out.append(_skip("disk_no_amplification", "no stage polynomials supplied"))
    elif family == "ee_extrap":
        if p == 2:
            out.append(_check("ee_full_region", rep.m_full,
                              13.0 * math.e ** 2 / (10.0 * math.sqrt(math.pi))))
        elif p >= 3:
            out.append(_check("ee_full_region", rep.m_full,
                              9.34 ** p / (5.2 * math.pi * math.sqrt(p - 1))))
        if p >= 3:
            out.append(_check("ee_half_plane", rep.m_half,
                              7.01 ** p / (3.9 * math.pi * math.sqrt(p - 1))))
            out.append(_check("ee_origin_upper", rep.m_zero,
                              3.592 ** p / (2.0 * math.pi * math.sqrt(p - 1))))
        else:
            out.append(_skip("ee_half_plane", f"needs p >= 3, got p = {p}"))
            out.append(_skip("ee_origin_upper", f"needs p >= 3, got p = {p}"))
        if p >= 4:
            out.append(_check("ee_origin_lower", rep.m_zero,
                              0.117 * 3.577 ** p / p, upper=False))
        else:
            out.append(_skip("ee_origin_lower", f"needs p >= 4, got p = {p}"))
        out.append(_skip("disk_no_amplification",
                         "extrapolation methods are not canonical on a disk"))
    elif family == "em_extrap":
        r = p // 2
        if r <= 8:
            out.append(_check("em_full_region", rep.m_full,
                              math.sqrt(2.0 / math.pi) * 4.74 ** p / math.sqrt(p)))
        else:
            out.append(_check("em_full_region", rep.m_full,
                              4.986 ** p / (math.pi * math.sqrt(p - 1))))
        if p >= 12:
            out.append(_check("em_half_plane", rep.m_half,
                              3.423 ** p / (math.pi * math.sqrt(p - 1))))
        else:
            out.append(_skip("em_half_plane", f"needs p >= 12, got p = {p}"))
        out.append(_skip("disk_no_amplification",
                         "extrapolation methods are not canonical on a disk"))
    else:
        out.append(_skip("family_bounds", f"no published bounds for {family!r}"))

    out.append(_check("nesting_zero_le_half", rep.m_zero,
                      rep.m_half * (1.0 + 1e-9)))
    out.append(_check("nesting_half_le_full", rep.m_half,
                      rep.m_full * (1.0 + 1e-9)))
    out.append(_check("nesting_zero_le_main", rep.m_zero,
                      rep.m_main * (1.0 + 1e-9)))
    out.append(_check("nesting_main_le_full", rep.m_main,
                      rep.m_full * (1.0 + 1e-9)))
    return out
