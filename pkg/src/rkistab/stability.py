"""Propagation polynomials of perturbed explicit Runge-Kutta implementations.

On the linear test problem U' = lam U with z = tau * lam, one perturbed step
satisfies

    err_{n+1} = P(z) err_n + sum_j Q_j(z) r_j + r_{s+1},

where r_j is the residual injected at stage j and r_{s+1} the one injected at
the update.  P is the classical stability polynomial; the Q_j measure how
strongly stage-level noise is amplified into the solution and depend on the
implementation (the Shu-Osher coefficients), not just on the method.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .forms import ButcherTableau, ShuOsherForm, butcher_to_shu_osher
from .poly import Poly

#: residual threshold for declaring a retargeting system solvable
SPAN_TOL = 1e-10
#: relative tolerance on target degrees / leading coefficients
LEAD_TOL = 1e-9


class SpanFailure(ValueError):
    """Requested stage polynomials are outside the reachable set."""


class DegreeMismatch(ValueError):
    """Target degree or leading coefficient conflicts with a structural
    invariant that no change of implementation can move."""


@dataclass(frozen=True)
class InternalStabilitySet:
    """P and the stage polynomials Q_1..Q_s (the update's own residual enters
    with coefficient one and is not stored)."""

    P: Poly
    Q: tuple

    @property
    def s(self) -> int:
        return len(self.Q)


@dataclass(frozen=True)
class DefectCoefficients:
    """Stage-wise order defects theta_0..theta_p, each of length s+1."""

    theta: tuple

    @property
    def order(self) -> int:
        return len(self.theta) - 1


def derive_internal_stability(so: ShuOsherForm) -> InternalStabilitySet:
    """Backward substitution through the stage recursion.

    Q_j collects every path from stage j to the update; rational inputs give
    rational output.
    """
    s = so.s
    alpha, beta, v = so.alpha, so.beta, so.v
    Q = [None] * s
    for j in range(s - 1, -1, -1):
        acc = Poly([alpha[s][j], beta[s][j]])
        for i in range(j + 1, s):
            a, b = alpha[i][j], beta[i][j]
            if a == 0 and b == 0:
                continue
            acc = acc + Q[i] * Poly([a, b])
        Q[j] = acc
    P = Poly([v[s]])
    for j in range(s):
        if v[j] != 0:
            P = P + Q[j] * v[j]
    return InternalStabilitySet(P, tuple(Q))


def derive_internal_stability_butcher(bt: ButcherTableau) -> InternalStabilitySet:
    """Same reduction for a tableau run literally as written (alpha = 0);
    here Q_j(0) = 0 for every stage."""
    return derive_internal_stability(butcher_to_shu_osher(bt))


def defect_coefficients(so: ShuOsherForm, p: int) -> DefectCoefficients:
    """Stage-order defects of the implementation up to order p.

    theta_0 measures affine consistency of each row; theta_k compares the
    k-th Taylor coefficient each stage actually accumulates against the one
    its abscissa demands.  All thetas vanishing for k <= p at every stage
    means every stage is exact to order p on smooth problems.
    """
    from .forms import shu_osher_to_butcher

    s = so.s
    bt = shu_osher_to_butcher(so)
    alpha, v = so.alpha, so.v
    c = list(bt.c) + [1]
    A = [list(row) + [0] for row in bt.A] + [list(bt.b) + [0]]

    theta = []
    t0 = []
    for i in range(s + 1):
        acc = 1 - v[i]
        for j in range(s):
            acc = acc - alpha[i][j]
        t0.append(acc)
    theta.append(tuple(t0))

    for k in range(1, p + 1):
        # d_i = c_i^k - k * sum_j A_ij c_j^(k-1), then premultiply by I - alpha
        d = []
        for i in range(s + 1):
            acc = c[i] ** k
            for j in range(s + 1):
                if A[i][j] != 0:
                    cj = c[j] ** (k - 1) if k > 1 else 1
                    acc = acc - k * A[i][j] * cj
            d.append(acc)
        fk = Fraction(1, math.factorial(k))
        tk = []
        for i in range(s + 1):
            acc = d[i]
            for j in range(min(i, s)):
                if alpha[i][j] != 0:
                    acc = acc - alpha[i][j] * d[j]
            tk.append(fk * acc if isinstance(acc, (int, Fraction)) else float(fk) * acc)
        theta.append(tuple(tk))
    return DefectCoefficients(tuple(theta))


def residual_order_polys(iss: InternalStabilitySet,
                         defects: DefectCoefficients) -> list[Poly]:
    """G_k = sum_j Q_j theta_{k,j} + theta_{k,s+1} for k = 0..p.

    For a method of order p, G_k has a zero of order p+1-k at z = 0, so the
    order-p error budget closes even when individual stages are low order.
    """
    out = []
    s = iss.s
    for th in defects.theta:
        G = Poly([th[s]])
        for j in range(s):
            if th[j] != 0:
                G = G + iss.Q[j] * th[j]
        out.append(G)
    return out


def _poly_degree_float(q: Poly, rel_tol: float = 1e-12) -> int:
    return q.trimmed(rel_tol).degree


def retarget_implementation(bt: ButcherTableau, targets,
                            span_tol: float = SPAN_TOL) -> ShuOsherForm:
    """Find Shu-Osher coefficients for the method of ``bt`` whose stage
    polynomials equal ``targets``.

    The reachable set is rigid: target j must keep the degree and leading
    coefficient of the Butcher-form Q_j, and the nonconstant part of the
    difference must lie in the span of the later Butcher-form polynomials.
    Constant terms are free (they become the update's alpha row).
    """
    s = bt.s
    if len(targets) != s:
        raise ValueError(f"expected {s} targets, got {len(targets)}")
    base = derive_internal_stability_butcher(bt)
    QB = [q.to_float().trimmed() for q in base.Q]
    targets = [t.to_float().trimmed() for t in targets]

    for j in range(s):
        dj, tj = QB[j].degree, targets[j].degree
        if dj != tj:
            raise DegreeMismatch(
                f"stage {j + 1}: target degree {tj} != structural degree {dj}")
        lead_b = complex(QB[j].coeff(dj))
        lead_t = complex(targets[j].coeff(dj))
        if abs(lead_t - lead_b) > LEAD_TOL * max(1.0, abs(lead_b)):
            raise DegreeMismatch(
                f"stage {j + 1}: leading coefficient {lead_t} != {lead_b}")

    dmax = max(q.degree for q in QB)
    gamma = np.eye(s)
    for j in range(s):
        rhs_poly = targets[j] - targets[j].coeff(0) - QB[j]
        rhs = np.array([float(np.real(complex(rhs_poly.coeff(k))))
                        for k in range(1, dmax + 1)])
        later = list(range(j + 1, s))
        if not later:
            if np.max(np.abs(rhs), initial=0.0) > span_tol:
                raise SpanFailure(
                    f"stage {j + 1}: nonzero target change with no later stages")
            continue
        M = np.array([[float(np.real(complex(QB[i].coeff(k))))
                       for i in later] for k in range(1, dmax + 1)])
        sol, *_ = np.linalg.lstsq(M, rhs, rcond=None)
        resid = np.max(np.abs(M @ sol - rhs), initial=0.0)
        if resid > span_tol * max(1.0, np.max(np.abs(rhs), initial=1.0)):
            raise SpanFailure(
                f"stage {j + 1}: residual {resid:.3e} outside reachable span")
        for idx, i in enumerate(later):
            gamma[i, j] = sol[idx]

    gamma_inv = np.linalg.inv(gamma)
    A = bt.A_array
    b = bt.b_array
    alpha_stage = np.eye(s) - gamma_inv
    beta_stage = gamma_inv @ A
    t0 = np.array([float(np.real(complex(t.coeff(0)))) for t in targets])
    alpha_up = t0 @ gamma_inv
    beta_up = b - alpha_up @ A

    alpha = np.vstack([alpha_stage, alpha_up])
    beta = np.vstack([beta_stage, beta_up])
    # scrub roundoff in the strict upper triangle so validation stays exact
    for i in range(s):
        alpha[i, i:] = 0.0
        beta[i, i:] = 0.0
    return ShuOsherForm.from_rows(alpha.tolist(), beta.tolist(), bt.order)
