"""Time stepping with controlled per-stage perturbations.

Steps are always taken through the Shu-Osher recurrence, so the same driver
exercises a low-storage implementation and its Butcher-form rewrite and the
difference in accumulated roundoff between the two is observable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .forms import ShuOsherForm, shu_osher_to_butcher

#: rejected steps in a row before the controller gives up
MAX_REJECTIONS = 50
#: hard cap on total attempted steps per run
MAX_STEPS = 2_000_000


class NonfiniteState(FloatingPointError):
    """A stage or update left the representable range."""


class NotCanonical(ValueError):
    """Coefficients violate the convex (contractive) structure required for
    the contractivity experiment."""


class SpectrumOutsideRegion(ValueError):
    """tau * eig(L) leaves the stability region, so the amplification bound
    does not apply."""


@dataclass(frozen=True)
class IvpProblem:
    rhs: object
    u0: np.ndarray
    t0: float
    t_end: float
    #: optional dense reference solution, callable t -> state
    reference: object = None

    @property
    def dimension(self) -> int:
        return len(self.u0)


@dataclass(frozen=True)
class PerturbationPolicy:
    """How residuals are injected at every stage and at the update.

    mode 'none': exact steps.  mode 'fixed_magnitude': iid uniform in
    [-magnitude, magnitude] per component.  mode 'relative_roundoff':
    uniform in [-magnitude, magnitude] scaled by (1 + |stage value|),
    mimicking floating-point noise proportional to the data.
    """

    mode: str = "none"
    magnitude: float = 2.0 ** -52
    seed: int = 0


@dataclass(frozen=True)
class StepControllerConfig:
    abs_tol: float = 1e-8
    rel_tol: float = 1e-8
    safety: float = 0.9
    min_factor: float = 0.2
    max_factor: float = 5.0
    max_rejections: int = MAX_REJECTIONS
    #: fraction of the integration span below which the step size counts as
    #: underflowed (noise-dominated error estimates shrink tau forever while
    #: occasional lucky accepts keep resetting the rejection counter)
    min_step_fraction: float = 1e-13


@dataclass
class RunRecord:
    method_id: str
    accepted: int = 0
    rejected: int = 0
    final_time: float = math.nan
    final_state: np.ndarray | None = None
    failed: bool = False
    failure_reason: str = ""
    #: (t, tau, err_estimate, accepted) per attempted step
    steps: list = field(default_factory=list)

    @property
    def n_steps(self) -> int:
        return self.accepted


@lru_cache(maxsize=64)
def _step_tables(so: ShuOsherForm):
    """Per-row sparse views plus stage abscissae, cached per form."""
    s = so.s
    alpha, beta, v = so.alpha_array, so.beta_array, so.v_array
    c = shu_osher_to_butcher(so).c_array
    rows = []
    for i in range(s + 1):
        aj = np.nonzero(alpha[i])[0]
        bj = np.nonzero(beta[i])[0]
        rows.append((v[i], aj, alpha[i, aj], bj, beta[i, bj]))
    emb = None
    if so.beta_embedded is not None:
        ae = np.array([float(x) for x in so.alpha_embedded])
        be = np.array([float(x) for x in so.beta_embedded])
        aj = np.nonzero(ae)[0]
        bj = np.nonzero(be)[0]
        emb = (1.0 - ae.sum(), aj, ae[aj], bj, be[bj])
    return rows, emb, c


def _draw_residual(policy: PerturbationPolicy, rng, scale: float, m: int):
    if policy.mode == "none" or rng is None:
        return None
    r = rng.uniform(-policy.magnitude, policy.magnitude, size=m)
    if policy.mode == "relative_roundoff":
        return r * (1.0 + scale)
    if policy.mode == "fixed_magnitude":
        return r
    raise ValueError(f"unknown perturbation mode {policy.mode!r}")


def _combine(row, U, Ys, Fs, tau):
    v_i, aj, av, bj, bv = row
    acc = v_i * U if v_i != 0.0 else np.zeros_like(U)
    for k, j in enumerate(aj):
        acc = acc + av[k] * Ys[j]
    for k, j in enumerate(bj):
        acc = acc + (tau * bv[k]) * Fs[j]
    return acc


def step_shu_osher(so: ShuOsherForm, rhs, t: float, U: np.ndarray,
                   tau: float, policy: PerturbationPolicy | None = None,
                   rng=None, residuals=None):
    """One step; returns (U_next, U_next_embedded_or_None).

    ``residuals`` overrides the policy with explicit per-row vectors
    (length s+1, entries arrays or None).
    """
    rows, emb, c = _step_tables(so)
    s = so.s
    Ys = []
    Fs = []
    for i in range(s):
        Y = _combine(rows[i], U, Ys, Fs, tau)
        if residuals is not None:
            if residuals[i] is not None:
                Y = Y + residuals[i]
        elif policy is not None and policy.mode != "none" and i > 0:
            Y = Y + _draw_residual(policy, rng, float(np.linalg.norm(Y)),
                                   len(U))
        if not np.all(np.isfinite(Y)):
            raise NonfiniteState(f"stage {i + 1} not finite at t = {t}")
        Ys.append(Y)
        Fs.append(np.asarray(rhs(t + c[i] * tau, Y), dtype=float))
    U1 = _combine(rows[s], U, Ys, Fs, tau)
    if residuals is not None:
        if residuals[s] is not None:
            U1 = U1 + residuals[s]
    elif policy is not None and policy.mode != "none":
        U1 = U1 + _draw_residual(policy, rng, float(np.linalg.norm(U1)),
                                 len(U))
    if not np.all(np.isfinite(U1)):
        raise NonfiniteState(f"update not finite at t = {t}")
    U1_emb = _combine(emb, U, Ys, Fs, tau) if emb is not None else None
    return U1, U1_emb


def integrate_fixed(so: ShuOsherForm, problem: IvpProblem, n_steps: int,
                    policy: PerturbationPolicy | None = None) -> np.ndarray:
    rng = np.random.default_rng(policy.seed) if policy else None
    tau = (problem.t_end - problem.t0) / n_steps
    U = np.asarray(problem.u0, dtype=float)
    t = problem.t0
    for _ in range(n_steps):
        U, _ = step_shu_osher(so, problem.rhs, t, U, tau, policy, rng)
        t += tau
    return U


def integrate_adaptive(so: ShuOsherForm, problem: IvpProblem,
                       controller: StepControllerConfig,
                       policy: PerturbationPolicy | None = None,
                       tau0: float | None = None,
                       method_id: str = "", record_steps: bool = False
                       ) -> RunRecord:
    """Embedded-pair integration with a standard deadbeat controller."""
    if so.beta_embedded is None:
        raise ValueError("adaptive integration needs an embedded pair")
    rec = RunRecord(method_id)
    rng = np.random.default_rng(policy.seed) if policy else None
    q = min(so.order, so.order_embedded)
    expo = -1.0 / (q + 1.0)
    t = problem.t0
    U = np.asarray(problem.u0, dtype=float)
    span = problem.t_end - problem.t0
    tau = tau0 if tau0 is not None else 1e-2 * span
    consecutive_rej = 0
    attempts = 0
    while t < problem.t_end - 1e-14 * span:
        tau = min(tau, problem.t_end - t)
        attempts += 1
        if attempts > MAX_STEPS:
            rec.failed = True
            rec.failure_reason = "step budget exhausted"
            break
        try:
            U1, U1e = step_shu_osher(so, problem.rhs, t, U, tau, policy, rng)
            scale = controller.abs_tol + controller.rel_tol * np.maximum(
                np.abs(U), np.abs(U1))
            err = float(np.sqrt(np.mean(((U1 - U1e) / scale) ** 2)))
        except NonfiniteState:
            err = math.inf
        if err <= 1.0:
            t += tau
            U = U1
            rec.accepted += 1
            consecutive_rej = 0
            if record_steps:
                rec.steps.append((t, tau, err, True))
        else:
            rec.rejected += 1
            consecutive_rej += 1
            if record_steps:
                rec.steps.append((t, tau, err, False))
            if consecutive_rej >= controller.max_rejections:
                rec.failed = True
                rec.failure_reason = (
                    f"controller stalled: {consecutive_rej} consecutive "
                    f"rejections at t = {t:.6g}, tau = {tau:.3e}")
                break
        if math.isfinite(err) and err > 0.0:
            factor = controller.safety * err ** expo
        else:
            factor = controller.min_factor
        tau *= min(controller.max_factor, max(controller.min_factor, factor))
        if tau < controller.min_step_fraction * span and not rec.failed \
                and t < problem.t_end - 1e-14 * span:
            rec.failed = True
            rec.failure_reason = (
                f"step size underflow: tau = {tau:.3e} at t = {t:.6g}")
            break
    rec.final_time = t
    rec.final_state = U
    return rec


# -- the eccentric two-body problem ---------------------------------------

def _kepler_rhs(t, u):
    x, y, vx, vy = u
    r3 = (x * x + y * y) ** 1.5
    return np.array([vx, vy, -x / r3, -y / r3])


def kepler_d2() -> IvpProblem:
    """Planar two-body motion, eccentricity 0.3, twenty time units
    (a bit over three periods)."""
    u0 = np.array([0.7, 0.0, 0.0, math.sqrt(13.0 / 7.0)])
    return IvpProblem(_kepler_rhs, u0, 0.0, 20.0)


def kepler_energy(u: np.ndarray) -> float:
    x, y, vx, vy = u
    return 0.5 * (vx * vx + vy * vy) - 1.0 / math.hypot(x, y)


def kepler_eccentricity(u: np.ndarray) -> float:
    x, y, vx, vy = u
    h = x * vy - y * vx
    E = kepler_energy(u)
    return math.sqrt(max(0.0, 1.0 + 2.0 * E * h * h))


@lru_cache(maxsize=4)
def kepler_reference(tol: float = 1e-13) -> np.ndarray:
    """Final state at t = 20 from a tight adaptive run of a five-four pair."""
    from .catalog import classic_tableau
    from .forms import butcher_to_shu_osher

    so = butcher_to_shu_osher(classic_tableau("fehlberg54"))
    rec = integrate_adaptive(so, kepler_d2(),
                             StepControllerConfig(abs_tol=tol, rel_tol=tol),
                             tau0=1e-3)
    if rec.failed:
        raise RuntimeError(f"reference run failed: {rec.failure_reason}")
    return rec.final_state


# -- structured experiments ------------------------------------------------

def _canonical_radius(so: ShuOsherForm, tol: float = 1e-12) -> float:
    """Largest C with alpha >= C * beta >= 0 elementwise, alpha row sums
    <= 1 and derived v >= 0; raises NotCanonical otherwise."""
    s = so.s
    alpha, beta, v = so.alpha_array, so.beta_array, so.v_array
    if np.any(alpha < -tol) or np.any(beta < -tol):
        raise NotCanonical("negative alpha or beta entry")
    if np.any(v < -tol):
        raise NotCanonical("an alpha row sums above one")
    mask = beta > tol
    if not np.any(mask):
        raise NotCanonical("no forward-Euler substeps present")
    return float(np.min(alpha[mask] / beta[mask]))


def contractivity_experiment(so: ShuOsherForm, rhs, t: float, tau: float,
                             U: np.ndarray, U_perturbed: np.ndarray,
                             residuals) -> dict:
    """One paired step: exact from U, perturbed (initial offset plus stage
    residuals) from U_perturbed.  Under the canonical step-size restriction
    tau <= C * tau_fe of a contractive problem the deviation cannot exceed
    the initial offset plus the injected residual mass (any norm for which
    forward Euler is contractive; reported here in the 2-norm).
    """
    C = _canonical_radius(so)
    clean, _ = step_shu_osher(so, rhs, t, np.asarray(U, float), tau)
    dirty, _ = step_shu_osher(so, rhs, t, np.asarray(U_perturbed, float), tau,
                              residuals=list(residuals))
    lhs = float(np.linalg.norm(dirty - clean))
    rhs_bound = float(np.linalg.norm(
        np.asarray(U_perturbed, float) - np.asarray(U, float)))
    for r in residuals:
        if r is not None:
            rhs_bound += float(np.linalg.norm(r))
    return {"radius": C, "deviation": lhs, "budget": rhs_bound,
            "satisfied": lhs <= rhs_bound * (1.0 + 1e-10)}


def amplification_experiment(iss, L: np.ndarray, tau: float, eps0: np.ndarray,
                             residuals, m_value: float) -> dict:
    """Propagate a perturbation through one linear step U' = L U via the
    polynomials themselves and compare against the worst-case budget
    ||eps|| + s * M * max_j ||r_j||.

    L must have its scaled spectrum inside the region M was computed for.
    """
    L = np.asarray(L, dtype=complex)
    eigs = np.linalg.eigvals(tau * L)
    Pf = iss.P.to_float()
    bad = [z for z in eigs if abs(Pf(complex(z))) > 1.0 + 1e-9]
    if bad:
        raise SpectrumOutsideRegion(
            f"tau * eigenvalue {bad[0]:.6g} has |P| = {abs(Pf(complex(bad[0]))):.6g} > 1")

    n = L.shape[0]
    s = iss.s

    def poly_of_matrix(q):
        c = q.as_float_array()
        acc = np.eye(n, dtype=complex) * c[-1]
        for k in range(len(c) - 2, -1, -1):
            acc = acc @ (tau * L) + np.eye(n) * c[k]
        return acc

    eps0 = np.asarray(eps0, dtype=complex)
    out = poly_of_matrix(iss.P) @ eps0
    rmax = 0.0
    for j in range(s):
        r = residuals[j]
        if r is None:
            continue
        r = np.asarray(r, dtype=complex)
        rmax = max(rmax, float(np.linalg.norm(r)))
        out = out + poly_of_matrix(iss.Q[j]) @ r
    if residuals[s] is not None:
        r = np.asarray(residuals[s], dtype=complex)
        rmax = max(rmax, float(np.linalg.norm(r)))
        out = out + r
    lhs = float(np.linalg.norm(out))
    budget = float(np.linalg.norm(eps0)) + s * m_value * rmax
    return {"deviation": lhs, "budget": budget,
            "satisfied": lhs <= budget * (1.0 + 1e-9)}
