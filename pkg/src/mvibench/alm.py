"""Single-loop augmented-Lagrangian solver with forward-reflected-backward
primal steps, projected dual ascent, and a one-step parameter learner.

Per iteration, in order: the reflection term r is rebuilt from the stored
previous operator value, the primal variable takes one projected step against
F + r + grad_x of the penalty, the multipliers ascend using the constraints
at the NEW primal point and the OLD parameter, and the parameter takes one
projected gradient step on the secondary operator.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .problem import ProblemInstance

DIVERGENCE_NORM_FACTOR = 1e6
_DIVERGENCE_CHECK_EVERY = 64


class DivergenceError(RuntimeError):
    """Raised when iterates blow up or turn non-finite."""

    def __init__(self, iteration: int, message: str = "", partial_trace=None):
        super().__init__(
            message or f"solver diverged at iteration {iteration}")
        self.iteration = iteration
        self.partial_trace = partial_trace if partial_trace is not None else []


@dataclass(frozen=True)
class StepSchedule:
    """Constant step parameters (gamma, rho, eta)."""

    gamma: float
    rho: float
    eta: float
    mode: str = "user_supplied"

    def __post_init__(self):
        if min(self.gamma, self.rho, self.eta) <= 0:
            raise ValueError("gamma, rho, eta must all be positive")
        if self.mode not in ("user_supplied", "from_hints"):
            raise ValueError(f"unknown schedule mode {self.mode!r}")


@dataclass(frozen=True)
class SolverState:
    """One iteration's full solver state; immutable."""

    k: int
    x: np.ndarray
    x_prev: np.ndarray
    lam: np.ndarray
    theta: np.ndarray
    theta_prev: np.ndarray
    r: np.ndarray
    gamma: float
    rho: float
    eta: float
    x_ergodic_sum: np.ndarray

    @property
    def x_ergodic(self) -> np.ndarray:
        if self.k == 0:
            return self.x.copy()
        return self.x_ergodic_sum / self.k


def initial_state(p: ProblemInstance, schedule: StepSchedule,
                  x0, theta0) -> SolverState:
    """State at k = 0 with lambda = 0 and the x_{-1} = x_0 convention."""
    x = p.set_X.project(np.asarray(x0, dtype=float))
    theta = p.set_Theta.project(np.asarray(theta0, dtype=float))
    return SolverState(
        k=0, x=x, x_prev=x.copy(), lam=np.zeros(p.J),
        theta=theta, theta_prev=theta.copy(), r=np.zeros(p.n),
        gamma=schedule.gamma, rho=schedule.rho, eta=schedule.eta,
        x_ergodic_sum=np.zeros(p.n))


def _advance(p: ProblemInstance, x, x_prev, lam, theta, theta_prev,
             F_prev, gamma: float, rho: float, eta: float):
    """One raw iteration; returns (x_new, lam_new, theta_new, F_cur, r)."""
    F_cur = p.operator_F(x, theta)
    r = F_cur - F_prev
    if p.J > 0:
        w = np.maximum(rho * p.constraints_f(x, theta) + lam, 0.0)
        direction = F_cur + r + p.jacobian_f(x, theta).T @ w
    else:
        direction = F_cur + r
    x_new = p.set_X.project(x - gamma * direction)
    if p.J > 0:
        lam_new = np.maximum(lam + rho * p.constraints_f(x_new, theta), 0.0)
    else:
        lam_new = lam
    theta_new = p.set_Theta.project(theta - eta * p.operator_H(theta))
    return x_new, lam_new, theta_new, F_cur, r


def alm_step(p: ProblemInstance, s: SolverState) -> SolverState:
    """Advance one iteration; the input state is not mutated."""
    F_prev = p.operator_F(s.x_prev, s.theta_prev)
    x_new, lam_new, theta_new, F_cur, _ = _advance(
        p, s.x, s.x_prev, s.lam, s.theta, s.theta_prev,
        F_prev, s.gamma, s.rho, s.eta)
    if not (np.all(np.isfinite(x_new)) and np.all(np.isfinite(lam_new))
            and np.all(np.isfinite(theta_new))):
        raise DivergenceError(s.k + 1, "non-finite iterate")
    r_new = p.operator_F(x_new, theta_new) - F_cur
    return replace(
        s, k=s.k + 1, x=x_new, x_prev=s.x, lam=lam_new,
        theta=theta_new, theta_prev=s.theta, r=r_new,
        x_ergodic_sum=s.x_ergodic_sum + x_new)


TraceCallback = Callable[[int, np.ndarray, np.ndarray, np.ndarray,
                          np.ndarray], object]


def solve(p: ProblemInstance, schedule: StepSchedule, x0, theta0,
          K: int, trace_every: int,
          evaluator: Optional[TraceCallback] = None,
          start: Optional[SolverState] = None):
    """Run K iterations; returns (final_state, trace_rows).

    Trace rows are produced every ``trace_every`` iterations (and at K) by
    calling ``evaluator(k, x_last, x_ergodic, lam, theta)``.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if trace_every < 1:
        raise ValueError("trace_every must be >= 1")

    if start is not None:
        state = start
    else:
        state = initial_state(p, schedule, x0, theta0)
    x, x_prev = state.x, state.x_prev
    lam, theta, theta_prev = state.lam, state.theta, state.theta_prev
    gamma, rho, eta = state.gamma, state.rho, state.eta
    erg = state.x_ergodic_sum.copy()
    k0 = state.k
    F_prev = p.operator_F(x_prev, theta_prev)
    norm_cap = DIVERGENCE_NORM_FACTOR * (1.0 + float(np.linalg.norm(x)))

    rows = []
    for step in range(1, K + 1):
        x_new, lam, theta_new, F_cur, _ = _advance(
            p, x, x_prev, lam, theta, theta_prev,
            F_prev, gamma, rho, eta)
        x_prev, x = x, x_new
        theta_prev, theta = theta, theta_new
        F_prev = F_cur
        erg += x
        k = k0 + step
        if step % _DIVERGENCE_CHECK_EVERY == 0 or step == K:
            if not (np.all(np.isfinite(x)) and np.all(np.isfinite(lam))
                    and np.all(np.isfinite(theta))):
                raise DivergenceError(k, "non-finite iterate",
                                      partial_trace=rows)
            if float(np.linalg.norm(x)) > norm_cap:
                raise DivergenceError(k, "iterate norm blew up",
                                      partial_trace=rows)
        if evaluator is not None and (step % trace_every == 0 or step == K):
            rows.append(evaluator(k, x, erg / k, lam, theta))

    r_final = p.operator_F(x, theta) - p.operator_F(x_prev, theta_prev)
    final = SolverState(
        k=k0 + K, x=x, x_prev=x_prev, lam=lam, theta=theta,
        theta_prev=theta_prev, r=r_final, gamma=gamma, rho=rho, eta=eta,
        x_ergodic_sum=erg)
    return final, rows


# ---------------------------------------------------------------------------
# Automatic step-size derivation
# ---------------------------------------------------------------------------

_SAFETY = 2.0  # inflation applied to sampled difference quotients
_STREAM_SCHEDULE = 11  # rng stream id for schedule estimation


def _max_quotient(pair_fn, n_pairs: int) -> float:
    best = 0.0
    for _ in range(n_pairs):
        q = pair_fn()
        if q is not None and q > best:
            best = q
    return best


def derive_schedule(p: ProblemInstance, rho_requested: float = 10.0,
                    seed: int = 0, n_samples: int = 10_000,
                    lambda_cap: float = 100.0) -> StepSchedule:
    """Step sizes from Lipschitz hints plus sampled penalty curvature.

    gamma takes 90% of the smaller of the two admissible step bounds; rho is
    clipped so the dual/parameter cross-curvature condition holds; eta is the
    strong-monotonicity optimum for the parameter learner.
    """
    if rho_requested <= 0:
        raise ValueError("rho_requested must be positive")
    rng = np.random.default_rng([seed, _STREAM_SCHEDULE])
    n_pairs = max(1, n_samples // 2)

    def sample_x():
        return p.set_X.sample(rng)

    def sample_theta():
        return p.set_Theta.sample(rng)

    def sample_lam():
        return rng.uniform(0.0, lambda_cap, size=p.J)

    if p.hints is not None:
        L_Fx, L_Fth = p.hints.L_F_x, p.hints.L_F_theta
        mu_H, L_H = p.hints.mu_H, p.hints.L_H
    else:
        def q_fx():
            x1, x2, th = sample_x(), sample_x(), sample_theta()
            d = float(np.linalg.norm(x1 - x2))
            if d < 1e-12:
                return None
            return float(np.linalg.norm(
                p.operator_F(x1, th) - p.operator_F(x2, th))) / d

        def q_fth():
            x, th1, th2 = sample_x(), sample_theta(), sample_theta()
            d = float(np.linalg.norm(th1 - th2))
            if d < 1e-12:
                return None
            return float(np.linalg.norm(
                p.operator_F(x, th1) - p.operator_F(x, th2))) / d

        def q_h():
            th1, th2 = sample_theta(), sample_theta()
            d = float(np.linalg.norm(th1 - th2))
            if d < 1e-12:
                return None
            diff = p.operator_H(th1) - p.operator_H(th2)
            return (float(np.linalg.norm(diff)) / d,
                    float(diff @ (th1 - th2)) / (d * d))

        L_Fx = _max_quotient(q_fx, n_pairs) * _SAFETY
        L_Fth = _max_quotient(q_fth, n_pairs) * _SAFETY
        quots = [q_h() for _ in range(n_pairs)]
        quots = [q for q in quots if q is not None]
        if not quots:
            raise ValueError(
                "cannot estimate secondary-operator constants; "
                "supply lipschitz hints or a user schedule")
        L_H = max(q[0] for q in quots) * _SAFETY
        mu_H = min(q[1] for q in quots)
        if mu_H <= 0 or L_H <= 0:
            raise ValueError(
                "sampled secondary operator is not strongly monotone; "
                "supply lipschitz hints or a user schedule")

    if p.J > 0:
        # cross-curvature of grad_lambda Phi in theta, sampled
        def q_lt():
            x, lam = sample_x(), sample_lam()
            th1, th2 = sample_theta(), sample_theta()
            d = float(np.linalg.norm(th1 - th2))
            if d < 1e-12:
                return None
            from .auglag import penalty_from_values
            rho_probe = 1.0
            g1 = penalty_from_values(
                p.constraints_f(x, th1), lam, rho_probe).grad_lambda
            g2 = penalty_from_values(
                p.constraints_f(x, th2), lam, rho_probe).grad_lambda
            return float(np.linalg.norm(g1 - g2)) / d

        L_phi_lt = _max_quotient(q_lt, n_pairs) * _SAFETY
        rho = min(rho_requested, 1.0 / L_phi_lt) if L_phi_lt > 0 \
            else rho_requested

        # curvature of grad_x Phi in x at the chosen rho, sampled
        def q_phi():
            x1, x2 = sample_x(), sample_x()
            th, lam = sample_theta(), sample_lam()
            d = float(np.linalg.norm(x1 - x2))
            if d < 1e-12:
                return None
            from .auglag import phi_total
            g1 = phi_total(p, x1, lam, th, rho).grad_x
            g2 = phi_total(p, x2, lam, th, rho).grad_x
            return float(np.linalg.norm(g1 - g2)) / d

        L_phi = _max_quotient(q_phi, n_pairs) * _SAFETY
    else:
        rho = rho_requested
        L_phi = 0.0

    denom_a = L_phi + 2.0 * L_Fx + L_Fth
    denom_b = L_Fx + L_Fth
    if max(denom_a, denom_b) <= 0:
        raise ValueError("degenerate operator: cannot derive gamma")
    gamma = 0.9 * min(
        1.0 / denom_a if denom_a > 0 else np.inf,
        1.0 / denom_b if denom_b > 0 else np.inf)
    eta = mu_H / (L_H * L_H)
    return StepSchedule(gamma=gamma, rho=rho, eta=eta, mode="from_hints")
