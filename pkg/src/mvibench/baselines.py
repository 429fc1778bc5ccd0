"""Comparison methods on the Lagrangian reformulation.

Both baselines lift the constrained VI to z = (x, lambda) with the operator
G(z, theta) = (F(x, theta) + Jf(x, theta)^T lambda, -f(x, theta)) over
X x R_+^J, and share the same one-projected-gradient-step parameter learner
as the augmented-Lagrangian solver.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .alm import DivergenceError, TraceCallback
from .problem import ProblemInstance

_STREAM_LIFTED = 17


@dataclass(frozen=True)
class LagrangianVIOperator:
    """Lifted primal-dual operator derived from a problem instance."""

    p: ProblemInstance

    @property
    def dim(self) -> int:
        return self.p.n + self.p.J

    def split(self, z: np.ndarray):
        return z[:self.p.n], z[self.p.n:]

    def operator(self, z: np.ndarray, theta: np.ndarray) -> np.ndarray:
        p = self.p
        x, lam = z[:p.n], z[p.n:]
        if p.J == 0:
            return p.operator_F(x, theta)
        top = p.operator_F(x, theta) + p.jacobian_f(x, theta).T @ lam
        return np.concatenate([top, -p.constraints_f(x, theta)])

    def project(self, z: np.ndarray) -> np.ndarray:
        p = self.p
        x = p.set_X.project(z[:p.n])
        if p.J == 0:
            return x
        return np.concatenate([x, np.maximum(z[p.n:], 0.0)])

    def sample(self, rng, lambda_cap: float = 100.0) -> np.ndarray:
        x = self.p.set_X.sample(rng)
        if self.p.J == 0:
            return x
        return np.concatenate(
            [x, rng.uniform(0.0, lambda_cap, size=self.p.J)])

    def estimate_lipschitz(self, theta=None, n_pairs: int = 2000,
                           seed: int = 0, lambda_cap: float = 100.0,
                           safety: float = 2.0) -> float:
        """Sampled Lipschitz constant of G with safety margin.

        With ``theta=None`` the parameter is sampled over its whole set at
        every pair; the step size must survive wherever the learner wanders,
        not just at the starting parameter.
        """
        rng = np.random.default_rng([seed, _STREAM_LIFTED])
        fixed = None if theta is None else np.asarray(theta, dtype=float)
        best = 0.0
        best_at = None
        for _ in range(n_pairs):
            th = fixed if fixed is not None else \
                self.p.set_Theta.sample(rng)
            z1 = self.sample(rng, lambda_cap)
            z2 = self.sample(rng, lambda_cap)
            d = float(np.linalg.norm(z1 - z2))
            if d < 1e-12:
                continue
            q = float(np.linalg.norm(
                self.operator(z1, th) - self.operator(z2, th))) / d
            if q > best:
                best, best_at = q, ((z1 - z2) / d, th)
        # random pairs miss low-rank dominant directions in high dimension,
        # so refine by power iteration on local difference quotients
        if best_at is not None:
            v, th = best_at
            z0 = self.project(self.sample(rng, lambda_cap))
            g0 = self.operator(z0, th)
            h = 1e-6 * (1.0 + float(np.linalg.norm(z0)))
            for _ in range(50):
                w = (self.operator(z0 + h * v, th) - g0) / h
                q = float(np.linalg.norm(w))
                best = max(best, q)
                if q < 1e-12:
                    break
                v = w / q
        return best * safety


def tikhonov_step(op: LagrangianVIOperator, z, theta, k: int,
                  gamma_t: float, eps0: float, a: float) -> np.ndarray:
    """Projected gradient step on G plus a vanishing Tikhonov term."""
    if gamma_t <= 0:
        raise ValueError("gamma_t must be positive")
    if eps0 < 0:
        raise ValueError("eps0 must be nonnegative")
    if not 0 < a <= 1:
        raise ValueError("a must lie in (0, 1]")
    z = np.asarray(z, dtype=float)
    eps_k = eps0 / (k + 1) ** a
    return op.project(z - gamma_t * (op.operator(z, theta) + eps_k * z))


def extragradient_step(op: LagrangianVIOperator, z, theta,
                       gamma_e: float) -> np.ndarray:
    """Half step at z, full step with the operator at the half point."""
    if gamma_e <= 0:
        raise ValueError("gamma_e must be positive")
    z = np.asarray(z, dtype=float)
    z_half = op.project(z - gamma_e * op.operator(z, theta))
    return op.project(z - gamma_e * op.operator(z_half, theta))


def solve_baseline(p: ProblemInstance, method: str, x0, theta0, K: int,
                   trace_every: int, eta: float,
                   gamma: Optional[float] = None,
                   eps0: float = 1.0, a: float = 0.5,
                   evaluator: Optional[TraceCallback] = None,
                   seed: int = 0):
    """Run a baseline for K iterations; returns (z, theta, trace_rows).

    ``method`` is "tikhonov" or "eg". The dual block of z starts at zero and
    theta follows the same projected gradient learner as the primary solver.
    """
    if method not in ("tikhonov", "eg"):
        raise ValueError(f"unknown baseline {method!r}")
    if K < 1:
        raise ValueError("K must be >= 1")
    if trace_every < 1:
        raise ValueError("trace_every must be >= 1")
    op = LagrangianVIOperator(p)
    theta = p.set_Theta.project(np.asarray(theta0, dtype=float))
    x = p.set_X.project(np.asarray(x0, dtype=float))
    z = np.concatenate([x, np.zeros(p.J)])
    if gamma is None:
        L = op.estimate_lipschitz(seed=seed)
        gamma = 0.9 / L if L > 0 else 1.0
    erg = np.zeros(p.n)
    norm_cap = 1e6 * (1.0 + float(np.linalg.norm(z)))
    rows = []
    for k in range(K):
        if method == "eg":
            z = extragradient_step(op, z, theta, gamma)
        else:
            z = tikhonov_step(op, z, theta, k, gamma, eps0, a)
        theta = p.set_Theta.project(theta - eta * p.operator_H(theta))
        erg += z[:p.n]
        kk = k + 1
        if kk % 64 == 0 or kk == K:
            if not np.all(np.isfinite(z)) or \
                    float(np.linalg.norm(z)) > norm_cap:
                raise DivergenceError(kk, "baseline diverged",
                                      partial_trace=rows)
        if evaluator is not None and (kk % trace_every == 0 or kk == K):
            rows.append(evaluator(kk, z[:p.n], erg / kk, z[p.n:], theta))
    return z, theta, rows
