"""Coupled problem abstraction: primal VI, constraint stack, secondary VI.

The primal operator F(x, theta) and constraints f(x, theta) depend on a
parameter theta that is itself pinned down by a strongly monotone secondary
operator H(theta). Analytic Jacobians are required; nothing in the solver
path differentiates numerically.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .sets import ConvexSet


@dataclass(frozen=True)
class LipschitzHints:
    """Analytic smoothness/monotonicity constants, when known."""

    L_F_x: float
    L_F_theta: float
    L_f_x: float
    L_f_theta: float
    mu_H: float
    L_H: float

    def __post_init__(self):
        for name in ("L_F_x", "L_F_theta", "L_f_x", "L_f_theta", "L_H"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.mu_H <= 0:
            raise ValueError("mu_H must be positive when supplied")
        if self.mu_H > self.L_H:
            raise ValueError("mu_H cannot exceed L_H")


@dataclass(frozen=True)
class ProblemInstance:
    """Immutable description of one coupled misspecified-VI problem."""

    n: int
    m: int
    J: int
    operator_F: Callable[[np.ndarray, np.ndarray], np.ndarray]
    constraints_f: Callable[[np.ndarray, np.ndarray], np.ndarray]
    jacobian_f: Callable[[np.ndarray, np.ndarray], np.ndarray]
    operator_H: Callable[[np.ndarray], np.ndarray]
    set_X: ConvexSet
    set_Theta: ConvexSet
    hints: Optional[LipschitzHints] = None
    tag: str = ""

    def __post_init__(self):
        if self.n < 1 or self.m < 1 or self.J < 0:
            raise ValueError("need n >= 1, m >= 1, J >= 0")
        if self.set_X.dim != self.n:
            raise ValueError("set_X dimension does not match n")
        if self.set_Theta.dim != self.m:
            raise ValueError("set_Theta dimension does not match m")
        # one-shot shape probe so misdimensioned callables fail loudly here
        x0 = self.set_X.project(np.zeros(self.n))
        th0 = self.set_Theta.project(np.zeros(self.m))
        if np.shape(self.operator_F(x0, th0)) != (self.n,):
            raise ValueError("operator_F must return shape (n,)")
        if np.shape(self.operator_H(th0)) != (self.m,):
            raise ValueError("operator_H must return shape (m,)")
        if self.J > 0:
            if np.shape(self.constraints_f(x0, th0)) != (self.J,):
                raise ValueError("constraints_f must return shape (J,)")
            if np.shape(self.jacobian_f(x0, th0)) != (self.J, self.n):
                raise ValueError("jacobian_f must return shape (J, n)")


@dataclass(frozen=True)
class KKTTriple:
    """A primal/parameter/multiplier triple satisfying the KKT system."""

    x_star: np.ndarray
    theta_star: np.ndarray
    lambda_star: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x_star", np.asarray(self.x_star, float))
        object.__setattr__(self, "theta_star",
                           np.asarray(self.theta_star, float))
        object.__setattr__(self, "lambda_star",
                           np.asarray(self.lambda_star, float))
        if np.any(self.lambda_star < 0):
            raise ValueError("lambda_star must be componentwise nonnegative")


def evaluate_kkt_residual(p: ProblemInstance, x, theta, lam) -> float:
    """Aggregate KKT residual; zero exactly at a KKT point.

    Sum of the natural-map residual of the primal stationarity condition,
    the constraint violation, the complementarity defect, and the
    natural-map residual of the secondary VI.
    """
    x = np.asarray(x, dtype=float)
    theta = np.asarray(theta, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise ValueError("multipliers must be nonnegative")
    if p.J > 0:
        fx = p.constraints_f(x, theta)
        grad_term = p.jacobian_f(x, theta).T @ lam
        infeas = float(np.linalg.norm(np.maximum(fx, 0.0)))
        compl = abs(float(lam @ fx))
    else:
        grad_term = 0.0
        infeas = 0.0
        compl = 0.0
    stat_x = float(np.linalg.norm(
        x - p.set_X.project(x - p.operator_F(x, theta) - grad_term)))
    stat_th = float(np.linalg.norm(
        theta - p.set_Theta.project(theta - p.operator_H(theta))))
    return stat_x + infeas + compl + stat_th


def check_monotonicity(p: ProblemInstance, theta, samples: int,
                       seed: int = 0, tol: float = -1e-10) -> bool:
    """Sampled monotonicity check of F(., theta) on X. Diagnostic only."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    theta = np.asarray(theta, dtype=float)
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        x = p.set_X.sample(rng)
        y = p.set_X.sample(rng)
        gap = float((p.operator_F(x, theta) - p.operator_F(y, theta)) @ (x - y))
        if gap < tol:
            return False
    return True
