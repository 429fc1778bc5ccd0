"""Augmented-Lagrangian penalty for inequality constraints.

The scalar penalty is quadratic while ``rho*u + v >= 0`` and switches to the
constant-completing branch ``-v^2 / (2 rho)`` below it, which keeps the
function continuously differentiable across the switch surface. Active sets
are always recomputed from the arguments at hand, never cached.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problem import ProblemInstance


@dataclass
class AugLagEval:
    """Value, partial gradients, and active flags of the total penalty."""

    value: float
    grad_x: np.ndarray | None
    grad_lambda: np.ndarray
    active_set: np.ndarray


def phi_scalar(u: float, v: float, rho: float) -> float:
    """One constraint's penalty term. Branches agree where rho*u + v = 0."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    if rho * u + v >= 0:
        return u * v + 0.5 * rho * u * u
    return -v * v / (2.0 * rho)


def penalty_from_values(f_val, lam, rho: float,
                        jac: np.ndarray | None = None) -> AugLagEval:
    """Total penalty from raw constraint values (and optionally a Jacobian)."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    f_val = np.asarray(f_val, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if f_val.shape != lam.shape:
        raise ValueError("f_val and lambda must have matching shapes")
    if np.any(lam < 0):
        raise ValueError("multipliers must be nonnegative")
    w = rho * f_val + lam
    active = w >= 0.0
    value = float(np.sum(np.where(
        active,
        f_val * lam + 0.5 * rho * f_val * f_val,
        -lam * lam / (2.0 * rho))))
    grad_lambda = np.where(active, f_val, -lam / rho)
    grad_x = None
    if jac is not None:
        jac = np.asarray(jac, dtype=float)
        if jac.shape != (f_val.size, jac.shape[1] if jac.ndim == 2 else -1):
            raise ValueError("jacobian must have J rows")
        grad_x = jac.T @ np.maximum(w, 0.0)
    return AugLagEval(value=value, grad_x=grad_x,
                      grad_lambda=grad_lambda, active_set=active)


def phi_total(p: ProblemInstance, x, lam, theta, rho: float) -> AugLagEval:
    """Penalty value and gradients at (x, lambda, theta) for problem ``p``."""
    x = np.asarray(x, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if p.J == 0:
        return AugLagEval(value=0.0, grad_x=np.zeros(p.n),
                          grad_lambda=np.zeros(0),
                          active_set=np.zeros(0, dtype=bool))
    f_val = p.constraints_f(x, theta)
    jac = p.jacobian_f(x, theta)
    return penalty_from_values(f_val, lam, rho, jac=jac)


def dual_update(lam, f_val, rho: float) -> np.ndarray:
    """Projected dual ascent step ``[lam + rho f]_+``."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise ValueError("multipliers must be nonnegative")
    f_val = np.asarray(f_val, dtype=float)
    return np.maximum(lam + rho * f_val, 0.0)
