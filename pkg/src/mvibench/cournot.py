"""Capacitated Cournot competition with a price-cap constraint and an
unknown inverse-demand slope learned from observed (output, price) pairs.

Firm i picks x_i in [0, Cap_i] with quadratic cost 0.5 r_i x^2 + g_i x; the
market price is a* - b * sum(x). The slope b is unknown and pinned down by
least squares on T synthetic observations, whose gradient supplies the
strongly monotone secondary operator. The price-cap constraint bounds the
price from above, which is a lower bound on aggregate output.

All randomness flows from one 64-bit seed through fixed stream offsets:
stream 0 draws instance coefficients and observations; stream 11 is reserved
for schedule estimation; stream 13 for gap-oracle sampling.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
from typing import Optional, Sequence

import numpy as np

from .problem import LipschitzHints, ProblemInstance
from .sets import Box

STREAM_INSTANCE = 0

# staggered price-cap levels used when a label asks for D constraint tiers:
# the loosest rung sits at the single-cap default 0.95*a_star and the ladder
# tightens evenly towards 0.05*a_star, so deeper ladders genuinely shrink
# the feasible set instead of duplicating one cap. The deepest rung is
# floored at the price reachable with 95% of total capacity, which keeps a
# strictly feasible point inside the caps for every instance size.
TIER_BASE = 0.95
TIER_FLOOR = 0.05
TIER_CAPACITY_MARGIN = 0.95


@dataclass(frozen=True)
class CournotConfig:
    """Everything needed to regenerate an instance byte-for-byte."""

    N: int
    b_true: float
    a_star: float = 100.0
    delta: Optional[float] = None          # default 0.95 * a_star
    cap: float = 5.0
    T: int = 300
    x_t_range: tuple = (2.0, 20.0)
    seed: int = 0
    noise_sigma: float = 0.0
    theta_max: Optional[float] = None      # default 10 * b_true
    tiers: int = 1

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.b_true <= 0:
            raise ValueError("b_true must be positive")
        if self.cap <= 0:
            raise ValueError("cap must be positive")
        if self.T < 1:
            raise ValueError("T must be >= 1")
        if self.tiers < 1:
            raise ValueError("tiers must be >= 1")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")

    @property
    def delta_levels(self) -> np.ndarray:
        if self.tiers == 1:
            d0 = self.a_star * TIER_BASE if self.delta is None else self.delta
            levels = np.array([d0], dtype=float)
        else:
            full_supply_price = (self.a_star - TIER_CAPACITY_MARGIN
                                 * self.b_true * self.N * self.cap)
            floor = max(TIER_FLOOR * self.a_star, full_supply_price)
            levels = np.linspace(TIER_BASE * self.a_star, floor, self.tiers)
        if np.any(levels >= self.a_star):
            raise ValueError("price-cap levels must stay below a_star")
        return levels

    @property
    def theta_cap(self) -> float:
        return 10.0 * self.b_true if self.theta_max is None else self.theta_max

    def to_dict(self) -> dict:
        d = asdict(self)
        d["x_t_range"] = list(self.x_t_range)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CournotConfig":
        d = dict(d)
        if "x_t_range" in d and d["x_t_range"] is not None:
            d["x_t_range"] = tuple(d["x_t_range"])
        return cls(**d)


def generate(cfg: CournotConfig):
    """Build the problem instance; returns (problem, theta_star, obs).

    ``obs`` carries the drawn coefficients and the observation sample so an
    instance file can record them verbatim.
    """
    deltas = cfg.delta_levels
    rng = np.random.default_rng([cfg.seed, STREAM_INSTANCE])
    r = rng.uniform(1.0, 10.0, size=cfg.N)
    g = rng.uniform(5.0, 20.0, size=cfg.N)
    X_t = rng.uniform(cfg.x_t_range[0], cfg.x_t_range[1], size=cfg.T)
    p_obs = cfg.a_star - cfg.b_true * X_t
    if cfg.noise_sigma > 0:
        p_obs = p_obs + cfg.noise_sigma * rng.standard_normal(cfg.T)

    sum_x2 = float(X_t @ X_t)
    sum_x_resid = float(X_t @ (cfg.a_star - p_obs))
    # closed-form least-squares slope; equals b_true when noiseless
    theta_star = np.array([sum_x_resid / sum_x2])

    a = cfg.a_star
    n = cfg.N
    J = deltas.size
    cap = float(cfg.cap)
    neg_ones_jac = -np.ones((J, n))

    def operator_F(x, th):
        b = th[0]
        s = x.sum()
        return r * x + g + b * (s + x) - a

    def constraints_f(x, th):
        return (a - th[0] * x.sum()) - deltas

    def jacobian_f(x, th):
        return th[0] * neg_ones_jac

    def operator_H(th):
        return np.array([sum_x2 * th[0] - sum_x_resid])

    theta_cap = cfg.theta_cap
    if theta_star[0] > theta_cap:
        raise ValueError("theta_max excludes the least-squares solution")

    # analytic constants over X x [0, theta_cap]
    cap_sum = n * cap
    hints = LipschitzHints(
        L_F_x=float(np.max(r)) + theta_cap * (n + 1),
        L_F_theta=float(np.linalg.norm(np.full(n, cap_sum + cap))),
        L_f_x=theta_cap * np.sqrt(n),
        L_f_theta=cap_sum,
        mu_H=sum_x2,
        L_H=sum_x2)

    problem = ProblemInstance(
        n=n, m=1, J=J,
        operator_F=operator_F, constraints_f=constraints_f,
        jacobian_f=jacobian_f, operator_H=operator_H,
        set_X=Box(np.zeros(n), np.full(n, cap)),
        set_Theta=Box([0.0], [theta_cap]),
        hints=hints, tag="cournot")
    obs = {"r": r, "g": g, "X_t": X_t, "p_obs": p_obs}
    return problem, theta_star, obs


def instance_family(labels: Sequence[tuple], seed_base: int = 0,
                    b_true: float = 2.0) -> list:
    """One config per (N, D) label; D selects the constraint-tier count."""
    if not labels:
        raise ValueError("labels must be nonempty")
    configs = []
    for idx, (n_firms, depth) in enumerate(labels):
        configs.append(CournotConfig(
            N=int(n_firms), b_true=b_true, tiers=int(depth),
            seed=seed_base + idx))
    return configs
