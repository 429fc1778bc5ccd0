"""Solution-quality metrics: aggregated infeasibility, the Minty VI gap and
its relaxed variant over an enlarged feasible set, and a brute-force KKT
reference solver for tiny instances.

The gap ``sup_y F(y).(x - y)`` is maximized exactly (projected gradient
ascent on a concave quadratic) when both the operator and the constraints
are affine in x; otherwise only a sampling lower bound is sound, and that is
what gets reported.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .problem import KKTTriple, ProblemInstance
from .sets import Box, BoxHalfspace, ConvexSet

STREAM_GAP = 13

_AFFINE_TOL = 1e-8


@dataclass
class GapOracleConfig:
    """Budget and mode knobs for the gap oracle."""

    inner_iterations: int = 5000
    inner_step: Optional[float] = None     # default 0.9 / sampled curvature
    eps_enlargement: Optional[float] = None  # default: measured infeasibility
    lower_bound_samples: int = 10_000
    mode: str = "auto"                     # auto | exact | sampling
    seed: int = 0

    def __post_init__(self):
        if self.inner_iterations < 1:
            raise ValueError("inner_iterations must be >= 1")
        if self.eps_enlargement is not None and self.eps_enlargement < 0:
            raise ValueError("eps_enlargement must be nonnegative")
        if self.mode not in ("auto", "exact", "sampling"):
            raise ValueError(f"unknown gap mode {self.mode!r}")


def infeasibility(p: ProblemInstance, x, theta_star) -> float:
    """Sum of positive constraint violations at the true parameter."""
    if p.J == 0:
        return 0.0
    x = np.asarray(x, dtype=float)
    theta_star = np.asarray(theta_star, dtype=float)
    return float(np.sum(np.maximum(p.constraints_f(x, theta_star), 0.0)))


def theta_error(theta, theta_star) -> float:
    """Euclidean distance of the learned parameter from the true one."""
    return float(np.linalg.norm(np.asarray(theta, float)
                                - np.asarray(theta_star, float)))


# ---------------------------------------------------------------------------
# Affine structure probes
# ---------------------------------------------------------------------------

def _affine_operator_model(p: ProblemInstance, theta):
    """(M, q) with F(x) = M x + q, or None if F is not affine in x."""
    q = p.operator_F(np.zeros(p.n), theta)
    M = np.empty((p.n, p.n))
    eye = np.eye(p.n)
    for i in range(p.n):
        M[:, i] = p.operator_F(eye[i], theta) - q
    rng = np.random.default_rng([0, STREAM_GAP])
    for _ in range(3):
        x = rng.uniform(-1.0, 1.0, size=p.n)
        if np.max(np.abs(p.operator_F(x, theta) - (M @ x + q))) > \
                _AFFINE_TOL * (1.0 + np.max(np.abs(q))):
            return None
    return M, q


def _affine_constraint_model(p: ProblemInstance, theta):
    """(G, c) with f(x) = G x + c, or None if constraints are not affine."""
    c = p.constraints_f(np.zeros(p.n), theta)
    G = p.jacobian_f(np.zeros(p.n), theta)
    rng = np.random.default_rng([1, STREAM_GAP])
    for _ in range(3):
        x = rng.uniform(-1.0, 1.0, size=p.n)
        if np.max(np.abs(p.constraints_f(x, theta) - (G @ x + c))) > \
                _AFFINE_TOL * (1.0 + np.max(np.abs(c))):
            return None
        if np.max(np.abs(p.jacobian_f(x, theta) - G)) > _AFFINE_TOL:
            return None
    return G, c


def _enlarged_feasible_set(p: ProblemInstance, theta_star,
                           eps: float) -> Optional[ConvexSet]:
    """{x in X : sum_j [f_j(x)]_+ <= eps} when it reduces to box/halfspace.

    Requires X to be a box and every constraint gradient to be parallel to a
    common direction, so the aggregate violation is monotone along it and
    its sublevel set is a single halfspace. Returns None otherwise.
    """
    if not isinstance(p.set_X, Box):
        return None
    if p.J == 0:
        return p.set_X
    model = _affine_constraint_model(p, theta_star)
    if model is None:
        return None
    G, c = model
    idx = int(np.argmax(np.linalg.norm(G, axis=1)))
    v = G[idx]
    vnorm = float(np.linalg.norm(v))
    if vnorm == 0.0:
        # constraints do not depend on x: either always feasible or empty
        total = float(np.sum(np.maximum(c, 0.0)))
        return p.set_X if total <= eps else None
    v = v / vnorm
    alphas = G @ v
    if np.max(np.abs(G - np.outer(alphas, v))) > _AFFINE_TOL * (1 + vnorm):
        return None  # gradients not parallel
    if not (np.all(alphas <= _AFFINE_TOL) or np.all(alphas >= -_AFFINE_TOL)):
        return None  # mixed slopes: aggregate violation not monotone

    lo, up = p.set_X.lower, p.set_X.upper
    t_min = float(np.sum(np.minimum(v * lo, v * up)))
    t_max = float(np.sum(np.maximum(v * lo, v * up)))

    def viol(t):
        return float(np.sum(np.maximum(c + alphas * t, 0.0)))

    decreasing = np.all(alphas <= _AFFINE_TOL)
    lo_end, hi_end = (t_max, t_min) if decreasing else (t_min, t_max)
    if viol(lo_end) > eps + 1e-15:
        return None  # enlarged set is empty within the box
    if viol(hi_end) <= eps + 1e-15:
        return p.set_X  # whole box already inside the sublevel set
    # bisection for the threshold where the violation equals eps
    bad, good = hi_end, lo_end
    for _ in range(200):
        mid = 0.5 * (bad + good)
        if viol(mid) <= eps:
            good = mid
        else:
            bad = mid
    t0 = good
    if decreasing:
        # feasible side is v.x >= t0  <=>  (-v).x <= -t0
        return BoxHalfspace(lo, up, -v, -t0)
    return BoxHalfspace(lo, up, v, t0)


def projected_ascent(M, q, x, feas: ConvexSet, y0, step: float,
                     iterations: int):
    """Maximize (M y + q).(x - y) over ``feas``; returns (best, y, history)."""
    y = np.asarray(y0, dtype=float).copy()
    best_val = -np.inf
    best_y = y.copy()
    history = []
    for _ in range(iterations):
        Fy = M @ y + q
        val = float(Fy @ (x - y))
        history.append(val)
        if val > best_val:
            best_val = val
            best_y = y.copy()
        grad = M.T @ (x - y) - Fy
        y = feas.project(y + step * grad)
    val = float((M @ y + q) @ (x - y))
    history.append(val)
    if val > best_val:
        best_val, best_y = val, y.copy()
    return best_val, best_y, history


def minty_gap(p: ProblemInstance, x, theta_star,
              cfg: Optional[GapOracleConfig] = None):
    """Minty gap of ``x`` over the eps-enlarged feasible set.

    Returns (value, certificate). With eps_enlargement = 0 this is the
    standard gap; the default eps is the measured infeasibility of ``x``
    itself so the evaluated point lies inside the comparison set.
    """
    cfg = cfg or GapOracleConfig()
    x = np.asarray(x, dtype=float)
    theta_star = np.asarray(theta_star, dtype=float)
    eps = cfg.eps_enlargement
    if eps is None:
        eps = infeasibility(p, x, theta_star)

    op_model = _affine_operator_model(p, theta_star)
    feas = _enlarged_feasible_set(p, theta_star, eps)
    exact_ok = op_model is not None and feas is not None
    if cfg.mode == "exact" and not exact_ok:
        raise ValueError(
            "exact gap requires affine operator and reducible affine "
            "constraints; use mode='sampling'")
    use_exact = exact_ok and cfg.mode != "sampling"

    rng = np.random.default_rng([cfg.seed, STREAM_GAP])
    best_val = -np.inf
    best_y = x.copy()

    if use_exact:
        M, q = op_model
        step = cfg.inner_step
        if step is None:
            curv = float(np.linalg.norm(M + M.T, 2))
            step = 0.9 / curv if curv > 0 else 1.0
        y0 = feas.project(x)
        best_val, best_y, _ = projected_ascent(
            M, q, x, feas, y0, step, cfg.inner_iterations)
        if cfg.lower_bound_samples > 0 and isinstance(feas, (Box,
                                                             BoxHalfspace)):
            if isinstance(feas, Box):
                pts = feas.sample(rng, size=cfg.lower_bound_samples)
            else:
                box = Box(feas.lower, feas.upper)
                pts = box.sample(rng, size=cfg.lower_bound_samples)
                keep = pts @ feas.a <= feas.b + 1e-12
                pts = pts[keep]
            if pts.size:
                vals = np.einsum("ij,ij->i", pts @ M.T + q, x - pts)
                i = int(np.argmax(vals))
                if vals[i] > best_val:
                    best_val = float(vals[i])
                    best_y = pts[i]
    else:
        # sound lower bound only: sample X, keep points inside the
        # enlarged feasible set, take the best objective value
        found = 0
        for _ in range(cfg.lower_bound_samples):
            y = p.set_X.sample(rng)
            if p.J > 0:
                viol = float(np.sum(np.maximum(
                    p.constraints_f(y, theta_star), 0.0)))
                if viol > eps + 1e-12:
                    continue
            found += 1
            val = float(p.operator_F(y, theta_star) @ (x - y))
            if val > best_val:
                best_val = val
                best_y = y
        if found == 0:
            raise ValueError(
                "no feasible samples found for the gap lower bound; "
                "increase lower_bound_samples or eps_enlargement")

    return best_val, best_y


# ---------------------------------------------------------------------------
# Brute-force KKT oracle for tiny box-constrained instances
# ---------------------------------------------------------------------------

_LOW, _INT, _UP = 0, 1, 2


def solve_tiny_kkt(p: ProblemInstance, theta_star,
                   tol: float = 1e-9) -> KKTTriple:
    """Exact KKT triple by active-set enumeration (J = 1, n <= 3, box X).

    Enumerates constraint active/inactive times each coordinate at its lower
    bound, interior, or upper bound; solves the induced linear system; and
    returns the combination passing every sign condition.
    """
    if p.J != 1:
        raise ValueError("oracle requires exactly one constraint")
    if p.n > 3:
        raise ValueError("oracle limited to n <= 3")
    if not isinstance(p.set_X, Box):
        raise ValueError("oracle requires a box primal set")
    theta_star = np.asarray(theta_star, dtype=float)

    op_model = _affine_operator_model(p, theta_star)
    con_model = _affine_constraint_model(p, theta_star)
    if op_model is None or con_model is None:
        raise ValueError("oracle requires affine operator and constraint")
    M, q = op_model
    gvec, c0 = con_model[0][0], float(con_model[1][0])

    lo, up = p.set_X.lower, p.set_X.upper
    near_misses = []
    for active in (False, True):
        for pattern in itertools.product((_LOW, _INT, _UP), repeat=p.n):
            interior = [i for i in range(p.n) if pattern[i] == _INT]
            x = np.where(np.array(pattern) == _UP, up, lo).astype(float)
            n_unk = len(interior) + (1 if active else 0)
            A = np.zeros((n_unk, n_unk))
            rhs = np.zeros(n_unk)
            # stationarity rows for interior coordinates
            for row, i in enumerate(interior):
                for col, jj in enumerate(interior):
                    A[row, col] = M[i, jj]
                if active:
                    A[row, -1] = gvec[i]
                rhs[row] = -q[i] - sum(
                    M[i, jj] * x[jj] for jj in range(p.n)
                    if pattern[jj] != _INT)
            if active:
                for col, jj in enumerate(interior):
                    A[-1, col] = gvec[jj]
                rhs[-1] = -c0 - sum(
                    gvec[jj] * x[jj] for jj in range(p.n)
                    if pattern[jj] != _INT)
            try:
                sol = np.linalg.solve(A, rhs) if n_unk else np.zeros(0)
            except np.linalg.LinAlgError:
                continue
            for col, i in enumerate(interior):
                x[i] = sol[col]
            lam = float(sol[-1]) if active else 0.0

            checks = []
            for i in interior:
                checks.append(lo[i] - tol <= x[i] <= up[i] + tol)
            fval = float(gvec @ x + c0)
            checks.append(lam >= -tol)
            checks.append(fval <= tol)
            if active:
                checks.append(abs(fval) <= max(tol, 1e-7 * (1 + abs(c0))))
            grad = M @ x + q + lam * gvec
            for i in range(p.n):
                if pattern[i] == _LOW:
                    checks.append(grad[i] >= -max(tol, 1e-7))
                elif pattern[i] == _UP:
                    checks.append(grad[i] <= max(tol, 1e-7))
            if all(checks):
                lam_arr = np.array([max(lam, 0.0)])
                return KKTTriple(x_star=np.clip(x, lo, up),
                                 theta_star=theta_star,
                                 lambda_star=lam_arr)
            near_misses.append((pattern, active, x.copy(), lam,
                                sum(not ch for ch in checks)))

    near_misses.sort(key=lambda t: t[4])
    detail = "; ".join(
        f"pattern={t[0]} active={t[1]} x={np.round(t[2], 6)} "
        f"lam={t[3]:.3g} failed={t[4]}" for t in near_misses[:3])
    raise RuntimeError(f"no KKT-consistent active set found; closest: {detail}")
