"""Optimal transport between anchor distributions.

Costs are the law-of-cosines squared distance between anchor points placed
at their depths.  Solvers:

* :func:`exact_emd` - dense linear program, used as an oracle for n <= 64.
* :func:`sinkhorn_gml` - entropic OT in the log domain.
* :func:`sinkhorn_unbalanced_gml` - KL-relaxed marginals, entropic.

Both Sinkhorn solvers anneal epsilon geometrically from the cost scale down
to the target, warm-starting the dual potentials, and finish every stage with
damped Newton steps on the (concave) dual.  Plain Sinkhorn sweeps alone need
tens of thousands of iterations at epsilon=1e-4.

Entropy follows H(T) = -sum T log T, so the optimal plan is
T = exp((f_i + g_j - C_ij) / eps - 1).  Internally the ``-1`` is folded into
the cost (``C + eps``); in the balanced case it only shifts the potentials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from . import _kernels
from .errors import NonConvergenceError, UnsupportedScaleError
from .sphere import AnchorSet

EXACT_MAX_N = 64


@dataclass(frozen=True)
class SinkhornConfig:
    epsilon: float = 1e-4
    max_iterations: int = 10000
    tolerance: float = 1e-9
    kl_weight: float = 1.0
    anneal_factor: float = 4.0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if not self.kl_weight > 0:
            raise ValueError("kl_weight must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if not self.anneal_factor > 1:
            raise ValueError("anneal_factor must exceed 1")


@dataclass(frozen=True, eq=False)
class SinkhornResult:
    value: float  # <C, T>, plus the KL penalties in unbalanced mode
    plan: np.ndarray
    dual_u: np.ndarray
    dual_v: np.ndarray
    converged: bool
    iterations: int
    marginal_error: float
    entropy: float  # H(T) = -sum T log T
    epsilon: float

    @property
    def entropic_objective(self) -> float:
        return self.value - self.epsilon * self.entropy


# -- costs -------------------------------------------------------------------


def law_of_cosines(d_i: float, d_j: float, theta: float) -> float:
    return max(0.0, d_i * d_i + d_j * d_j - 2.0 * d_i * d_j * math.cos(theta))


def _check_cost(c) -> np.ndarray:
    c = np.asarray(c, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ValueError("cost matrix must be square")
    if not np.all(np.isfinite(c)) or np.any(c < 0):
        raise ValueError("cost entries must be finite and nonnegative")
    return c


def geometric_cost(anchors: AnchorSet, depth_u, depth_v) -> np.ndarray:
    """Squared distance between anchor i at depth_u[i] and anchor j at depth_v[j]."""
    du = np.asarray(depth_u, dtype=np.float64)
    dv = np.asarray(depth_v, dtype=np.float64)
    if du.shape != (anchors.n,) or dv.shape != (anchors.n,):
        raise ValueError(f"depth vectors must have length {anchors.n}")
    if np.any(du <= 0) or np.any(dv <= 0) or not (np.all(np.isfinite(du)) and np.all(np.isfinite(dv))):
        raise ValueError("depths must be finite and strictly positive")
    c = du[:, None] ** 2 + dv[None, :] ** 2 - 2.0 * du[:, None] * dv[None, :] * np.cos(anchors.angles)
    return np.maximum(c, 0.0)


def spherical_cost(anchors: AnchorSet) -> np.ndarray:
    """Great-circle distance between anchors (the depth-free baseline cost)."""
    return np.array(anchors.angles)


# -- exact oracle ------------------------------------------------------------


def _check_measure(name: str, a) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 1:
        raise ValueError(f"{name} must be a vector")
    if not np.all(np.isfinite(a)) or np.any(a < 0):
        raise ValueError(f"{name} must be finite and nonnegative")
    return a


def exact_emd(u, v, c) -> tuple[float, np.ndarray]:
    """Exact optimal transport cost and plan via a dense LP (HiGHS)."""
    u = _check_measure("u", u)
    v = _check_measure("v", v)
    c = _check_cost(c)
    n = u.shape[0]
    if v.shape[0] != n or c.shape != (n, n):
        raise ValueError("u, v and cost dimensions disagree")
    if n > EXACT_MAX_N:
        raise UnsupportedScaleError(f"exact_emd supports n <= {EXACT_MAX_N}, got {n}")
    if abs(u.sum() - 1.0) > 1e-9 or abs(v.sum() - 1.0) > 1e-9:
        raise ValueError("exact_emd needs u and v to be distributions summing to 1")
    eye = sparse.identity(n, format="csr")
    ones = sparse.csr_matrix(np.ones((1, n)))
    a_eq = sparse.vstack([sparse.kron(eye, ones), sparse.kron(ones, eye)], format="csr")
    res = linprog(
        c.ravel(),
        A_eq=a_eq,
        b_eq=np.concatenate([u, v]),
        bounds=(0, None),
        method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:  # pragma: no cover - feasible bounded LP
        raise RuntimeError(f"LP solver failed: {res.message}")
    plan = np.maximum(res.x.reshape(n, n), 0.0)
    return float(np.sum(c * plan)), plan


# -- entropic solvers --------------------------------------------------------


def _entropy(plan: np.ndarray) -> float:
    p = plan[plan > 0]
    return float(-np.sum(p * np.log(p)))


def _kl(a: np.ndarray, b: np.ndarray) -> float:
    pos = a > 0
    return float(np.sum(a[pos] * np.log(a[pos] / b[pos])) - a.sum() + b.sum())


class _Dual:
    """Dual objective, gradient and Newton system on the support sub-problem.

    ``rho = inf`` gives the balanced problem, whose potentials are only
    defined up to (f + t, g - t); the last column potential is pinned.
    """

    def __init__(self, u, v, cost, rho):
        self.u, self.v, self.cost, self.rho = u, v, cost, rho
        self.balanced = math.isinf(rho)

    def evaluate(self, f, g, eps):
        plan = _kernels.gibbs(f, g, self.cost, eps)
        mass = eps * plan.sum()
        if self.balanced:
            value = f @ self.u + g @ self.v - mass
        else:
            value = -self.rho * (self.u @ np.expm1(-f / self.rho) + self.v @ np.expm1(-g / self.rho)) - mass
        return value, plan

    def targets(self, f, g):
        if self.balanced:
            return self.u, self.v
        return self.u * np.exp(-f / self.rho), self.v * np.exp(-g / self.rho)

    def error(self, f, g, plan):
        tu, tv = self.targets(f, g)
        return float(max(np.abs(plan.sum(axis=1) - tu).sum(), np.abs(plan.sum(axis=0) - tv).sum()))

    def newton_direction(self, f, g, plan, eps):
        n, m = plan.shape
        r = plan.sum(axis=1)
        c = plan.sum(axis=0)
        tu, tv = self.targets(f, g)
        grad = np.concatenate([tu - r, tv - c])
        hess = np.empty((n + m, n + m))
        hess[:n, :n] = np.diag(r)
        hess[n:, n:] = np.diag(c)
        hess[:n, n:] = plan
        hess[n:, :n] = plan.T
        if not self.balanced:
            hess[np.diag_indices(n + m)] += eps * np.concatenate([tu, tv]) / self.rho
        keep = n + m - 1 if self.balanced else n + m
        h = hess[:keep, :keep]
        h[np.diag_indices(keep)] += 1e-14 * h.diagonal().max()
        try:
            step = np.linalg.solve(h, eps * grad[:keep])
        except np.linalg.LinAlgError:
            return None, 0.0
        d = np.zeros(n + m)
        d[:keep] = step
        return d, float(grad[:keep] @ step)


def _stage(dual: _Dual, f, g, eps, tol, budget, cost_eff, logu, logv):
    """Sweeps then Newton polish at one epsilon; returns (f, g, iterations, error)."""
    kappa = 1.0 if dual.balanced else dual.rho / (dual.rho + eps)
    sweeps = min(10, budget)
    _kernels.sweeps(f, g, logu, logv, cost_eff, eps, dual.rho, sweeps)
    used = sweeps
    value, plan = dual.evaluate(f, g, eps)
    err = dual.error(f, g, plan)
    n = f.shape[0]
    while err > tol and used < budget:
        d, slope = dual.newton_direction(f, g, plan, eps)
        accepted = False
        if d is not None and slope > 0:
            step = 1.0
            while step > 1e-10:
                f2 = f + step * d[:n]
                g2 = g + step * d[n:]
                if dual.balanced:
                    # exact block ascent on g keeps the column marginals satisfied
                    g2 = _kernels.ctransform_cols(f2, logv, cost_eff, eps, kappa)
                value2, plan2 = dual.evaluate(f2, g2, eps)
                flat = step * slope < 1e-15 * max(1.0, abs(value))
                if np.isfinite(value2) and (value2 >= value + 1e-4 * step * slope or flat):
                    accepted = True
                    break
                step *= 0.5
        if accepted:
            f, g, value, plan = f2, g2, value2, plan2
            used += 1
        else:
            _kernels.sweeps(f, g, logu, logv, cost_eff, eps, dual.rho, min(10, budget - used))
            used += min(10, budget - used)
            value, plan = dual.evaluate(f, g, eps)
        err = dual.error(f, g, plan)
    return f, g, used, err


def _solve(u, v, cost, cfg: SinkhornConfig, rho: float):
    rows = np.flatnonzero(u > 0)
    cols = np.flatnonzero(v > 0)
    us, vs = u[rows], v[cols]
    cs = cost[np.ix_(rows, cols)]
    cost_eff = cs if math.isinf(rho) else cs + cfg.epsilon
    logu, logv = np.log(us), np.log(vs)
    dual = _Dual(us, vs, cost_eff, rho)

    f = np.zeros(rows.size)
    g = np.zeros(cols.size)
    eps = max(float(cs.max()) if cs.size else 0.0, cfg.epsilon)
    used = 0
    while True:
        final = eps <= cfg.epsilon * (1 + 1e-12)
        eps = cfg.epsilon if final else eps
        tol = cfg.tolerance if final else max(cfg.tolerance, 1e-5)
        budget = cfg.max_iterations - used if final else min(200, cfg.max_iterations - used)
        if budget <= 0:
            value, plan = dual.evaluate(f, g, eps)
            err = dual.error(f, g, plan)
            final = True
        else:
            f, g, it, err = _stage(dual, f, g, eps, tol, budget, cost_eff, logu, logv)
            used += it
        if final:
            break
        eps = max(eps / cfg.anneal_factor, cfg.epsilon)

    eps = cfg.epsilon
    sub_plan = _kernels.gibbs(f, g, cost_eff, eps)
    plan = np.zeros_like(cost)
    plan[np.ix_(rows, cols)] = sub_plan
    # extend potentials to empty rows/cols by their c-transform (one-sided derivative there)
    dual_u = np.empty(u.shape[0])
    dual_v = np.empty(v.shape[0])
    dual_u[rows] = f
    dual_v[cols] = g
    empty_r = np.setdiff1d(np.arange(u.shape[0]), rows)
    empty_c = np.setdiff1d(np.arange(v.shape[0]), cols)
    if empty_r.size:
        cc = cost[np.ix_(empty_r, cols)] + (0.0 if math.isinf(rho) else eps)
        dual_u[empty_r] = _kernels.ctransform_rows(g, np.zeros(empty_r.size), np.ascontiguousarray(cc), eps, 1.0)
    if empty_c.size:
        cc = cost[np.ix_(rows, empty_c)] + (0.0 if math.isinf(rho) else eps)
        dual_v[empty_c] = _kernels.ctransform_cols(f, np.zeros(empty_c.size), np.ascontiguousarray(cc), eps, 1.0)
    return plan, dual_u, dual_v, used, err


def sinkhorn_gml(u, v, c, cfg: SinkhornConfig | None = None) -> SinkhornResult:
    """Entropic OT between two distributions.

    ``value`` is the transport cost <C, T> of the entropic plan; the entropy
    is reported separately.  Rows/columns with zero mass are dropped.
    """
    cfg = cfg or SinkhornConfig()
    u = _check_measure("u", u)
    v = _check_measure("v", v)
    c = _check_cost(c)
    if u.shape != v.shape or c.shape != (u.shape[0], u.shape[0]):
        raise ValueError("u, v and cost dimensions disagree")
    if abs(u.sum() - 1.0) > 1e-6 or abs(v.sum() - 1.0) > 1e-6:
        raise ValueError("u and v must sum to 1")
    plan, fu, fv, iters, err = _solve(u, v, c, cfg, math.inf)
    return SinkhornResult(
        value=float(np.sum(c * plan)),
        plan=plan,
        dual_u=fu,
        dual_v=fv,
        converged=err <= cfg.tolerance,
        iterations=iters,
        marginal_error=err,
        entropy=_entropy(plan),
        epsilon=cfg.epsilon,
    )


def sinkhorn_unbalanced_gml(u, v, c, cfg: SinkhornConfig | None = None) -> SinkhornResult:
    """Entropic OT with KL-penalised marginals (weight ``cfg.kl_weight`` on each side).

    ``value`` = <C, T> + rho KL(T1 | u) + rho KL(T^T 1 | v); the entropy term is
    excluded and reported separately.  ``marginal_error`` is the larger L1 norm
    of the two dual gradient blocks.
    """
    cfg = cfg or SinkhornConfig()
    u = _check_measure("u", u)
    v = _check_measure("v", v)
    c = _check_cost(c)
    if u.shape != v.shape or c.shape != (u.shape[0], u.shape[0]):
        raise ValueError("u, v and cost dimensions disagree")
    if not (u.sum() > 0 or v.sum() > 0):
        raise ValueError("u and v cannot both be zero")
    rho = cfg.kl_weight
    if u.sum() == 0 or v.sum() == 0:
        # no plan can carry mass; the objective is the KL cost of destroying the other side
        plan = np.zeros_like(c)
        value = rho * (u.sum() + v.sum())
        return SinkhornResult(value, plan, np.zeros_like(u), np.zeros_like(v), True, 0, 0.0, 0.0, cfg.epsilon)
    plan, fu, fv, iters, err = _solve(u, v, c, cfg, rho)
    value = float(np.sum(c * plan)) + rho * _kl(plan.sum(axis=1), u) + rho * _kl(plan.sum(axis=0), v)
    return SinkhornResult(
        value=value,
        plan=plan,
        dual_u=fu,
        dual_v=fv,
        converged=err <= cfg.tolerance,
        iterations=iters,
        marginal_error=err,
        entropy=_entropy(plan),
        epsilon=cfg.epsilon,
    )


def gml_gradient(u, v, c, cfg: SinkhornConfig | None = None) -> np.ndarray:
    """Gradient of the entropic GML with respect to ``u``, projected onto the simplex tangent."""
    res = sinkhorn_gml(u, v, c, cfg)
    if not res.converged:
        raise NonConvergenceError(
            f"Sinkhorn did not converge after {res.iterations} iterations (error {res.marginal_error:.3g})"
        )
    f = res.dual_u
    uu, vv, cc = (np.asarray(x, dtype=np.float64) for x in (u, v, c))
    if np.array_equal(uu, vv) and np.array_equal(cc, cc.T):
        # Near-diagonal plans pin only f_i + g_i in floating point; the exact
        # solution of a symmetric problem has f = g, so split the sum evenly.
        f = 0.5 * (res.dual_u + res.dual_v)
    return f - f.mean()
