"""Iteration loops shared by the SISO and SIMO solvers.

Each loop takes an interference map ``F(p) -> (T, assoc)`` returning the
per-user minimum power for unit SINR and the minimizing base station.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import SolverConfig, SolverError, Status, weighted_inf_norm


@dataclass
class NormalizedRun:
    power: np.ndarray
    t_values: np.ndarray  # map evaluated at `power`
    association: np.ndarray
    iterations: int
    status: Status
    trace: list
    gamma: float  # 1 / ||T(power)||
    residual: float  # ||power - T(power)/||T(power)|| ||


def normalized_iteration(fmap, budgets, p0, cfg: SolverConfig, history=None):
    """Iterate ``p <- F(p) / ||F(p)||`` until the step falls below the threshold.

    When `history` is a list, every iterate (starting with `p0`) is
    appended to it.
    """
    eps = cfg.stop_threshold(budgets)
    inv_budgets = 1.0 / np.asarray(budgets, dtype=float)
    p = np.array(p0, dtype=float)
    t, assoc = fmap(p)
    if history is not None:
        history.append(p.copy())
    trace = []
    status = Status.MAX_ITERATIONS
    it = 0
    while it < cfg.max_iters:
        p_new = t * (1.0 / (t * inv_budgets).max())
        step = p_new - p
        it += 1
        trace.append(float((np.abs(step) * inv_budgets).max()))
        p = p_new
        t, assoc = fmap(p)
        if history is not None:
            history.append(p.copy())
        if math.sqrt(step @ step) <= eps:
            status = Status.CONVERGED
            break
    norm_t = weighted_inf_norm(t, budgets)
    residual = weighted_inf_norm(np.abs(p - t / norm_t), budgets)
    return NormalizedRun(p, t, assoc, it, status, trace, 1.0 / norm_t, residual)


def qos_iteration(fmap, gamma, budgets, p0, cfg: SolverConfig):
    """Iterate ``p_k <- min(gamma T_k(p), budget_k)`` to its fixed point.

    Returns ``(q, assoc(q), gamma_ach, feasible, iterations, status)``.
    """
    if gamma <= 0:
        raise ValueError("target SINR must be positive")
    eps = cfg.stop_threshold(budgets)
    q = np.array(p0, dtype=float)
    t, assoc = fmap(q)
    status = Status.MAX_ITERATIONS
    it = 0
    while it < cfg.max_iters:
        q_new = np.minimum(gamma * t, budgets)
        step = np.linalg.norm(q_new - q)
        q = q_new
        it += 1
        t, assoc = fmap(q)
        if step <= eps:
            status = Status.CONVERGED
            break
    gamma_ach = float(np.min(q / t))
    feasible = gamma_ach >= gamma * (1.0 - cfg.feas_tol)
    return q, assoc, gamma_ach, feasible, it, status


_MAX_PROBES = 2000


def bisection(probe, lo, hi, gamma_tol, hi_is_upper_bound):
    """Binary search for the largest feasible target SINR in ``[lo, hi]``.

    `probe(gamma)` returns ``(feasible, payload, cost)``. The search stops
    once ``hi - lo <= gamma_tol * lo``, so the returned value is within
    `gamma_tol` relative of the optimum. Returns ``(gamma, payload, cost,
    probes)`` for the largest feasible probe. If `hi` itself is feasible it
    is returned only when `hi_is_upper_bound` says it cannot be exceeded.
    """
    total = 0
    probes = 0
    ok, payload, cost = probe(hi)
    total += cost
    probes += 1
    if ok:
        if not hi_is_upper_bound:
            raise SolverError(f"upper bracket gamma_hi={hi:g} is feasible; optimum lies above it")
        return hi, payload, total, probes
    best = None
    if lo > 0:
        ok, best, cost = probe(lo)
        total += cost
        probes += 1
        if not ok:
            raise SolverError(f"lower bracket gamma_lo={lo:g} is infeasible; optimum lies below it")
    while (lo <= 0 or hi - lo > gamma_tol * lo) and probes < _MAX_PROBES:
        mid = 0.5 * (lo + hi)
        ok, pl, cost = probe(mid)
        total += cost
        probes += 1
        if ok:
            lo, best = mid, pl
        else:
            hi = mid
    if best is None:
        raise SolverError("no feasible target SINR found above zero")
    return lo, best, total, probes
