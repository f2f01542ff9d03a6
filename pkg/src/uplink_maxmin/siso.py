"""Single-antenna uplink: interference maps and globally optimal solvers.

``T_k^(n)(p) = (noise_n + sum_{j != k} g[n, j] p_j) / g[n, k]`` is the power
user ``k`` needs for unit SINR at base station ``n``. Its minimum over
``n`` gives ``T_k`` and the best BS ``A_k``. A blocked link (``g[n, k] = 0``)
is treated as an infinite requirement and never selected.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from . import lp as _lp
from ._fixed_point import bisection, normalized_iteration, qos_iteration
from .model import (
    ConvergenceBound,
    Kind,
    NetworkInstance,
    SolverConfig,
    SolverError,
    SolverResult,
    Status,
    UnreachableUserError,
    _check_association,
    _check_power,
    require_valid,
)

BRUTE_FORCE_LIMIT = 10 ** 5


def _require_siso(inst):
    if inst.kind is not Kind.SISO:
        raise ValueError("expected a SISO instance")


def _numerators(inst, p):
    # noise_n + sum_{j != k} g[n, j] p_j, shape (N, K)
    g = inst.gains
    return inst.noise[:, None] + (g @ p)[:, None] - g * p[None, :]


def t_matrix(inst: NetworkInstance, p) -> np.ndarray:
    """All ``T_k^(n)(p)`` as an (N, K) array, ``inf`` on blocked links."""
    _require_siso(inst)
    p = _check_power(inst, p)
    g = inst.gains
    return np.divide(_numerators(inst, p), g, out=np.full(g.shape, np.inf), where=g > 0)


def t_kn(inst: NetworkInstance, p, k: int, n: int) -> float:
    """Power user `k` needs for unit SINR at BS `n` (0-based), or ``inf``."""
    _require_siso(inst)
    p = _check_power(inst, p)
    g = inst.gains
    if g[n, k] <= 0:
        return math.inf
    return float((inst.noise[n] + g[n] @ p - g[n, k] * p[k]) / g[n, k])


def t_map(inst: NetworkInstance, p):
    """Return ``(T(p), A(p))``; ties go to the lowest BS index."""
    t = t_matrix(inst, p)
    assoc = np.argmin(t, axis=0)
    values = t[assoc, np.arange(inst.n_users)]
    if not np.all(np.isfinite(values)):
        bad = np.flatnonzero(~np.isfinite(values)) + 1
        raise UnreachableUserError(f"users {bad.tolist()} have no link to any BS")
    return values, assoc


def fixed_t_map(inst: NetworkInstance, a):
    """Return the map ``p -> (T^a(p), a)`` for a fixed association."""
    _require_siso(inst)
    a = _check_association(inst, a)
    users = np.arange(inst.n_users)
    own = inst.gains[a, users]
    if np.any(own <= 0):
        bad = np.flatnonzero(own <= 0) + 1
        raise UnreachableUserError(f"users {bad.tolist()} have zero gain to their assigned BS")
    g_a = inst.gains[a]
    noise_a = inst.noise[a]

    def fmap(p):
        return (noise_a + g_a @ p - own * p) / own, a

    return fmap


def _result(run, extra_bf=None) -> SolverResult:
    return SolverResult(
        power=run.power,
        association=run.association,
        gamma_star=run.gamma,
        iterations=run.iterations,
        status=run.status,
        trace=run.trace,
        beamformers=extra_bf,
        residual=run.residual,
    )


def nfp_solve(inst: NetworkInstance, cfg: SolverConfig = SolverConfig(), history=None) -> SolverResult:
    """Normalized fixed-point iteration for joint association and power control.

    Iterates ``p <- T(p) / ||T(p)||`` where ``||x|| = max_k x_k / budget_k``.
    The limit is the max-min optimal power vector; every user then has
    SINR ``1 / ||T(p*)||`` and at least one user transmits at full budget.
    """
    _require_siso(inst)
    require_valid(inst)
    run = normalized_iteration(lambda p: t_map(inst, p), inst.budgets,
                               cfg.initial_power(inst.budgets), cfg, history)
    return _result(run)


def fixed_assoc_nfp(inst: NetworkInstance, a, cfg: SolverConfig = SolverConfig(), history=None) -> SolverResult:
    """Max-min power control for a fixed association `a` (0-based)."""
    fmap = fixed_t_map(inst, a)
    run = normalized_iteration(fmap, inst.budgets, cfg.initial_power(inst.budgets), cfg, history)
    return _result(run)


def qos_fp_solve(inst: NetworkInstance, gamma: float, cfg: SolverConfig = SolverConfig(), p0=None):
    """Minimum-power search for common target SINR `gamma`.

    Returns ``(q, b, gamma_ach, feasible, iterations, status)`` where `q`
    is the fixed point of ``p_k <- min(gamma T_k(p), budget_k)`` and ``b =
    A(q)``. The target is feasible iff ``gamma_ach >= gamma (1 - feas_tol)``.
    """
    _require_siso(inst)
    require_valid(inst)
    p0 = cfg.initial_power(inst.budgets) if p0 is None else p0
    return qos_iteration(lambda p: t_map(inst, p), gamma, inst.budgets, p0, cfg)


def single_user_bound(inst: NetworkInstance) -> float:
    """``max_{k,n} g[n, k] budget_k / noise_n``, an upper bound on the optimum."""
    return float(np.max(inst.channel_gains * inst.budgets[None, :] / inst.noise[:, None]))


def _bracket(inst, cfg):
    lo = 0.0 if cfg.gamma_lo is None else cfg.gamma_lo
    if cfg.gamma_hi is None:
        return lo, single_user_bound(inst), True
    return lo, cfg.gamma_hi, False


def bsfp_solve(inst: NetworkInstance, cfg: SolverConfig = SolverConfig()) -> SolverResult:
    """Binary search on the target SINR with fixed-point feasibility tests."""
    _require_siso(inst)
    require_valid(inst)
    return _bsfp(inst, cfg, lambda g: qos_fp_solve(inst, g, cfg), lambda q: t_map(inst, q))


def _bsfp(inst, cfg, qos, fmap, beamformers=None):
    status = {"worst": Status.CONVERGED}

    def probe(gamma):
        q, b, _, feasible, it, st = qos(gamma)
        if st is not Status.CONVERGED:
            status["worst"] = st
        return feasible, q, it

    lo, hi, hi_bound = _bracket(inst, cfg)
    gamma, q, total, probes = bisection(probe, lo, hi, cfg.gamma_tol, hi_bound)
    if gamma == 0.0:
        raise SolverError("binary search found no positive feasible SINR")
    t, assoc = fmap(q)
    bf = beamformers(q, assoc) if beamformers else None
    return SolverResult(power=q, association=assoc, gamma_star=gamma, iterations=total,
                        status=status["worst"], beamformers=bf, probes=probes,
                        residual=float(np.max(np.abs(q - np.minimum(gamma * t, inst.budgets)) / inst.budgets)))


def qos_lp(inst: NetworkInstance, gamma: float) -> _lp.LinearProgram:
    """LP relaxation of the SISO power-minimization problem at target `gamma`.

    ``max sum(p)`` subject to ``0 <= p <= budgets`` and, for every link with
    ``g[n, k] > 0``, ``p_k <= gamma (noise_n + sum_{j != k} g[n, j] p_j) /
    g[n, k]``. Rows whose constant term alone already exceeds the budget
    can never bind and are dropped.
    """
    _require_siso(inst)
    g = inst.gains
    rows, rhs = [], []
    for n, k in zip(*np.nonzero(g > 0)):
        const = gamma * inst.noise[n] / g[n, k]
        if const >= inst.budgets[k]:
            continue
        row = -gamma * g[n] / g[n, k]
        row[k] = 1.0
        rows.append(row)
        rhs.append(const)
    A = np.array(rows).reshape(-1, inst.n_users)
    return _lp.LinearProgram.build(np.ones(inst.n_users), A, np.array(rhs), 0.0, inst.budgets)


def lp_equality_test(inst: NetworkInstance, p, gamma: float, feas_tol: float) -> bool:
    """True iff ``p_k = gamma T_k(p)`` for every user, within `feas_tol` relative."""
    t, _ = t_map(inst, p)
    target = gamma * t
    return bool(np.all(np.abs(p - target) <= feas_tol * target))


def qos_lp_solve(inst: NetworkInstance, gamma: float, cfg: SolverConfig = SolverConfig()):
    """Solve the LP at `gamma` and apply the equality test.

    Returns ``(p, feasible, pivots)``.
    """
    res = _lp.solve_lp(qos_lp(inst, gamma), tol=cfg.lp_tol)
    if not res.optimal:
        raise SolverError(f"LP failed at gamma={gamma!r}: {res.status.value} {res.message}".strip())
    return res.x, lp_equality_test(inst, res.x, gamma, cfg.feas_tol), res.pivots


def bslp_solve(inst: NetworkInstance, cfg: SolverConfig = SolverConfig()) -> SolverResult:
    """Binary search on the target SINR with LP feasibility tests.

    `iterations` counts simplex pivots summed across all probes.
    """
    _require_siso(inst)
    require_valid(inst)

    def probe(gamma):
        p, feasible, pivots = qos_lp_solve(inst, gamma, cfg)
        return feasible, p, max(pivots, 1)

    lo, hi, hi_bound = _bracket(inst, cfg)
    gamma, p, total, probes = bisection(probe, lo, hi, cfg.gamma_tol, hi_bound)
    t, assoc = t_map(inst, p)
    return SolverResult(power=p, association=assoc, gamma_star=gamma, iterations=total,
                        status=Status.CONVERGED, probes=probes,
                        residual=float(np.max(np.abs(p - gamma * t) / inst.budgets)))


def convergence_bound(inst: NetworkInstance) -> ConvergenceBound:
    """Bounds ``A_k <= T_k(p) <= B_k`` on the normalized set and the rate they certify."""
    _require_siso(inst)
    require_valid(inst)
    g = inst.gains
    ratio = np.divide(inst.noise[:, None], g, out=np.full(g.shape, np.inf), where=g > 0)
    lower = ratio.min(axis=0)
    upper, _ = t_map(inst, inst.budgets)
    kappa = float(1.0 - np.min(lower / upper))
    return ConvergenceBound(lower, upper, kappa, _remark_bound(inst))


def _remark_bound(inst):
    normalized = inst.channel_gains / inst.noise[:, None]
    kgs = inst.n_users * float(normalized.max()) * float(inst.budgets.max())
    return 1.0 - 1.0 / (kgs + 1.0)


def brute_force_solve(inst: NetworkInstance, cfg: SolverConfig = SolverConfig(),
                      fixed_solver=None, limit: int = BRUTE_FORCE_LIMIT) -> SolverResult:
    """Enumerate every association and keep the best fixed-association optimum.

    Associations that use a blocked link are skipped. `iterations` is the
    total across all enumerated associations.
    """
    require_valid(inst)
    n, k = inst.n_bs, inst.n_users
    if n ** k > limit:
        raise SolverError(f"{n}^{k} associations exceed the enumeration limit {limit}")
    if fixed_solver is None:
        _require_siso(inst)
        fixed_solver = fixed_assoc_nfp
    usable = [np.flatnonzero(inst.channel_gains[:, u] > 0) for u in range(k)]
    best = None
    total = 0
    for combo in itertools.product(*usable):
        res = fixed_solver(inst, np.array(combo), cfg)
        total += res.iterations
        if best is None or res.gamma_star > best.gamma_star:
            best = res
    best.iterations = total
    return best
