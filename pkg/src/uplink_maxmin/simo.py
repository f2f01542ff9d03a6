"""Multi-antenna base stations with MMSE receive beamforming.

For power vector ``p`` base station ``n`` sees the covariance
``M_n(p) = noise_n I + sum_j p_j h_nj h_nj^H``. The MMSE receiver for user
``k`` is the unit vector along ``M_n(p)^{-1} h_nk`` and the smallest power
user ``k`` needs there for unit SINR is

    Tt_k^n(p) = 1 / (h_nk^H Q_nk(p)^{-1} h_nk),
    Q_nk(p)   = M_n(p) - p_k h_nk h_nk^H.

The batched map factors ``M_n`` once per base station and uses
``1 / (h^H Q^{-1} h) = 1 / (h^H M^{-1} h) - p_k``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ._fixed_point import normalized_iteration, qos_iteration
from .model import (
    ConvergenceBound,
    Kind,
    NetworkInstance,
    SolverConfig,
    SolverResult,
    UnreachableUserError,
    _check_association,
    _check_power,
    require_valid,
)
from . import siso as _siso

BRUTE_FORCE_LIMIT = 10 ** 4

# 1/s - p_k keeps at least this fraction of 1/s before we fall back to Q
_CANCELLATION_GUARD = 1e-6


def _require_simo(inst):
    if inst.kind is not Kind.SIMO:
        raise ValueError("expected a SIMO instance")


@dataclass(frozen=True)
class CovarianceContext:
    """``M_n(p)`` for one base station together with its Cholesky factor."""

    matrix: np.ndarray
    factor: tuple

    def solve(self, v) -> np.ndarray:
        return scipy.linalg.cho_solve(self.factor, np.asarray(v, dtype=complex))


def covariance(inst: NetworkInstance, p, n: int) -> CovarianceContext:
    _require_simo(inst)
    p = _check_power(inst, p)
    h = inst.channels[n]
    if not np.all(np.isfinite(h)):
        raise ValueError(f"non-finite channel entries at BS {n}")
    m = inst.noise[n] * np.eye(h.shape[1]) + (h.T * p) @ h.conj()
    m = 0.5 * (m + m.conj().T)
    return CovarianceContext(m, scipy.linalg.cho_factor(m, lower=True))


def mmse_beamformer(inst: NetworkInstance, p, n: int, k: int) -> np.ndarray:
    """Unit-norm receiver ``M_n(p)^{-1} h_nk / ||.||``."""
    h = inst.channels[n][k]
    if not np.any(h):
        raise ValueError(f"user {k} has a zero channel to BS {n}; receiver direction undefined")
    u = covariance(inst, p, n).solve(h)
    return u / np.linalg.norm(u)


def interference_covariance(inst: NetworkInstance, p, n: int, k: int) -> np.ndarray:
    """``Q_nk(p) = noise_n I + sum_{j != k} p_j h_nj h_nj^H``."""
    _require_simo(inst)
    p = _check_power(inst, p).copy()
    p[k] = 0.0
    h = inst.channels[n]
    return inst.noise[n] * np.eye(h.shape[1]) + (h.T * p) @ h.conj()


def ttilde_kn(inst: NetworkInstance, p, k: int, n: int) -> float:
    """Minimum power for unit SINR of user `k` at BS `n`, from ``Q_nk`` directly."""
    h = inst.channels[n][k]
    if not np.any(h):
        return np.inf
    factor = scipy.linalg.cho_factor(interference_covariance(inst, p, n, k), lower=True)
    quad = np.real(h.conj() @ scipy.linalg.cho_solve(factor, h))
    return float(1.0 / quad)


def _forward_substitution(L, b):
    # L: (G, M, M) lower triangular, b: (G, K, M) -> z with L z_k = b_k
    z = np.empty_like(b)
    for m in range(L.shape[-1]):
        acc = b[..., m] - np.einsum("gl,gkl->gk", L[:, m, :m], z[..., :m])
        z[..., m] = acc / L[:, m, m][:, None]
    return z


def ttilde_matrix(inst: NetworkInstance, p) -> np.ndarray:
    """All ``Tt_k^n(p)`` as an (N, K) array, ``inf`` for zero channels."""
    _require_simo(inst)
    p = _check_power(inst, p)
    out = np.full((inst.n_bs, inst.n_users), np.inf)
    for idx, H in inst.antenna_groups:
        eye = np.eye(H.shape[-1])
        cov = np.einsum("gkm,k,gkl->gml", H, p, H.conj()) + inst.noise[idx, None, None] * eye
        L = np.linalg.cholesky(cov)
        quad = np.sum(np.abs(_forward_substitution(L, H)) ** 2, axis=-1)  # h^H M^{-1} h
        live = quad > 0
        inv_quad = np.divide(1.0, quad, out=np.full(quad.shape, np.inf), where=live)
        t = inv_quad - p[None, :]
        shaky = live & (t <= _CANCELLATION_GUARD * inv_quad)
        for g, k in zip(*np.nonzero(shaky)):
            t[g, k] = ttilde_kn(inst, p, int(k), int(idx[g]))
        out[idx] = t
    return out


def ttilde_map(inst: NetworkInstance, p):
    """Return ``(Tt(p), At(p))``; ties go to the lowest BS index."""
    t = ttilde_matrix(inst, p)
    assoc = np.argmin(t, axis=0)
    values = t[assoc, np.arange(inst.n_users)]
    if not np.all(np.isfinite(values)):
        bad = np.flatnonzero(~np.isfinite(values)) + 1
        raise UnreachableUserError(f"users {bad.tolist()} have zero channels to every BS")
    return values, assoc


def fixed_ttilde_map(inst: NetworkInstance, a):
    _require_simo(inst)
    a = _check_association(inst, a)
    users = np.arange(inst.n_users)
    if np.any(inst.channel_gains[a, users] <= 0):
        bad = np.flatnonzero(inst.channel_gains[a, users] <= 0) + 1
        raise UnreachableUserError(f"users {bad.tolist()} have zero channel to their assigned BS")

    def fmap(p):
        return ttilde_matrix(inst, p)[a, users], a

    return fmap


def mmse_beamformers(inst: NetworkInstance, p, a) -> list:
    """MMSE receive vector for every user at its serving BS."""
    a = _check_association(inst, a)
    contexts = {n: covariance(inst, p, n) for n in np.unique(a)}
    out = []
    for k, n in enumerate(a):
        u = contexts[n].solve(inst.channels[n][k])
        out.append(u / np.linalg.norm(u))
    return out


def _result(inst, run) -> SolverResult:
    return SolverResult(
        power=run.power,
        association=run.association,
        gamma_star=run.gamma,
        iterations=run.iterations,
        status=run.status,
        trace=run.trace,
        beamformers=mmse_beamformers(inst, run.power, run.association),
        residual=run.residual,
    )


def nfp_solve_simo(inst: NetworkInstance, cfg: SolverConfig = SolverConfig(), history=None) -> SolverResult:
    """Normalized fixed-point iteration ``p <- Tt(p) / ||Tt(p)||``.

    Receivers are not stored during the iteration; the returned
    `beamformers` are the MMSE vectors at the final power.
    """
    _require_simo(inst)
    require_valid(inst)
    run = normalized_iteration(lambda p: ttilde_map(inst, p), inst.budgets,
                               cfg.initial_power(inst.budgets), cfg, history)
    return _result(inst, run)


def fixed_assoc_nfp_simo(inst: NetworkInstance, a, cfg: SolverConfig = SolverConfig(), history=None) -> SolverResult:
    fmap = fixed_ttilde_map(inst, a)
    run = normalized_iteration(fmap, inst.budgets, cfg.initial_power(inst.budgets), cfg, history)
    return _result(inst, run)


def qos_fp_solve_simo(inst: NetworkInstance, gamma: float, cfg: SolverConfig = SolverConfig(), p0=None):
    """Fixed point of ``p_k <- min(gamma Tt_k(p), budget_k)``.

    Returns ``(q, b, gamma_ach, feasible, iterations, status)``.
    """
    _require_simo(inst)
    require_valid(inst)
    p0 = cfg.initial_power(inst.budgets) if p0 is None else p0
    return qos_iteration(lambda p: ttilde_map(inst, p), gamma, inst.budgets, p0, cfg)


def bsfp_solve_simo(inst: NetworkInstance, cfg: SolverConfig = SolverConfig()) -> SolverResult:
    """Binary search on the target SINR with SIMO fixed-point feasibility tests.

    The default upper bracket ``max ||h_nk||^2 budget_k / noise_n`` follows
    from Cauchy-Schwarz.
    """
    _require_simo(inst)
    require_valid(inst)
    return _siso._bsfp(inst, cfg, lambda g: qos_fp_solve_simo(inst, g, cfg),
                       lambda q: ttilde_map(inst, q),
                       beamformers=lambda q, a: mmse_beamformers(inst, q, a))


def convergence_bound_simo(inst: NetworkInstance) -> ConvergenceBound:
    _require_simo(inst)
    require_valid(inst)
    g = inst.channel_gains
    ratio = np.divide(inst.noise[:, None], g, out=np.full(g.shape, np.inf), where=g > 0)
    lower = ratio.min(axis=0)
    upper, _ = ttilde_map(inst, inst.budgets)
    kappa = float(1.0 - np.min(lower / upper))
    return ConvergenceBound(lower, upper, kappa, _siso._remark_bound(inst))


def brute_force_solve_simo(inst: NetworkInstance, cfg: SolverConfig = SolverConfig()) -> SolverResult:
    _require_simo(inst)
    return _siso.brute_force_solve(inst, cfg, fixed_solver=fixed_assoc_nfp_simo, limit=BRUTE_FORCE_LIMIT)
