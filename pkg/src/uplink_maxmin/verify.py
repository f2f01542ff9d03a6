"""Quick self-checks run by ``uplink-maxmin verify``.

Each check draws small random instances, compares solvers against each
other or against exhaustive search, and checks the optimality conditions
of the normalized fixed point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import simo, siso
from .model import SolverConfig, Status, sinr_simo, sinr_siso, weighted_inf_norm
from .scenario import random_simo_instance, random_siso_instance

TIGHT = SolverConfig(tol=1e-10, max_iters=10 ** 6)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def _siso_instances(trials, seed):
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        yield random_siso_instance(rng, int(rng.integers(2, 5)), int(rng.integers(2, 4)),
                                   float(rng.choice([0.0, 10.0, 20.0])))


def _simo_instances(trials, seed):
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        yield random_simo_instance(rng, int(rng.integers(2, 4)), 2, 2, float(rng.choice([0.0, 10.0])))


def _optimality_gap(inst, res, sinr):
    s = sinr(res)
    balance = float(np.ptp(s) / s.max())
    full = abs(weighted_inf_norm(res.power, inst.budgets) - 1.0)
    return max(balance, full)


def check_siso(trials: int = 20, seed: int = 0) -> list:
    worst_bf = worst_alg = worst_opt = 0.0
    for inst in _siso_instances(trials, seed):
        nfp = siso.nfp_solve(inst, TIGHT)
        bf = siso.brute_force_solve(inst, TIGHT)
        worst_bf = max(worst_bf, _rel(nfp.gamma_star, bf.gamma_star))
        for other in (siso.bsfp_solve(inst, TIGHT), siso.bslp_solve(inst, TIGHT)):
            worst_alg = max(worst_alg, _rel(other.gamma_star, nfp.gamma_star))
        if nfp.status is Status.CONVERGED:
            worst_opt = max(worst_opt, _optimality_gap(
                inst, nfp, lambda r: sinr_siso(inst, r.power, r.association)))
    return [
        CheckResult("siso nfp vs exhaustive search", worst_bf <= 1e-6, f"max rel diff {worst_bf:.2e}"),
        CheckResult("siso bsfp/bslp vs nfp", worst_alg <= 1e-5, f"max rel diff {worst_alg:.2e}"),
        CheckResult("siso optimality conditions", worst_opt <= 1e-6, f"max violation {worst_opt:.2e}"),
    ]


def check_simo(trials: int = 10, seed: int = 1) -> list:
    worst_bf = worst_alg = worst_opt = 0.0
    for inst in _simo_instances(trials, seed):
        nfp = simo.nfp_solve_simo(inst, TIGHT)
        bf = simo.brute_force_solve_simo(inst, TIGHT)
        worst_bf = max(worst_bf, _rel(nfp.gamma_star, bf.gamma_star))
        worst_alg = max(worst_alg, _rel(simo.bsfp_solve_simo(inst, TIGHT).gamma_star, nfp.gamma_star))
        if nfp.status is Status.CONVERGED:
            worst_opt = max(worst_opt, _optimality_gap(
                inst, nfp, lambda r: sinr_simo(inst, r.power, r.association, r.beamformers)))
    return [
        CheckResult("simo nfp vs exhaustive search", worst_bf <= 1e-5, f"max rel diff {worst_bf:.2e}"),
        CheckResult("simo bsfp vs nfp", worst_alg <= 1e-5, f"max rel diff {worst_alg:.2e}"),
        CheckResult("simo optimality conditions", worst_opt <= 1e-6, f"max violation {worst_opt:.2e}"),
    ]


def run_suite(suite: str, trials=None) -> list:
    if suite not in ("siso", "simo", "all"):
        raise ValueError(f"unknown suite {suite!r}")
    out = []
    if suite in ("siso", "all"):
        out += check_siso(trials or 20)
    if suite in ("simo", "all"):
        out += check_simo(trials or 10)
    return out
