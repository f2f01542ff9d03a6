"""Acceptance criteria, one test per criterion.

Each test records a ``PASS``/``FAIL`` line and then asserts; the lines are
printed together at the end of the pytest run. Run just this file with

    python tests/test_acceptance.py
"""

import functools
import statistics
import sys
import time

import numpy as np
import pytest

from uplink_maxmin import (
    LayoutConfig,
    SolverConfig,
    Status,
    brute_force_solve,
    brute_force_solve_simo,
    bsfp_solve,
    bsfp_solve_simo,
    bslp_solve,
    convergence_bound,
    convergence_bound_simo,
    nfp_solve,
    nfp_solve_simo,
    qos_fp_solve,
    qos_fp_solve_simo,
    qos_lp_solve,
    run_sweep,
    sinr_simo,
    sinr_siso,
    weighted_inf_norm,
)
from uplink_maxmin.cli import main as cli_main
from uplink_maxmin.scenario import generate_instance, random_simo_instance, random_siso_instance
from uplink_maxmin.simo import ttilde_matrix
from uplink_maxmin.siso import t_matrix

# oracle comparisons need the fixed point resolved well below the default tolerance
TIGHT = SolverConfig(tol=1e-10, max_iters=10 ** 6)


ACCEPTANCE_LINES = []


def report(number, passed, detail):
    line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def info(number, detail):
    line = f"     criterion {number} note: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def rel(a, b):
    return abs(a - b) / abs(b)


# -- shared suites -------------------------------------------------------

@functools.lru_cache(maxsize=None)
def siso_suite():
    rng = np.random.default_rng(20240601)
    out = []
    start = time.perf_counter()
    for _ in range(200):
        inst = random_siso_instance(rng, int(rng.choice([2, 3, 4])), int(rng.choice([2, 3])),
                                    float(rng.choice([0.0, 10.0, 20.0])))
        out.append((inst, nfp_solve(inst, TIGHT), brute_force_solve(inst, TIGHT)))
    return out, time.perf_counter() - start


@functools.lru_cache(maxsize=None)
def simo_suite():
    rng = np.random.default_rng(20240602)
    out = []
    start = time.perf_counter()
    for _ in range(100):
        inst = random_simo_instance(rng, int(rng.choice([2, 3])), 2, 2, float(rng.choice([0.0, 10.0, 20.0])))
        out.append((inst, nfp_solve_simo(inst, TIGHT), brute_force_solve_simo(inst, TIGHT)))
    return out, time.perf_counter() - start


@functools.lru_cache(maxsize=None)
def hetnet_siso_sweep():
    cfg = LayoutConfig(macro_cells=25, picos_per_cell=3, users=160, snr_db=15)
    return run_sweep(cfg, ["nfp", "bsfp", "oracle"], [15.0], 100, 7)


@functools.lru_cache(maxsize=None)
def hetnet_simo_sweep():
    cfg = LayoutConfig(macro_cells=25, picos_per_cell=3, users=160, snr_db=10, antennas_per_bs=4)
    start = time.perf_counter()
    summary = run_sweep(cfg, ["nfp"], [10.0], 100, 8)
    return summary, time.perf_counter() - start


# -- criteria ---------------------------------------------------------------

def test_criterion_01_siso_oracle_equivalence():
    suite, elapsed = siso_suite()
    worst = max(rel(nfp.gamma_star, bf.gamma_star) for _, nfp, bf in suite)
    ok = worst <= 1e-6 and elapsed < 60
    report(1, ok, f"200 SISO instances, max rel diff {worst:.2e} (<= 1e-6), {elapsed:.1f} s (< 60 s)")
    assert ok


def test_criterion_02_simo_oracle_equivalence():
    suite, elapsed = simo_suite()
    worst = max(rel(nfp.gamma_star, bf.gamma_star) for _, nfp, bf in suite)
    ok = worst <= 1e-5 and elapsed < 120
    report(2, ok, f"100 SIMO instances, max rel diff {worst:.2e} (<= 1e-5), {elapsed:.1f} s (< 120 s)")
    assert ok


def test_criterion_03_cross_algorithm_agreement():
    bound = max(10 * TIGHT.tol, TIGHT.gamma_tol)
    step = 10 * TIGHT.gamma_tol
    worst, inconsistent = 0.0, []
    for i, (inst, nfp, _) in enumerate(siso_suite()[0]):
        g = nfp.gamma_star
        worst = max(worst, rel(bsfp_solve(inst, TIGHT).gamma_star, g), rel(bslp_solve(inst, TIGHT).gamma_star, g))
        fp = [qos_fp_solve(inst, g * (1 + s), TIGHT)[3] for s in (-step, step)]
        lp = [qos_lp_solve(inst, g * (1 + s), TIGHT)[1] for s in (-step, step)]
        if fp != [True, False] or lp != [True, False]:
            inconsistent.append(("siso", i, fp, lp))
    for i, (inst, nfp, _) in enumerate(simo_suite()[0]):
        g = nfp.gamma_star
        worst = max(worst, rel(bsfp_solve_simo(inst, TIGHT).gamma_star, g))
        fp = [qos_fp_solve_simo(inst, g * (1 + s), TIGHT)[3] for s in (-step, step)]
        if fp != [True, False]:
            inconsistent.append(("simo", i, fp))
    ok = worst <= bound and not inconsistent
    report(3, ok, f"max rel diff {worst:.2e} (<= {bound:.0e}); verdicts at gamma*(1 -/+ {step:.0e}) "
                  f"inconsistent on {len(inconsistent)} of 300 instances")
    assert ok, inconsistent[:5]


def test_criterion_04_optimality_conditions():
    checked, worst_balance, worst_full, worst_res = 0, 0.0, 0.0, 0.0
    outputs = [(inst, nfp, sinr_siso(inst, nfp.power, nfp.association)) for inst, nfp, _ in siso_suite()[0]]
    outputs += [(inst, nfp, sinr_simo(inst, nfp.power, nfp.association, nfp.beamformers))
                for inst, nfp, _ in simo_suite()[0]]
    for inst, nfp, s in outputs:
        if nfp.status is not Status.CONVERGED:
            continue
        checked += 1
        worst_balance = max(worst_balance, float((s.max() - s.min()) / s.min()))
        worst_full = max(worst_full, abs(weighted_inf_norm(nfp.power, inst.budgets) - 1.0))
        worst_res = max(worst_res, nfp.residual)
    ok = checked == len(outputs) and worst_balance <= 1e-6 and worst_full <= 1e-12 and worst_res <= 10 * TIGHT.tol
    report(4, ok, f"{checked}/{len(outputs)} converged; SINR spread {worst_balance:.1e} (<= 1e-6), "
                  f"|max p/pbar - 1| {worst_full:.1e}, residual {worst_res:.1e} (<= {10 * TIGHT.tol:.0e})")
    assert ok


def _rate_instances():
    rng = np.random.default_rng(20240605)
    for i in range(50):
        if i % 2 == 0:
            inst = random_siso_instance(rng, int(rng.integers(2, 6)), int(rng.integers(2, 4)),
                                        float(rng.choice([0.0, 10.0, 20.0])))
            yield inst, nfp_solve, convergence_bound(inst).kappa
        else:
            inst = random_simo_instance(rng, int(rng.integers(2, 4)), 2, 2, float(rng.choice([0.0, 10.0])))
            yield inst, nfp_solve_simo, convergence_bound_simo(inst).kappa


@functools.lru_cache(maxsize=None)
def rate_traces():
    """Per instance: kappa, weighted-inf errors and Hilbert distances to p*."""
    out = []
    for inst, solve, kappa in _rate_instances():
        p_star = solve(inst, SolverConfig(tol=1e-14, max_iters=10 ** 6)).power
        hist = []
        solve(inst, SolverConfig(tol=1e-11, max_iters=10 ** 5), history=hist)
        hist = np.array(hist)
        err = np.array([weighted_inf_norm(np.abs(p - p_star), inst.budgets) for p in hist])
        logs = np.log(hist) - np.log(p_star)
        out.append((kappa, err, logs.max(axis=1) - logs.min(axis=1)))
    return out


def _envelope_ratio(kappa, err):
    live = np.flatnonzero(err > ERROR_FLOOR)
    return float(np.max(err[live] / (err[0] * kappa ** live)))


BURN_IN = 10
ERROR_FLOOR = 1e-8  # p* itself is only resolved to about this accuracy


def test_criterion_05_geometric_rate_certificate():
    tracked, violations, worst = 0, 0, 0.0
    for kappa, err, _ in rate_traces():
        for t in range(BURN_IN, len(err) - 1):
            if err[t] <= ERROR_FLOOR:
                break
            tracked += 1
            ratio = err[t + 1] / err[t]
            if ratio > kappa + 1e-9:
                violations += 1
                worst = max(worst, ratio - kappa)
    ok = violations == 0
    report(5, ok, f"per-step error ratio <= kappa + 1e-9 after {BURN_IN} iterations: "
                  f"{violations} of {tracked} tracked steps violate (worst excess {worst:.2f})")
    envelope = max(_envelope_ratio(kappa, err) for kappa, err, _ in rate_traces())
    hilbert = max(max((d[t + 1] / d[t] - kappa for t in range(len(d) - 1) if d[t] > ERROR_FLOOR), default=-1.0)
                  for kappa, _, d in rate_traces())
    info(5, f"envelope err(t) <= err(0) kappa^t: max err(t)/(err(0) kappa^t) = {envelope:.3f}")
    info(5, f"Hilbert projective distance to p* per-step ratio - kappa: max {hilbert:.2e}")
    assert ok


def test_criterion_05_envelope_holds():
    # err(t) <= C kappa^t with C = err(0)
    for kappa, err, _ in rate_traces():
        assert _envelope_ratio(kappa, err) <= 1 + 1e-9


def test_criterion_05_projective_contraction_holds():
    for kappa, _, d in rate_traces():
        for t in range(len(d) - 1):
            if d[t] > ERROR_FLOOR:
                assert d[t + 1] <= (kappa + 1e-9) * d[t]


def _axiom_violations(tmap, inst, rng, probes, roundoff):
    b = inst.budgets
    k = inst.n_users
    bad = {"positivity": 0, "monotonicity": 0, "scalability": 0, "concavity": 0}
    for _ in range(probes):
        p = rng.uniform(0, 1, k) * b * (rng.uniform(size=k) > 0.1)
        lower = p * rng.uniform(0, 1, k)
        r = rng.uniform(0, 1, k) * b
        alpha, lam = rng.uniform(1.0 + 1e-3, 10.0), rng.uniform()
        tp = tmap(inst, p)
        finite = np.isfinite(tp)
        bad["positivity"] += int(np.any(tp[finite] <= 0))
        tl = tmap(inst, lower)
        bad["monotonicity"] += int(np.any(tp[finite] < tl[finite] * (1 - roundoff)))
        bad["scalability"] += int(np.any(alpha * tp[finite] <= tmap(inst, alpha * p)[finite]))
        mix = tmap(inst, lam * p + (1 - lam) * r)
        chord = lam * tp + (1 - lam) * tmap(inst, r)
        bad["concavity"] += int(np.any(mix[finite] < chord[finite] * (1 - roundoff)))
        # the min over BSs inherits every property
        tmin = tp.min(axis=0)
        bad["concavity"] += int(np.any(mix.min(axis=0) < (lam * tmin + (1 - lam) * tmap(inst, r).min(axis=0))
                                       * (1 - roundoff)))
    return bad


def test_criterion_06_interference_axioms():
    rng = np.random.default_rng(20240606)
    totals = {}
    for i in range(20):
        siso = random_siso_instance(rng, int(rng.integers(2, 7)), int(rng.integers(2, 5)), float(rng.choice([0, 10, 20])))
        simo = random_simo_instance(rng, int(rng.integers(2, 6)), int(rng.integers(2, 4)), int(rng.integers(2, 5)),
                                    float(rng.choice([0, 10, 20])))
        # relative roundoff of each map: SISO sums a few terms, SIMO subtracts p_k from 1/s
        for name, tmap, inst, roundoff in (("siso", t_matrix, siso, 1e-12), ("simo", ttilde_matrix, simo, 1e-9)):
            for axiom, n in _axiom_violations(tmap, inst, rng, 1000, roundoff).items():
                totals[(name, axiom)] = totals.get((name, axiom), 0) + n
    ok = sum(totals.values()) == 0
    detail = ", ".join(f"{a}/{ax}={n}" for (a, ax), n in sorted(totals.items()))
    report(6, ok, f"1000 probes x 20 instances for SISO and SIMO maps, violations: {detail}")
    assert ok


def test_criterion_07_full_scale_iterations():
    siso = hetnet_siso_sweep()
    its = {a: [r.iterations for r in siso.records if r.algorithm == a and r.status == "converged"]
           for a in ("nfp", "bsfp", "oracle")}
    by_trial = {}
    for r in siso.records:
        by_trial.setdefault(r.trial, {})[r.algorithm] = r.iterations
    more = sum(v["bsfp"] > v["nfp"] for v in by_trial.values()) / len(by_trial)
    med = statistics.median(its["nfp"])
    simo, simo_time = hetnet_simo_sweep()
    simo_its = [r.iterations for r in simo.records if r.status == "converged"]
    simo_med = statistics.median(simo_its)
    ok = (len(its["nfp"]) == 100 and 5 <= med <= 50 and more >= 0.9
          and len(simo_its) == 100 and 10 <= simo_med <= 80)
    report(7, ok, f"SISO N=100 K=160 15 dB: median NFP iterations {med:g} (in [5, 50]), "
                  f"BS-FP > NFP in {more:.0%} of trials (>= 90%); "
                  f"SIMO M=4 10 dB, 100 trials full size: median NFP iterations {simo_med:g} (in [10, 80])")
    info(7, f"SISO NFP iterations range {min(its['nfp'])}..{max(its['nfp'])}, "
            f"oracle median {statistics.median(its['oracle']):g}, BS-FP median {statistics.median(its['bsfp']):g}; "
            f"SIMO sweep took {simo_time:.0f} s")
    assert ok


def _fairness_ratio(placement, trials=200):
    cfg = LayoutConfig(snr_db=35, placement=placement)
    s = run_sweep(cfg, ["nfp", "max-snr"], [35.0], trials, 35)
    pairs = {}
    for r in s.records:
        pairs.setdefault(r.trial, {})[r.algorithm] = r.gamma_star_linear
    ratios = [v["nfp"] / v["max-snr"] for v in pairs.values()]
    return float(np.mean(ratios)), float(min(ratios)), len(ratios), len(s.failures)


def test_criterion_08_fairness_gain():
    congested, c_min, n_c, f_c = _fairness_ratio("congested")
    uniform, u_min, n_u, f_u = _fairness_ratio("uniform")
    ok = congested >= 2.0 and uniform >= 1.2 and n_c >= 100 and n_u >= 100 and f_c == f_u == 0
    report(8, ok, f"35 dB, {n_c} trials each: mean NFP/max-SNR ratio congested {congested:.2f} (>= 2.0), "
                  f"uniform {uniform:.2f} (>= 1.2)")
    info(8, f"smallest per-trial ratio congested {c_min:.4f}, uniform {u_min:.4f}")
    assert ok


def test_criterion_09_solve_time_ordering():
    cfg = LayoutConfig(macro_cells=10, picos_per_cell=3, users=80)
    times = {"nfp": [], "bsfp": [], "bslp": []}
    for snr in (0.0, 10.0, 20.0, 30.0):
        for seed in range(2):
            inst = generate_instance(cfg.replace(snr_db=snr), 900 + seed)
            for name, solve in (("nfp", nfp_solve), ("bsfp", bsfp_solve), ("bslp", bslp_solve)):
                start = time.perf_counter()
                solve(inst)
                times[name].append(time.perf_counter() - start)
    mean = {k: float(np.mean(v)) for k, v in times.items()}
    ok = mean["nfp"] < mean["bsfp"] < mean["bslp"]
    report(9, ok, f"N=40 K=80, 8 trials at 0-30 dB: mean solve time NFP {mean['nfp'] * 1e3:.1f} ms < "
                  f"BS-FP {mean['bsfp'] * 1e3:.1f} ms < BS-LP {mean['bslp'] * 1e3:.0f} ms")
    assert ok


def test_criterion_10_deterministic_sweep(tmp_path):
    cfg = tmp_path / "layout.json"
    cfg.write_text('{"macro_cells": 7, "picos_per_cell": 3, "users": 40, "placement": "congested"}')
    blobs = []
    for name in ("first.csv", "second.csv"):
        out = tmp_path / name
        code = cli_main(["sweep", "--config", str(cfg), "--algorithms", "nfp,bsfp,bslp,oracle,max-snr",
                         "--snr", "0,10,20", "--trials", "3", "--seed", "12345", "--format", "csv", "--out", str(out)])
        assert code == 0
        blobs.append(out.read_bytes())
    ok = blobs[0] == blobs[1]
    report(10, ok, f"two CLI sweeps with seed 12345 produce byte-identical CSV ({len(blobs[0])} bytes)")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
