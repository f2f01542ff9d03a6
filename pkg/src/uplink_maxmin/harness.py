"""Monte Carlo trials, sweeps over SNR and result emission."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import simo, siso
from .model import Kind, NetworkInstance, SolverConfig, SolverResult, UnreachableUserError, require_valid
from .scenario import LayoutConfig, generate_instance

ALGORITHMS = ("nfp", "bsfp", "bslp", "oracle", "max-snr", "brute-force")
CSV_FIELDS = ("trial", "seed", "algorithm", "snr_db", "gamma_star_linear",
              "gamma_star_db", "iterations", "status")


@dataclass
class TrialRecord:
    trial: int
    seed: int
    algorithm: str
    snr_db: float
    gamma_star_linear: float
    gamma_star_db: float
    iterations: int
    status: str
    elapsed_s: float = 0.0
    error: str = ""


@dataclass
class SweepSummary:
    records: list
    stats: dict = field(default_factory=dict)  # (algorithm, snr_db) -> dict
    failures: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "records": [asdict(r) for r in self.records],
            "stats": [{"algorithm": a, "snr_db": s, **v} for (a, s), v in self.stats.items()],
            "failures": [asdict(r) for r in self.failures],
        }


def max_snr_association(inst: NetworkInstance) -> np.ndarray:
    """Each user picks the BS with the largest received SNR at full power."""
    require_valid(inst)
    snr = inst.channel_gains * inst.budgets[None, :] / inst.noise[:, None]
    if np.any(np.all(snr <= 0, axis=0)):
        raise UnreachableUserError("a user has no usable link")
    return np.argmax(snr, axis=0)


def solve(inst: NetworkInstance, algorithm: str, cfg: SolverConfig = SolverConfig(),
          nfp_result: Optional[SolverResult] = None) -> SolverResult:
    """Run one named algorithm on `inst`.

    ``oracle`` re-solves with the association found by NFP fixed; pass
    `nfp_result` to reuse an existing NFP solve.
    """
    is_siso = inst.kind is Kind.SISO
    if algorithm == "nfp":
        return siso.nfp_solve(inst, cfg) if is_siso else simo.nfp_solve_simo(inst, cfg)
    if algorithm == "bsfp":
        return siso.bsfp_solve(inst, cfg) if is_siso else simo.bsfp_solve_simo(inst, cfg)
    if algorithm == "bslp":
        if not is_siso:
            raise ValueError("bslp is only defined for SISO instances")
        return siso.bslp_solve(inst, cfg)
    if algorithm == "brute-force":
        return siso.brute_force_solve(inst, cfg) if is_siso else simo.brute_force_solve_simo(inst, cfg)
    fixed = siso.fixed_assoc_nfp if is_siso else simo.fixed_assoc_nfp_simo
    if algorithm == "oracle":
        ref = nfp_result if nfp_result is not None else solve(inst, "nfp", cfg)
        return fixed(inst, ref.association, cfg)
    if algorithm == "max-snr":
        return fixed(inst, max_snr_association(inst), cfg)
    raise ValueError(f"unknown algorithm {algorithm!r}; choose from {', '.join(ALGORITHMS)}")


def _db(x: float) -> float:
    return 10.0 * math.log10(x) if x > 0 else -math.inf


def run_trial(cfg: LayoutConfig, algorithms: Sequence[str], trial_seed: int, trial: int = 0,
              solver_cfg: SolverConfig = SolverConfig()) -> list:
    """Generate one scenario from `trial_seed` and run every algorithm on it.

    A failing algorithm yields a record with status ``"error"``; the
    remaining algorithms still run.
    """
    for a in algorithms:
        if a not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {a!r}")
    if "bslp" in algorithms and cfg.antennas_per_bs != 1:
        raise ValueError("bslp is restricted to SISO scenarios")
    inst = generate_instance(cfg, trial_seed)
    records = []
    nfp_result = None
    for name in algorithms:
        start = time.perf_counter()
        try:
            res = solve(inst, name, solver_cfg, nfp_result)
        except Exception as exc:  # recorded, trial continues
            records.append(TrialRecord(trial, int(trial_seed), name, float(cfg.snr_db), math.nan,
                                       math.nan, 0, "error", time.perf_counter() - start,
                                       f"{type(exc).__name__}: {exc}"))
            continue
        elapsed = time.perf_counter() - start
        if name == "nfp":
            nfp_result = res
        records.append(TrialRecord(trial, int(trial_seed), name, float(cfg.snr_db),
                                   float(res.gamma_star), _db(res.gamma_star),
                                   int(res.iterations), res.status.value, elapsed))
    return records


def trial_seed(base_seed: int, trial: int) -> int:
    """64-bit seed of Monte Carlo run `trial`; equal across SNR points."""
    ss = np.random.SeedSequence(int(base_seed), spawn_key=(int(trial),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _task(args):
    cfg, algorithms, seed, trial, solver_cfg = args
    return run_trial(cfg, algorithms, seed, trial, solver_cfg)


def summarize(records: Sequence[TrialRecord]) -> SweepSummary:
    ok = [r for r in records if r.status != "error"]
    failures = [r for r in records if r.status == "error"]
    stats = {}
    for key in sorted({(r.algorithm, r.snr_db) for r in ok}):
        group = [r for r in ok if (r.algorithm, r.snr_db) == key]
        gam = np.array([r.gamma_star_linear for r in group])
        its = sorted(r.iterations for r in group)
        stats[key] = {
            "trials": len(group),
            "mean_gamma_star": float(gam.mean()),
            "median_gamma_star": float(np.median(gam)),
            "mean_gamma_star_db": _db(float(gam.mean())),
            "iterations_sorted": its,
            "median_iterations": float(np.median(its)),
            "mean_elapsed_s": float(np.mean([r.elapsed_s for r in group])),
        }
    return SweepSummary(list(records), stats, failures)


def run_sweep(cfg: LayoutConfig, algorithms: Sequence[str], snr_list_db: Sequence[float], trials: int,
              base_seed: int, solver_cfg: SolverConfig = SolverConfig(), workers: int = 1) -> SweepSummary:
    """Run `trials` scenarios at every SNR point.

    Trial ids run ``snr_index * trials + t``; run ``t`` uses the same seed,
    hence the same geometry and channels, at every SNR.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    tasks = []
    for i, snr in enumerate(snr_list_db):
        c = cfg.replace(snr_db=float(snr))
        for t in range(trials):
            tasks.append((c, tuple(algorithms), trial_seed(base_seed, t), i * trials + t, solver_cfg))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_task, tasks))
    else:
        chunks = [_task(t) for t in tasks]
    order = {a: j for j, a in enumerate(algorithms)}
    records = sorted((r for chunk in chunks for r in chunk), key=lambda r: (r.trial, order[r.algorithm]))
    return summarize(records)


def records_to_csv(records: Sequence[TrialRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for r in records:
        writer.writerow([r.trial, r.seed, r.algorithm, repr(r.snr_db), repr(r.gamma_star_linear),
                         repr(r.gamma_star_db), r.iterations, r.status])
    return buf.getvalue()


def emit(data, fmt: str, path) -> Path:
    """Write records (or a SweepSummary) as ``csv`` or ``json`` to `path`."""
    path = Path(path)
    records = data.records if isinstance(data, SweepSummary) else list(data)
    if fmt == "csv":
        text = records_to_csv(records)
    elif fmt == "json":
        payload = data.to_dict() if isinstance(data, SweepSummary) else [asdict(r) for r in records]
        text = json.dumps(payload, indent=1)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def load_records(path) -> list:
    """Read records back from a JSON file written by :func:`emit`."""
    payload = json.loads(Path(path).read_text())
    if isinstance(payload, dict):
        payload = payload["records"]
    return [TrialRecord(**r) for r in payload]
