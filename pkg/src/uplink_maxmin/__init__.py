"""Globally optimal max-min SINR uplink association, power control and beamforming."""

from .harness import TrialRecord, SweepSummary, emit, max_snr_association, run_sweep, run_trial
from .lp import LinearProgram, LPResult, LPStatus, solve_lp
from .model import (
    ConvergenceBound,
    InvalidInstanceError,
    Kind,
    NetworkInstance,
    SolverConfig,
    SolverError,
    SolverResult,
    Status,
    UnreachableUserError,
    sinr_simo,
    sinr_siso,
    validate_instance,
    weighted_inf_norm,
)
from .scenario import Geometry, LayoutConfig, generate_geometry, generate_instance
from .simo import (
    bsfp_solve_simo,
    brute_force_solve_simo,
    convergence_bound_simo,
    fixed_assoc_nfp_simo,
    mmse_beamformer,
    nfp_solve_simo,
    qos_fp_solve_simo,
    ttilde_kn,
    ttilde_map,
)
from .siso import (
    brute_force_solve,
    bsfp_solve,
    bslp_solve,
    convergence_bound,
    fixed_assoc_nfp,
    nfp_solve,
    qos_fp_solve,
    qos_lp_solve,
    t_kn,
    t_map,
)

__version__ = "0.1.0"
