"""Maximin Latin hypercube designs by simulated annealing."""
from .annealer import (
    BatchSummary,
    CalibrationError,
    RunConfig,
    RunResult,
    Schedule,
    anneal,
    calibrate_t0,
    metropolis_accept,
    run_batch,
)
from .core import (
    Configuration,
    DesignError,
    DistanceState,
    InstanceSpec,
    apply_swap,
    build_distance_state,
    critical_pairs,
    load_design,
    neighbors_of,
    random_config,
    save_design,
    squared_distance,
    validate_latin,
)
from .evaluation import EvalParams, energy_phi, energy_psi, psi_weights, select_eval, sigma_auto
from .oracle import exhaustive_maximin, verify_design

__version__ = "0.1.0"
