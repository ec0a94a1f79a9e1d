"""Riemannian smoothing steepest descent for nonsmooth sparse recovery.

Minimizes objectives of the form f_hat(x) + lam * sum_i |(B x)_i|^p,
p in (0, 1], over the unit sphere or the orthogonal group by steepest
descent on a uniformly smoothed surrogate whose smoothing parameter is
driven to zero alongside a gradient-norm tolerance.
"""

from .manifolds import UnitSphere, OrthogonalGroup, qr_positive
from .smoothing import (
    smooth_abs,
    smooth_abs_deriv,
    smooth_abs_pow,
    smooth_abs_pow_deriv,
    SmoothedObjective,
    fsv_objective,
    odl_objective,
)
from .solver import (
    Status,
    BacktrackError,
    SolverConfig,
    SolverState,
    SolveResult,
    IterationRecord,
    SCHEDULE_GRID,
    armijo_search,
    rssd_step,
    rssd_run,
    rssd_grid,
)
from .problems import (
    FsvInstance,
    OdlInstance,
    gen_fsv,
    gen_odl,
    truncated_nnz,
    fsv_success,
    sparsity_level,
    save_instance,
    load_instance,
)
from .numcheck import (
    CheckReport,
    fd_gradient_check,
    smoothing_bound_audit,
    consistency_probe,
)
from .harness import (
    ExperimentConfig,
    TrialRecord,
    ExperimentReport,
    derive_seed,
    run_experiment,
    emit_report,
)
from .estimators import SparseVectorRecovery, OrthogonalDictionaryLearning

__version__ = "0.1.0"

__all__ = [
    "UnitSphere", "OrthogonalGroup", "qr_positive",
    "smooth_abs", "smooth_abs_deriv", "smooth_abs_pow", "smooth_abs_pow_deriv",
    "SmoothedObjective", "fsv_objective", "odl_objective",
    "Status", "BacktrackError", "SolverConfig", "SolverState", "SolveResult",
    "IterationRecord", "SCHEDULE_GRID",
    "armijo_search", "rssd_step", "rssd_run", "rssd_grid",
    "FsvInstance", "OdlInstance", "gen_fsv", "gen_odl",
    "truncated_nnz", "fsv_success", "sparsity_level",
    "save_instance", "load_instance",
    "CheckReport", "fd_gradient_check", "smoothing_bound_audit", "consistency_probe",
    "ExperimentConfig", "TrialRecord", "ExperimentReport",
    "derive_seed", "run_experiment", "emit_report",
    "SparseVectorRecovery", "OrthogonalDictionaryLearning",
]
