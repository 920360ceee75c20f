"""Online resource allocation with predicted dual variables."""

from ._kernels import BACKEND
from .adversarial import AAConfig, aa_step_size, epsilon, run_aa
from .main_alg import MainConfig, SwitchRecord, default_L, hypothesis_test, run_main
from .mirror import (EUCLIDEAN, SHIFTED_ENTROPY, ReferenceFunction, RunTrajectory, md_step,
                     run_mda, run_prd)
from .model import (Action, ArrivalRequest, ArrivalSequence, InstanceError, ProblemParams,
                    best_response, compute_params, conjugate_value, read_instance,
                    validate_instance, write_instance)
from .oracle import dual_value, find_perfect_dual, minimize_dual, solve_opt
from .stochastic import TunerConfig, rfb, run_sa

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "AAConfig", "aa_step_size", "epsilon", "run_aa", "MainConfig", "SwitchRecord",
    "default_L", "hypothesis_test", "run_main", "EUCLIDEAN", "SHIFTED_ENTROPY",
    "ReferenceFunction", "RunTrajectory", "md_step", "run_mda", "run_prd", "Action",
    "ArrivalRequest", "ArrivalSequence", "InstanceError", "ProblemParams", "best_response",
    "compute_params", "conjugate_value", "read_instance", "validate_instance", "write_instance",
    "dual_value", "find_perfect_dual", "minimize_dual", "solve_opt", "TunerConfig", "rfb",
    "run_sa",
]
