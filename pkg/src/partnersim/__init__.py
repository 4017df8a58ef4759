"""partnersim: exact simulation and critical theory of the partner model."""

__version__ = "0.1.0"

from .analytics import (
    CriticalStructure,
    HittingProbs,
    InfiniteLambdaCError,
    critical_structure,
    delta_of_i,
    hitting_probs,
    lambda_c,
    r0,
    solve_y_star,
)
from .model_core import (
    ModelParams,
    Observables,
    PopulationState,
    TRANSITIONS,
    Transition,
    TransitionKind,
    apply_transition,
    drift_and_diffusivity,
    observables,
    transition_rates,
)
from .simulator import (
    EnsembleResult,
    InitialCondition,
    SimConfig,
    Trajectory,
    build_initial_state,
    run,
    run_ensemble,
)

__all__ = [
    "CriticalStructure",
    "HittingProbs",
    "InfiniteLambdaCError",
    "critical_structure",
    "delta_of_i",
    "hitting_probs",
    "lambda_c",
    "r0",
    "solve_y_star",
    "ModelParams",
    "Observables",
    "PopulationState",
    "TRANSITIONS",
    "Transition",
    "TransitionKind",
    "apply_transition",
    "drift_and_diffusivity",
    "observables",
    "transition_rates",
    "EnsembleResult",
    "InitialCondition",
    "SimConfig",
    "Trajectory",
    "build_initial_state",
    "run",
    "run_ensemble",
    "__version__",
]
