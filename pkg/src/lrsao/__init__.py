"""Q-learning selection of auxiliary objectives on the Jump benchmark."""

from .agent import Hyperparams, QTable, default_hyperparams, validate_hyperparams
from .analysis import expected_t1_closed_form, harmonic, mean_ci, theory_summary
from .baseline import EarlConfig, run_earl, run_earl_batch
from .engine import RunConfig, RunResult, RunTrace, run_lrsao, run_lrsao_batch
from .errors import (
    ConfigError,
    EmptyInput,
    HyperparamError,
    InstantiationError,
    IoError,
    LrsaoError,
    PhaseError,
    RangeError,
    TraceError,
)
from .objectives import ObjectiveId, ProblemParams, jump, left_bridge, right_bridge, validate_params

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "EarlConfig",
    "EmptyInput",
    "HyperparamError",
    "Hyperparams",
    "InstantiationError",
    "IoError",
    "LrsaoError",
    "ObjectiveId",
    "PhaseError",
    "ProblemParams",
    "QTable",
    "RangeError",
    "RunConfig",
    "RunResult",
    "RunTrace",
    "TraceError",
    "default_hyperparams",
    "expected_t1_closed_form",
    "harmonic",
    "jump",
    "left_bridge",
    "mean_ci",
    "right_bridge",
    "run_earl",
    "run_earl_batch",
    "run_lrsao",
    "run_lrsao_batch",
    "theory_summary",
    "validate_hyperparams",
    "validate_params",
]
