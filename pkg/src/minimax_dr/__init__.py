"""
Kernel minimax estimation of doubly robust nuisance functions, with the
proximal causal inference estimators of the average causal effect built on
top of it.

Typical use::

    from minimax_dr import ScenarioConfig, generate, estimate_ace

    data = generate(ScenarioConfig("linear_gaussian_1", n=800, seed=1))
    result = estimate_ace(data)
    result.pdr.ace, result.pdr_ci
"""

from .dgp import ScenarioConfig, generate, oracle_h_bridge, true_ace
from .errors import (
    ConfigError,
    DataError,
    DegenerateInputError,
    InputError,
    MinimaxDRError,
    NumericError,
    TuningError,
)
from .functional import CrossFitError, CrossFitEstimate, FunctionalSpec, cross_fit, influence_value
from .kernels import KernelConfig, gram_matrix, median_heuristic, pseudo_inverse, solve_spd
from .minimax import (
    Hyperparameters,
    MinimaxProblem,
    NuisanceFunction,
    adversary_value,
    fit_nuisance,
    moment_residual_diagnostic,
)
from .proximal import (
    AceResult,
    BridgeHypers,
    ProximalConfig,
    ProximalDataset,
    estimate_ace,
    fit_h_bridge,
    fit_q_bridge,
    supplement_config,
)
from .tuning import HyperGrid, TunedHyperparams, tune, tune_bridges

__version__ = "0.1.0"

__all__ = [
    "AceResult",
    "BridgeHypers",
    "ConfigError",
    "CrossFitError",
    "CrossFitEstimate",
    "DataError",
    "DegenerateInputError",
    "FunctionalSpec",
    "HyperGrid",
    "Hyperparameters",
    "InputError",
    "KernelConfig",
    "MinimaxDRError",
    "MinimaxProblem",
    "NuisanceFunction",
    "NumericError",
    "ProximalConfig",
    "ProximalDataset",
    "ScenarioConfig",
    "TunedHyperparams",
    "TuningError",
    "adversary_value",
    "cross_fit",
    "estimate_ace",
    "fit_h_bridge",
    "fit_nuisance",
    "fit_q_bridge",
    "generate",
    "gram_matrix",
    "influence_value",
    "median_heuristic",
    "moment_residual_diagnostic",
    "oracle_h_bridge",
    "pseudo_inverse",
    "solve_spd",
    "supplement_config",
    "true_ace",
    "tune",
    "tune_bridges",
]
