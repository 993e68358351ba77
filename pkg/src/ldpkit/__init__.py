"""Stationary solutions of dissipative SDEs, path costs, and rare-event checks.

The toolkit integrates a small family of dissipative stochastic models
with reproducible counter-based noise, constructs their stationary
solutions by pullback, scores paths with a quadratic action, minimizes
that action to transition costs, and verifies the small-noise decay law
of rare events by Monte Carlo.
"""

from .action import (
    ActionReport,
    Control,
    action,
    action_gradient,
    control_from_path,
    load_control,
    save_action_report,
    save_control,
    value_and_gradient,
)
from .errors import (
    ConfigurationError,
    DivergenceError,
    InputError,
    InsufficientDataError,
    NonConvergenceError,
    NonInvertibleDiffusionError,
    OptimizationStalledError,
    ToolkitError,
)
from .grids import TimeGrid, from_dt
from .integrate import Path, em_step_sde, integrate_skeleton, load_path, save_path
from .ldpverify import (
    Event,
    MCEstimate,
    SlopeFit,
    estimate_event,
    ldp_slope,
    make_estimate,
    sample_stationary,
    save_estimates,
    save_slope_fit,
    wilson_interval,
)
from .mam import QPResult, minimize_action, quasipotential, save_qp_result
from .models import (
    HypothesisConstants,
    HypothesisReport,
    ModelSpec,
    check_hypothesis,
    drift,
    h_inner,
    h_norm,
    h_norm_sq,
    make_model,
    model_names,
)
from .noise import (
    NoisePath,
    derive_seed,
    gaussian_block,
    load_noise,
    sample_noise,
    save_noise,
    shift_noise,
)
from .pullback import (
    PullbackDiag,
    default_horizons,
    pullback_skeleton,
    pullback_stationary,
    save_diagnostics,
    stationarity_check,
)

__version__ = "0.1.0"

__all__ = [
    "ActionReport",
    "ConfigurationError",
    "Control",
    "DivergenceError",
    "Event",
    "HypothesisConstants",
    "HypothesisReport",
    "InputError",
    "InsufficientDataError",
    "MCEstimate",
    "ModelSpec",
    "NoisePath",
    "NonConvergenceError",
    "NonInvertibleDiffusionError",
    "OptimizationStalledError",
    "Path",
    "PullbackDiag",
    "QPResult",
    "SlopeFit",
    "TimeGrid",
    "ToolkitError",
    "action",
    "action_gradient",
    "check_hypothesis",
    "control_from_path",
    "default_horizons",
    "derive_seed",
    "drift",
    "em_step_sde",
    "estimate_event",
    "from_dt",
    "gaussian_block",
    "h_inner",
    "h_norm",
    "h_norm_sq",
    "integrate_skeleton",
    "ldp_slope",
    "load_control",
    "load_noise",
    "load_path",
    "make_estimate",
    "make_model",
    "minimize_action",
    "model_names",
    "pullback_skeleton",
    "pullback_stationary",
    "quasipotential",
    "sample_noise",
    "sample_stationary",
    "save_action_report",
    "save_control",
    "save_diagnostics",
    "save_estimates",
    "save_noise",
    "save_path",
    "save_qp_result",
    "save_slope_fit",
    "shift_noise",
    "stationarity_check",
    "value_and_gradient",
    "wilson_interval",
]
