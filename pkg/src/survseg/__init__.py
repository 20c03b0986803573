"""survseg: breakpoint detection in ordered censored survival sequences.

Fits a segment-wise Cox model along an ordering covariate: subjects are
sorted by a numeric key, latent segment labels follow a monotone
constrained Markov chain, and an EM algorithm alternates posterior
segment weights (forward/backward recursions) with weighted survival
M-steps for exponential, Weibull, piecewise-constant or kernel-smoothed
nonparametric baseline hazards.  The number of segments is chosen by
BIC; bootstrap intervals and weighted Kaplan-Meier curves summarize the
fit.
"""

from .baselines import (
    ExponentialHazard,
    PiecewiseHazard,
    SmoothedHazard,
    StepCumHazard,
    ThetaParams,
    WeibullHazard,
    log_emission,
    log_emissions,
    mstep_exponential,
    mstep_piecewise,
    mstep_weibull,
    smooth_baseline,
)
from .cox import breslow_cumhaz, mstep_cox, weighted_cox_fit
from .data import (
    ColumnSchema,
    SegmentationPrior,
    SurvivalDataset,
    SurvivalRecord,
    build_prior,
    load_dataset,
)
from .em import BreakpointEstimate, FitConfig, FitResult, fit, init_weights
from .errors import (
    BootstrapError,
    DataError,
    DegeneratePosteriorError,
    FitError,
    NewtonError,
    PriorError,
    SegmentCollapseError,
    SurvSegError,
)
from .estimator import SurvivalBreakpointModel
from .extras import BootstrapResult, KMCurve, bootstrap_ci, weighted_km
from .hmm import (
    PosteriorTables,
    backward,
    forward,
    map_breakpoints,
    null_recursions,
    posteriors,
    segment_posteriors,
)
from .selection import SweepResult, model_dimension, sweep
from .simulate import (
    EXAMPLE_HAZARD_TABLE,
    SCENARIOS,
    GompertzHazard,
    SimulationTruth,
    simulate_scenario,
    simulate_table,
)

__version__ = "0.1.0"

__all__ = [
    "BootstrapError",
    "BootstrapResult",
    "BreakpointEstimate",
    "ColumnSchema",
    "DataError",
    "DegeneratePosteriorError",
    "EXAMPLE_HAZARD_TABLE",
    "ExponentialHazard",
    "FitConfig",
    "FitError",
    "FitResult",
    "GompertzHazard",
    "KMCurve",
    "NewtonError",
    "PiecewiseHazard",
    "PosteriorTables",
    "PriorError",
    "SCENARIOS",
    "SegmentCollapseError",
    "SegmentationPrior",
    "SimulationTruth",
    "SmoothedHazard",
    "StepCumHazard",
    "SurvSegError",
    "SurvivalBreakpointModel",
    "SurvivalDataset",
    "SurvivalRecord",
    "SweepResult",
    "ThetaParams",
    "WeibullHazard",
    "backward",
    "bootstrap_ci",
    "breslow_cumhaz",
    "build_prior",
    "fit",
    "forward",
    "init_weights",
    "load_dataset",
    "log_emission",
    "log_emissions",
    "map_breakpoints",
    "model_dimension",
    "mstep_cox",
    "mstep_exponential",
    "mstep_piecewise",
    "mstep_weibull",
    "null_recursions",
    "posteriors",
    "segment_posteriors",
    "simulate_scenario",
    "simulate_table",
    "smooth_baseline",
    "sweep",
    "weighted_cox_fit",
    "weighted_km",
]
