"""Peer effects on match networks: leave-one-out IV with player fixed effects.

The pipeline runs build_panel -> filters -> build_eligible_panel -> demean
-> ols_fit / first_stage / tsls_fit -> report; simgen generates synthetic
panels from the structural model with known ground truth.
"""

from .errors import (
    ConfigError,
    DataError,
    DuplicateObservation,
    EmptyAfterFiltering,
    IncompleteTeam,
    InfeasibleConfig,
    InsufficientDof,
    MalformedRecord,
    MissingPartyMetadata,
    PeerfxError,
    SingletonPlayer,
    SingularSystem,
    TeamSizeMismatch,
    UnknownPlayer,
    WeakInstrumentWarning,
    WeakOrZeroFirstStage,
    ZeroMeanOutcome,
    ZeroVariance,
)
from .estimators import (
    F_RELEVANCE_THRESHOLD,
    EstimationResult,
    FirstStageResult,
    Report,
    first_stage,
    fit_panel,
    format_multiple,
    ols_fit,
    report,
    robust_se,
    tsls_fit,
)
from .instruments import (
    AttritionReport,
    EligiblePanel,
    build_eligible_panel,
    loo_frequency,
    team_instrument,
)
from .panel import (
    MODES,
    TEAM_SIZE,
    MatchRecord,
    Panel,
    PanelSummary,
    build_panel,
    filter_algorithmic_pairs,
    filter_mode,
    panel_summary,
    read_records,
    write_records,
)
from .simgen import (
    OUTCOME_MODES,
    GroundTruth,
    MatchRoster,
    SimConfig,
    TeamRoster,
    generate_panel,
    player_alphas,
    simulate_schedule,
    solve_team_equilibrium,
)
from .transform import DemeanedPanel, demean

__version__ = "0.1.0"

__all__ = [
    "AttritionReport",
    "ConfigError",
    "DataError",
    "DemeanedPanel",
    "DuplicateObservation",
    "EligiblePanel",
    "EmptyAfterFiltering",
    "EstimationResult",
    "F_RELEVANCE_THRESHOLD",
    "FirstStageResult",
    "GroundTruth",
    "IncompleteTeam",
    "InfeasibleConfig",
    "InsufficientDof",
    "MalformedRecord",
    "MatchRecord",
    "MatchRoster",
    "MissingPartyMetadata",
    "MODES",
    "OUTCOME_MODES",
    "Panel",
    "PanelSummary",
    "PeerfxError",
    "Report",
    "SimConfig",
    "SingletonPlayer",
    "SingularSystem",
    "TEAM_SIZE",
    "TeamRoster",
    "TeamSizeMismatch",
    "UnknownPlayer",
    "WeakInstrumentWarning",
    "WeakOrZeroFirstStage",
    "ZeroMeanOutcome",
    "ZeroVariance",
    "build_eligible_panel",
    "build_panel",
    "demean",
    "filter_algorithmic_pairs",
    "filter_mode",
    "first_stage",
    "fit_panel",
    "format_multiple",
    "generate_panel",
    "loo_frequency",
    "ols_fit",
    "panel_summary",
    "player_alphas",
    "read_records",
    "report",
    "robust_se",
    "simulate_schedule",
    "solve_team_equilibrium",
    "team_instrument",
    "tsls_fit",
    "write_records",
]
