"""Exception hierarchy for the peerfx pipeline.

Two broad families matter to callers: configuration problems (the run was
asked for something impossible) and data problems (the inputs cannot be
estimated). The CLI maps them to exit codes 2 and 1 respectively.
"""


class PeerfxError(Exception):
    """Base class for all peerfx errors."""


class ConfigError(PeerfxError):
    """The requested configuration is invalid or infeasible."""


class DataError(PeerfxError):
    """The supplied data cannot be ingested or estimated."""


# --- ingestion -------------------------------------------------------------

class MalformedRecord(DataError):
    """A record could not be decoded or failed field validation."""


class DuplicateObservation(DataError):
    """The same player appeared twice in one match."""


class TeamSizeMismatch(DataError):
    """A team holds more members than its match's mode allows."""


class MissingPartyMetadata(DataError):
    """Party filtering was requested but no record carried a party id."""


# --- instruments / eligibility --------------------------------------------

class UnknownPlayer(DataError):
    """A player id was not found in the panel."""


class IncompleteTeam(DataError):
    """An operation that requires a complete team was given a partial one."""


class EmptyAfterFiltering(DataError):
    """The eligibility restrictions removed every observation."""


# --- transform / estimation ------------------------------------------------

class SingletonPlayer(DataError):
    """A player with a single row reached the demeaning step (upstream bug)."""


class ZeroVariance(DataError):
    """A regressor or instrument column is identically zero."""


class WeakOrZeroFirstStage(DataError):
    """The instrument-regressor cross moment is exactly zero."""


class InsufficientDof(DataError):
    """Too few observations for the requested degrees-of-freedom correction."""


class ZeroMeanOutcome(DataError):
    """The outcome mean is not positive, so the multiple-of-mean is undefined."""


# --- simulation ------------------------------------------------------------

class InfeasibleConfig(ConfigError):
    """Too few players to fill a single match under the configured modes."""


class SingularSystem(ConfigError):
    """|beta| >= 1 makes the team equilibrium system singular."""


class WeakInstrumentWarning(UserWarning):
    """First-stage F statistic at or below the rule-of-thumb threshold of 10."""
