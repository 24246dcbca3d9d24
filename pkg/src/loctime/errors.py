"""Exception types shared across the package.

Every error raised by loctime derives from :class:`LoctimeError`, so callers
(and the CLI) can map failures to structured records and exit codes.
"""


class LoctimeError(Exception):
    """Base class for all loctime errors."""


class ConfigError(LoctimeError):
    """Malformed parameters or configuration; the message names the field."""


class NonIrreducible(LoctimeError):
    """The directed graph of positive rates is not strongly connected."""


class InvalidState(LoctimeError):
    """A state label is not part of the model."""


class SingularSystem(LoctimeError):
    """A linear solve failed; cannot occur on a validated model (internal)."""


class NegativeSquare(LoctimeError):
    """A squared distance came out below -1e-9, i.e. the killed table is bad."""


class NotPSD(LoctimeError):
    """An eigenvalue fell below the allowed floor for a covariance table."""


class NotSymmetric(LoctimeError):
    """The model fails the reversibility test required by the experiment."""


class NotTranslationInvariant(LoctimeError):
    """The model is not shift-invariant on the cycle."""


class BudgetExceeded(LoctimeError):
    """The event-count budget was hit; the experiment is mis-specified."""


class OutOfRange(LoctimeError):
    """A time argument exceeds the simulated horizon."""


class InsufficientData(LoctimeError):
    """Too few records/replicas to form the requested estimate."""


class UnsupportedMeasure(LoctimeError):
    """The weight measure gives zero mass to a point of the index set."""
