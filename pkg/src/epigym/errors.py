"""Exception hierarchy shared across the package."""


class EpiGymError(Exception):
    """Base class for all errors raised by this package."""


class ActionOutOfSpace(EpiGymError):
    """Action is not a member of the environment's action space."""


class EpisodeFinished(EpiGymError):
    """step() was called after the episode reached its horizon."""


class ResetRequired(EpiGymError):
    """step() was called before the first reset()."""


class UnstableStep(EpiGymError):
    """An integrator update would drive a compartment negative."""


class InvalidRates(EpiGymError):
    """Rate combination violates a model precondition (e.g. gamma + mu > 1)."""


class LevelOutOfRange(EpiGymError):
    """Stringency level outside the supported [0, 99] range."""


class ConfigInvalid(EpiGymError):
    """Environment or algorithm configuration failed validation."""


class LengthMismatch(EpiGymError):
    """Two sequences that must align have different lengths."""


class DimMismatch(EpiGymError):
    """Vector dimensionality does not match what the consumer expects."""


class NotPositiveDefinite(EpiGymError):
    """Kernel matrix could not be factorized, even after jitter escalation."""


class BudgetTooSmall(EpiGymError):
    """Optimization budget below the minimum the algorithm supports."""


class SpaceTooLarge(EpiGymError):
    """Enumeration requested on a space larger than the allowed limit."""


class ParseError(EpiGymError):
    """Malformed input file; carries the offending 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class GapError(ParseError):
    """A daily series is missing one or more days."""


class MonotonicityError(ParseError):
    """A cumulative series decreased."""


class ComponentOutOfRange(EpiGymError):
    """Observation component outside [0, 1]; cannot be discretized."""
