"""Exception types shared across the toolkit.

Every guard that refuses to return a number it cannot stand behind raises one
of these, so callers can tell a numerical refusal from a programming error.
"""


class VpkitError(Exception):
    """Base class for all toolkit-specific failures."""


class ConstraintViolation(VpkitError):
    """A configured object violates a structural bound (e.g. potential decay)."""


class NotAnalyticAtWidth(VpkitError):
    """The weighted transform grows at the grid edge: width too large."""


class TailNotResolved(VpkitError):
    """An integral's tail still carries weight at the truncation boundary."""


class SeriesNotConverged(VpkitError):
    """A series norm was truncated while terms were still significant."""


class StepTooCoarse(VpkitError):
    """Requested time step cannot resolve the kernel's oscillation."""


class IntegralDiverges(VpkitError):
    """A transform was requested at a point where it does not converge."""


class MarginNonPositive(VpkitError):
    """A root of the dispersion relation lies in the scanned half-plane."""


class TooFewPeaks(VpkitError):
    """Not enough envelope maxima inside the fit window."""


class UnstableConfiguration(VpkitError):
    """Growth-control bounds were requested for a configuration with no margin."""


class InequalityViolated(VpkitError):
    """A pointwise integral inequality failed on the supplied data."""


class EnvelopeExceeded(VpkitError):
    """A trajectory escaped its certified envelope."""


class ResolutionExceeded(VpkitError):
    """Filamentation reached the velocity grid; results past here are artifacts."""


class EchoBeyondRecurrence(VpkitError):
    """Predicted echo time lies past the grid recurrence horizon."""


class OutOfHistory(VpkitError):
    """A field lookup was requested outside the recorded time window."""


class ParseError(VpkitError):
    """Config file could not be read as structured key-value text."""

    def __init__(self, line, key, reason):
        self.line = line
        self.key = key
        self.reason = reason
        super().__init__(f"line {line}: {key}: {reason}")


class ValidationError(VpkitError):
    """One or more config values violate module preconditions.

    Carries the full list of problems, not just the first one found.
    """

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
