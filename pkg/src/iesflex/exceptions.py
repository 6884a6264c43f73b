"""Exception hierarchy shared across the toolkit."""


class IesFlexError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(IesFlexError, ValueError):
    """Invalid or inconsistent configuration value."""

    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field


class DomainError(IesFlexError, ValueError):
    """Input outside the mathematical domain of a function."""


class RegionError(IesFlexError, ValueError):
    """Operating point outside the admissible (T, i) box."""


class IngestionError(IesFlexError, ValueError):
    """Malformed input data file."""


class DegenerateMomentsError(IesFlexError, ValueError):
    """Moments cannot be estimated from the given samples."""


class DimensionError(IesFlexError, ValueError):
    """Array shapes do not agree with the instance."""


class ReformulationError(IesFlexError, ValueError):
    """A symbolic constraint cannot be compiled."""


class SolutionLoadError(IesFlexError, ValueError):
    """A stored solution file is missing or unreadable."""


class SolveError(IesFlexError, RuntimeError):
    """The solver returned no usable point."""

    def __init__(self, message, status=""):
        super().__init__(message)
        self.status = status
