"""Flexibility planning for integrated electricity and heat systems with
power-to-hydrogen-and-heat units under wind forecast uncertainty."""

__version__ = "0.1.0"

from .exceptions import (ConfigurationError, DegenerateMomentsError, DimensionError, DomainError,
                         IesFlexError, IngestionError, ReformulationError, RegionError,
                         SolutionLoadError)

__all__ = [
    "ConfigurationError", "DegenerateMomentsError", "DimensionError", "DomainError",
    "IesFlexError", "IngestionError", "ReformulationError", "RegionError", "SolutionLoadError",
    "__version__",
]
