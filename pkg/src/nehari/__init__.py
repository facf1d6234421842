"""Nehari-manifold and prescribed-energy solvers for variational problems on grids."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigurationError,
    DegenerateInputError,
    DomainError,
    HypothesisViolation,
    NehariError,
    NoRootError,
    NotApplicableError,
)
from .mesh import Grid, build_grid  # noqa: E402

__all__ = [
    "__version__",
    "Grid",
    "build_grid",
    "NehariError",
    "ConfigurationError",
    "DomainError",
    "DegenerateInputError",
    "NotApplicableError",
    "HypothesisViolation",
    "NoRootError",
]
