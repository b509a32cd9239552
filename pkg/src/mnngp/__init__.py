"""Deep maxout-network Gaussian-process kernels.

Builds lookup tables for the maxout moment function F_q, composes them
into deep-network kernels, runs exact GP posterior inference for
classification-as-regression, and validates everything against
closed-form and Monte Carlo oracles.
"""

from mnngp.errors import (
    ConditioningError,
    DegenerateInputError,
    DomainError,
    FormatError,
    MnngpError,
    UsageError,
    ValidationFailure,
)

__version__ = "0.1.0"

__all__ = [
    "ConditioningError",
    "DegenerateInputError",
    "DomainError",
    "FormatError",
    "MnngpError",
    "UsageError",
    "ValidationFailure",
    "__version__",
]
