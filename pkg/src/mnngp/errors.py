"""Exception hierarchy shared across the library and the command line tool.

Each class maps to one process exit code (see ``mnngp.cli``): bad arguments
or numerically inadmissible inputs exit 2, unparseable files exit 3,
irrecoverable linear-algebra conditioning exits 4, and a failed validation
suite exits 5.
"""


class MnngpError(Exception):
    """Base class for all errors raised by this package."""


class UsageError(MnngpError):
    """Arguments are structurally wrong: bad shapes, inconsistent sizes,
    unknown option values, missing required inputs."""


class DomainError(MnngpError):
    """A numeric argument left its admissible domain (e.g. a correlation
    beyond [-1, 1] past the tolerance band)."""


class DegenerateInputError(MnngpError):
    """An input row has zero norm while sigma_b^2 = 0, so the layer
    correlation 0/0 is undefined."""

    def __init__(self, message, rows=None):
        super().__init__(message)
        self.rows = rows


class FormatError(MnngpError):
    """A file (table, IDX, batch, CSV) failed structural validation."""


class ConditioningError(MnngpError):
    """Cholesky factorization still failed after the noise escalation cap.

    Carries the final noise level tried so reports can surface it.
    """

    def __init__(self, message, noise_final=None, escalations=None):
        super().__init__(message)
        self.noise_final = noise_final
        self.escalations = escalations


class ValidationFailure(MnngpError):
    """A validation suite ran to completion and at least one check failed."""
