"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command-line front end:
2 for invalid input or configuration, 3 for numerical failures, 4 for
problems too large for the dense/brute-force kernels.
"""


class GTQAError(Exception):
    exit_code = 3


class ValidationError(GTQAError, ValueError):
    exit_code = 2


class ParameterError(ValidationError):
    """Infeasible parameters, e.g. ``n * d`` odd for a regular graph."""


class ConfigError(ValidationError):
    pass


class DomainError(ValidationError):
    """Input outside the mathematical domain of an operation."""


class ShapeError(ValidationError):
    pass


class LabelError(ValidationError, KeyError):
    pass


class TopologyError(ValidationError):
    """Operation refers to an edge or vertex that the graph does not have."""


class SchemaError(ValidationError):
    """Unreadable file, wrong format tag or unsupported major version."""


class ImpossibleOutcomeError(DomainError):
    """A forced measurement outcome has (numerically) zero probability."""


class NumericalError(GTQAError, ArithmeticError):
    exit_code = 3


class DegenerateError(NumericalError):
    """A matrix or state collapsed to zero where a nonzero one is required."""


class GenerationError(NumericalError):
    """Random graph generation ran out of retries."""


class CapacityError(GTQAError):
    exit_code = 4
