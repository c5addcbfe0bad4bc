"""Exception hierarchy shared by all modules.

The CLI maps these onto process exit codes: invalid arguments exit 2,
resource limits exit 3, numerical failures exit 4.
"""


class TensorTrafficError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(TensorTrafficError, ValueError):
    """A caller-supplied argument violates a documented precondition."""


class ResourceLimitError(TensorTrafficError, RuntimeError):
    """A request exceeds a hard combinatorial or memory guard."""


class NumericalFailureError(TensorTrafficError, RuntimeError):
    """An exact identity failed beyond its tolerance."""


class NotInvariantError(NumericalFailureError):
    """A state or family failed the permutation-invariance residual check."""


class IllConditionedError(NumericalFailureError):
    """Numerical evaluation cannot reach the required precision."""


class ProbeFailureError(NumericalFailureError):
    """A probe operand is degenerate (zero reference trace); supply another."""
