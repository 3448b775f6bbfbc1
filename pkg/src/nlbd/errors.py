"""Exception hierarchy shared by all nlbd modules."""


class NlbdError(Exception):
    """Base class for library errors."""

    #: short machine-readable tag used in CLI error JSON
    code = "error"


class DomainError(NlbdError, ValueError):
    """An argument lies outside the admissible range."""

    code = "domain"


class InvalidSpecError(NlbdError, ValueError):
    """Rates or parameters do not describe a solvable process."""

    code = "invalid_spec"


class NumericalError(NlbdError, ArithmeticError):
    """A numerical routine failed to reach its tolerance.

    ``estimate`` carries the achieved error estimate when one is available.
    """

    code = "numerical"

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class NotInL2Error(NumericalError):
    """A function does not appear to be square summable against m."""

    code = "not_in_l2"


class SamplerError(NlbdError, RuntimeError):
    """A random variate generator exhausted its rejection budget."""

    code = "sampler"


class CoverageError(NlbdError, RuntimeError):
    """A simulated subordinator path does not reach the requested time."""

    code = "coverage"
