"""Spectral solutions and Monte Carlo for time-changed solvable birth-death processes.

Modules
-------
orthopoly    Charlier, Meixner, Krawtchouk and Hahn polynomials
bdprocess    solvable birth-death specs, generators, invariant mass
bernstein    Bernstein functions, Levy tails and potentials
eigenfn      Mittag-Leffler function and non-local eigenfunctions
spectral     eigen-expansion solvers with certified tail bounds
simulate     subordinators, inverse subordinators and time-changed chains
correlation  autocovariance and long/short range dependence
cli          the ``nlbd`` command
"""

__version__ = "0.1.0"

from .errors import (CoverageError, DomainError, InvalidSpecError, NlbdError,  # noqa: E402
                     NotInL2Error, NumericalError, SamplerError)
from .bdprocess import BirthDeathSpec, ProcessClass, make  # noqa: E402
from .bernstein import BernsteinFunction  # noqa: E402
from .eigenfn import EigenEvaluator, mittag_leffler  # noqa: E402

__all__ = [
    "BernsteinFunction", "BirthDeathSpec", "CoverageError", "DomainError",
    "EigenEvaluator", "InvalidSpecError", "NlbdError", "NotInL2Error",
    "NumericalError", "ProcessClass", "SamplerError", "make", "mittag_leffler",
]
