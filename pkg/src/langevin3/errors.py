"""Exception hierarchy for the langevin3 package.

All errors raised deliberately by this package derive from
:class:`Langevin3Error`, so callers can catch everything package-specific
with a single ``except`` clause.  The subclasses separate caller mistakes
(bad arguments), numerical breakdowns (divergence, indefinite matrices),
and optimizer non-convergence, because the appropriate reaction differs:
argument errors are bugs at the call site, numerical errors usually mean
the step size or conditioning is out of range, and convergence errors can
be retried with a larger iteration budget.
"""

from __future__ import annotations


class Langevin3Error(Exception):
    """Base class for all errors raised by this package."""


class ArgumentError(Langevin3Error, ValueError):
    """An argument is malformed or outside its documented domain."""


class NumericalError(Langevin3Error, ArithmeticError):
    """A computation lost numerical meaning.

    Examples: a chain state became non-finite (the step size is beyond
    the stability threshold), or a matrix that must be positive
    semi-definite has an eigenvalue too negative to attribute to
    round-off.
    """


class ConvergenceError(Langevin3Error, RuntimeError):
    """An iterative routine exhausted its budget before reaching tolerance.

    Attributes
    ----------
    last_iterate : numpy.ndarray or None
        The best point found before giving up.
    grad_norm : float or None
        Gradient norm at that point.
    """

    def __init__(self, message, last_iterate=None, grad_norm=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.grad_norm = grad_norm
