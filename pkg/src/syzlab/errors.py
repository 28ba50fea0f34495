"""Exception types shared across the package.

Three failure modes are kept distinct so callers (and the CLI exit codes)
can tell bad input apart from a numerical breakdown and from a geometric
check that honestly failed.
"""


class ValidationError(ValueError):
    """Input violates a documented precondition."""


class NumericalError(ArithmeticError):
    """A computation produced non-finite values or an inconsistent fit."""


class CheckFailure(AssertionError):
    """A geometric identity that should hold was violated beyond tolerance."""
