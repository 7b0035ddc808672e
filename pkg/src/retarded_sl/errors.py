"""Numerical failure modes shared by the solver modules."""


class NumericalError(ArithmeticError):
    """Base class for failures of the numerical pipeline (CLI exit code 3)."""


class NonfiniteState(NumericalError):
    pass


class SingularTransmission(NumericalError):
    """gamma21+ - lam^2 * gamma21+~ vanishes, so the jump at c is undefined."""

    def __init__(self, lam: float, denominator: float):
        super().__init__(
            f"transmission denominator gamma21+ - lam^2*gamma21+~ = {denominator!r} "
            f"is numerically zero at lambda={lam!r}")
        self.lam = lam
        self.denominator = denominator


class OutOfRange(ValueError):
    pass


class DegenerateLeadingTerm(NumericalError):
    """The lam^7 coefficient of the characteristic function is zero."""


class DegenerateInitialState(UserWarning):
    """Initial state (0, 0): the shooting solution vanishes identically."""


class NonconvergenceWarning(RuntimeWarning):
    pass


class MissedRootWarning(RuntimeWarning):
    """A scan cell may hide an even number of sign changes."""
