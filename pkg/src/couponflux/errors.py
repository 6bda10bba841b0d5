"""Exception hierarchy shared by every module.

The CLI maps any :class:`CouponFluxError` to exit code 3 and prints the class
name, so names here are part of the command-line contract.
"""


class CouponFluxError(Exception):
    """Base class for numerical and domain errors raised by couponflux."""


class DomainError(CouponFluxError, ValueError):
    pass


class NonStochastic(CouponFluxError, ValueError):
    pass


class SingularSolve(CouponFluxError, ArithmeticError):
    pass


class EmptyComplement(CouponFluxError, ValueError):
    pass


class LengthMismatch(CouponFluxError, ValueError):
    pass


class PoleError(CouponFluxError, ArithmeticError):
    pass


class DenominatorNonpositive(CouponFluxError, ArithmeticError):
    pass


class SubsetLimit(CouponFluxError, ValueError):
    pass


class RegimeMismatch(CouponFluxError, ValueError):
    pass


class BudgetExceeded(CouponFluxError, RuntimeError):
    """A simulation hit its step budget; the sample is censored."""


class TooFewSamples(CouponFluxError, ValueError):
    pass
