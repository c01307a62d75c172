"""Exception hierarchy shared by every module of the package."""


class ModelSchattenError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(ModelSchattenError, ValueError):
    """An argument is outside its documented range."""


class PoleError(ModelSchattenError, ZeroDivisionError):
    """Evaluation at a pole or an indeterminate point (singular atom, reflected zero)."""


class SpectrumError(ModelSchattenError):
    """A point is too close to the spectrum of the inner function."""


class GeometryError(ModelSchattenError):
    """Level-curve continuation failed."""


class NumericError(ModelSchattenError, ArithmeticError):
    """A numerical routine did not converge.

    Attributes
    ----------
    residuals : list of float
        Diagnostic residuals at the point of failure, if available.
    """

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = list(residuals) if residuals is not None else []


class OracleInconclusive(NumericError):
    """The argument-principle oracle could not resolve a cell."""


class NotAMapError(ModelSchattenError, TypeError):
    """The symbol is a counting-function model and cannot be evaluated."""


class BinningMismatch(ModelSchattenError):
    """A measure is not binned on the decomposition it is summed against."""


class UnsupportedDomain(ModelSchattenError):
    """The level domain is not a disk (closed-form Riemann map unavailable)."""
