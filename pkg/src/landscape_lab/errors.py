class LabError(Exception):
    """Base class for all errors raised by landscape_lab."""


class ShapeError(LabError, ValueError):
    """Operands do not have compatible shapes."""


class PreconditionError(LabError, ValueError):
    """An input violates a documented precondition."""


class AssumptionViolation(PreconditionError):
    """A modelling assumption on data, width or activation does not hold."""


class UnsupportedOrderError(LabError, ValueError):
    """A derivative order is requested that no closed form is available for."""


class NumericOverflowError(LabError, ArithmeticError):
    def __init__(self, message: str, index: tuple[int, ...]):
        super().__init__(message)
        self.index = index
