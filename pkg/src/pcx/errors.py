class PcxError(Exception):
    pass


class DomainError(PcxError, ArithmeticError):
    """An operation left its mathematical domain (division by zero, sqrt of a negative)."""


class DegenerateBoxError(PcxError, ValueError):
    pass


class PreconditionError(PcxError, ValueError):
    pass


class NumericalError(PcxError, ArithmeticError):
    pass


class ParseError(PcxError, ValueError):
    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"{message} at offset {position}"
        super().__init__(message)


class BudgetExceeded(PcxError, RuntimeError):
    """The worklist grew past the configured box budget."""
