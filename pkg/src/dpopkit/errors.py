"""Exception hierarchy shared by all dpopkit modules."""


class DcopError(Exception):
    """Base class for every error raised by dpopkit."""


class UtilityOverflow(DcopError, ArithmeticError):
    pass


class UnboundVariable(DcopError, KeyError):
    def __init__(self, variable: str):
        super().__init__(variable)
        self.variable = variable

    def __str__(self) -> str:
        return f"variable {self.variable!r} is not bound"


class OutOfDomain(DcopError, ValueError):
    def __init__(self, variable: str, value: int):
        super().__init__(variable, value)
        self.variable = variable
        self.value = value

    def __str__(self) -> str:
        return f"value {self.value} outside the domain of {self.variable!r}"


class InvalidInstance(DcopError, ValueError):
    """A DcopInstance violates one of its structural invariants."""


class InstanceSyntaxError(DcopError, ValueError):
    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(message)
        self.message = message
        self.line = line
        self.column = column

    def __str__(self) -> str:
        return f"line {self.line}, column {self.column}: {self.message}"


class SemanticError(DcopError, ValueError):
    def __init__(self, message: str, ident: str | None = None, line: int | None = None):
        super().__init__(message)
        self.message = message
        self.ident = ident
        self.line = line

    def __str__(self) -> str:
        where = f"line {self.line}: " if self.line is not None else ""
        return f"{where}{self.message}"


class InvalidParams(DcopError, ValueError):
    pass


class UnknownTopology(InvalidParams):
    pass


class NotADfsTraversal(DcopError, ValueError):
    pass


class ScopeMismatch(DcopError, ValueError):
    pass


class MissingEntry(DcopError, KeyError):
    def __str__(self) -> str:
        return f"no cached assignment for separator tuple {self.args[0]!r}"


class ProtocolViolation(DcopError, RuntimeError):
    pass


class SolveTimeout(DcopError, TimeoutError):
    pass


class InstanceTooLarge(DcopError, ValueError):
    pass
