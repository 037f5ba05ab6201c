class SparseCountError(Exception):
    """Base class for errors raised by this package."""


class GraphFormatError(SparseCountError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class QuerySyntaxError(SparseCountError):
    def __init__(self, message: str, position: int):
        super().__init__(f"position {position}: {message}")
        self.position = position


class ShapeError(SparseCountError):
    """A formula does not have the shape an operation requires."""


class ContractError(SparseCountError):
    """A precondition of an operation is violated."""


class BudgetExceeded(SparseCountError):
    """An enumeration would exceed its configured cap."""
