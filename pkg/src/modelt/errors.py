"""Exception types raised by modelt.

The CLI maps these onto exit codes: validation errors exit 2, graph errors
exit 3 and numeric failures exit 4.
"""


class ModelTError(Exception):
    """Base class for all modelt errors."""


# validation -------------------------------------------------------------

class InvalidSize(ModelTError, ValueError):
    pass


class DenseCapExceeded(InvalidSize):
    pass


class InvalidInput(ModelTError, ValueError):
    pass


class InvalidParams(ModelTError, ValueError):
    pass


class UnsupportedParams(ModelTError, ValueError):
    pass


class OutOfTheoremScope(ModelTError, ValueError):
    pass


class ScheduleExhausted(ModelTError, IndexError):
    pass


# graph ------------------------------------------------------------------

class GraphError(ModelTError):
    pass


class InvalidGraph(GraphError, ValueError):
    pass


class ParseError(GraphError, ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class GenerationFailed(GraphError, RuntimeError):
    pass


class GraphNotConnected(GraphError, ValueError):
    pass


# numeric ----------------------------------------------------------------

class NumericError(ModelTError, ArithmeticError):
    pass


class EigensolverFailure(NumericError):
    pass


class NumericOverflow(NumericError):
    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial
