"""Exception hierarchy shared by every module."""


class FlatMcError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(FlatMcError):
    pass


class GuardFailed(FlatMcError):
    pass


class NonNegativityViolation(FlatMcError):
    pass


class WrongSource(FlatMcError):
    pass


class NotFlat(FlatMcError):
    pass


class BadArity(FlatMcError):
    pass


class UnboundVariable(FlatMcError):
    pass


class ParseError(FlatMcError):
    """Syntax error with a location.

    ``line`` and ``col`` are 1-based; ``pos`` is the 0-based character offset
    in the input when the parser works on a flat string.
    """

    def __init__(self, msg, line=None, col=None, pos=None):
        self.msg = msg
        self.line = line
        self.col = col
        self.pos = pos
        where = []
        if line is not None:
            where.append(f"line {line}")
        if col is not None:
            where.append(f"col {col}")
        if pos is not None and line is None:
            where.append(f"pos {pos}")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {msg}" if prefix else msg)
