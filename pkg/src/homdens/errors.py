"""Shared exception types."""


class CapExceeded(ValueError):
    """An input is larger than the configured structural cap."""


class BudgetExceeded(ValueError):
    """A computation would exceed its expansion or enumeration budget."""


class FormatError(ValueError):
    """A text record failed to parse.

    Carries an optional 1-based line number and column so command-line
    callers can point at the offending spot.
    """

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + where)
