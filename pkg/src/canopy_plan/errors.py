"""Exception hierarchy shared by all toolkit modules."""


class CanopyError(Exception):
    """Base class for every error raised by the toolkit."""


class ArgumentError(CanopyError, ValueError):
    pass


class FormatError(CanopyError):
    """Input is structurally unusable (missing header, wrong layout)."""


class ParseError(CanopyError):
    """A single cell or line could not be parsed.

    ``row``/``column`` (tables) or ``line`` (label files) locate the problem.
    """

    def __init__(self, message, *, row=None, column=None, line=None):
        loc = []
        if line is not None:
            loc.append(f"line {line}")
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column!r}")
        super().__init__(f"{message} ({', '.join(loc)})" if loc else message)
        self.row = row
        self.column = column
        self.line = line


class ValidationError(CanopyError):
    pass


class NumericError(CanopyError, ArithmeticError):
    """Non-finite value produced inside a numeric recursion."""


class UndefinedMetricError(CanopyError, ZeroDivisionError):
    pass


class LoadError(CanopyError):
    pass


class RetrievalError(CanopyError):
    pass


class ProfileError(CanopyError):
    pass


class ConfigError(CanopyError):
    """Scenario configuration is invalid; ``field`` names the offending key."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field
