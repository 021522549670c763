"""Exception hierarchy. Each class carries the CLI exit code for its stage."""


class TdaError(Exception):
    exit_code = 4


class ValidationError(TdaError, ValueError):
    """Input data violates a documented precondition."""

    exit_code = 3


class ParseError(ValidationError):
    """Malformed input file; message names the offending row/column."""


class DegenerateInputError(ValidationError):
    """Input is well-formed but degenerate for the requested operation."""


class ConfigError(TdaError, ValueError):
    exit_code = 2


class ScaleError(TdaError):
    """Problem size exceeds an exact solver's documented cap."""

    exit_code = 3


class InvariantError(TdaError, AssertionError):
    """Internal invariant violated; indicates a bug, not bad input."""

    exit_code = 4
