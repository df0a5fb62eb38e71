"""Exception taxonomy shared across the toolkit.

The CLI maps these onto exit codes: usage problems exit 1, data problems
exit 2, numeric failures exit 3.
"""


class LesaError(Exception):
    """Base class for all toolkit errors."""


class DataError(LesaError):
    """Malformed input files, schema violations, missing records or ids."""


class ConfigError(LesaError):
    """Inconsistent or incomplete configuration."""


class NumericError(LesaError):
    """Non-finite values where finite ones are required (NaN/Inf states)."""
