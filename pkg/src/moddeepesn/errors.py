"""Exception hierarchy.

Every error raised by the library derives from :class:`ModDeepEsnError`. The
three direct subclasses map onto the CLI exit codes.
"""


class ModDeepEsnError(Exception):
    exit_code = 1


class ConfigError(ModDeepEsnError, ValueError):
    """Invalid parameter, out-of-range value or unknown configuration key."""

    exit_code = 2


class DataError(ModDeepEsnError, ValueError):
    """Malformed, missing or too-short input data."""

    exit_code = 3


class NumericalError(ModDeepEsnError, ArithmeticError):
    """A numerical routine failed (singular system, divergence, infeasible scaling)."""

    exit_code = 4


class DimensionError(ConfigError):
    pass


class SingularityError(NumericalError):
    pass
