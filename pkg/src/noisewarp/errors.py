"""Exception taxonomy shared by the whole package."""


class NoiseWarpError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgumentError(NoiseWarpError, ValueError):
    """An argument violates an operation's precondition."""


class FormatError(NoiseWarpError):
    """A file does not match its declared binary layout (bad magic, version...)."""


class DataError(NoiseWarpError):
    """A file parses but its payload is unusable (NaN/Inf, checksum mismatch)."""
