"""Exception types shared across the package."""


class VoxactError(Exception):
    """Base class for all package-specific errors."""


class InvalidInputError(VoxactError, ValueError):
    """An input violated a documented precondition or invariant."""


class OutOfBoundsError(VoxactError, ValueError):
    """A world-space position falls outside the workspace bounds."""


class DatasetVersionError(VoxactError, RuntimeError):
    """A stored dataset or checkpoint uses an incompatible format version."""


class DatasetCorruptError(VoxactError, RuntimeError):
    """A stored dataset file is truncated or unreadable."""


class NonFiniteLossError(VoxactError, RuntimeError):
    """Training produced a non-finite loss; message names the offending head."""
