"""Exception types raised across the package."""


class RsimpError(Exception):
    """Base class for all errors raised by rsimp."""


class EmptyMeshError(RsimpError, ValueError):
    pass


class MeshStructureError(RsimpError, ValueError):
    """Face indices reference vertices that do not exist."""


class MeshFormatError(RsimpError, ValueError):
    """A mesh file could not be parsed.

    ``location`` is a human readable position such as ``"line 12"`` or
    ``"byte 4096"``.
    """

    def __init__(self, message, location=None):
        self.location = location
        if location is not None:
            message = f"{message} ({location})"
        super().__init__(message)


class CheckpointError(RsimpError, ValueError):
    pass


class NumericError(RsimpError, ArithmeticError):
    pass


class AnalysisError(RsimpError):
    """A cluster has no usable (non-degenerate) faces to analyze."""
