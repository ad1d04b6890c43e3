"""Exception and warning types shared across the package."""


class GeolensError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgumentError(GeolensError, ValueError):
    """An argument violates a documented precondition."""


class EmptyRoiError(GeolensError, ValueError):
    """A lens encloses no mesh vertex."""


class DegenerateTriangleError(GeolensError, ValueError):
    """A triangle has (near-)zero area where a non-degenerate one is required."""


class AssemblyError(GeolensError, RuntimeError):
    """The flattening system matrix could not be factorized (mesh defect)."""


class ImageIOError(GeolensError, OSError):
    """An image file could not be read or written."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = str(path)


class StageError(GeolensError, RuntimeError):
    """A pipeline stage failed; carries the stage name and the original cause."""

    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


class ConvergenceWarning(UserWarning):
    """An iterative solve stopped at its iteration budget before converging."""


class FlaggedWeightWarning(UserWarning):
    """A mean-value weight was replaced by its inverse-distance fallback."""


class OverlapWarning(UserWarning):
    """Overlapping triangles were resolved first-triangle-wins during rasterization."""
