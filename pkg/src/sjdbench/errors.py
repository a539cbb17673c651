"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Input violates a structural invariant (shapes, monotone timestamps, finiteness)."""


class FormatError(ValidationError):
    """A motion file does not match the `sjd-motion v1` layout."""


class StaleFrameError(ValidationError):
    """A keyframe arrived with a timestamp at or before the current buffer head."""


class DegenerateGeometryError(ValueError):
    """Point configuration too degenerate for alignment (covariance rank < 2)."""


class EmptyWindowError(ValueError):
    """A metric window contains no frames (e.g. Active MPJPE with a fall at t=0)."""


class DegenerateInputError(ValueError):
    """A statistic is undefined on this input (zero variance, zero mean, ...)."""
