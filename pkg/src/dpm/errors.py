"""Exception types raised by the solver."""


class DPMError(Exception):
    """Base class for solver errors."""


class ProjectionError(DPMError):
    """Projection onto the curve did not converge."""


class OutOfTubeError(DPMError):
    """A point lies outside the tube where the normal projection is unique."""


class DegenerateLevelSetError(DPMError):
    """The level function has a vanishing gradient near the curve."""


class ClearanceError(DPMError):
    """The curve is too close to the edge of an auxiliary rectangle."""


class IllPosedBasisError(DPMError):
    """The boundary equations are rank deficient for the chosen basis."""


class ConfigurationError(DPMError):
    """Invalid or inconsistent solver configuration."""
