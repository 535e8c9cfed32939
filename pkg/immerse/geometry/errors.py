"""
Exception hierarchy for the geometry core.
"""


class GeometryError(Exception):
    """Base class for every error raised by the geometry core."""


class SingularFrame(GeometryError):
    """A frame (or group element) is not invertible within tolerance."""


class DegenerateForm(GeometryError):
    """A bilinear form is degenerate or has the wrong signature."""


class OutOfDomain(GeometryError):
    """A point or stencil leaves the domain of a field or chart."""


class ShapeError(GeometryError):
    """Dimensions of the supplied data do not fit together."""


class SpecViolation(GeometryError):
    """Auxiliary data of a G-structure (or a model/structure pairing) is invalid."""


class FrameNotInStructure(GeometryError):
    """A frame section does not take values in the G-structure."""


class ResidualGate(GeometryError):
    """Compatibility residuals are above the solver threshold."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class IntegrationDiverged(GeometryError):
    """The frame integration left the realization or produced non-finite values."""


class UnsupportedModel(GeometryError):
    """The requested model space has no realization."""


class ConfigurationError(GeometryError):
    """A run configuration references unknown names or unreadable files."""


# Exit code 2 (CLI) and HTTP 400 vs exit code 1 and HTTP 409.
CONFIGURATION_ERRORS = (ConfigurationError, ShapeError, SpecViolation, UnsupportedModel, DegenerateForm)
MATHEMATICAL_ERRORS = (ResidualGate, IntegrationDiverged, FrameNotInStructure, SingularFrame, OutOfDomain)
