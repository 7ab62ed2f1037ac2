"""Exception types shared across the simulator.

Error messages are part of the public contract: callers (and the test
suite) match on them, so keep the wording stable.
"""


class GhostsimError(Exception):
    """Base class for all simulator errors."""


class GeometryError(GhostsimError):
    """Inconsistent imaging geometry (non-positive distances, bad grids)."""


class AliasingError(GhostsimError):
    """Requested wavelength/angle content is not representable on the grid."""


class EvanescentError(GhostsimError):
    """A seed component cannot be phase matched to a propagating wave."""


class OversamplingError(GhostsimError):
    """More seed components than distinguishable grid modes."""


class OffGridError(GhostsimError):
    """A component image shift lands outside the image-plane grid."""


class InsufficientShotsError(GhostsimError):
    """Correlation estimator called with too few shots."""


class InsufficientStatisticsError(GhostsimError):
    """Statistics report called with too few samples."""


class EmptyObjectError(GhostsimError):
    """Object mask contains no transmitting pixels."""


class EmptyImageError(GhostsimError):
    """Recovered map is identically zero."""


class ConfigError(GhostsimError):
    """Malformed configuration file or inconsistent parameter set."""


class StageError(GhostsimError):
    """Wraps a failure inside a named runner stage."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")
