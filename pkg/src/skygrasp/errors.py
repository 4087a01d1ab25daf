"""Exception hierarchy shared across the simulator."""


class SkygraspError(Exception):
    """Base class for all library errors."""


class ConfigError(SkygraspError):
    """Invalid or malformed configuration (scenario file, parameters)."""


class RejectedInputError(SkygraspError):
    """Input outside an operation's documented domain (pixel/depth range)."""


class PairingError(SkygraspError):
    """Depth image and segmentation mask do not belong together."""


class EmptyCloudError(SkygraspError):
    """An operation required a non-empty point cloud."""


class InsufficientPointsError(SkygraspError):
    """Too few points for the requested geometric estimate."""


class EmptyCandidatesError(SkygraspError):
    """Cutting-plane slab produced no grasp candidates, even after retry."""


class NoEstimatesError(SkygraspError):
    """Fusion called with no target estimates."""


class DegenerateGeometryError(SkygraspError):
    """Point sets too degenerate (e.g. collinear) for alignment."""


class NoOverlapError(SkygraspError):
    """Two trajectories share no associable timestamps."""


class InsufficientSamplesError(SkygraspError):
    """Trajectory too short for the requested metric."""


class FormatError(SkygraspError):
    """Malformed external file (TUM, PLY, PGM). Carries a line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ContractViolationError(SkygraspError):
    """State machine driven with an illegal state/input combination (a bug)."""
