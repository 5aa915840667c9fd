"""Exception hierarchy.

``ConfigError`` maps to CLI exit code 2, every other ``CavityEOError`` to
exit code 1.
"""


class CavityEOError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(CavityEOError):
    """Invalid or inconsistent configuration input."""


class GeometryError(CavityEOError):
    """Ill-formed cross-section geometry (overlaps, degenerate regions)."""


class ResolutionError(CavityEOError):
    """Grid resolution too coarse for the smallest geometric feature."""


class SolverError(CavityEOError):
    """A linear or eigenvalue solve failed to converge."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ModeError(CavityEOError):
    """No acceptable optical mode found (confinement check failed etc.)."""


class BracketError(CavityEOError):
    """A scalar root solve could not bracket its target."""


class PipelineError(CavityEOError):
    """A pipeline stage failed; carries the stage name and original error."""

    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
