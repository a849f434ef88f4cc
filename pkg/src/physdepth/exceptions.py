"""Exception hierarchy.

Every error carries an ``exit_code`` so the CLI can map failures to stable
process exit statuses (2 input/parse, 3 geometry/domain, 4 empty overlap).
"""


class PhysDepthError(Exception):
    exit_code = 1


class InvalidInput(PhysDepthError, ValueError):
    exit_code = 2


class ParseError(InvalidInput):
    """Malformed calibration, sensor or raster file.

    ``location`` is a line number (text formats), a dotted JSON path, or a
    byte offset, whichever applies.
    """

    def __init__(self, message, location=None):
        self.location = location
        if location is not None:
            message = f"{message} (at {location})"
        super().__init__(message)


class GeometryError(PhysDepthError, ValueError):
    exit_code = 3


class BehindCamera(GeometryError):
    pass


class InvalidDepth(GeometryError):
    pass


class EmptyPrior(GeometryError):
    pass


class EmptyOverlap(PhysDepthError, ValueError):
    exit_code = 4


class EmptyPriorWarning(UserWarning):
    """A loss was evaluated over zero valid pixels and returned 0."""


class UnknownLabelWarning(UserWarning):
    """A label map contained class IDs missing from the schema."""
