"""Exception hierarchy shared by all pipeline stages."""


class OverlapSegError(Exception):
    """Base class for every error raised by this package."""


class DegeneratePolygon(OverlapSegError, ValueError):
    pass


class DegenerateInput(OverlapSegError, ValueError):
    pass


class NoSeparation(OverlapSegError, ValueError):
    """The intensity histogram has a single occupied bin."""


class ZeroLengthLine(OverlapSegError, ValueError):
    pass


class DegenerateSegment(OverlapSegError, ValueError):
    pass


class FitFailure(OverlapSegError, RuntimeError):
    """No valid ellipse could be fitted to the given points."""


class EmptyVoteMap(OverlapSegError, RuntimeError):
    """All symmetry votes fell outside the image."""


class TooManySegments(OverlapSegError, ValueError):
    pass


class DegenerateEvidence(OverlapSegError, ValueError):
    pass


class SingularGram(OverlapSegError, RuntimeError):
    pass


class DimensionMismatch(OverlapSegError, ValueError):
    pass


class PlacementExhausted(OverlapSegError, RuntimeError):
    pass


class ImageReadError(OverlapSegError, OSError):
    """An input image is missing, unreadable or not a 2-D raster."""


class InvalidConfig(OverlapSegError, ValueError):
    pass


class SchemaMismatch(OverlapSegError, ValueError):
    """A JSON document does not follow the result/ground-truth schema."""
