class TspefError(Exception):
    """Base class for all errors raised by this package."""


class InvalidTourError(TspefError, ValueError):
    pass


class NotAVertexError(TspefError, ValueError):
    """An assignment vector that is not a permutation matrix was given where one is required."""


class EmptyInstanceError(TspefError, ValueError):
    pass


class DegenerateConstructionError(TspefError, ValueError):
    pass


class EnumerationRefused(TspefError, RuntimeError):
    """An exhaustive procedure would exceed its configured guard."""


class InstanceFormatError(TspefError, ValueError):
    pass
