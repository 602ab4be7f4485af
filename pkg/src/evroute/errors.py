"""Exception types shared across the package."""


class EvrouteError(Exception):
    """Base class for all package-specific errors."""


class NoInitialSolutionError(EvrouteError):
    """The best-fit-decreasing construction could not place every event."""


class GenerationFailedError(EvrouteError):
    """Instance synthesis exhausted its retry budget."""


class InstanceTooLargeError(EvrouteError):
    """The exhaustive oracle refuses instances above its size guard."""


class NoSolutionFoundError(EvrouteError):
    """A solver finished without producing any feasible schedule."""


class InstanceFormatError(EvrouteError):
    """An instance file could not be parsed or fails schema validation.

    ``offset`` carries the byte/character offset of the parse failure when
    one is known, otherwise -1.
    """

    def __init__(self, message: str, offset: int = -1):
        super().__init__(message)
        self.offset = offset


class UnsupportedVersionError(InstanceFormatError):
    """The instance file declares a format version this build cannot read."""
