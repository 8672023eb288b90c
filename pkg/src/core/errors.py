"""
Error hierarchy for Triplet Layout.
Every error carries the process exit code the command line maps it to.
"""


class TripletLayoutError(Exception):
    """Base class for all errors raised by the package."""

    exit_code = 1


class ConfigError(TripletLayoutError):
    """Invalid configuration file, key, value or seed."""

    exit_code = 2


class DataError(TripletLayoutError):
    """Input data does not match the expected schema or vocabulary."""

    exit_code = 3


class GeometryError(DataError):
    """A box or mask grid violates its invariants."""


class SceneGenerationError(DataError):
    """Scene priors could not satisfy the area/count constraints."""

    def __init__(self, message, attempts, scene_index=None):
        if scene_index is not None:
            message = f"scene {scene_index}: {message}"
        super().__init__(f"{message} (after {attempts} attempts)")
        self.attempts = attempts
        self.scene_index = scene_index


class VocabMismatchError(DataError):
    """Checkpoint shapes or vocabulary do not match the data."""


class NumericalError(TripletLayoutError):
    """Training produced a non-finite value."""

    exit_code = 4


class TapeError(NumericalError):
    """The recorded tape cannot be differentiated as requested."""


class StorageError(TripletLayoutError):
    """Reading or writing a file failed."""

    exit_code = 5

    def __init__(self, path, reason):
        super().__init__(f"{path}: {reason}")
        self.path = str(path)
