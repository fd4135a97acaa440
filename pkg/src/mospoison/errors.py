"""Exception hierarchy, grouped by the CLI exit code each family maps to."""


class MosPoisonError(Exception):
    """Base class for all package errors."""


class ConfigError(MosPoisonError):
    """Invalid experiment configuration (CLI exit code 2)."""


class DataError(MosPoisonError):
    """Invalid or unusable data: files, datasets, clips (CLI exit code 3)."""


class NumericError(MosPoisonError):
    """Numerical failure during training or evaluation (CLI exit code 4)."""


class UnsupportedFormatError(DataError):
    """WAV file is not mono PCM16 at the pipeline sample rate."""


class CorruptFileError(DataError):
    """WAV file has truncated or malformed chunks."""


class DatasetTooSmallError(DataError):
    """Dataset has too few clips for the requested operation."""


class ClipTooShortError(DataError):
    """Clip is shorter than the trigger to be implanted."""


class NonFiniteLossError(NumericError):
    """Training loss became NaN or infinite."""
