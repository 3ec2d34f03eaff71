"""Exception types raised across the toolkit.

Everything derives from SppError so callers (and the CLI) can treat the
whole family as "validation failed" without enumerating subclasses.
"""


class SppError(Exception):
    """Base class for all toolkit errors."""


class UnsupportedFormatError(SppError):
    """WAV file is not mono 16-bit PCM at 16 kHz; pre-convert the dataset."""


class SilentInputError(SppError):
    """A signal with zero RMS was passed where audio content is required."""


class EmptyDirectoryError(SppError):
    """No readable WAV files found."""


class EmptyManifestError(SppError):
    """Manifest has no entries."""


class InvalidLengthError(SppError):
    """Window length must be even and at least 2."""


class TooShortError(SppError):
    """Signal shorter than one analysis frame."""


class EmptyInputError(SppError):
    """At least one matrix is required."""


class BinCountMismatchError(SppError):
    """Frequency bin counts disagree."""


class ShapeMismatchError(SppError):
    """Matrix shapes disagree."""


class LengthMismatchError(SppError):
    """Sequence lengths disagree."""


class AllSilentError(SppError):
    """Clean power is identically zero; speech labels are undefined."""


class InvalidDimsError(SppError):
    """Model dimensions must be positive."""


class StaleCacheError(SppError):
    """Backward pass received a cache from a different forward pass."""


class BinOutOfRangeError(SppError):
    """Frequency bin index outside [0, K)."""


class DivergedLossError(SppError):
    """Training loss became non-finite; lower the learning rate."""


class VersionMismatchError(SppError):
    """Bundle file uses an unsupported format version."""


class CorruptFileError(SppError):
    """Bundle file is truncated or fails its checksum."""


class SingleClassError(SppError):
    """Labels contain only one class; ROC is undefined."""
