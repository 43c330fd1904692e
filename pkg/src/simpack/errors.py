"""Exception hierarchy shared across the package.

``SimpackError`` is the common root.  ``DataError`` covers malformed or
inconsistent input (the CLI maps it to exit status 2) and
``ExternalBackendFailed`` covers failures of user-supplied compressor
commands (exit status 3).
"""


class SimpackError(Exception):
    """Base class for all errors raised by this package."""


class DataError(SimpackError):
    """Malformed, truncated, or inconsistent input data."""


# --- PNM codec ---------------------------------------------------------


class UnknownMagic(DataError):
    """Input does not start with a supported magic number."""


class MalformedHeader(DataError):
    """Header tokens are missing, non-numeric, or out of range."""


class UnsupportedMaxval(DataError):
    """Sample depth above one byte is not supported."""


class TruncatedPayload(DataError):
    """Pixel payload is shorter than the header promises."""


class TrailingGarbage(DataError):
    """Extra bytes follow the pixel payload."""


class PixelOutOfRange(DataError):
    """A sample value exceeds the declared maxval."""


# --- feature extraction ------------------------------------------------


class ImageTooSmall(DataError):
    """Image is too small for even a single scale-space octave."""


# --- similarity / grouping ---------------------------------------------


class ManifestError(DataError):
    """Manifest file is malformed or internally inconsistent."""


class DuplicateImageId(DataError):
    """Two feature sets or manifest entries share an image id."""


class NotEnoughEntries(DataError):
    """A tag does not have enough ranked entries for the request."""


class PoolTooSmall(DataError):
    """Sampling pool is smaller than the requested group size."""


# --- compression / containers ------------------------------------------


class BadMagic(DataError):
    """Serialized blob does not start with the expected magic."""


class UnsupportedVersion(DataError):
    """Container version is newer than this implementation."""


class CorruptPayload(DataError):
    """Compressed payload fails structural validation."""


class BadDistance(CorruptPayload):
    """A match token points before the start of the output."""


class BadLength(CorruptPayload):
    """A match token length is invalid or overruns the output."""


class ExternalBackendFailed(SimpackError):
    """An external compressor command failed or is unavailable."""


# --- archive ------------------------------------------------------------


class MissingFile(DataError):
    """A group member could not be resolved to file contents."""


class EntryTableMismatch(DataError):
    """Decompressed payload size disagrees with the entry table."""


class ZeroCompressedSize(DataError):
    """Compression factor is undefined for an empty archive."""


# --- benchmark -----------------------------------------------------------


class EmptyInput(DataError):
    """Statistics over an empty value list are undefined."""


# Filesystem failures surface as the interpreter's own OSError; the alias
# gives call sites a package-local name with the same exit-code mapping
# as DataError.
IoFailure = OSError
