"""Binary PNM (P5/P6) codec with 8-bit samples.

Parsing accepts the usual header liberties: ``#`` comments between header
tokens, runs of whitespace as separators, and exactly one whitespace byte
between the maxval and the pixel payload.  Writing always emits the
canonical header ``<magic>\\n<width> <height>\\n<maxval>\\n``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    MalformedHeader,
    PixelOutOfRange,
    TrailingGarbage,
    TruncatedPayload,
    UnknownMagic,
    UnsupportedMaxval,
)

__all__ = ["RawImage", "parse_pnm", "write_pnm", "to_grayscale", "from_array"]

_WHITESPACE = b" \t\n\r\x0b\x0c"

# Rec. 601 luma weights used for grayscale reduction.
_LUMA_R = 0.299
_LUMA_G = 0.587
_LUMA_B = 0.114


@dataclass(frozen=True)
class RawImage:
    """A decoded raster: row-major interleaved 8-bit samples.

    ``channels`` is 1 for grayscale (P5) and 3 for RGB (P6).  ``pixels``
    holds exactly ``width * height * channels`` bytes, none above
    ``maxval``.
    """

    width: int
    height: int
    channels: int
    maxval: int
    pixels: bytes

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be positive")
        if self.channels not in (1, 3):
            raise ValueError("channels must be 1 or 3")
        if not 1 <= self.maxval <= 255:
            raise ValueError("maxval must be in 1..255")
        expected = self.width * self.height * self.channels
        if len(self.pixels) != expected:
            raise ValueError(
                f"expected {expected} pixel bytes, got {len(self.pixels)}"
            )
        if self.maxval < 255:
            arr = np.frombuffer(self.pixels, dtype=np.uint8)
            if arr.size and int(arr.max()) > self.maxval:
                raise PixelOutOfRange(
                    f"sample value {int(arr.max())} exceeds maxval {self.maxval}"
                )

    def as_array(self) -> np.ndarray:
        """Pixels as a ``(height, width, channels)`` uint8 array."""
        arr = np.frombuffer(self.pixels, dtype=np.uint8)
        return arr.reshape(self.height, self.width, self.channels)


def _skip_separators(data: bytes, pos: int) -> int:
    """Advance past whitespace and '#' comments between header tokens."""
    n = len(data)
    while pos < n:
        byte = data[pos]
        if byte in _WHITESPACE:
            pos += 1
        elif byte == 0x23:  # '#'
            while pos < n and data[pos] != 0x0A:
                pos += 1
        else:
            break
    return pos


def _read_int_token(data: bytes, pos: int, what: str) -> tuple[int, int]:
    start = _skip_separators(data, pos)
    if start == pos and pos < len(data):
        # Tokens must be separated by at least one whitespace byte.
        raise MalformedHeader(f"missing separator before {what}")
    end = start
    n = len(data)
    while end < n and 0x30 <= data[end] <= 0x39:
        end += 1
    if end == start:
        raise MalformedHeader(f"expected digits for {what}")
    if end - start > 9:
        raise MalformedHeader(f"{what} is absurdly large")
    return int(data[start:end]), end


def parse_pnm(data: bytes) -> RawImage:
    """Decode binary PGM (P5) or PPM (P6) bytes into a ``RawImage``.

    Raises ``UnknownMagic``, ``MalformedHeader``, ``UnsupportedMaxval``,
    ``TruncatedPayload``, ``TrailingGarbage``, or ``PixelOutOfRange``.
    """
    magic = bytes(data[:2])
    if magic == b"P5":
        channels = 1
    elif magic == b"P6":
        channels = 3
    else:
        raise UnknownMagic(f"not a binary PNM file (magic {magic!r})")

    width, pos = _read_int_token(data, 2, "width")
    height, pos = _read_int_token(data, pos, "height")
    maxval, pos = _read_int_token(data, pos, "maxval")

    if width < 1 or height < 1:
        raise MalformedHeader("image dimensions must be positive")
    if maxval < 1 or maxval > 65535:
        raise MalformedHeader(f"maxval {maxval} out of range")
    if maxval > 255:
        raise UnsupportedMaxval(f"maxval {maxval} needs two-byte samples")

    # Exactly one whitespace byte separates the maxval from the payload.
    if pos >= len(data) or data[pos] not in _WHITESPACE:
        raise MalformedHeader("expected single whitespace after maxval")
    pos += 1

    expected = width * height * channels
    payload = bytes(data[pos:])
    if len(payload) < expected:
        raise TruncatedPayload(
            f"payload has {len(payload)} bytes, header promises {expected}"
        )
    if len(payload) > expected:
        raise TrailingGarbage(
            f"{len(payload) - expected} bytes follow the pixel payload"
        )
    return RawImage(width, height, channels, maxval, payload)


def write_pnm(image: RawImage) -> bytes:
    """Encode ``image`` with a canonical header.

    ``parse_pnm(write_pnm(img)) == img`` for every valid image, and output
    for a given image is byte-identical across runs and platforms.
    """
    magic = b"P5" if image.channels == 1 else b"P6"
    header = b"%s\n%d %d\n%d\n" % (magic, image.width, image.height, image.maxval)
    return header + image.pixels


def to_grayscale(image: RawImage) -> RawImage:
    """Reduce an RGB image to grayscale; grayscale input passes through.

    Luma is ``round(0.299 R + 0.587 G + 0.114 B)`` with round-half-up,
    clamped to ``[0, maxval]``.
    """
    if image.channels == 1:
        return image
    rgb = image.as_array().astype(np.float64)
    luma = _LUMA_R * rgb[:, :, 0] + _LUMA_G * rgb[:, :, 1] + _LUMA_B * rgb[:, :, 2]
    gray = np.floor(luma + 0.5)
    gray = np.clip(gray, 0, image.maxval).astype(np.uint8)
    return RawImage(image.width, image.height, 1, image.maxval, gray.tobytes())


def from_array(arr: np.ndarray, maxval: int = 255) -> RawImage:
    """Build a ``RawImage`` from a ``(h, w)`` or ``(h, w, 3)`` uint8 array."""
    arr = np.asarray(arr, dtype=np.uint8)
    if arr.ndim == 2:
        height, width = arr.shape
        channels = 1
    elif arr.ndim == 3 and arr.shape[2] in (1, 3):
        height, width, channels = arr.shape
    else:
        raise ValueError(f"unsupported array shape {arr.shape}")
    return RawImage(width, height, channels, maxval, arr.tobytes())
