"""Long-range deduplicating compressor.

Stage one scans the input once, left to right, replacing repeats of
64-byte-or-longer windows seen anywhere earlier in the stream with
(distance, length) match tokens.  Candidate positions come from a rolling
Rabin-Karp hash over ``min_match``-byte windows (64-bit multiplicative
state, bucket index masked to ``hash_bits``); each bucket keeps the most
recent ``max_chain`` positions.  Candidates are verified byte-for-byte and
extended forward as far as they agree, so hash collisions never corrupt
output.  Stage two feeds the serialized token stream through a pluggable
backend (identity, builtin LZSS, or an external command).

Token stream serialization (all integers are LEB128 varints):
  - total raw length
  - repeated: literal length, literal bytes, distance, length
    (distance 0 marks end of stream and carries no length;
    matches may overlap their own output, i.e. length > distance)

Container layout (fixed 12-byte header, little-endian):
  magic "LRC1" | u16 version | u8 backend id | u32 min_match | u8 reserved
"""

from dataclasses import dataclass
from typing import Union

import numpy as np

from . import backends as _backends
from ._jit import njit
from .errors import (
    BadDistance,
    BadLength,
    BadMagic,
    CorruptPayload,
    UnsupportedVersion,
)
from .vint import read_uvarint, write_uvarint

__all__ = [
    "LrParams",
    "Literal",
    "Match",
    "TokenStream",
    "lr_encode",
    "lr_decode",
    "serialize_tokens",
    "parse_tokens",
    "compress",
    "decompress",
]

MAGIC = b"LRC1"
VERSION = 1

# Odd 64-bit multiplier (golden ratio); odd keeps the map mod 2^64 a bijection.
MULTIPLIER = 0x9E3779B97F4A7C15


@dataclass(frozen=True)
class LrParams:
    """Tuning knobs for the long-range scan."""

    min_match: int = 64
    hash_bits: int = 22
    max_chain: int = 4

    def __post_init__(self):
        if self.min_match < 16:
            raise ValueError("min_match must be at least 16")
        if not 16 <= self.hash_bits <= 28:
            raise ValueError("hash_bits must be in 16..28")
        if not 1 <= self.max_chain <= 255:
            raise ValueError("max_chain must be in 1..255")


@dataclass(frozen=True)
class Literal:
    data: bytes

    @property
    def length(self) -> int:
        return len(self.data)


@dataclass(frozen=True)
class Match:
    distance: int
    length: int


Token = Union[Literal, Match]


@dataclass
class TokenStream:
    tokens: list

    def raw_length(self) -> int:
        total = 0
        for token in self.tokens:
            total += token.length if isinstance(token, Match) else len(token.data)
        return total


@njit
def _window_hash(data, pos, width, mult):
    """Hash of data[pos:pos+width]; full 64-bit wrapping state."""
    h = np.uint64(0)
    m = np.uint64(mult)
    for k in range(width):
        h = h * m + np.uint64(data[pos + k])
    return h


@njit
def _roll_hash(h, outgoing, incoming, mult, pow_w):
    """Slide the window one byte: drop ``outgoing``, append ``incoming``."""
    m = np.uint64(mult)
    return (h - np.uint64(outgoing) * np.uint64(pow_w)) * m + np.uint64(incoming)


@njit
def _table_insert(table, base, max_chain, value):
    # Slot values grow with position, so the smallest slot is the oldest
    # entry (or an empty one, stored as 0).  Replace it.
    oldest_k = 0
    oldest_v = table[base]
    for k in range(1, max_chain):
        v = table[base + k]
        if v < oldest_v:
            oldest_v = v
            oldest_k = k
    table[base + oldest_k] = value


@njit
def _lr_scan(data, min_match, hash_bits, max_chain, mult, pow_w, table):
    """Find (position, distance, length) repeats; returns (matches, count).

    ``table`` holds ``max_chain`` int64 slots per bucket.  A slot stores
    ``(position + 1) << 16 | tag`` where the tag is 16 hash bits not used
    for the bucket index and 0 means empty.  Probes scan every slot of the
    bucket; mismatched tags are rejected without touching the data, which
    keeps probing cheap on incompressible input.  The longest verified
    candidate wins, ties going to the most recent position, and inserts
    evict the oldest slot, so a bucket always holds the most recent
    ``max_chain`` positions hashed to it.
    """
    n = data.shape[0]
    cap = 1024
    found = np.empty((cap, 3), dtype=np.int64)
    nfound = 0
    if n < min_match:
        return found, nfound

    mask = np.uint64((1 << hash_bits) - 1)
    tag_shift = np.uint64(hash_bits)
    h = _window_hash(data, 0, min_match, mult)
    pos = 0
    while pos + min_match <= n:
        base = int(h & mask) * max_chain
        tag = int((h >> tag_shift) & np.uint64(0xFFFF))
        best_len = 0
        best_src = -1
        oldest_k = 0
        oldest_v = table[base]
        for k in range(max_chain):
            slot = table[base + k]
            if slot < oldest_v:
                oldest_v = slot
                oldest_k = k
            if slot == 0 or (slot & 0xFFFF) != tag:
                continue
            src = (slot >> 16) - 1
            # verify, then extend while bytes agree
            length = 0
            limit = n - pos
            while length < limit and data[src + length] == data[pos + length]:
                length += 1
            if length >= min_match and (
                length > best_len or (length == best_len and src > best_src)
            ):
                best_len = length
                best_src = src
        if best_len >= min_match:
            if nfound == cap:
                bigger = np.empty((cap * 2, 3), dtype=np.int64)
                bigger[:cap] = found
                found = bigger
                cap *= 2
            found[nfound, 0] = pos
            found[nfound, 1] = pos - best_src
            found[nfound, 2] = best_len
            nfound += 1
            # sparse re-index inside the matched span
            ins = pos
            end = pos + best_len
            while ins < end and ins + min_match <= n:
                hh = _window_hash(data, ins, min_match, mult)
                value = ((ins + 1) << 16) | int((hh >> tag_shift) & np.uint64(0xFFFF))
                _table_insert(table, int(hh & mask) * max_chain, max_chain, value)
                ins += min_match
            pos = end
            if pos + min_match <= n:
                h = _window_hash(data, pos, min_match, mult)
        else:
            table[base + oldest_k] = ((pos + 1) << 16) | tag
            if pos + min_match < n:
                h = _roll_hash(h, data[pos], data[pos + min_match], mult, pow_w)
            pos += 1
    return found, nfound


def _effective_hash_bits(n: int, params: LrParams) -> int:
    """Bucket count for an input: ``hash_bits`` caps it, input size trims it.

    A table can never usefully hold more than one slot ring per indexed
    position, so small inputs get proportionally small tables.  This keeps
    the working set cache-friendly without changing which matches a large
    input sees.  The result depends only on the input length and params,
    preserving determinism.
    """
    bits = 12
    while (1 << bits) * params.max_chain < n and bits < params.hash_bits:
        bits += 1
    return bits


def _scan_matches(data: np.ndarray, params: LrParams) -> np.ndarray:
    if data.shape[0] >= 1 << 47:
        raise ValueError("input too large for the position index")
    pow_w = pow(MULTIPLIER, params.min_match - 1, 1 << 64)
    bits = _effective_hash_bits(data.shape[0], params)
    table = np.zeros((1 << bits) * params.max_chain, dtype=np.int64)
    with np.errstate(over="ignore"):
        found, nfound = _lr_scan(
            data,
            params.min_match,
            bits,
            params.max_chain,
            np.uint64(MULTIPLIER),
            np.uint64(pow_w),
            table,
        )
    return np.array(found[:nfound], dtype=np.int64)


def lr_encode(data: bytes, params: LrParams = LrParams()) -> TokenStream:
    """Tokenize ``data`` into literals and long-range matches.

    Inputs shorter than ``min_match`` come back as a single literal.
    Decoding the result always reproduces ``data`` exactly.
    """
    view = memoryview(data)
    arr = np.frombuffer(view, dtype=np.uint8)
    tokens: list = []
    prev = 0
    if arr.shape[0] >= params.min_match:
        for pos, dist, length in _scan_matches(arr, params):
            if pos > prev:
                tokens.append(Literal(bytes(view[prev:pos])))
            tokens.append(Match(int(dist), int(length)))
            prev = int(pos + length)
    if prev < len(data) or not tokens:
        tokens.append(Literal(bytes(view[prev:])))
    return TokenStream(tokens)


def lr_decode(stream: TokenStream) -> bytes:
    """Reconstruct the original bytes from a token stream.

    Raises ``BadDistance`` when a match reaches before the start of the
    output and ``BadLength`` when a match length is not positive.
    """
    out = bytearray()
    for token in stream.tokens:
        if isinstance(token, Literal):
            out += token.data
        else:
            dist, length = token.distance, token.length
            if dist < 1 or dist > len(out):
                raise BadDistance(
                    f"distance {dist} with only {len(out)} bytes produced"
                )
            if length < 1:
                raise BadLength(f"match length {length} is not positive")
            if dist >= length:
                start = len(out) - dist
                out += out[start : start + length]
            else:
                # Overlapping match: the source pattern repeats with
                # period ``dist``, so copy it in whole-period chunks.
                pattern = out[-dist:]
                reps, tail = divmod(length, dist)
                out += pattern * reps + pattern[:tail]
    return bytes(out)


def serialize_tokens(stream: TokenStream) -> bytes:
    """Encode a token stream into its byte form."""
    buf = bytearray()
    write_uvarint(buf, stream.raw_length())
    pending = b""
    for token in stream.tokens:
        if isinstance(token, Literal):
            pending += token.data
        else:
            write_uvarint(buf, len(pending))
            buf += pending
            pending = b""
            write_uvarint(buf, token.distance)
            write_uvarint(buf, token.length)
    write_uvarint(buf, len(pending))
    buf += pending
    write_uvarint(buf, 0)  # distance 0 terminates the stream
    return bytes(buf)


def parse_tokens(blob: bytes) -> TokenStream:
    """Inverse of ``serialize_tokens``; raises ``CorruptPayload``."""
    try:
        total, pos = read_uvarint(blob, 0)
        tokens: list = []
        seen = 0
        while True:
            lit_len, pos = read_uvarint(blob, pos)
            if pos + lit_len > len(blob):
                raise CorruptPayload("literal overruns the payload")
            if lit_len:
                tokens.append(Literal(blob[pos : pos + lit_len]))
                seen += lit_len
                pos += lit_len
            dist, pos = read_uvarint(blob, pos)
            if dist == 0:
                break
            length, pos = read_uvarint(blob, pos)
            if length == 0:
                raise CorruptPayload("zero-length match token")
            tokens.append(Match(dist, length))
            seen += length
    except ValueError as exc:
        raise CorruptPayload(str(exc)) from exc
    if pos != len(blob):
        raise CorruptPayload("trailing bytes after stream terminator")
    if seen != total:
        raise CorruptPayload(
            f"token lengths sum to {seen}, header promises {total}"
        )
    if not tokens:
        tokens.append(Literal(b""))
    return TokenStream(tokens)


def _pack_header(backend_id: int, min_match: int) -> bytes:
    buf = bytearray(MAGIC)
    buf += VERSION.to_bytes(2, "little")
    buf.append(backend_id)
    buf += min_match.to_bytes(4, "little")
    buf.append(0)  # reserved
    return bytes(buf)


def compress(
    data: bytes,
    params: LrParams = LrParams(),
    backend: "_backends.BackendSpec | None" = None,
) -> bytes:
    """Full pipeline: long-range scan, serialize, second-stage backend."""
    if backend is None:
        backend = _backends.BackendSpec.lzss()
    stream = lr_encode(data, params)
    payload = _backends.backend_compress(backend, serialize_tokens(stream))
    return _pack_header(backend.id, params.min_match) + payload


def decompress(
    blob: bytes,
    external: "_backends.BackendSpec | None" = None,
) -> bytes:
    """Invert ``compress``.

    ``external`` supplies the command pair when the container was written
    with an external backend; builtin backends need no help.  Raises
    ``BadMagic``, ``UnsupportedVersion``, or ``CorruptPayload``.
    """
    if len(blob) < 12:
        raise BadMagic("blob shorter than a container header")
    if blob[:4] != MAGIC:
        raise BadMagic(f"expected {MAGIC!r}, found {bytes(blob[:4])!r}")
    version = int.from_bytes(blob[4:6], "little")
    if version != VERSION:
        raise UnsupportedVersion(f"container version {version} not supported")
    backend_id = blob[6]
    backend = _backends.resolve_backend(backend_id, external)
    serialized = _backends.backend_decompress(backend, bytes(blob[12:]))
    return lr_decode(parse_tokens(serialized))
