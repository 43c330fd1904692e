"""Multi-file archive format built on the long-range compressor.

Layout (little-endian):
  magic "SIMG" | u16 version | label (varint length + UTF-8)
  | u8 backend id | u32 min_match | u8 hash_bits | u8 max_chain
  | varint entry count | per entry: varint name length, name UTF-8,
    varint raw byte length
  | compressed concatenated payload (an LRC1 container) to EOF

Member files are concatenated in group order and compressed as one stream,
so bytes shared between similar members deduplicate across file
boundaries.  The compression factor for a group is s_old / s_new where
s_old is the summed raw sizes and s_new the entire archive size.
"""

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping

from . import backends as _backends
from . import longrange as _lr
from .errors import (
    BadMagic,
    CorruptPayload,
    EntryTableMismatch,
    MissingFile,
    UnsupportedVersion,
    ZeroCompressedSize,
)
from .vint import read_uvarint, write_uvarint

__all__ = [
    "CFRecord",
    "pack",
    "unpack",
    "compression_factor",
]

MAGIC = b"SIMG"
VERSION = 1


@dataclass(frozen=True)
class CFRecord:
    """One benchmark measurement: a (group, strategy, compressor) cell."""

    group: str
    strategy: str
    compressor: str
    s_old: int
    s_new: int
    cf: float


def compression_factor(s_old: int, s_new: int) -> float:
    """CF = s_old / s_new.  Higher is better; 1.0 means no gain."""
    if s_old < 0:
        raise ValueError("s_old must be non-negative")
    if s_new < 1:
        raise ZeroCompressedSize("compressed size must be at least 1 byte")
    return s_old / s_new


Resolver = Callable[[str], bytes]


def _as_resolver(files) -> Resolver:
    if callable(files):
        return files
    if isinstance(files, Mapping):
        mapping = files

        def lookup(image_id: str) -> bytes:
            try:
                return mapping[image_id]
            except KeyError:
                raise MissingFile(f"no file contents for id {image_id!r}") from None

        return lookup
    raise TypeError("files must be a mapping or a callable")


def pack(
    group,
    files,
    params: _lr.LrParams = _lr.LrParams(),
    backend: "_backends.BackendSpec | None" = None,
    names: "Mapping[str, str] | None" = None,
) -> bytes:
    """Pack a photo group into archive bytes.

    ``files`` maps image ids to raw file bytes (a mapping or a callable).
    ``names`` optionally maps image ids to stored entry names; ids are used
    directly when omitted.  Entry order follows group order, and identical
    input always produces identical archive bytes.
    """
    if backend is None:
        backend = _backends.BackendSpec.lzss()
    if not group.image_ids:
        raise ValueError("cannot pack an empty group")
    resolve = _as_resolver(files)

    header = bytearray(MAGIC)
    header += VERSION.to_bytes(2, "little")
    label_utf8 = group.label.encode("utf-8")
    write_uvarint(header, len(label_utf8))
    header += label_utf8
    header.append(backend.id)
    header += params.min_match.to_bytes(4, "little")
    header.append(params.hash_bits)
    header.append(params.max_chain)

    write_uvarint(header, len(group.image_ids))
    chunks = []
    for image_id in group.image_ids:
        raw = resolve(image_id)
        if raw is None:
            raise MissingFile(f"no file contents for id {image_id!r}")
        name = names[image_id] if names else image_id
        name_utf8 = name.encode("utf-8")
        write_uvarint(header, len(name_utf8))
        header += name_utf8
        write_uvarint(header, len(raw))
        chunks.append(raw)

    payload = _lr.compress(b"".join(chunks), params, backend)
    return bytes(header) + payload


def _parse_archive(blob: bytes):
    if len(blob) < 6 or blob[:4] != MAGIC:
        raise BadMagic(f"not an archive (magic {bytes(blob[:4])!r})")
    version = int.from_bytes(blob[4:6], "little")
    if version != VERSION:
        raise UnsupportedVersion(f"archive version {version} not supported")
    try:
        label_len, pos = read_uvarint(blob, 6)
        if pos + label_len > len(blob):
            raise CorruptPayload("label overruns the archive")
        label = blob[pos : pos + label_len].decode("utf-8")
        pos += label_len
        if pos + 7 > len(blob):
            raise CorruptPayload("archive ends inside the parameter block")
        pos += 7  # backend id + min_match + hash_bits + max_chain
        count, pos = read_uvarint(blob, pos)
        entries = []
        for _ in range(count):
            name_len, pos = read_uvarint(blob, pos)
            if pos + name_len > len(blob):
                raise CorruptPayload("entry name overruns the archive")
            name = blob[pos : pos + name_len].decode("utf-8")
            pos += name_len
            raw_len, pos = read_uvarint(blob, pos)
            entries.append((name, raw_len))
    except (ValueError, UnicodeDecodeError) as exc:
        raise CorruptPayload(str(exc)) from exc
    return label, entries, pos


def _safe_relative(name: str) -> Path:
    path = Path(name)
    if path.is_absolute() or ".." in path.parts or not name:
        raise CorruptPayload(f"unsafe entry name {name!r}")
    return path


def unpack(
    archive: bytes,
    out_dir,
    external: "_backends.BackendSpec | None" = None,
) -> list[tuple[str, bytes]]:
    """Extract an archive into ``out_dir``.

    Returns ``(name, bytes)`` pairs in entry order.  Files land atomically:
    each is written to a temp name and renamed, and nothing is written at
    all when the payload fails validation.  Raises ``BadMagic``,
    ``CorruptPayload``, or ``EntryTableMismatch``.
    """
    label, entries, payload_start = _parse_archive(archive)
    del label
    payload = _lr.decompress(bytes(archive[payload_start:]), external)
    total = sum(raw_len for _, raw_len in entries)
    if total != len(payload):
        raise EntryTableMismatch(
            f"entry table promises {total} bytes, payload has {len(payload)}"
        )

    results = []
    offset = 0
    for name, raw_len in entries:
        results.append((name, payload[offset : offset + raw_len]))
        offset += raw_len

    # validate every name before touching the filesystem
    relatives = [_safe_relative(name) for name, _ in results]
    out_root = Path(out_dir)
    out_root.mkdir(parents=True, exist_ok=True)
    for relative, (_, data) in zip(relatives, results):
        target = out_root / relative
        target.parent.mkdir(parents=True, exist_ok=True)
        tmp = target.with_name(target.name + ".part")
        tmp.write_bytes(data)
        os.replace(tmp, target)
    return results
