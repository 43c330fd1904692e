"""Unsigned LEB128 varints used by the serialized formats."""

__all__ = ["write_uvarint", "read_uvarint"]

_MAX_BYTES = 10  # 64-bit values never need more


def write_uvarint(buf: bytearray, value: int) -> None:
    """Append ``value`` to ``buf`` as an unsigned LEB128 varint."""
    if value < 0:
        raise ValueError("varint value must be non-negative")
    if value >> 64:
        raise ValueError("varint value exceeds 64 bits")
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            buf.append(byte | 0x80)
        else:
            buf.append(byte)
            return


def read_uvarint(data, offset: int) -> tuple[int, int]:
    """Read a varint from ``data`` at ``offset``.

    Returns ``(value, new_offset)``.  Raises ``ValueError`` when the input
    ends mid-varint or the encoding exceeds 64 bits.
    """
    result = 0
    shift = 0
    n = len(data)
    for count in range(_MAX_BYTES):
        if offset >= n:
            raise ValueError("truncated varint")
        byte = data[offset]
        offset += 1
        result |= (byte & 0x7F) << shift
        if not byte & 0x80:
            if count == _MAX_BYTES - 1 and byte > 0x01:
                raise ValueError("varint exceeds 64 bits")
            return result, offset
        shift += 7
    raise ValueError("varint exceeds 64 bits")
