"""Self-contained LZSS codec used as the builtin second-stage backend.

Stream layout:
  - 8-byte little-endian raw length
  - groups of up to 8 tokens, each group preceded by one flag byte
    (bit i set => token i is a match, clear => literal)
  - literal token: 1 raw byte
  - match token: u16 little-endian (distance - 1), u8 (length - 4)

Window is 64 KiB, matches are 4..259 bytes, and encoding is greedy with a
hash-chain match finder, so output is deterministic for a given input.
"""

import numpy as np

from ._jit import njit
from .errors import CorruptPayload

__all__ = ["lzss_compress", "lzss_decompress", "WINDOW", "MIN_MATCH", "MAX_MATCH"]

WINDOW = 65536
MIN_MATCH = 4
MAX_MATCH = MIN_MATCH + 255
_HASH_SIZE = 65536
_PROBE_LIMIT = 16
_HEADER = 8


@njit
def _lzss_encode_kernel(data, head, prev, out):
    n = data.shape[0]
    # raw length header, little-endian
    value = n
    for k in range(8):
        out[k] = value & 0xFF
        value >>= 8
    op = 8
    pos = 0
    while pos < n:
        flag_at = op
        out[flag_at] = 0
        op += 1
        bits = 0
        while bits < 8 and pos < n:
            best_len = 0
            best_dist = 0
            if pos + MIN_MATCH <= n:
                h = 0
                for k in range(MIN_MATCH):
                    h = ((h << 4) ^ int(data[pos + k])) & 0xFFFF
                limit = pos - WINDOW
                q = head[h]
                probes = 0
                max_len = n - pos
                if max_len > MAX_MATCH:
                    max_len = MAX_MATCH
                while q >= 0 and q >= limit and probes < _PROBE_LIMIT:
                    length = 0
                    while length < max_len and data[q + length] == data[pos + length]:
                        length += 1
                    if length >= MIN_MATCH and length > best_len:
                        best_len = length
                        best_dist = pos - q
                        if length == max_len:
                            break
                    nxt = prev[q & 0xFFFF]
                    if nxt >= q:
                        break
                    q = nxt
                    probes += 1
            if best_len >= MIN_MATCH:
                out[flag_at] = out[flag_at] | (1 << bits)
                d = best_dist - 1
                out[op] = d & 0xFF
                out[op + 1] = (d >> 8) & 0xFF
                out[op + 2] = best_len - MIN_MATCH
                op += 3
                end = pos + best_len
                while pos < end:
                    if pos + MIN_MATCH <= n:
                        h = 0
                        for k in range(MIN_MATCH):
                            h = ((h << 4) ^ int(data[pos + k])) & 0xFFFF
                        prev[pos & 0xFFFF] = head[h]
                        head[h] = pos
                    pos += 1
            else:
                out[op] = data[pos]
                op += 1
                if pos + MIN_MATCH <= n:
                    h = 0
                    for k in range(MIN_MATCH):
                        h = ((h << 4) ^ int(data[pos + k])) & 0xFFFF
                    prev[pos & 0xFFFF] = head[h]
                    head[h] = pos
                pos += 1
            bits += 1
    return op


@njit
def _lzss_decode_kernel(blob, out):
    m = blob.shape[0]
    n = out.shape[0]
    ip = 8
    op = 0
    while op < n:
        if ip >= m:
            return -1
        flag = int(blob[ip])
        ip += 1
        bits = 0
        while bits < 8 and op < n:
            if flag & (1 << bits):
                if ip + 3 > m:
                    return -1
                dist = (int(blob[ip]) | (int(blob[ip + 1]) << 8)) + 1
                length = int(blob[ip + 2]) + MIN_MATCH
                ip += 3
                if dist > op:
                    return -2
                if op + length > n:
                    return -3
                for _ in range(length):
                    out[op] = out[op - dist]
                    op += 1
            else:
                if ip >= m:
                    return -1
                out[op] = blob[ip]
                op += 1
                ip += 1
            bits += 1
    if ip != m:
        return -4
    return 0


def lzss_compress(data: bytes) -> bytes:
    arr = np.frombuffer(data, dtype=np.uint8)
    n = arr.shape[0]
    head = np.full(_HASH_SIZE, -1, dtype=np.int64)
    prev = np.empty(WINDOW, dtype=np.int64)
    out = np.empty(_HEADER + n + n // 8 + 16, dtype=np.uint8)
    used = _lzss_encode_kernel(arr, head, prev, out)
    return out[:used].tobytes()


def lzss_decompress(blob: bytes) -> bytes:
    if len(blob) < _HEADER:
        raise CorruptPayload("stream shorter than its length header")
    n = int.from_bytes(blob[:_HEADER], "little")
    if n > (len(blob) - _HEADER) * (MAX_MATCH + 1):
        raise CorruptPayload("declared length impossible for stream size")
    arr = np.frombuffer(blob, dtype=np.uint8)
    out = np.empty(n, dtype=np.uint8)
    status = _lzss_decode_kernel(arr, out)
    if status == -1:
        raise CorruptPayload("stream ends mid-token")
    if status == -2:
        raise CorruptPayload("match distance reaches before output start")
    if status == -3:
        raise CorruptPayload("match overruns declared length")
    if status == -4:
        raise CorruptPayload("trailing bytes after final token")
    return out.tobytes()
