"""Small shared helpers: ordered parallel map, hashing, natural sort."""

import hashlib
import os
import re
from concurrent.futures import ThreadPoolExecutor

__all__ = ["default_jobs", "parallel_map", "sha256_hex", "natural_key"]

_NATURAL_RE = re.compile(r"(\d+)")


def default_jobs() -> int:
    """Worker count from SIMPACK_JOBS, defaulting to 1."""
    raw = os.environ.get("SIMPACK_JOBS", "").strip()
    if raw:
        try:
            value = int(raw)
        except ValueError:
            return 1
        return max(1, value)
    return 1


def parallel_map(fn, items, jobs: int = 1) -> list:
    """Apply ``fn`` to ``items`` with ``jobs`` worker threads.

    Results are returned in input order regardless of completion order, so
    callers produce identical output for any worker count.
    """
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def natural_key(text: str):
    """Sort key treating digit runs as numbers, so g2 sorts before g10."""
    return tuple(
        int(part) if part.isdigit() else part
        for part in _NATURAL_RE.split(text)
    )
