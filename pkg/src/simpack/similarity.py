"""Similarity graph construction and photo group selection.

Images become graph nodes; an edge joins two nodes whenever their feature
sets share at least ``threshold`` ratio-test matches.  Pack groups are then
drawn from the graph (the largest cluster), from relevance ranks, or by
seeded random sampling.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DuplicateImageId,
    ManifestError,
    NotEnoughEntries,
    PoolTooSmall,
)
from .matching import match_features
from .util import parallel_map

__all__ = [
    "STRATEGIES",
    "ManifestEntry",
    "PhotoGroup",
    "Cluster",
    "SimilarityGraph",
    "load_manifest",
    "save_manifest",
    "build_graph",
    "connected_components",
    "largest_cluster",
    "cluster_group",
    "top_n",
    "sift_picked",
    "mixed_group",
]

STRATEGIES = ("top_n", "sift_picked", "mixed", "random")


@dataclass(frozen=True)
class ManifestEntry:
    """One corpus image: where it lives and how relevant it is.

    ``relevance_rank`` is 1-based and unique within each tag; rank 1 is the
    most relevant image for that tag.
    """

    path: str
    image_id: str
    tags: tuple[str, ...]
    relevance_rank: int
    size_bytes: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "tags", tuple(self.tags))
        if self.relevance_rank < 1:
            raise ManifestError(
                f"relevance_rank must be >= 1, got {self.relevance_rank}"
            )
        if self.size_bytes < 0:
            raise ManifestError("size_bytes must be non-negative")


@dataclass(frozen=True)
class PhotoGroup:
    """An ordered image selection; the order is the pack concatenation order."""

    label: str
    strategy: str
    image_ids: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValueError(
                f"strategy must be one of {STRATEGIES}, got {self.strategy!r}"
            )
        object.__setattr__(self, "image_ids", tuple(self.image_ids))
        if len(set(self.image_ids)) != len(self.image_ids):
            raise ValueError(f"duplicate image ids in group {self.label!r}")

    def __len__(self) -> int:
        return len(self.image_ids)


@dataclass(frozen=True)
class Cluster:
    """A connected component of the similarity graph, members sorted."""

    members: tuple[int, ...]

    def __post_init__(self) -> None:
        members = tuple(sorted(self.members))
        if not members:
            raise ValueError("cluster must be non-empty")
        if len(set(members)) != len(members):
            raise ValueError("cluster members must be distinct")
        object.__setattr__(self, "members", members)

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class SimilarityGraph:
    """Thresholded match-count graph over ``n`` images.

    ``edges`` maps ordered pairs ``(i, j)`` with ``i < j`` to the shared
    feature count; only pairs at or above ``threshold`` are stored.
    """

    n: int
    edges: dict[tuple[int, int], int]
    threshold: int
    image_ids: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValueError("node count must be non-negative")
        if self.threshold < 1:
            raise ValueError("threshold must be >= 1")
        object.__setattr__(self, "image_ids", tuple(self.image_ids))
        if len(self.image_ids) != self.n:
            raise ValueError("image_ids length must equal node count")
        for (i, j), weight in self.edges.items():
            if not (0 <= i < j < self.n):
                raise ValueError(f"bad edge ({i}, {j}) for n={self.n}")
            if weight < self.threshold:
                raise ValueError(
                    f"edge ({i}, {j}) weight {weight} below threshold"
                )


def load_manifest(path) -> list[ManifestEntry]:
    """Read a JSON manifest and return its entries.

    Entry paths are resolved against the manifest's directory and must
    exist.  Image ids must be unique, and ranks unique within each tag.
    """
    p = Path(path)
    try:
        raw = json.loads(p.read_text("utf-8"))
    except (OSError, ValueError) as exc:
        raise ManifestError(f"cannot read manifest {p}: {exc}") from None
    if not isinstance(raw, list):
        raise ManifestError("manifest must be a JSON array")
    entries: list[ManifestEntry] = []
    seen_ids: set[str] = set()
    seen_ranks: set[tuple[str, int]] = set()
    for index, obj in enumerate(raw):
        if not isinstance(obj, dict):
            raise ManifestError(f"entry {index} is not an object")
        try:
            rel = obj["path"]
            image_id = obj["id"]
            tags = obj["tags"]
            rank = obj["rank"]
            size = obj["bytes"]
        except KeyError as exc:
            raise ManifestError(f"entry {index} missing key {exc}") from None
        if not isinstance(rel, str) or not isinstance(image_id, str):
            raise ManifestError(f"entry {index}: path and id must be strings")
        if not isinstance(tags, list) or not all(
            isinstance(t, str) for t in tags
        ):
            raise ManifestError(f"entry {index}: tags must be a string array")
        if isinstance(rank, bool) or not isinstance(rank, int):
            raise ManifestError(f"entry {index}: rank must be an integer")
        if isinstance(size, bool) or not isinstance(size, int):
            raise ManifestError(f"entry {index}: bytes must be an integer")
        if image_id in seen_ids:
            raise ManifestError(f"duplicate image id {image_id!r}")
        seen_ids.add(image_id)
        for tag in tags:
            key = (tag, rank)
            if key in seen_ranks:
                raise ManifestError(
                    f"duplicate rank {rank} within tag {tag!r}"
                )
            seen_ranks.add(key)
        resolved = p.parent / rel
        if not resolved.is_file():
            raise ManifestError(f"entry {index}: no such file {resolved}")
        entries.append(
            ManifestEntry(str(resolved), image_id, tuple(tags), rank, size)
        )
    return entries


def save_manifest(entries, path) -> None:
    """Write entries as a JSON manifest with directory-relative paths."""
    p = Path(path)
    rows = []
    for entry in entries:
        ep = Path(entry.path)
        try:
            rel = ep.relative_to(p.parent)
        except ValueError:
            rel = ep
        rows.append(
            {
                "path": rel.as_posix(),
                "id": entry.image_id,
                "tags": list(entry.tags),
                "rank": entry.relevance_rank,
                "bytes": entry.size_bytes,
            }
        )
    p.write_text(json.dumps(rows, indent=2) + "\n", "utf-8")


def build_graph(sets, threshold: int = 10, *, ratio: float = 0.6,
                jobs: int = 1) -> SimilarityGraph:
    """Match every image pair and keep edges with enough shared features.

    All n(n-1)/2 pairs are evaluated; an edge (i, j) is stored iff the two
    feature sets share at least ``threshold`` matches.  Pair matching may
    run on ``jobs`` worker threads; the result does not depend on ``jobs``.
    """
    if threshold < 1:
        raise ValueError(f"threshold must be >= 1, got {threshold}")
    sets = list(sets)
    ids = [s.image_id for s in sets]
    seen: set[str] = set()
    for image_id in ids:
        if image_id in seen:
            raise DuplicateImageId(f"duplicate image id {image_id!r}")
        seen.add(image_id)
    n = len(sets)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]

    def count(pair: tuple[int, int]) -> int:
        i, j = pair
        return match_features(sets[i], sets[j], ratio=ratio).shared_count

    counts = parallel_map(count, pairs, jobs)
    edges = {
        pair: shared
        for pair, shared in zip(pairs, counts)
        if shared >= threshold
    }
    return SimilarityGraph(n, edges, threshold, tuple(ids))


def connected_components(graph: SimilarityGraph) -> list[Cluster]:
    """Partition nodes into clusters, largest first.

    Ties break on the smallest member index, so singletons (isolated
    nodes) always trail the multi-node clusters.
    """
    parent = list(range(graph.n))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j in graph.edges:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)

    groups: dict[int, list[int]] = {}
    for node in range(graph.n):
        groups.setdefault(find(node), []).append(node)
    clusters = [Cluster(tuple(members)) for members in groups.values()]
    clusters.sort(key=lambda c: (-len(c), c.members[0]))
    return clusters


def largest_cluster(graph: SimilarityGraph) -> Cluster:
    """The biggest cluster; smaller ones are disregarded."""
    if graph.n < 1:
        raise ValueError("graph has no nodes")
    return connected_components(graph)[0]


def cluster_group(graph: SimilarityGraph, label: str = "sift") -> PhotoGroup:
    """PhotoGroup of the largest cluster, ordered by node index."""
    picked = largest_cluster(graph)
    ids = tuple(graph.image_ids[i] for i in picked.members)
    return PhotoGroup(label, "sift_picked", ids)


def top_n(entries, tag: str, n: int, *, label: str | None = None) -> PhotoGroup:
    """The ``n`` most relevant entries for ``tag``, best rank first."""
    if n < 1:
        raise ValueError(f"group size must be >= 1, got {n}")
    tagged = [e for e in entries if tag in e.tags]
    ranks = [e.relevance_rank for e in tagged]
    if len(set(ranks)) != len(ranks):
        raise ManifestError(f"duplicate ranks within tag {tag!r}")
    if len(tagged) < n:
        raise NotEnoughEntries(
            f"need {n} entries tagged {tag!r}, have {len(tagged)}"
        )
    tagged.sort(key=lambda e: e.relevance_rank)
    ids = tuple(e.image_id for e in tagged[:n])
    return PhotoGroup(label if label is not None else f"{tag}_top{n}",
                      "top_n", ids)


def sift_picked(sets, threshold: int = 10, *, ratio: float = 0.6,
                jobs: int = 1, label: str = "sift") -> PhotoGroup:
    """Images of the largest similarity cluster, ordered by node index."""
    sets = list(sets)
    if not sets:
        raise ValueError("need at least one feature set")
    graph = build_graph(sets, threshold, ratio=ratio, jobs=jobs)
    return cluster_group(graph, label)


def mixed_group(pool, size: int, seed: int, *, label: str | None = None,
                strategy: str = "mixed") -> PhotoGroup:
    """Seeded sample without replacement; order is the draw order."""
    if strategy not in ("mixed", "random"):
        raise ValueError(
            f"sampling strategy must be 'mixed' or 'random', got {strategy!r}"
        )
    if size < 1:
        raise ValueError(f"group size must be >= 1, got {size}")
    pool = list(pool)
    if size > len(pool):
        raise PoolTooSmall(
            f"cannot draw {size} images from a pool of {len(pool)}"
        )
    rng = np.random.Generator(np.random.PCG64(seed))
    order = rng.permutation(len(pool))[:size]
    ids = tuple(pool[i].image_id for i in order)
    return PhotoGroup(label if label is not None else f"{strategy}_{seed}",
                      strategy, ids)
