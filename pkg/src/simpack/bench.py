"""Benchmark harness: strategy x compressor sweeps over a photo corpus.

For every tag group the harness builds the configured groups (Top-N
windows, the SIFT-picked cluster), packs each with every compressor, and
records compression factors; mixed and random sample groups measure the
no-similarity baseline.  Reports are CSV with appended stats comments and
are byte-reproducible for a given corpus and config.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .archive import CFRecord, compression_factor, pack
from .backends import BackendSpec
from .errors import EmptyInput
from .feature_cache import load_or_extract
from .longrange import LrParams
from .similarity import (
    ManifestEntry,
    build_graph,
    cluster_group,
    load_manifest,
    mixed_group,
    top_n,
)
from .synth import SynthParams
from .util import parallel_map

__all__ = [
    "GroupStats",
    "CFReport",
    "BenchConfig",
    "stats",
    "load_config",
    "run_experiment",
    "csv_report",
]

STRATEGY_NAMES = ("top_n", "sift_picked", "mixed", "random")
RANDOM_TAG = "random"
ANOMALY_CLUSTER_SIZE = 3


@dataclass(frozen=True)
class GroupStats:
    """Max / mean / min / second-min over a list of CF values.

    ``second_min`` is positional (duplicates count), and equals ``min``
    for a single value.
    """

    max: float
    mean: float
    min: float
    second_min: float


def stats(values) -> GroupStats:
    """Summary statistics of CF values; the second minimum discounts a
    single outlier group."""
    values = [float(v) for v in values]
    if not values:
        raise EmptyInput("stats needs at least one value")
    ordered = sorted(values)
    second = ordered[1] if len(ordered) > 1 else ordered[0]
    return GroupStats(
        max=ordered[-1],
        mean=sum(values) / len(values),
        min=ordered[0],
        second_min=second,
    )


@dataclass(frozen=True)
class CFReport:
    """All measured rows plus per (strategy, compressor) statistics."""

    rows: tuple[CFRecord, ...]
    stats: dict[tuple[str, str], GroupStats]
    anomalies: tuple[str, ...]


@dataclass(frozen=True)
class BenchConfig:
    """Everything a bench run needs beyond the corpus location."""

    strategies: tuple[str, ...] = STRATEGY_NAMES
    sizes: tuple[int, ...] = (10, 5, 2)
    compressors: tuple[str, ...] = ("identity", "lzss")
    threshold: int = 10
    ratio: float = 0.6
    min_match: int = 64
    hash_bits: int = 22
    max_chain: int = 4
    sample_size: int = 10
    mixed_seeds: tuple[int, ...] = (11, 22)
    random_seeds: tuple[int, ...] = (101, 202)
    seed: int = 7
    corpus: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in self.strategies:
            if name not in STRATEGY_NAMES:
                raise ValueError(f"unknown strategy {name!r}")
        if any(s < 1 for s in self.sizes):
            raise ValueError("sizes must be positive")
        if self.sample_size < 1:
            raise ValueError("sample_size must be positive")
        for text in self.compressors:
            BackendSpec.parse(text)

    def lr_params(self) -> LrParams:
        return LrParams(self.min_match, self.hash_bits, self.max_chain)

    def backend_specs(self) -> list[BackendSpec]:
        return [BackendSpec.parse(text) for text in self.compressors]

    def synth_params(self) -> SynthParams:
        # a seed inside ``corpus`` overrides the experiment-level one
        return SynthParams(**{"seed": self.seed, **self.corpus})


def load_config(path=None) -> BenchConfig:
    """Config from a JSON file; ``None`` or ``"default"`` means defaults."""
    if path is None or str(path) == "default":
        return BenchConfig()
    raw = json.loads(Path(path).read_text("utf-8"))
    if not isinstance(raw, dict):
        raise ValueError("bench config must be a JSON object")
    kwargs = {}
    for key in ("strategies", "sizes", "compressors", "mixed_seeds",
                "random_seeds"):
        if key in raw:
            kwargs[key] = tuple(raw[key])
    for key in ("threshold", "ratio", "min_match", "hash_bits", "max_chain",
                "sample_size", "seed", "corpus"):
        if key in raw:
            kwargs[key] = raw[key]
    unknown = set(raw) - {
        "strategies", "sizes", "compressors", "mixed_seeds", "random_seeds",
        "threshold", "ratio", "min_match", "hash_bits", "max_chain",
        "sample_size", "seed", "corpus",
    }
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return BenchConfig(**kwargs)


def _tag_of(entry: ManifestEntry) -> str:
    return entry.tags[0] if entry.tags else ""


def run_experiment(manifest, strategies, sizes, compressors, *,
                   threshold: int = 10, ratio: float = 0.6,
                   lr_params: LrParams | None = None, sample_size: int = 10,
                   mixed_seeds=(11, 22), random_seeds=(101, 202),
                   jobs: int = 1, cache_dir=None,
                   archive_dir=None) -> CFReport:
    """Measure CF for every (group, strategy, compressor) cell.

    ``manifest`` is a path or a list of ManifestEntry.  SIFT-picked groups
    are derived from each tag's full Top window.  When ``archive_dir`` is
    given every packed archive is written there as
    ``<group>-<strategy>-<compressor>.simg``.  Results are independent of
    ``jobs``.
    """
    for name in strategies:
        if name not in STRATEGY_NAMES:
            raise ValueError(f"unknown strategy {name!r}")
    if isinstance(manifest, (str, Path)):
        entries = load_manifest(manifest)
    else:
        entries = list(manifest)
    lr_params = lr_params if lr_params is not None else LrParams()
    specs = [BackendSpec.parse(c) if isinstance(c, str) else c
             for c in compressors]
    if not strategies or not specs:
        return CFReport((), {}, ())

    tagged = [e for e in entries if RANDOM_TAG not in e.tags]
    pool = [e for e in entries if RANDOM_TAG in e.tags]
    tags = sorted({t for e in tagged for t in e.tags})
    blobs = {e.image_id: Path(e.path).read_bytes() for e in entries}

    features = {}
    if "sift_picked" in strategies:
        def extract(entry: ManifestEntry):
            return load_or_extract(blobs[entry.image_id], image_id=entry.image_id,
                                   cache_dir=cache_dir)
        for entry, fs in zip(tagged, parallel_map(extract, tagged, jobs)):
            features[entry.image_id] = fs

    # (csv group name, csv strategy name, PhotoGroup)
    cells: list[tuple[str, str, object]] = []
    anomalies: list[str] = []
    for tag in tags:
        tag_entries = sorted((e for e in tagged if tag in e.tags),
                             key=lambda e: e.relevance_rank)
        if "top_n" in strategies:
            for size in sizes:
                grp = top_n(tag_entries, tag, size, label=f"{tag}-top{size}")
                cells.append((tag, f"top{size}", grp))
        if "sift_picked" in strategies:
            sets = [features[e.image_id] for e in tag_entries]
            graph = build_graph(sets, threshold, ratio=ratio, jobs=jobs)
            grp = cluster_group(graph, label=f"{tag}-sift")
            if len(grp) < ANOMALY_CLUSTER_SIZE:
                anomalies.append(tag)
            cells.append((tag, "sift", grp))
    if "mixed" in strategies:
        for i, seed in enumerate(mixed_seeds):
            label = f"m{i + 1}"
            grp = mixed_group(tagged, sample_size, seed, label=label)
            cells.append((label, "mixed", grp))
    if "random" in strategies:
        for i, seed in enumerate(random_seeds):
            label = f"r{i + 1}"
            grp = mixed_group(pool, sample_size, seed, label=label,
                              strategy="random")
            cells.append((label, "random", grp))

    jobs_cells = [(g, s, grp, spec) for (g, s, grp) in cells for spec in specs]

    def run_cell(cell):
        gname, sname, grp, spec = cell
        files = {i: blobs[i] for i in grp.image_ids}
        blob = pack(grp, files, lr_params, spec)
        if archive_dir is not None:
            out = Path(archive_dir)
            out.mkdir(parents=True, exist_ok=True)
            (out / f"{gname}-{sname}-{spec.kind}.simg").write_bytes(blob)
        s_old = sum(len(b) for b in files.values())
        s_new = len(blob)
        return CFRecord(gname, sname, spec.kind, s_old, s_new,
                        compression_factor(s_old, s_new))

    records = parallel_map(run_cell, jobs_cells, jobs)
    rows = tuple(sorted(records,
                        key=lambda r: (r.group, r.strategy, r.compressor)))

    cf_lists: dict[tuple[str, str], list[float]] = {}
    for row in rows:
        cf_lists.setdefault((row.strategy, row.compressor), []).append(row.cf)
    report_stats = {key: stats(vals) for key, vals in sorted(cf_lists.items())}
    return CFReport(rows, report_stats, tuple(anomalies))


def csv_report(report: CFReport, path) -> None:
    """Write the report: header, one row per record, then comment rows
    flagging anomalies and summarizing per (strategy, compressor) stats."""
    lines = ["group,strategy,compressor,s_old,s_new,cf"]
    for row in report.rows:
        lines.append(
            f"{row.group},{row.strategy},{row.compressor},"
            f"{row.s_old},{row.s_new},{row.cf!r}"
        )
    for tag in report.anomalies:
        lines.append(f"#anomaly,{tag},sift cluster smaller than "
                     f"{ANOMALY_CLUSTER_SIZE}")
    for (strategy, compressor), st in sorted(report.stats.items()):
        lines.append(
            f"#stats,{strategy},{compressor},{st.max!r},{st.mean!r},"
            f"{st.min!r},{st.second_min!r}"
        )
    Path(path).write_text("\n".join(lines) + "\n", "utf-8")
