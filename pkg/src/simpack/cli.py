"""Command-line interface.

Subcommands: ``synth`` (corpus generation), ``features`` (extraction to
.sft files), ``group`` (print a selection), ``pack``/``unpack``
(archives), and ``bench`` (CF sweep to CSV).  Exit status: 0 success, 1
usage error, 2 data error, 3 external backend failure.  Diagnostics go to
stderr; machine-readable output goes to stdout or files.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .backends import BackendSpec
from .bench import csv_report, load_config, run_experiment
from .errors import DataError, ExternalBackendFailed
from .feature_cache import load_or_extract, save_feature_set
from .longrange import LrParams
from .similarity import (
    PhotoGroup,
    cluster_group,
    build_graph,
    load_manifest,
    mixed_group,
    top_n,
)
from .synth import SynthParams, synth_corpus
from .util import default_jobs, parallel_map

__all__ = ["main", "entry"]


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # noqa: D102 - argparse hook
        raise _UsageError(f"{self.prog}: {message}")


def _add_jobs(p: argparse.ArgumentParser) -> None:
    p.add_argument("--jobs", type=int, default=None,
                   help="worker threads (default: SIMPACK_JOBS or 1)")


def _jobs_of(args) -> int:
    return args.jobs if args.jobs is not None else default_jobs()


def _build_parser() -> _Parser:
    parser = _Parser(prog="simpack",
                     description="Group similar images and pack them with a "
                                 "long-range deduplicating compressor.")
    parser.add_argument("--version", action="version",
                        version=f"simpack {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic PGM corpus")
    p.add_argument("-o", "--out", default="corpus", help="output directory")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--bases", type=int, default=12)
    p.add_argument("--variants", type=int, default=10)
    p.add_argument("--width", type=int, default=256)
    p.add_argument("--height", type=int, default=256)
    p.add_argument("--decoys", type=int, default=None,
                   help="decoy ranks per tag (default: min(4, variants//2))")
    p.add_argument("--pool", type=int, default=20,
                   help="unrelated images tagged 'random'")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("features", help="extract features to .sft files")
    p.add_argument("images", nargs="+", help="PNM image files")
    p.add_argument("-o", "--out", default=None,
                   help="output directory (default: next to each image)")
    p.add_argument("--cache", default=None, help="feature cache directory")
    _add_jobs(p)
    p.set_defaults(func=_cmd_features)

    p = sub.add_parser("group", help="print the image ids of a group")
    _add_group_flags(p, manifest_required=True)
    p.set_defaults(func=_cmd_group)

    p = sub.add_parser("pack", help="pack files or a manifest group")
    p.add_argument("files", nargs="*", help="files to pack, in order")
    p.add_argument("-o", "--out", default=None,
                   help="output archive (default: <label>.simg)")
    p.add_argument("--label", default="adhoc", help="group label")
    p.add_argument("--backend", default="lzss",
                   help="identity | lzss | ext:CMD[::DCMD]")
    p.add_argument("--min-match", type=int, default=64)
    p.add_argument("--hash-bits", type=int, default=22)
    p.add_argument("--max-chain", type=int, default=4)
    _add_group_flags(p, manifest_required=False)
    p.set_defaults(func=_cmd_pack)

    p = sub.add_parser("unpack", help="extract an archive")
    p.add_argument("archive", help="archive file")
    p.add_argument("-o", "--out", default=".", help="output directory")
    p.add_argument("--backend", default=None,
                   help="ext:CMD[::DCMD] for externally compressed archives")
    p.set_defaults(func=_cmd_unpack)

    p = sub.add_parser("bench", help="run the CF benchmark")
    p.add_argument("--config", default=None,
                   help="JSON config path, or 'default'")
    p.add_argument("--manifest", default=None,
                   help="existing corpus manifest (default: synthesize)")
    p.add_argument("-o", "--out", default="report.csv", help="CSV output")
    p.add_argument("--archive-dir", default=None,
                   help="also write every packed archive here")
    p.add_argument("--cache", default=None, help="feature cache directory")
    p.add_argument("--work", default=None,
                   help="corpus directory when synthesizing "
                        "(default: <out>.corpus)")
    _add_jobs(p)
    p.set_defaults(func=_cmd_bench)
    return parser


def _add_group_flags(p: argparse.ArgumentParser, manifest_required: bool) -> None:
    p.add_argument("--manifest", required=manifest_required, default=None)
    p.add_argument("--strategy", default=None,
                   choices=("top_n", "sift_picked", "mixed", "random"))
    p.add_argument("--tag", default=None)
    p.add_argument("--size", type=int, default=None)
    p.add_argument("--threshold", type=int, default=10)
    p.add_argument("--ratio", type=float, default=0.6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--group-label", default=None)
    p.add_argument("--cache", default=None, help="feature cache directory")
    _add_jobs(p)


def _select_group(args) -> tuple[PhotoGroup, dict[str, bytes], dict[str, str]]:
    """Build the requested group plus id->bytes and id->entry-name maps."""
    if args.strategy is None:
        raise _UsageError("simpack: --strategy is required with --manifest")
    entries = load_manifest(args.manifest)
    jobs = _jobs_of(args)
    label = args.group_label
    if args.strategy == "top_n":
        if args.tag is None or args.size is None:
            raise _UsageError("simpack: top_n needs --tag and --size")
        pool = [e for e in entries if args.tag in e.tags]
        group = top_n(pool, args.tag, args.size,
                      label=label if label else None)
        chosen = pool
    elif args.strategy == "sift_picked":
        if args.tag is None:
            raise _UsageError("simpack: sift_picked needs --tag")
        chosen = sorted((e for e in entries if args.tag in e.tags),
                        key=lambda e: e.relevance_rank)
        blobs = {e.image_id: Path(e.path).read_bytes() for e in chosen}

        def extract(entry):
            return load_or_extract(blobs[entry.image_id],
                                   image_id=entry.image_id,
                                   cache_dir=args.cache)

        sets = parallel_map(extract, chosen, jobs)
        graph = build_graph(sets, args.threshold, ratio=args.ratio, jobs=jobs)
        group = cluster_group(graph, label if label else "sift")
    else:
        if args.size is None:
            raise _UsageError(f"simpack: {args.strategy} needs --size")
        want_random = args.strategy == "random"
        chosen = [e for e in entries
                  if ("random" in e.tags) == want_random]
        group = mixed_group(chosen, args.size, args.seed,
                            label=label if label else None,
                            strategy=args.strategy)
    by_id = {e.image_id: e for e in entries}
    files = {i: Path(by_id[i].path).read_bytes() for i in group.image_ids}
    names = {i: Path(by_id[i].path).name for i in group.image_ids}
    return group, files, names


def _cmd_synth(args) -> int:
    params = SynthParams(seed=args.seed, n_bases=args.bases,
                         variants_per_base=args.variants, width=args.width,
                         height=args.height, decoys_per_base=args.decoys,
                         random_pool=args.pool)
    entries = synth_corpus(params, args.out)
    print(f"wrote {len(entries)} images", file=sys.stderr)
    print(Path(args.out) / "manifest.json")
    return 0


def _cmd_features(args) -> int:
    jobs = _jobs_of(args)

    def one(path_text: str):
        src = Path(path_text)
        data = src.read_bytes()
        fs = load_or_extract(data, image_id=src.stem, cache_dir=args.cache)
        out_dir = Path(args.out) if args.out else src.parent
        out_dir.mkdir(parents=True, exist_ok=True)
        target = out_dir / (src.stem + ".sft")
        save_feature_set(fs, target)
        return target, len(fs)

    for target, count in parallel_map(one, args.images, jobs):
        print(f"{target}\t{count}")
    return 0


def _cmd_group(args) -> int:
    group, _, _ = _select_group(args)
    for image_id in group.image_ids:
        print(image_id)
    return 0


def _cmd_pack(args) -> int:
    from .archive import pack

    backend = BackendSpec.parse(args.backend)
    params = LrParams(args.min_match, args.hash_bits, args.max_chain)
    if args.manifest is not None:
        group, files, names = _select_group(args)
    elif args.files:
        ids = [Path(f).name for f in args.files]
        group = PhotoGroup(args.label, "mixed", tuple(ids))
        files = {Path(f).name: Path(f).read_bytes() for f in args.files}
        names = None
    else:
        raise _UsageError("simpack: pack needs input files or --manifest")
    blob = pack(group, files, params, backend, names)
    out = Path(args.out) if args.out else Path(f"{group.label}.simg")
    out.write_bytes(blob)
    s_old = sum(len(b) for b in files.values())
    print(f"{len(group)} files, {s_old} -> {len(blob)} bytes",
          file=sys.stderr)
    print(out)
    return 0


def _cmd_unpack(args) -> int:
    from .archive import unpack

    external = BackendSpec.parse(args.backend) if args.backend else None
    blob = Path(args.archive).read_bytes()
    results = unpack(blob, args.out, external)
    for name, _ in results:
        print(Path(args.out) / name)
    return 0


def _cmd_bench(args) -> int:
    config = load_config(args.config)
    jobs = _jobs_of(args)
    if args.manifest is not None:
        manifest = args.manifest
    else:
        out = Path(args.out)
        work = Path(args.work) if args.work else out.with_suffix(".corpus")
        entries = synth_corpus(config.synth_params(), work)
        print(f"synthesized {len(entries)} images in {work}", file=sys.stderr)
        manifest = work / "manifest.json"
    report = run_experiment(
        manifest, config.strategies, config.sizes, config.backend_specs(),
        threshold=config.threshold, ratio=config.ratio,
        lr_params=config.lr_params(), sample_size=config.sample_size,
        mixed_seeds=config.mixed_seeds, random_seeds=config.random_seeds,
        jobs=jobs, cache_dir=args.cache, archive_dir=args.archive_dir,
    )
    csv_report(report, args.out)
    for tag in report.anomalies:
        print(f"anomaly: {tag} sift cluster is small", file=sys.stderr)
    print(f"{len(report.rows)} rows -> {args.out}", file=sys.stderr)
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "command", None) is None:
            parser.print_usage(sys.stderr)
            return 1
        return args.func(args)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # argparse --help/--version
        code = exc.code
        return code if isinstance(code, int) else 0
    except ExternalBackendFailed as exc:
        print(f"simpack: external backend: {exc}", file=sys.stderr)
        return 3
    except DataError as exc:
        print(f"simpack: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"simpack: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"simpack: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
