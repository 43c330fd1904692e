"""Similarity-grouped image packing.

PNM images are grouped by shared local features (a from-scratch
DoG/descriptor pipeline plus a thresholded match graph) and packed with a
long-range deduplicating compressor, so near-duplicate photos cost little
more than one copy.  A benchmark harness measures compression factors per
grouping strategy on a reproducible synthetic corpus.
"""

from .archive import CFRecord, compression_factor, pack, unpack
from .backends import BackendSpec
from .bench import (
    BenchConfig,
    CFReport,
    GroupStats,
    csv_report,
    load_config,
    run_experiment,
    stats,
)
from .errors import (
    DataError,
    ExternalBackendFailed,
    IoFailure,
    SimpackError,
)
from .feature_cache import (
    feature_set_from_bytes,
    feature_set_to_bytes,
    load_feature_set,
    load_or_extract,
    save_feature_set,
)
from .longrange import LrParams, compress, decompress
from .lzss import lzss_compress, lzss_decompress
from .matching import MatchResult, match_features
from .pnm import RawImage, from_array, parse_pnm, to_grayscale, write_pnm
from .sift import FeatureSet, Keypoint, ScaleSpaceParams, extract_features
from .similarity import (
    Cluster,
    ManifestEntry,
    PhotoGroup,
    SimilarityGraph,
    build_graph,
    cluster_group,
    connected_components,
    largest_cluster,
    load_manifest,
    mixed_group,
    save_manifest,
    sift_picked,
    top_n,
)
from .synth import SynthParams, synth_corpus

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "BackendSpec",
    "BenchConfig",
    "CFRecord",
    "CFReport",
    "Cluster",
    "DataError",
    "ExternalBackendFailed",
    "FeatureSet",
    "GroupStats",
    "IoFailure",
    "Keypoint",
    "LrParams",
    "ManifestEntry",
    "MatchResult",
    "PhotoGroup",
    "RawImage",
    "ScaleSpaceParams",
    "SimilarityGraph",
    "SimpackError",
    "SynthParams",
    "build_graph",
    "cluster_group",
    "compress",
    "compression_factor",
    "connected_components",
    "csv_report",
    "decompress",
    "extract_features",
    "feature_set_from_bytes",
    "feature_set_to_bytes",
    "from_array",
    "largest_cluster",
    "load_config",
    "load_feature_set",
    "load_manifest",
    "load_or_extract",
    "lzss_compress",
    "lzss_decompress",
    "match_features",
    "mixed_group",
    "pack",
    "parse_pnm",
    "run_experiment",
    "save_feature_set",
    "save_manifest",
    "sift_picked",
    "stats",
    "synth_corpus",
    "to_grayscale",
    "top_n",
    "unpack",
    "write_pnm",
]
