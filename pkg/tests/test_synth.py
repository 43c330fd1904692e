"""Synthetic corpus generation: determinism, structure, usefulness."""

from pathlib import Path

import pytest

from simpack.feature_cache import load_or_extract
from simpack.matching import match_features
from simpack.pnm import parse_pnm
from simpack.similarity import load_manifest
from simpack.synth import SynthParams, decoy_ranks, synth_corpus


class TestParams:
    def test_defaults(self):
        params = SynthParams()
        assert params.decoys_per_base == min(4, params.variants_per_base // 2)

    def test_validation(self):
        with pytest.raises(ValueError):
            SynthParams(n_bases=0)
        with pytest.raises(ValueError):
            SynthParams(variants_per_base=0)
        with pytest.raises(ValueError):
            SynthParams(width=32)
        with pytest.raises(ValueError):
            SynthParams(height=32)
        with pytest.raises(ValueError):
            SynthParams(random_pool=-1)
        with pytest.raises(ValueError):
            SynthParams(variants_per_base=6, decoys_per_base=4)

    def test_decoy_ranks_interleave_from_the_tail(self):
        params = SynthParams(variants_per_base=10, decoys_per_base=4)
        assert decoy_ranks(params) == {10, 8, 6, 4}
        none = SynthParams(variants_per_base=5, decoys_per_base=0)
        assert decoy_ranks(none) == set()
        one = SynthParams(variants_per_base=4, decoys_per_base=1)
        assert decoy_ranks(one) == {4}

    def test_rank_one_is_never_a_decoy(self):
        for vpb in range(1, 12):
            params = SynthParams(variants_per_base=vpb,
                                 decoys_per_base=vpb // 2)
            assert 1 not in decoy_ranks(params)


class TestGeneration:
    def test_regeneration_is_byte_identical(self, small_corpus, tmp_path):
        again = synth_corpus(small_corpus.params, tmp_path)
        assert len(again) == len(small_corpus.entries)
        for a, b in zip(small_corpus.entries, again):
            assert Path(a.path).name == Path(b.path).name
            assert Path(a.path).read_bytes() == Path(b.path).read_bytes()
        assert (tmp_path / "manifest.json").read_text() == \
            small_corpus.manifest.read_text()

    def test_manifest_loads_and_matches_entries(self, small_corpus):
        loaded = load_manifest(small_corpus.manifest)
        assert loaded == small_corpus.entries

    def test_corpus_structure(self, small_corpus):
        params = small_corpus.params
        entries = small_corpus.entries
        expected = params.n_bases * params.variants_per_base + params.random_pool
        assert len(entries) == expected

        tags = {t for e in entries for t in e.tags}
        assert tags == {f"t{b + 1:02d}" for b in range(params.n_bases)} | \
            {"random"}
        for b in range(params.n_bases):
            tag = f"t{b + 1:02d}"
            ranks = sorted(e.relevance_rank for e in entries if tag in e.tags)
            assert ranks == list(range(1, params.variants_per_base + 1))
        pool = [e for e in entries if "random" in e.tags]
        assert len(pool) == params.random_pool

    def test_images_are_valid_and_sized(self, small_corpus):
        for entry in small_corpus.entries:
            img = parse_pnm(Path(entry.path).read_bytes())
            assert (img.width, img.height) == (small_corpus.params.width,
                                               small_corpus.params.height)
            assert img.channels == 1
            assert entry.size_bytes == Path(entry.path).stat().st_size

    def test_single_variant_corpus(self, tmp_path):
        params = SynthParams(seed=3, n_bases=2, variants_per_base=1,
                             width=64, height=64, random_pool=0)
        entries = synth_corpus(params, tmp_path)
        assert len(entries) == 2
        assert all(e.relevance_rank == 1 for e in entries)


@pytest.fixture(scope="module")
def shared_counts(small_corpus, tmp_path_factory):
    """Match every variant and decoy against its tag's base image."""
    cache = tmp_path_factory.mktemp("feat_cache")
    params = small_corpus.params
    decoys = decoy_ranks(params)
    by_tag: dict = {}
    for e in small_corpus.entries:
        tag = e.tags[0]
        if tag == "random":
            continue
        by_tag.setdefault(tag, {})[e.relevance_rank] = e

    variant_counts, decoy_counts = [], []
    for tag, ranked in by_tag.items():
        base = load_or_extract(Path(ranked[1].path).read_bytes(),
                               image_id=ranked[1].image_id,
                               cache_dir=cache)
        for rank, e in ranked.items():
            if rank == 1:
                continue
            feats = load_or_extract(Path(e.path).read_bytes(),
                                    image_id=e.image_id, cache_dir=cache)
            shared = match_features(base, feats).shared_count
            if rank in decoys:
                decoy_counts.append(shared)
            else:
                variant_counts.append(shared)
    return variant_counts, decoy_counts


class TestFeatureSharing:
    def test_variants_share_features_with_base(self, shared_counts):
        variant_counts, _ = shared_counts
        assert variant_counts
        strong = sum(1 for c in variant_counts if c >= 10)
        assert strong / len(variant_counts) >= 0.8

    def test_decoys_do_not(self, shared_counts):
        _, decoy_counts = shared_counts
        assert decoy_counts
        assert all(c < 10 for c in decoy_counts)
