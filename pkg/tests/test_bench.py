"""Benchmark harness: stats oracle, config parsing, report shape."""

import json

import pytest

from simpack.bench import (
    ANOMALY_CLUSTER_SIZE,
    BenchConfig,
    CFReport,
    GroupStats,
    csv_report,
    load_config,
    run_experiment,
    stats,
)
from simpack.errors import EmptyInput, NotEnoughEntries

SMALL_KW = dict(sizes=(6, 3, 2), sample_size=4,
                mixed_seeds=(11, 22), random_seeds=(101, 202))


@pytest.fixture(scope="module")
def small_report(small_corpus, tmp_path_factory):
    cache = tmp_path_factory.mktemp("bench_cache")
    return run_experiment(
        small_corpus.manifest,
        ("top_n", "sift_picked", "mixed", "random"),
        SMALL_KW["sizes"],
        ("identity", "lzss"),
        sample_size=SMALL_KW["sample_size"],
        mixed_seeds=SMALL_KW["mixed_seeds"],
        random_seeds=SMALL_KW["random_seeds"],
        cache_dir=cache,
    )


def parse_csv(text: str):
    """Minimal reader for the report format: rows, anomalies, stats."""
    lines = text.strip("\n").split("\n")
    assert lines[0] == "group,strategy,compressor,s_old,s_new,cf"
    rows, anomalies, stat_rows = [], [], []
    for line in lines[1:]:
        parts = line.split(",")
        if parts[0] == "#anomaly":
            anomalies.append(parts[1])
        elif parts[0] == "#stats":
            stat_rows.append((parts[1], parts[2],
                              tuple(float(x) for x in parts[3:])))
        else:
            group, strategy, compressor, s_old, s_new, cf = parts
            rows.append((group, strategy, compressor,
                         int(s_old), int(s_new), float(cf)))
    return rows, anomalies, stat_rows


class TestStats:
    def test_sort_oracle(self, rng):
        for _ in range(200):
            values = rng.uniform(0.1, 9.0, rng.integers(1, 30)).tolist()
            got = stats(values)
            ordered = sorted(values)
            assert got.max == ordered[-1]
            assert got.min == ordered[0]
            assert got.second_min == (ordered[1] if len(ordered) > 1
                                      else ordered[0])
            assert got.mean == pytest.approx(sum(values) / len(values))
            assert got.min <= got.second_min <= got.max
            assert got.min <= got.mean <= got.max

    def test_single_value(self):
        got = stats([4.2])
        assert got == GroupStats(4.2, 4.2, 4.2, 4.2)

    def test_positional_duplicates(self):
        got = stats([2.0, 2.0, 9.0])
        assert got.min == 2.0
        assert got.second_min == 2.0

    def test_empty_rejected(self):
        with pytest.raises(EmptyInput):
            stats([])


class TestConfig:
    def test_defaults(self):
        assert load_config() == BenchConfig()
        assert load_config("default") == BenchConfig()

    def test_file_overrides(self, tmp_path):
        target = tmp_path / "cfg.json"
        target.write_text(json.dumps({
            "sizes": [4, 2],
            "compressors": ["identity"],
            "threshold": 5,
            "corpus": {"n_bases": 2, "variants_per_base": 4,
                       "width": 64, "height": 64, "random_pool": 4},
        }))
        config = load_config(target)
        assert config.sizes == (4, 2)
        assert config.compressors == ("identity",)
        assert config.threshold == 5
        assert config.synth_params().n_bases == 2
        assert config.synth_params().seed == config.seed

    def test_corpus_seed_overrides_experiment_seed(self):
        config = BenchConfig(seed=7, corpus={"seed": 9, "n_bases": 2})
        params = config.synth_params()
        assert params.seed == 9
        assert params.n_bases == 2

    def test_unknown_keys_rejected(self, tmp_path):
        target = tmp_path / "cfg.json"
        target.write_text(json.dumps({"sizzes": [4]}))
        with pytest.raises(ValueError, match="sizzes"):
            load_config(target)

    def test_non_object_rejected(self, tmp_path):
        target = tmp_path / "cfg.json"
        target.write_text("[1, 2]")
        with pytest.raises(ValueError, match="object"):
            load_config(target)

    def test_validation(self):
        with pytest.raises(ValueError):
            BenchConfig(strategies=("bogus",))
        with pytest.raises(ValueError):
            BenchConfig(sizes=(0,))
        with pytest.raises(ValueError):
            BenchConfig(sample_size=0)
        with pytest.raises(ValueError):
            BenchConfig(compressors=("gzip",))
        assert BenchConfig().lr_params().min_match == 64
        assert [s.kind for s in BenchConfig().backend_specs()] == \
            ["identity", "lzss"]


class TestRunExperiment:
    def test_row_shape(self, small_report, small_corpus):
        n_tags = small_corpus.params.n_bases
        cells = n_tags * (len(SMALL_KW["sizes"]) + 1) + 4
        assert len(small_report.rows) == cells * 2

        strategies = {r.strategy for r in small_report.rows}
        assert strategies == {"top6", "top3", "top2", "sift",
                              "mixed", "random"}
        keys = [(r.group, r.strategy, r.compressor)
                for r in small_report.rows]
        assert keys == sorted(keys)
        assert len(set(keys)) == len(keys)

    def test_cf_values_consistent(self, small_report):
        for row in small_report.rows:
            assert row.cf == row.s_old / row.s_new
            assert row.s_old > 0 and row.s_new > 0
        for (strategy, compressor), st in small_report.stats.items():
            values = [r.cf for r in small_report.rows
                      if (r.strategy, r.compressor) == (strategy, compressor)]
            assert st == stats(values)

    def test_full_group_beats_random_baseline(self, small_report):
        by = {(r.group, r.strategy, r.compressor): r.cf
              for r in small_report.rows}
        top_full = [by[(f"t{b:02d}", "top6", "lzss")] for b in (1, 2, 3)]
        random_cf = [by[("r1", "random", "lzss")],
                     by[("r2", "random", "lzss")]]
        assert min(top_full) > max(random_cf)

    def test_empty_strategies(self, small_corpus):
        report = run_experiment(small_corpus.manifest, (), (2,), ("lzss",))
        assert report == CFReport((), {}, ())
        report = run_experiment(small_corpus.manifest, ("top_n",), (2,), ())
        assert report == CFReport((), {}, ())

    def test_unknown_strategy(self, small_corpus):
        with pytest.raises(ValueError):
            run_experiment(small_corpus.manifest, ("bogus",), (2,), ("lzss",))

    def test_oversized_window_raises(self, small_corpus):
        with pytest.raises(NotEnoughEntries):
            run_experiment(small_corpus.manifest, ("top_n",), (7,),
                           ("identity",))

    def test_entries_accepted_in_place_of_path(self, small_corpus):
        report = run_experiment(small_corpus.entries, ("top_n",), (2,),
                                ("identity",))
        assert len(report.rows) == small_corpus.params.n_bases

    def test_anomaly_when_cluster_collapses(self, small_corpus, tmp_path):
        report = run_experiment(
            small_corpus.manifest, ("sift_picked",), (2,), ("identity",),
            threshold=100_000, cache_dir=tmp_path / "cache",
        )
        assert set(report.anomalies) == {"t01", "t02", "t03"}

    def test_jobs_do_not_change_report(self, small_corpus, tmp_path):
        kw = dict(sample_size=4, cache_dir=tmp_path / "cache")
        a = run_experiment(small_corpus.manifest, ("top_n", "mixed"), (3,),
                           ("lzss",), jobs=1, **kw)
        b = run_experiment(small_corpus.manifest, ("top_n", "mixed"), (3,),
                           ("lzss",), jobs=4, **kw)
        assert a == b

    def test_archive_dir_gets_every_cell(self, small_corpus, tmp_path):
        out = tmp_path / "archives"
        report = run_experiment(small_corpus.manifest, ("top_n",), (2,),
                                ("identity", "lzss"), archive_dir=out)
        written = sorted(p.name for p in out.iterdir())
        assert len(written) == len(report.rows)
        assert "t01-top2-lzss.simg" in written


class TestCsvReport:
    def test_round_trip_and_determinism(self, small_report, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        csv_report(small_report, a)
        csv_report(small_report, b)
        assert a.read_bytes() == b.read_bytes()

        rows, anomalies, stat_rows = parse_csv(a.read_text())
        assert len(rows) == len(small_report.rows)
        for parsed, row in zip(rows, small_report.rows):
            assert parsed == (row.group, row.strategy, row.compressor,
                              row.s_old, row.s_new, row.cf)
        assert anomalies == list(small_report.anomalies)
        assert len(stat_rows) == len(small_report.stats)
        for strategy, compressor, numbers in stat_rows:
            st = small_report.stats[(strategy, compressor)]
            assert numbers == (st.max, st.mean, st.min, st.second_min)

    def test_float_repr_is_lossless(self, small_report, tmp_path):
        target = tmp_path / "r.csv"
        csv_report(small_report, target)
        rows, _, _ = parse_csv(target.read_text())
        for parsed, row in zip(rows, small_report.rows):
            assert parsed[5] == row.cf  # exact, not approximate

    def test_anomaly_line_format(self, tmp_path):
        report = CFReport((), {}, ("t09",))
        target = tmp_path / "a.csv"
        csv_report(report, target)
        assert f"#anomaly,t09,sift cluster smaller than " \
               f"{ANOMALY_CLUSTER_SIZE}" in target.read_text()
