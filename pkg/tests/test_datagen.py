import csv
import json

import numpy as np
import pytest

from fpgacost.datagen import (
    CSV_COLUMNS,
    Dataset,
    DepthProbability,
    GeneratorSpec,
    RawTargets,
    TrainingRecord,
    clamp_utilization,
    generate_architecture,
    generate_dataset,
    generator_spec_from_dict,
    ingest_dataset,
    insertion_stats,
    normalize_targets,
    pseudo_target_oracle,
    split_dataset,
    write_dataset_csv,
)
from fpgacost.errors import DataError, SchemaError
from fpgacost.netir import BoardSpec, LayerKind, validate_network
from fpgacost.features import NUMERIC_FEATURES


class TestGenerateArchitecture:
    def test_parameters_within_ranges(self):
        spec = GeneratorSpec()
        for seed in range(200):
            net, cfg = generate_architecture(seed, spec)
            validate_network(net)
            dense = [l for l in net.layers if l.kind is LayerKind.DENSE]
            assert 2 <= len(dense) <= 20
            assert net.input_size in spec.input_sizes
            for l in dense[:-1]:
                assert l.units in spec.neuron_counts
            assert 1 <= dense[-1].units <= 200
            assert cfg.precision_bits in spec.precisions
            assert cfg.global_reuse in spec.reuse_factors
            assert cfg.board_id in spec.boards
            for l in dense:
                assert 1 <= l.reuse_factor <= l.input_size * l.output_size
                assert l.reuse_factor <= cfg.global_reuse

    def test_deterministic_per_seed(self):
        a = generate_architecture(1234)
        b = generate_architecture(1234)
        assert a == b
        c = generate_architecture(1235)
        assert c != a

    def test_insertion_frequencies_track_probability_functions(self):
        # Monte-Carlo check against the configured depth-probability rules.
        # Frequencies are per insertion opportunity (per dense layer; eligible
        # positions only for skip/dropout), so the expectation weights each
        # network's p(depth) by its number of opportunities.
        spec = GeneratorSpec()
        nets = [generate_architecture((77, seed), spec)[0] for seed in range(1000)]
        observed = insertion_stats(nets).frequencies()
        num = {"batchnorm": 0.0, "skip": 0.0, "dropout": 0.0}
        den = {"batchnorm": 0.0, "skip": 0.0, "dropout": 0.0}
        for net in nets:
            per_net = insertion_stats([net])
            depth = per_net.dense_total
            rules = {
                "batchnorm": (spec.p_batchnorm(depth), per_net.dense_total),
                "skip": (spec.p_skip(depth), per_net.skip_eligible),
                "dropout": (spec.p_dropout(depth), per_net.dropout_eligible),
            }
            for name, (p, opportunities) in rules.items():
                num[name] += p * opportunities
                den[name] += opportunities
        for name in ("batchnorm", "skip", "dropout"):
            expected = num[name] / den[name]
            assert observed[name] == pytest.approx(expected, abs=0.05)

    def test_depth_probability_clamped(self):
        rule = DepthProbability(base=0.9, gain=0.5)
        assert rule(20) == 1.0
        assert DepthProbability(base=-0.5, gain=0.1)(2) == 0.0

    def test_overrides_document(self):
        spec = generator_spec_from_dict(
            {
                "precisions": [8],
                "boards": ["pynq-z2"],
                "layer_counts": [3, 4],
                "p_batchnorm": {"base": 1.0, "gain": 0.0},
            }
        )
        net, cfg = generate_architecture(5, spec)
        assert cfg.precision_bits == 8
        assert cfg.board_id == "pynq-z2"
        dense = [l for l in net.layers if l.kind is LayerKind.DENSE]
        assert len(dense) in (3, 4)
        assert sum(1 for l in net.layers if l.kind is LayerKind.BATCHNORM) == len(dense)

    def test_overrides_reject_unknown_fields(self):
        with pytest.raises(SchemaError, match="unknown fields"):
            generator_spec_from_dict({"nope": 1})


class TestGenerateDataset:
    def test_deterministic_and_hash_ordered(self):
        a = generate_dataset(9, 40, with_pseudo_targets=True)
        b = generate_dataset(9, 40, with_pseudo_targets=True)
        assert a == b

    def test_worker_count_does_not_change_output(self):
        a = generate_dataset(11, 30, with_pseudo_targets=True, workers=1)
        b = generate_dataset(11, 30, with_pseudo_targets=True, workers=3)
        assert a == b

    def test_pseudo_targets_in_range(self):
        ds = generate_dataset(13, 60, with_pseudo_targets=True)
        for rec in ds.records:
            for t in ("bram", "dsp", "ff", "lut"):
                assert 0.0 <= rec.targets.value(t) <= 200.0
            assert rec.targets.cycles >= 0.0

    def test_without_targets(self):
        ds = generate_dataset(13, 5)
        assert all(r.targets is None for r in ds.records)
        with pytest.raises(DataError, match="no targets"):
            ds.require_targets()


class TestNormalizeTargets:
    BOARD = BoardSpec(id="b", bram_capacity=280, dsp_capacity=220,
                      ff_capacity=106400, lut_capacity=53200)

    def test_simple_ratio(self):
        t = normalize_targets(RawTargets(0, 0, 0, 26600, 10), self.BOARD)
        assert t.lut_pct == pytest.approx(50.0)
        assert t.cycles == 10.0

    def test_clamped_at_200(self):
        t = normalize_targets(RawTargets(0, 0, 3 * 106400, 0, 0), self.BOARD)
        assert t.ff_pct == 200.0

    def test_all_zero(self):
        t = normalize_targets(RawTargets(0, 0, 0, 0, 0), self.BOARD)
        assert (t.bram_pct, t.dsp_pct, t.ff_pct, t.lut_pct, t.cycles) == (0, 0, 0, 0, 0)

    def test_negative_rejected(self):
        with pytest.raises(DataError, match="negative"):
            normalize_targets(RawTargets(-1, 0, 0, 0, 0), self.BOARD)

    def test_monotone_in_raw_counts(self):
        values = sorted(np.random.default_rng(0).uniform(0, 4 * 53200, size=50))
        pcts = [
            normalize_targets(RawTargets(0, 0, 0, v, 0), self.BOARD).lut_pct for v in values
        ]
        assert all(a <= b for a, b in zip(pcts, pcts[1:]))

    def test_idempotent_on_normalized_values(self):
        # re-normalizing an already clamped percentage against a 100-unit
        # reference capacity must be the identity
        reference = BoardSpec(id="ref", bram_capacity=100, dsp_capacity=100,
                              ff_capacity=100, lut_capacity=100)
        for raw in (0.0, 12.5, 100.0, 199.9, 200.0, 1e7):
            once = normalize_targets(RawTargets(raw, raw, raw, raw, 5), self.BOARD)
            again = normalize_targets(
                RawTargets(once.bram_pct, once.dsp_pct, once.ff_pct, once.lut_pct, once.cycles),
                reference,
            )
            assert again == once


class TestCsvRoundTrip:
    def test_lossless_reingest(self, tmp_path):
        ds = generate_dataset(21, 25, with_pseudo_targets=True)
        path = tmp_path / "ds.csv"
        write_dataset_csv(ds, path)
        back, report = ingest_dataset(path)
        assert report.rows_read == 25
        assert report.rows_skipped == 0
        assert back.records == ds.records
        # a second round trip is also exact
        path2 = tmp_path / "ds2.csv"
        write_dataset_csv(back, path2)
        back2, _ = ingest_dataset(path2)
        assert back2.records == ds.records

    def test_header_is_canonical(self, tmp_path):
        ds = generate_dataset(21, 3, with_pseudo_targets=True)
        path = tmp_path / "ds.csv"
        write_dataset_csv(ds, path)
        with open(path) as fh:
            header = next(csv.reader(fh))
        assert tuple(header) == CSV_COLUMNS


def _write_rows(path, columns, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        writer.writerows(rows)


def _canonical_row(**overrides):
    values = {name: 0 for name in NUMERIC_FEATURES}
    values.update(
        name="r1", source="ingested", dense_count=2, avg_dense_params=10.0,
        precision_bits=8, global_reuse=4, board_index=1, strategy_index=0,
        bram_pct=1.0, dsp_pct=2.0, ff_pct=3.0, lut_pct=4.0, cycles=100.0,
    )
    values.update(overrides)
    return [values[c] for c in CSV_COLUMNS]


class TestIngest:
    def test_clamp_counter(self, tmp_path):
        path = tmp_path / "d.csv"
        _write_rows(path, CSV_COLUMNS, [_canonical_row(lut_pct=250.0)])
        ds, report = ingest_dataset(path)
        assert ds.records[0].targets.lut_pct == 200.0
        assert report.values_clamped == 1
        assert report.rows_kept == 1

    def test_non_numeric_cycles_skipped(self, tmp_path):
        path = tmp_path / "d.csv"
        _write_rows(path, CSV_COLUMNS, [_canonical_row(), _canonical_row(cycles="oops")])
        ds, report = ingest_dataset(path)
        assert report.rows_read == 2
        assert report.rows_kept == 1
        assert report.rows_skipped == 1

    def test_missing_target_skipped(self, tmp_path):
        path = tmp_path / "d.csv"
        _write_rows(path, CSV_COLUMNS, [_canonical_row(bram_pct="")])
        with pytest.raises(DataError, match="zero valid rows"):
            ingest_dataset(path)

    def test_zero_valid_rows_is_fatal(self, tmp_path):
        path = tmp_path / "d.csv"
        _write_rows(path, CSV_COLUMNS, [_canonical_row(cycles="x"), _canonical_row(cycles="-5")])
        with pytest.raises(DataError, match="zero valid rows"):
            ingest_dataset(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="not found"):
            ingest_dataset(tmp_path / "nope.csv")

    def test_mapping_with_renames_and_board_names(self, tmp_path):
        columns = ["DenseLayers"] + [c for c in CSV_COLUMNS if c not in ("dense_count", "board_index")] + ["Board"]
        row_values = dict(zip(CSV_COLUMNS, _canonical_row()))
        row = [2] + [row_values[c] for c in CSV_COLUMNS if c not in ("dense_count", "board_index")] + ["zcu102"]
        path = tmp_path / "foreign.csv"
        _write_rows(path, columns, [row])
        mapping = {
            "columns": {"dense_count": "DenseLayers"},
            "board_name_column": "Board",
        }
        ds, report = ingest_dataset(path, mapping)
        assert report.rows_kept == 1
        assert ds.records[0].features.dense_count == 2
        assert ds.records[0].features.board_index == 1

    def test_mapping_absent_column_is_fatal(self, tmp_path):
        path = tmp_path / "d.csv"
        _write_rows(path, CSV_COLUMNS, [_canonical_row()])
        with pytest.raises(DataError, match="absent columns"):
            ingest_dataset(path, {"columns": {"dense_count": "NotThere"}})

    def test_raw_targets_normalized_by_board(self, tmp_path):
        columns = ["name", "board", "strategy", "precision_bits", "global_reuse",
                   "BRAM", "DSP", "FF", "LUT", "cycles", "model_json"]
        doc = json.dumps(
            {
                "name": "n",
                "input_size": 4,
                "layers": [
                    {"kind": "dense", "units": 4},
                    {"kind": "activation", "activation": "relu"},
                ],
            }
        )
        # lut 26600 of 53200 -> 50%; ff 3x capacity -> clamped to 200
        row = ["n", "pynq-z2", "latency", 8, 4, 28, 22, 3 * 106400, 26600, 123, doc]
        path = tmp_path / "raw.csv"
        _write_rows(path, columns, [row])
        mapping = {
            "board_name_column": "board",
            "strategy_name_column": "strategy",
            "network_column": "model_json",
            "raw_targets": {"bram": "BRAM", "dsp": "DSP", "ff": "FF", "lut": "LUT"},
        }
        ds, report = ingest_dataset(path, mapping)
        rec = ds.records[0]
        assert rec.targets.lut_pct == pytest.approx(50.0)
        assert rec.targets.ff_pct == 200.0
        assert rec.targets.bram_pct == pytest.approx(10.0)
        assert rec.features.dense_count == 1
        assert rec.features.board_index == 0
        assert report.values_clamped == 1

    def test_network_column_bad_document_skips_row(self, tmp_path):
        columns = ["name", "board", "strategy", "precision_bits", "global_reuse",
                   "bram_pct", "dsp_pct", "ff_pct", "lut_pct", "cycles", "model_json"]
        good = json.dumps({"name": "n", "input_size": 2,
                           "layers": [{"kind": "dense", "units": 2}]})
        rows = [
            ["a", "zcu102", "latency", 8, 1, 1, 1, 1, 1, 10, good],
            ["b", "zcu102", "latency", 8, 1, 1, 1, 1, 1, 10, "{broken"],
        ]
        path = tmp_path / "net.csv"
        _write_rows(path, columns, rows)
        mapping = {
            "board_name_column": "board",
            "strategy_name_column": "strategy",
            "network_column": "model_json",
        }
        ds, report = ingest_dataset(path, mapping)
        assert report.rows_kept == 1
        assert report.rows_skipped == 1


class TestSplit:
    def test_largest_remainder_sizes(self, tiny_dataset):
        ds = Dataset(records=tiny_dataset.records[:10])
        a, b, c = split_dataset(ds, (0.8, 0.1, 0.1), seed=0)
        assert (len(a), len(b), len(c)) == (8, 1, 1)

    def test_deterministic(self, tiny_dataset):
        s1 = split_dataset(tiny_dataset, seed=5)
        s2 = split_dataset(tiny_dataset, seed=5)
        assert all(x.records == y.records for x, y in zip(s1, s2))

    def test_disjoint_and_exhaustive(self, tiny_dataset):
        a, b, c = split_dataset(tiny_dataset, (0.5, 0.25, 0.25), seed=3)
        ids = [id(r) for part in (a, b, c) for r in part.records]
        assert len(ids) == len(tiny_dataset)
        assert len(set(ids)) == len(ids)
        assert sorted(map(id, tiny_dataset.records)) == sorted(ids)

    def test_large_dataset_test_split_covers_500(self, tiny_dataset):
        big = Dataset(records=tuple(tiny_dataset.records[0] for _ in range(15000)))
        _, _, test = split_dataset(big, (0.8, 0.1, 0.1), seed=0)
        assert len(test) >= 500

    def test_too_small(self, tiny_dataset):
        with pytest.raises(DataError, match="at least 3"):
            split_dataset(Dataset(records=tiny_dataset.records[:2]))

    def test_bad_fractions(self, tiny_dataset):
        with pytest.raises(DataError):
            split_dataset(tiny_dataset, (0.5, 0.4, 0.2))
        with pytest.raises(DataError):
            split_dataset(tiny_dataset, (1.0, -0.1, 0.1))


class TestPseudoOracle:
    def test_deterministic_and_clamped(self, tiny_dataset):
        rec = tiny_dataset.records[0]
        t1 = pseudo_target_oracle(rec.features)
        t2 = pseudo_target_oracle(rec.features)
        assert t1 == t2
        assert 0.0 <= t1.bram_pct <= 200.0

    def test_clamp_utilization(self):
        assert clamp_utilization(-3.0) == 0.0
        assert clamp_utilization(50.0) == 50.0
        assert clamp_utilization(250.0) == 200.0
