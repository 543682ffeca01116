from importlib import resources

import pytest

from fpgacost.bench import (
    SweepGrid,
    benchmark_by_name,
    builtin_benchmarks,
    compare_with_ground_truth,
    is_unsynthesizable,
    load_ground_truth,
    run_sweep,
    write_sweep_csv,
)
from fpgacost.datagen import TARGETS
from fpgacost.errors import DataError, ModelFormatError
from fpgacost.mlpreg import load_models, predict_all
from fpgacost.netir import LayerKind, Strategy, SynthesisConfig, param_count, validate_network

EXPECTED_SIZES = {
    "jet": 2821,
    "top-quarks": 385,
    "anomaly": 2864,
    "bipc": 7776,
    "cookiebox": 3433,
    "mnist": 12730,
    "automlp": 534,
    "particle-tracking": 2691,
    "custom-1": 5610,
    "custom-2": 11074,
    "custom-3": 7274,
}


class TestFixtures:
    def test_eleven_benchmarks(self):
        assert len(builtin_benchmarks()) == 11

    def test_parameter_counts(self):
        for fixture in builtin_benchmarks():
            assert param_count(fixture.network) == EXPECTED_SIZES[fixture.name]
            assert fixture.expected_params == EXPECTED_SIZES[fixture.name]

    def test_all_fixtures_validate(self):
        for fixture in builtin_benchmarks():
            validate_network(fixture.network)

    def test_custom_fixtures_exercise_structural_layers(self):
        kinds = {
            name: {l.kind for l in benchmark_by_name(name).network.layers}
            for name in ("custom-1", "custom-2", "custom-3")
        }
        assert LayerKind.SKIP_ADD in kinds["custom-1"]
        assert LayerKind.DROPOUT in kinds["custom-1"]
        assert LayerKind.SKIP_ADD in kinds["custom-2"]
        assert LayerKind.BATCHNORM in kinds["custom-3"]
        assert LayerKind.SKIP_ADD in kinds["custom-3"]

    def test_unknown_benchmark(self):
        with pytest.raises(DataError):
            benchmark_by_name("resnet")


class TestSweep:
    def test_default_grid_is_924(self):
        grid = SweepGrid()
        assert grid.combinations(11) == 924

    def test_sweep_cardinality(self, trained_models_dir):
        models = load_models(trained_models_dir)
        rows = run_sweep(models)
        assert len(rows) == 924
        keys = {r.key for r in rows}
        assert len(keys) == 924

    def test_restricted_grid(self, trained_models_dir):
        models = load_models(trained_models_dir)
        grid = SweepGrid(boards=("zcu102",), strategies=(Strategy.LATENCY,),
                         precisions=(8,), reuse_factors=(32,))
        rows = run_sweep(models, grid=grid)
        assert len(rows) == 11

    def test_mnist_latency_flagged_unsynthesizable(self, trained_models_dir):
        models = load_models(trained_models_dir)
        rows = run_sweep(models)
        for r in rows:
            if r.benchmark == "mnist" and r.strategy == "latency":
                assert r.unsynthesizable
            if r.benchmark == "jet":
                assert not r.unsynthesizable
        # flag logic directly: mnist's first dense layer has 12,560 params
        mnist = benchmark_by_name("mnist").network
        assert is_unsynthesizable(mnist, Strategy.LATENCY)
        assert not is_unsynthesizable(mnist, Strategy.RESOURCE)

    def test_predictions_within_bounds(self, trained_models_dir):
        models = load_models(trained_models_dir)
        rows = run_sweep(models, grid=SweepGrid(precisions=(8,), reuse_factors=(32,)))
        for r in rows:
            for name in ("bram", "dsp", "ff", "lut"):
                assert 0.0 <= r.predictions[name] <= 200.0
            assert r.predictions["cycles"] >= 0.0

    def test_rows_sorted_by_key(self, trained_models_dir):
        models = load_models(trained_models_dir)
        rows = run_sweep(models, grid=SweepGrid(precisions=(2, 8)))
        assert [r.key for r in rows] == sorted(r.key for r in rows)

    def test_csv_output(self, trained_models_dir, tmp_path):
        models = load_models(trained_models_dir)
        grid = SweepGrid(boards=("zcu102",), precisions=(8,), reuse_factors=(1,))
        rows = run_sweep(models, grid=grid)
        out = tmp_path / "sweep.csv"
        write_sweep_csv(rows, out)
        lines = out.read_text().strip().splitlines()
        assert len(lines) == len(rows) + 1


class TestPredictAll:
    def test_report_contract(self, trained_models_dir, registry):
        models = load_models(trained_models_dir)
        fixture = benchmark_by_name("jet")
        cfg = SynthesisConfig(precision_bits=8, global_reuse=32,
                              strategy=Strategy.LATENCY, board_id="zcu102")
        report = predict_all(models, fixture.network, cfg, registry)
        for name in ("bram", "dsp", "ff", "lut"):
            verdict = report.resources[name]
            assert 0.0 <= verdict.predicted_pct <= 200.0
            assert verdict.fits_100 == (verdict.predicted_pct <= 100.0)
            assert verdict.fits_200 == (verdict.predicted_pct <= 200.0)
        assert report.cycles >= 0
        assert report.latency_time_ns == report.cycles * cfg.clock_period_ns
        assert report.features_used.dense_count == 4
        assert set(report.model_versions) == set(TARGETS)

    def test_missing_model_rejected(self, trained_models_dir, registry):
        models = load_models(trained_models_dir)
        del models["cycles"]
        fixture = benchmark_by_name("jet")
        cfg = SynthesisConfig(precision_bits=8, global_reuse=32,
                              strategy=Strategy.LATENCY, board_id="zcu102")
        with pytest.raises(ModelFormatError, match="missing models"):
            predict_all(models, fixture.network, cfg, registry)

    def test_schema_mismatch_rejected(self, trained_models_dir, registry):
        models = load_models(trained_models_dir)
        models["dsp"].feature_schema_version = "999"
        fixture = benchmark_by_name("jet")
        cfg = SynthesisConfig(precision_bits=8, global_reuse=32,
                              strategy=Strategy.LATENCY, board_id="zcu102")
        with pytest.raises(ModelFormatError, match="schema"):
            predict_all(models, fixture.network, cfg, registry)


def _sample_truth_path(tmp_path):
    text = resources.files("fpgacost.data").joinpath("benchmark_truth_sample.csv").read_text()
    path = tmp_path / "truth.csv"
    path.write_text(text)
    return path


class TestGroundTruth:
    def test_sample_file_loads(self, tmp_path):
        truth = load_ground_truth(_sample_truth_path(tmp_path))
        assert len(truth) == 44
        jet = truth[("jet", "zcu102", "latency", 8, 32)]
        assert jet == {"bram": 0.0, "dsp": 0.0, "ff": 1.0, "lut": 25.0, "cycles": 37.0}
        # '+' parses to the 200 cap; NA drops the cell
        anomaly = truth[("anomaly", "pynq-z2", "latency", 8, 32)]
        assert anomaly["lut"] == 200.0
        mnist = truth[("mnist", "zcu102", "latency", 8, 32)]
        assert all(v is None for v in mnist.values())

    def test_comparison_join_and_errors(self, trained_models_dir, tmp_path):
        models = load_models(trained_models_dir)
        rows = run_sweep(models)
        truth = load_ground_truth(_sample_truth_path(tmp_path))
        report = compare_with_ground_truth(rows, truth)
        # MNIST latency rows are all-NA: no matched values survive for them
        assert len(report.matched) == 42
        assert report.unmatched_truth_keys == []
        assert len(report.unmatched_prediction_keys) == 924 - 44
        for target, stats in report.per_target.items():
            assert stats["n"] > 0
            assert stats["mae"] >= 0.0

    def test_equal_prediction_gives_zero_error(self, trained_models_dir, tmp_path):
        models = load_models(trained_models_dir)
        rows = run_sweep(models, grid=SweepGrid(boards=("zcu102",), precisions=(8,),
                                                reuse_factors=(32,)))
        row = next(r for r in rows if r.benchmark == "jet" and r.strategy == "latency")
        path = tmp_path / "t.csv"
        path.write_text(
            "benchmark,board,strategy,precision,reuse,bram_pct,dsp_pct,ff_pct,lut_pct,cycles\n"
            f"jet,zcu102,latency,8,32,{row.predictions['bram']},{row.predictions['dsp']},"
            f"{row.predictions['ff']},{row.predictions['lut']},{int(row.predictions['cycles'])}\n"
        )
        report = compare_with_ground_truth(rows, load_ground_truth(path))
        assert len(report.matched) == 1
        assert all(report.matched[0].error(t) == 0.0 for t in TARGETS)

    def test_above_cap_truth_uses_clamp_convention(self, trained_models_dir, tmp_path):
        models = load_models(trained_models_dir)
        rows = run_sweep(models, grid=SweepGrid(boards=("zcu102",), precisions=(8,),
                                                reuse_factors=(32,)))
        path = tmp_path / "t.csv"
        path.write_text(
            "benchmark,board,strategy,precision,reuse,bram_pct,dsp_pct,ff_pct,lut_pct,cycles\n"
            "jet,zcu102,latency,8,32,1,1,1,+,100\n"
        )
        report = compare_with_ground_truth(rows, load_ground_truth(path))
        matched = report.matched[0]
        g, p = matched.values["lut"]
        assert g == 200.0
        assert matched.error("lut") == pytest.approx(p - 200.0)

    def test_unmatched_truth_keys_reported(self, trained_models_dir, tmp_path):
        models = load_models(trained_models_dir)
        rows = run_sweep(models, grid=SweepGrid(boards=("zcu102",), precisions=(8,),
                                                reuse_factors=(32,)))
        path = tmp_path / "t.csv"
        path.write_text(
            "benchmark,board,strategy,precision,reuse,bram_pct,dsp_pct,ff_pct,lut_pct,cycles\n"
            "jet,alveo-u200,latency,8,32,1,1,1,1,100\n"
        )
        report = compare_with_ground_truth(rows, load_ground_truth(path))
        assert report.matched == []
        assert report.unmatched_truth_keys == [("jet", "alveo-u200", "latency", 8, 32)]

    def test_trend_tables_have_grid_shape(self, trained_models_dir, tmp_path):
        models = load_models(trained_models_dir)
        rows = run_sweep(models)
        # synthetic truth over the full default grid for one benchmark
        lines = ["benchmark,board,strategy,precision,reuse,bram_pct,dsp_pct,ff_pct,lut_pct,cycles"]
        for board in ("zcu102", "pynq-z2"):
            for strategy in ("latency", "resource"):
                for precision in (2, 8, 16):
                    for reuse in (1, 2, 4, 8, 16, 32, 64):
                        lines.append(f"jet,{board},{strategy},{precision},{reuse},1,2,3,4,50")
        path = tmp_path / "t.csv"
        path.write_text("\n".join(lines) + "\n")
        report = compare_with_ground_truth(rows, load_ground_truth(path))
        assert sorted(report.trend_by_precision["lut"]) == [2, 8, 16]
        assert sorted(report.trend_by_reuse["lut"]) == [1, 2, 4, 8, 16, 32, 64]
        for grp in report.trend_by_precision["lut"].values():
            assert grp["g_mean"] == pytest.approx(4.0)

    def test_duplicate_truth_key_rejected(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text(
            "benchmark,board,strategy,precision,reuse,bram_pct,dsp_pct,ff_pct,lut_pct,cycles\n"
            "jet,zcu102,latency,8,32,1,1,1,1,100\n"
            "jet,zcu102,latency,8,32,1,1,1,1,100\n"
        )
        with pytest.raises(DataError, match="duplicate"):
            load_ground_truth(path)
