"""Command-line entry point for the full pipeline.

Subcommands: predict, features, generate, train, evaluate, bench, serve.
``predict`` and ``features`` can delegate to a running service with
``--server``; everything else operates on local files.

Exit codes: 0 success, 2 usage error (from argument parsing), 3 invalid
network/config/schema, 4 model-file problem, 5 dataset problem, 6 training
diverged, 1 unexpected failure.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import bench as benchmod
from . import datagen, metrics
from .errors import (
    CostModelError,
    DataError,
    ModelFormatError,
    SchemaError,
    TrainingDivergedError,
    UnknownBoardError,
)
from .features import CATEGORICAL_FEATURES, NUMERIC_FEATURES, extract_features
from .mlpreg import TrainConfig, build_model, forward, load_models, predict_all, save_model, train
from .mlpreg.predict import model_path
from .netir import (
    Strategy,
    SynthesisConfig,
    default_board_registry,
    load_board_registry,
    load_network,
)

EXIT_SCHEMA = 3
EXIT_MODEL = 4
EXIT_DATA = 5
EXIT_TRAINING = 6


def _exit_code(exc: CostModelError) -> int:
    if isinstance(exc, (SchemaError, UnknownBoardError)):
        return EXIT_SCHEMA
    if isinstance(exc, ModelFormatError):
        return EXIT_MODEL
    if isinstance(exc, DataError):
        return EXIT_DATA
    if isinstance(exc, TrainingDivergedError):
        return EXIT_TRAINING
    return 1


class _Failure(click.ClickException):
    def __init__(self, exc: CostModelError):
        super().__init__(str(exc))
        self.exit_code = _exit_code(exc)


def _registry(boards_file: str | None):
    return load_board_registry(boards_file) if boards_file else default_board_registry()


def _config(board, strategy, precision, reuse, clock_period_ns=10.0) -> SynthesisConfig:
    return SynthesisConfig(
        precision_bits=precision,
        global_reuse=reuse,
        strategy=Strategy(strategy),
        board_id=board,
        clock_period_ns=clock_period_ns,
    )


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)


@click.group()
def main():
    """Pre-synthesis FPGA resource and latency estimation for neural networks."""


_network_config_options = [
    click.option("--network", "network_file", required=True, type=click.Path(exists=True, dir_okay=False)),
    click.option("--board", required=True, help="target board id from the registry"),
    click.option("--strategy", required=True, type=click.Choice(["latency", "resource"])),
    click.option("--precision", required=True, type=click.IntRange(min=1), help="fixed-point bit width"),
    click.option("--reuse", required=True, type=click.IntRange(min=1), help="global reuse factor"),
    click.option("--boards-file", type=click.Path(exists=True, dir_okay=False), default=None,
                 help="board registry JSON overriding the built-in one"),
]


def _add_options(options):
    def wrap(fn):
        for opt in reversed(options):
            fn = opt(fn)
        return fn
    return wrap


def _post_to_server(server: str, endpoint: str, network_file: str, cfg: SynthesisConfig) -> dict:
    import httpx

    try:
        doc = json.loads(Path(network_file).read_text())
    except json.JSONDecodeError as exc:
        raise _Failure(SchemaError(f"network document is not valid JSON: {exc}")) from exc
    body = {
        "network": doc,
        "config": {
            "board": cfg.board_id,
            "strategy": cfg.strategy.value,
            "precision_bits": cfg.precision_bits,
            "global_reuse": cfg.global_reuse,
            "clock_period_ns": cfg.clock_period_ns,
        },
    }
    resp = httpx.post(server.rstrip("/") + endpoint, json=body, timeout=60.0)
    if resp.status_code != 200:
        detail = resp.json().get("detail", resp.text) if resp.content else resp.text
        raise _Failure(SchemaError(f"server returned {resp.status_code}: {detail}"))
    return resp.json()


def _print_prediction(report: dict, as_json: bool) -> None:
    if as_json:
        click.echo(_dump_json(report))
        return
    click.echo(f"{'resource':<10}{'predicted %':>12}  {'fits@100':>8}  {'fits@200':>8}")
    for name in ("bram", "dsp", "ff", "lut"):
        r = report["resources"][name]
        click.echo(
            f"{name:<10}{r['predicted_pct']:>12}  "
            f"{str(r['fits_100']).lower():>8}  {str(r['fits_200']).lower():>8}"
        )
    click.echo(f"cycles: {report['cycles']}")
    click.echo(
        f"latency: {report['latency_time_ns']} ns at {report['clock_period_ns']} ns clock"
    )


@main.command()
@_add_options(_network_config_options)
@click.option("--models", "models_dir", type=click.Path(exists=True, file_okay=False),
              help="directory with the five trained model files")
@click.option("--clock-period-ns", type=float, default=10.0, show_default=True)
@click.option("--json", "as_json", is_flag=True, help="emit the structured report")
@click.option("--server", default=None, help="URL of a running prediction service")
def predict(network_file, board, strategy, precision, reuse, boards_file,
            models_dir, clock_period_ns, as_json, server):
    """Predict resource utilization and latency for one network + config."""
    try:
        cfg = _config(board, strategy, precision, reuse, clock_period_ns)
        if server:
            report = _post_to_server(server, "/predict", network_file, cfg)
        else:
            if not models_dir:
                raise ModelFormatError("either --models or --server is required")
            registry = _registry(boards_file)
            net = load_network(network_file)
            models = load_models(models_dir)
            report = predict_all(models, net, cfg, registry).as_dict()
    except CostModelError as exc:
        raise _Failure(exc) from exc
    _print_prediction(report, as_json)


@main.command()
@_add_options(_network_config_options)
@click.option("--server", default=None, help="URL of a running prediction service")
def features(network_file, board, strategy, precision, reuse, boards_file, server):
    """Print the engineered feature vector for a network + config."""
    try:
        cfg = _config(board, strategy, precision, reuse)
        if server:
            doc = _post_to_server(server, "/features", network_file, cfg)["features"]
        else:
            registry = _registry(boards_file)
            net = load_network(network_file)
            doc = extract_features(net, cfg, registry).as_dict()
    except CostModelError as exc:
        raise _Failure(exc) from exc
    ordered = {name: doc[name] for name in NUMERIC_FEATURES + CATEGORICAL_FEATURES}
    click.echo(json.dumps(ordered, indent=2))


@main.command()
@click.option("--seed", required=True, type=int, help="master seed")
@click.option("--count", required=True, type=click.IntRange(min=1))
@click.option("--out", "out_file", required=True, type=click.Path(dir_okay=False))
@click.option("--overrides", type=click.Path(exists=True, dir_okay=False), default=None,
              help="JSON file overriding generator parameters")
@click.option("--pseudo-targets", is_flag=True,
              help="fill targets from the analytic linear oracle instead of leaving them blank")
@click.option("--workers", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--boards-file", type=click.Path(exists=True, dir_okay=False), default=None)
def generate(seed, count, out_file, overrides, pseudo_targets, workers, boards_file):
    """Generate synthetic architecture records into a dataset CSV."""
    try:
        spec = datagen.GeneratorSpec()
        if overrides:
            spec = datagen.generator_spec_from_dict(json.loads(Path(overrides).read_text()))
        ds = datagen.generate_dataset(
            seed, count, spec, _registry(boards_file),
            with_pseudo_targets=pseudo_targets, workers=workers,
        )
        datagen.write_dataset_csv(ds, out_file)
    except CostModelError as exc:
        raise _Failure(exc) from exc
    except json.JSONDecodeError as exc:
        raise _Failure(SchemaError(f"overrides file is not valid JSON: {exc}")) from exc
    click.echo(f"wrote {len(ds)} records to {out_file}")


@main.command(name="train")
@click.option("--data", "data_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--mapping", "mapping_file", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--target", required=True,
              type=click.Choice(list(datagen.TARGETS) + ["all"]))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--epochs", type=click.IntRange(min=1), default=None,
              help="override the default 50 epochs")
@click.option("--batch-size", type=click.IntRange(min=1), default=None)
@click.option("--learning-rate", type=float, default=None)
@click.option("--boards-file", type=click.Path(exists=True, dir_okay=False), default=None)
def train_cmd(data_file, mapping_file, target, out_dir, seed, epochs,
              batch_size, learning_rate, boards_file):
    """Train one model per target on an ingested dataset."""
    try:
        registry = _registry(boards_file)
        ds, report = datagen.ingest_dataset(data_file, mapping_file, registry)
        train_ds, val_ds, _ = datagen.split_dataset(ds, seed=seed)
        targets = list(datagen.TARGETS) if target == "all" else [target]
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        histories = {}
        for t in targets:
            cfg = TrainConfig(
                batch_size=batch_size,
                learning_rate=learning_rate,
                epochs=epochs if epochs is not None else 50,
                seed=seed,
            )
            model = build_model(t, seed=seed, board_cardinality=len(registry))
            trained, history = train(model, train_ds, val_ds, cfg)
            save_model(trained, model_path(out, t))
            histories[t] = history.as_dict()
            click.echo(
                f"{t}: best epoch {history.best_epoch}, "
                f"val MAE {history.val_loss[history.best_epoch]:.4f}"
            )
        (out / "history.json").write_text(_dump_json(histories))
    except CostModelError as exc:
        raise _Failure(exc) from exc
    click.echo(
        f"ingested {report.rows_kept}/{report.rows_read} rows "
        f"({report.rows_skipped} skipped, {report.values_clamped} values clamped); "
        f"models in {out_dir}"
    )


@main.command()
@click.option("--models", "models_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--data", "data_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--mapping", "mapping_file", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--seed", type=int, default=0, show_default=True, help="split seed")
@click.option("--split", type=click.Choice(["test", "val", "train", "all"]), default="test",
              show_default=True)
@click.option("--boards-file", type=click.Path(exists=True, dir_okay=False), default=None)
def evaluate(models_dir, data_file, mapping_file, seed, split, boards_file):
    """Evaluate trained models on a dataset split; emits a JSON metrics report."""
    try:
        registry = _registry(boards_file)
        ds, _ = datagen.ingest_dataset(data_file, mapping_file, registry)
        if split == "all":
            part = ds
        else:
            parts = dict(zip(("train", "val", "test"), datagen.split_dataset(ds, seed=seed)))
            part = parts[split]
        if len(part) == 0:
            raise DataError(f"{split} split is empty")
        models = load_models(models_dir)
        x_num, x_cat = part.feature_matrix()
        report = {}
        for t in datagen.TARGETS:
            y = part.target_vector(t)
            pred = forward(models[t], x_num, x_cat)
            if t == "cycles":
                pred = [max(0.0, round(p)) for p in pred]
                threshold = 100.0
            else:
                pred = [datagen.clamp_utilization(p) for p in pred]
                threshold = 10.0
            report[t] = metrics.regression_report(y, pred, threshold)
        report["split"] = split
        report["n_records"] = len(part)
    except CostModelError as exc:
        raise _Failure(exc) from exc
    click.echo(_dump_json(report))


@main.command(name="bench")
@click.option("--models", "models_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--truth", "truth_file", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--board", "extra_boards", multiple=True,
              help="additional board(s) to sweep beyond zcu102 and pynq-z2")
@click.option("--out", "out_file", type=click.Path(dir_okay=False), default=None,
              help="write the sweep rows to this CSV")
@click.option("--json", "as_json", is_flag=True)
@click.option("--boards-file", type=click.Path(exists=True, dir_okay=False), default=None)
def bench_cmd(models_dir, truth_file, extra_boards, out_file, as_json, boards_file):
    """Run the benchmark prediction sweep, optionally against ground truth."""
    try:
        registry = _registry(boards_file)
        grid = benchmod.SweepGrid()
        if extra_boards:
            boards = grid.boards + tuple(b for b in extra_boards if b not in grid.boards)
            grid = benchmod.SweepGrid(boards=boards)
        models = load_models(models_dir)
        rows = benchmod.run_sweep(models, grid=grid, registry=registry)
        if out_file:
            benchmod.write_sweep_csv(rows, out_file)
        comparison = None
        if truth_file:
            truth = benchmod.load_ground_truth(truth_file)
            comparison = benchmod.compare_with_ground_truth(rows, truth)
    except CostModelError as exc:
        raise _Failure(exc) from exc

    flagged = sum(1 for r in rows if r.unsynthesizable)
    if as_json:
        payload = {
            "rows": [
                {
                    "benchmark": r.benchmark, "board": r.board, "strategy": r.strategy,
                    "precision": r.precision, "reuse": r.reuse,
                    "predictions": r.predictions, "unsynthesizable": r.unsynthesizable,
                }
                for r in rows
            ],
        }
        if comparison is not None:
            payload["comparison"] = {
                "per_target": comparison.per_target,
                "trend_by_precision": comparison.trend_by_precision,
                "trend_by_reuse": comparison.trend_by_reuse,
                "matched": len(comparison.matched),
                "unmatched_truth_keys": [list(k) for k in comparison.unmatched_truth_keys],
                "unmatched_prediction_keys": len(comparison.unmatched_prediction_keys),
            }
        click.echo(_dump_json(payload))
        return

    click.echo(f"sweep: {len(rows)} combinations, {flagged} flagged unsynthesizable")
    if out_file:
        click.echo(f"rows written to {out_file}")
    if comparison is not None:
        click.echo(f"matched {len(comparison.matched)} ground-truth rows; "
                   f"{len(comparison.unmatched_truth_keys)} truth keys unmatched")
        click.echo(f"{'target':<8}{'n':>5}{'MAE':>10}{'within-threshold':>18}")
        for target, stats in comparison.per_target.items():
            click.echo(
                f"{target:<8}{stats['n']:>5}{stats['mae']:>10.2f}"
                f"{stats['within_threshold_fraction']:>18.2f}"
            )
        for label, trend in (("precision", comparison.trend_by_precision),
                             ("reuse", comparison.trend_by_reuse)):
            click.echo(f"trend by {label} (G -> P means):")
            for target, groups in trend.items():
                parts = [
                    f"{grp}: {v['g_mean']:.1f}->{v['p_mean']:.1f}" for grp, v in groups.items()
                ]
                click.echo(f"  {target:<8}" + "  ".join(parts))


@main.command()
@click.option("--models", "models_dir", type=click.Path(exists=True, file_okay=False), default=None)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--boards-file", type=click.Path(exists=True, dir_okay=False), default=None)
def serve(models_dir, host, port, boards_file):
    """Run the prediction service (models load once, queries stay cheap)."""
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(models_dir=models_dir, boards_file=boards_file), host=host, port=port)


if __name__ == "__main__":
    sys.exit(main())
