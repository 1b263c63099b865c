"""Command-line harness: ingestion, training, evaluation and reports.

Subcommands:

* ``fxcast stats``   — per-pair summary statistics plus plottable series CSVs
* ``fxcast train``   — train one architecture on one pair, write the model
  file, loss history and a manifest
* ``fxcast compare`` — train every architecture on every pair and render the
  comparison table
* ``fxcast predict`` — one next-step prediction from a saved model file

Exit codes: 0 success, 2 configuration or usage errors, 3 data errors,
4 training divergence. Environment variables ``FXCAST_OUT`` and
``FXCAST_JOBS`` override the output directory and the parallelism degree;
explicit flags beat the environment, which beats the config file.

All commands are deterministic: a pinned seed reproduces byte-identical
model files, loss histories and tables.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Tuple

from .config import ExperimentConfig, config_hash, load_config, model_spec_for
from .dataio import (
    chronological_split,
    parse_price_csv,
    price_csv,
    resample_last,
    split_index,
    stats_csv,
    summary_stats,
)
from .errors import ConfigError, DataError, FxcastError, TrainingError
from .evalkit import (
    MODEL_ORDER,
    error_table,
    error_table_csv,
    evaluate,
    render_error_table,
)
from .models import Architecture, load_model, predict, save_model
from .pipeline import Scaler, WindowedDataset, fit_scaler, make_windows, scale
from .train import loss_history_csv, train


def pair_slug(pair: str) -> str:
    """Filesystem-safe pair label: every non-alphanumeric becomes '_'."""
    return "".join(ch if ch.isalnum() else "_" for ch in pair)


def _read_series(config: ExperimentConfig, pair: str):
    path = config.pairs[pair]
    try:
        with open(path, "rb") as fh:
            series = parse_price_csv(fh, pair)
    except OSError as exc:
        raise DataError(f"{pair}: cannot read {path}: {exc}") from None
    except DataError as exc:
        raise DataError(f"{pair}: {path}: {exc}") from None
    return resample_last(series, config.bucket_seconds)


def prepare_pair(config: ExperimentConfig, pair: str
                 ) -> Tuple[WindowedDataset, WindowedDataset, Scaler]:
    """Read, resample, scale and window one pair into train and test splits.

    ``scaler_scope = "train_only"`` fits the scaler on the training segment
    of the raw series and windows each side separately, so neither the scaler
    nor any test window sees training-time future data. ``"full_series"``
    scales with the whole series' extrema and splits the window set
    chronologically.
    """
    series = _read_series(config, pair)
    values = series.closes
    try:
        if config.scaler_scope == "train_only":
            k = split_index(len(values), config.train_fraction)
            scaler = fit_scaler(values[:k])
            train_ds = make_windows(scale(scaler, values[:k]), config.window_len)
            test_ds = make_windows(scale(scaler, values[k:]), config.window_len)
        else:
            scaler = fit_scaler(values)
            windows = make_windows(scale(scaler, values), config.window_len)
            train_ds, test_ds = chronological_split(windows, config.train_fraction)
    except DataError as exc:
        raise DataError(f"{pair}: {exc}") from None
    return train_ds, test_ds, scaler


def _require_pairs(config: ExperimentConfig) -> None:
    if not config.pairs:
        raise ConfigError("no data sources configured")


def _out_dir(config: ExperimentConfig) -> Path:
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# subcommands


def cmd_stats(config: ExperimentConfig) -> int:
    """Summary statistics CSV plus one plottable series CSV per pair."""
    _require_pairs(config)
    out = _out_dir(config)
    rows = {}
    for pair in sorted(config.pairs):
        series = _read_series(config, pair)
        rows[pair] = summary_stats(series)
        (out / f"{pair_slug(pair)}_series.csv").write_text(price_csv(series))
    text = stats_csv(rows)
    (out / "stats.csv").write_text(text)
    sys.stdout.write(text)
    return 0


def cmd_train(config: ExperimentConfig, architecture: Architecture, pair: str) -> int:
    """Train one (architecture, pair) cell; write model, loss history, manifest."""
    _require_pairs(config)
    if pair not in config.pairs:
        raise ConfigError(f"unknown pair {pair!r}; configured: {sorted(config.pairs)}")
    spec = model_spec_for(config, architecture)
    train_ds, test_ds, scaler = prepare_pair(config, pair)
    params, history = train(spec, config.train, train_ds)
    report = evaluate(params, scaler, test_ds)

    out = _out_dir(config)
    slug = f"{pair_slug(pair)}_{architecture.value}"
    model_path = out / f"{slug}.fxm"
    save_model(model_path, params, scaler)
    (out / f"{slug}_loss.csv").write_text(loss_history_csv(history))
    manifest = {
        "config_hash": config_hash(config),
        "pair": pair,
        "architecture": architecture.value,
        "seed": config.train.seed,
        "epochs_completed": len(history),
        "metrics": {"mae": report.mae, "rmse": report.rmse,
                    "mape": report.mape, "n": report.n},
    }
    (out / f"{slug}_manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    print(f"{pair} {architecture.value}: {len(history)} epochs, test mae "
          f"{report.mae:.6g}, rmse {report.rmse:.6g}, mape {report.mape * 100:.4g}%")
    print(f"model written to {model_path}")
    return 0


def _run_cell(config: ExperimentConfig, pair: str, arch_value: str):
    architecture = Architecture(arch_value)
    spec = model_spec_for(config, architecture)
    train_ds, test_ds, scaler = prepare_pair(config, pair)
    params, _ = train(spec, config.train, train_ds)
    return evaluate(params, scaler, test_ds)


def _cell_outcome(config: ExperimentConfig, pair: str, arch_value: str):
    """Train one cell, mapping failures to (None, kind, message)."""
    try:
        return _run_cell(config, pair, arch_value), None, None
    except TrainingError as exc:
        return None, "training", str(exc)
    except (ConfigError, DataError) as exc:
        return None, "data", str(exc)


def _cell_outcome_star(args):
    return _cell_outcome(*args)


def cmd_compare(config: ExperimentConfig) -> int:
    """Train every (pair, architecture) cell and render the comparison table.

    Failed cells are marked in the table instead of aborting the run; any
    failure makes the exit status nonzero (4 if training diverged anywhere,
    3 otherwise).
    """
    _require_pairs(config)
    jobs = config.jobs if config.jobs is not None else (os.cpu_count() or 1)
    cells = [(pair, model) for pair in sorted(config.pairs) for model in MODEL_ORDER]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(
                _cell_outcome_star, [(config, pair, model) for pair, model in cells]))
    else:
        outcomes = [_cell_outcome(config, pair, model) for pair, model in cells]

    results = {pair: {} for pair in config.pairs}
    failures = []
    for (pair, model), (report, kind, message) in zip(cells, outcomes):
        results[pair][model] = report
        if kind is not None:
            failures.append((pair, model, kind, message))

    table = error_table(results)
    text = render_error_table(table)
    out = _out_dir(config)
    (out / "table.txt").write_text(text)
    (out / "table.csv").write_text(error_table_csv(table))
    sys.stdout.write(text)
    for pair, model, _, message in failures:
        print(f"failed: {pair} {model}: {message}", file=sys.stderr)
    if failures:
        return 4 if any(kind == "training" for _, _, kind, _ in failures) else 3
    return 0


def cmd_predict(model_path: str, prices) -> int:
    """Print the next-step rate predicted from a window of raw prices."""
    try:
        params, scaler = load_model(model_path)
    except OSError as exc:
        raise DataError(f"cannot read model {model_path}: {exc}") from None
    if scaler is None:
        raise DataError(f"{model_path}: model file carries no scaler, cannot "
                        f"map raw prices")
    if params.spec is None:
        raise DataError(f"{model_path}: model file carries no architecture "
                        f"settings")
    expected = params.spec.window_len
    if len(prices) != expected:
        raise ConfigError(f"expected a window of {expected} prices, got {len(prices)}")
    print(repr(predict(params, scaler, prices)))
    return 0


# ---------------------------------------------------------------------------
# argument parsing and dispatch


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fxcast",
        description="train and compare next-step exchange rate forecasters",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("--config", required=True, help="experiment TOML file")
        sp.add_argument("--seed", type=int, default=None,
                        help="override the training seed")
        sp.add_argument("--out", default=None,
                        help="output directory (default from config or FXCAST_OUT)")
        sp.add_argument("--jobs", type=int, default=None,
                        help="parallel training jobs (default from config or FXCAST_JOBS)")
        sp.add_argument("--allow-lr-outside-paper", action="store_true",
                        dest="allow_high_lr",
                        help="accept a learning rate above the recommended 0.1 cap")

    sp = sub.add_parser("stats", help="per-pair summary statistics")
    add_common(sp)

    sp = sub.add_parser("train", help="train one architecture on one pair")
    add_common(sp)
    sp.add_argument("--arch", required=True,
                    choices=[a.value for a in Architecture],
                    help="model architecture")
    sp.add_argument("--pair", required=True, help="currency pair label from the config")

    sp = sub.add_parser("compare",
                        help="train all architectures on all pairs and tabulate errors")
    add_common(sp)

    sp = sub.add_parser("predict", help="one next-step prediction from a model file")
    sp.add_argument("model", help="model file written by fxcast train")
    sp.add_argument("prices", nargs="+", type=float,
                    help="window of raw prices, oldest first")
    return parser


def _env_jobs() -> Optional[int]:
    raw = os.environ.get("FXCAST_JOBS")
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"FXCAST_JOBS must be an integer, got {raw!r}") from None


def _dispatch(args: argparse.Namespace) -> int:
    if args.command == "predict":
        return cmd_predict(args.model, args.prices)
    out_dir = args.out if args.out is not None else os.environ.get("FXCAST_OUT")
    jobs = args.jobs if args.jobs is not None else _env_jobs()
    config = load_config(args.config, allow_high_lr=args.allow_high_lr,
                         seed=args.seed, out_dir=out_dir, jobs=jobs)
    if args.command == "stats":
        return cmd_stats(config)
    if args.command == "train":
        return cmd_train(config, Architecture(args.arch), args.pair)
    return cmd_compare(config)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except TrainingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except FxcastError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
