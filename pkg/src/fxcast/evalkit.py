"""Forecast error metrics and the multi-currency comparison table.

Metrics are computed on denormalized rates (predictions are mapped back
through the scaler first), so MAE and RMSE carry rate units and MAPE is a
dimensionless fraction. The rendered table reports MAE and RMSE in units of
1e-3 and MAPE in percent, which keeps typical FX magnitudes readable.

MAPE divides by the true value (the standard definition); a zero truth value
makes it undefined and raises. The absolute value of the denominator is used
for robustness, which changes nothing for positive rates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Tuple

import numpy as np

from .errors import DataError, ShapeError
from .models import ModelParams, forward_prediction
from .pipeline import Scaler, WindowedDataset, unscale

MODEL_ORDER: Tuple[str, ...] = ("lstm", "bp", "rnn")
FAILED_CELL_MARK = "fail"


def _paired(pred, truth) -> Tuple[np.ndarray, np.ndarray]:
    p = np.asarray(pred, dtype=np.float64)
    t = np.asarray(truth, dtype=np.float64)
    if p.ndim != 1 or t.ndim != 1:
        raise ShapeError(
            f"metrics expect two vectors, got shapes {p.shape} and {t.shape}")
    if p.shape[0] != t.shape[0]:
        raise ShapeError(
            f"prediction and truth lengths differ: {p.shape[0]} vs {t.shape[0]}")
    if p.shape[0] == 0:
        raise ShapeError("metrics are undefined on empty vectors")
    return p, t


def rmse(pred, truth) -> float:
    """Root mean squared error, sqrt(mean((pred - truth)**2))."""
    p, t = _paired(pred, truth)
    return float(np.sqrt(np.mean((p - t) ** 2)))


def mae(pred, truth) -> float:
    """Mean absolute error, mean(|pred - truth|)."""
    p, t = _paired(pred, truth)
    return float(np.mean(np.abs(p - t)))


def mape(pred, truth) -> float:
    """Mean absolute percentage error as a FRACTION: mean(|pred-truth|/|truth|).

    Undefined (raises) when any true value is zero.
    """
    p, t = _paired(pred, truth)
    if np.any(t == 0.0):
        raise DataError("mape is undefined when a true value is zero")
    return float(np.mean(np.abs(p - t) / np.abs(t)))


@dataclass(frozen=True)
class MetricsReport:
    """The three error indicators for one model on one test set.

    ``mape`` is stored as a fraction; renderers multiply by 100. ``n`` is the
    number of evaluated samples (0 when unknown, e.g. parsed back from CSV).
    """

    mae: float
    rmse: float
    mape: float
    n: int = 0

    def __post_init__(self):
        for name in ("mae", "rmse", "mape"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0.0:
                raise ValueError(f"{name} must be finite and >= 0, got {v}")
        if self.rmse + 1e-12 < self.mae:
            raise ValueError(
                f"rmse ({self.rmse}) cannot be smaller than mae ({self.mae})")
        if self.n < 0:
            raise ValueError(f"sample count must be >= 0, got {self.n}")


def metrics_report(pred, truth) -> MetricsReport:
    """Bundle all three metrics over one prediction/truth pairing."""
    p, t = _paired(pred, truth)
    return MetricsReport(mae=mae(p, t), rmse=rmse(p, t), mape=mape(p, t), n=p.shape[0])


def evaluate(params: ModelParams, scaler: Scaler, test: WindowedDataset) -> MetricsReport:
    """Run the model over a test split and score it in rate units.

    Features and labels in ``test`` are scaled; predictions and labels are
    both mapped back through the scaler before the metrics are computed.
    Dropout is off (evaluation-mode forward).
    """
    if len(test) == 0:
        raise DataError("cannot evaluate on an empty test set")
    preds = np.empty(len(test))
    for k in range(len(test)):
        preds[k] = forward_prediction(params, test.features[k])
    return metrics_report(unscale(scaler, preds), unscale(scaler, test.labels))


# ---------------------------------------------------------------------------
# comparison table


@dataclass(frozen=True)
class ErrorTable:
    """Complete pair-by-model grid of metric reports.

    Every pair row must carry exactly the models in ``MODEL_ORDER``. A cell
    may hold ``None``, meaning that training job failed; it is rendered with
    a marker rather than dropped, so the grid stays complete.
    """

    cells: Mapping[str, Mapping[str, Optional[MetricsReport]]]
    models: Tuple[str, ...] = MODEL_ORDER

    def __post_init__(self):
        if not self.cells:
            raise DataError("error table needs at least one currency pair")
        for pair, row in self.cells.items():
            if tuple(sorted(row)) != tuple(sorted(self.models)):
                raise DataError(
                    f"row {pair!r} must have exactly the models "
                    f"{list(self.models)}, got {sorted(row)}")

    @property
    def pairs(self) -> Tuple[str, ...]:
        return tuple(sorted(self.cells))

    def has_failures(self) -> bool:
        return any(rep is None for row in self.cells.values() for rep in row.values())


def error_table(results: Mapping[str, Mapping[str, Optional[MetricsReport]]]) -> ErrorTable:
    """Assemble an ErrorTable, rejecting incomplete grids with a list of the
    missing pair/model cells."""
    missing = []
    cells: Dict[str, Dict[str, Optional[MetricsReport]]] = {}
    for pair in sorted(results):
        row = {}
        for model in results[pair]:
            if model not in MODEL_ORDER:
                raise DataError(f"unknown model name {model!r} in row {pair!r}")
        for model in MODEL_ORDER:
            if model in results[pair]:
                row[model] = results[pair][model]
            else:
                missing.append(f"{pair}/{model}")
        cells[pair] = row
    if missing:
        raise DataError("incomplete error table, missing cells: " + ", ".join(missing))
    return ErrorTable(cells)


_RENDER_GROUPS = (("MAE(1e-3)", "mae", 1e3), ("RMSE(1e-3)", "rmse", 1e3),
                  ("MAPE(%)", "mape", 100.0))


def render_error_table(table: ErrorTable) -> str:
    """Human-readable table: one row per pair, metric groups of three model
    columns each, MAE/RMSE scaled by 1e3 and MAPE by 100, two decimals."""
    cell_w = 8
    pair_w = max(len("pair"), *(len(p) for p in table.pairs)) + 2
    group_w = cell_w * len(table.models)
    head1 = " " * pair_w + "".join(label.center(group_w) for label, _, _ in _RENDER_GROUPS)
    head2 = "pair".ljust(pair_w) + "".join(
        m.rjust(cell_w) for _ in _RENDER_GROUPS for m in table.models)
    lines = [head1.rstrip(), head2.rstrip()]
    for pair in table.pairs:
        row = pair.ljust(pair_w)
        for _, attr, factor in _RENDER_GROUPS:
            for model in table.models:
                rep = table.cells[pair][model]
                text = FAILED_CELL_MARK if rep is None else f"{getattr(rep, attr) * factor:.2f}"
                row += text.rjust(cell_w)
        lines.append(row.rstrip())
    return "\n".join(lines) + "\n"


def error_table_csv(table: ErrorTable) -> str:
    """Machine-readable form: ``pair,model,mae,rmse,mape`` with raw full-
    precision values (no 1e-3/percent scaling); failed cells have empty
    metric fields."""
    lines = ["pair,model,mae,rmse,mape"]
    for pair in table.pairs:
        for model in table.models:
            rep = table.cells[pair][model]
            if rep is None:
                lines.append(f"{pair},{model},,,")
            else:
                lines.append(f"{pair},{model},{rep.mae!r},{rep.rmse!r},{rep.mape!r}")
    return "\n".join(lines) + "\n"


def parse_error_table_csv(text: str) -> ErrorTable:
    """Inverse of ``error_table_csv`` (sample counts are not serialized, so
    parsed reports carry n=0)."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != "pair,model,mae,rmse,mape":
        raise DataError("error table CSV must start with 'pair,model,mae,rmse,mape'")
    results: Dict[str, Dict[str, Optional[MetricsReport]]] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 5:
            raise DataError(f"line {lineno}: expected 5 fields, got {len(parts)}")
        pair, model = parts[0], parts[1]
        row = results.setdefault(pair, {})
        if model in row:
            raise DataError(f"line {lineno}: duplicate cell {pair}/{model}")
        if parts[2] == parts[3] == parts[4] == "":
            row[model] = None
            continue
        try:
            row[model] = MetricsReport(
                mae=float(parts[2]), rmse=float(parts[3]), mape=float(parts[4]))
        except ValueError as exc:
            raise DataError(f"line {lineno}: {exc}") from None
    return error_table(results)
