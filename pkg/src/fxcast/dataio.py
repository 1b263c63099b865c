"""Close-price ingestion, fixed-interval resampling, summary statistics and the
chronological train/test split.

CSV contract: header line ``timestamp,close``, then one row per observation
with an ISO-8601 UTC instant (``Z`` suffix, whole seconds) and a positive
decimal close.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import BinaryIO, Tuple, Union

import numpy as np

from .errors import DataError
from .pipeline import WindowedDataset

CSV_HEADER = "timestamp,close"


@dataclass(frozen=True)
class PriceSeries:
    """Timestamped close prices for one currency pair.

    Timestamps are epoch seconds, strictly increasing; closes are positive
    finite float64.  Instances are immutable and safe to share.
    """

    pair: str
    timestamps: np.ndarray
    closes: np.ndarray

    def __post_init__(self):
        ts = np.ascontiguousarray(self.timestamps, dtype=np.int64)
        cl = np.ascontiguousarray(self.closes, dtype=np.float64)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "closes", cl)
        if ts.ndim != 1 or cl.ndim != 1 or ts.shape != cl.shape:
            raise DataError(
                f"timestamps and closes must be equal-length 1-d arrays, "
                f"got {ts.shape} and {cl.shape}"
            )
        if len(ts) > 1 and np.any(np.diff(ts) <= 0):
            raise DataError("timestamps must be strictly increasing")
        if not np.all(np.isfinite(cl)) or np.any(cl <= 0):
            raise DataError("closes must be positive and finite")

    def __len__(self) -> int:
        return len(self.timestamps)


@dataclass(frozen=True)
class StatsRow:
    """Descriptive statistics of a close-price series, all in rate units."""

    mean: float
    std: float
    min: float
    q1: float
    q2: float
    q3: float
    max: float

    def __post_init__(self):
        if not (self.min <= self.q1 <= self.q2 <= self.q3 <= self.max):
            raise DataError("quantiles out of order")
        if self.std < 0:
            raise DataError("standard deviation must be non-negative")


def _parse_instant(text: str, lineno: int) -> int:
    if not text.endswith("Z"):
        raise DataError(
            f"line {lineno}: timestamp {text!r} must be an ISO-8601 UTC instant "
            f"with a 'Z' suffix"
        )
    try:
        dt = datetime.fromisoformat(text[:-1] + "+00:00")
    except ValueError:
        raise DataError(f"line {lineno}: cannot parse timestamp {text!r}") from None
    if dt.microsecond != 0:
        raise DataError(f"line {lineno}: sub-second timestamps are not supported")
    return int(dt.timestamp())


def _parse_close(text: str, lineno: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise DataError(f"line {lineno}: cannot parse close {text!r}") from None
    if not math.isfinite(value) or value <= 0:
        raise DataError(f"line {lineno}: close must be positive and finite, got {text!r}")
    return value


def parse_price_csv(source: Union[bytes, str, BinaryIO], pair: str = "") -> PriceSeries:
    """Parse ``timestamp,close`` CSV bytes into a PriceSeries.

    Rows are sorted by timestamp; duplicate timestamps are rejected.  Every
    error names the offending 1-based line number.
    """
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        text = source
    elif hasattr(source, "read"):
        raw = source.read()
        text = raw.decode("utf-8") if isinstance(raw, bytes) else raw
    else:
        raise TypeError(f"unsupported CSV source type: {type(source)!r}")

    lines = text.splitlines()
    if not lines:
        raise DataError("empty input: missing header line")
    if lines[0].strip() != CSV_HEADER:
        raise DataError(f"line 1: expected header {CSV_HEADER!r}, got {lines[0]!r}")

    stamps = []
    closes = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 2:
            raise DataError(f"line {lineno}: expected 'timestamp,close', got {line!r}")
        stamps.append(_parse_instant(parts[0].strip(), lineno))
        closes.append(_parse_close(parts[1].strip(), lineno))

    if not stamps:
        raise DataError("no data rows")

    ts = np.asarray(stamps, dtype=np.int64)
    cl = np.asarray(closes, dtype=np.float64)
    order = np.argsort(ts, kind="stable")
    ts, cl = ts[order], cl[order]
    dup = np.nonzero(np.diff(ts) == 0)[0]
    if dup.size:
        when = datetime.fromtimestamp(int(ts[dup[0]]), tz=timezone.utc)
        raise DataError(f"duplicate timestamp {when.isoformat().replace('+00:00', 'Z')}")
    return PriceSeries(pair, ts, cl)


def format_instant(epoch_seconds: int) -> str:
    """Epoch seconds to the ISO-8601 UTC form the parser accepts."""
    dt = datetime.fromtimestamp(int(epoch_seconds), tz=timezone.utc)
    return dt.strftime("%Y-%m-%dT%H:%M:%SZ")


def price_csv(series: PriceSeries) -> str:
    """Render a PriceSeries as ``timestamp,close`` CSV text.

    Closes are written with repr precision, so parse(render(s)) restores the
    exact float64 values.
    """
    lines = [CSV_HEADER]
    for ts, close in zip(series.timestamps, series.closes):
        lines.append(f"{format_instant(ts)},{float(close)!r}")
    return "\n".join(lines) + "\n"


def resample_last(series: PriceSeries, bucket_seconds: int) -> PriceSeries:
    """Resample to fixed buckets, keeping the last observation of each bucket.

    Buckets are right-closed intervals ``(k*b, (k+1)*b]`` labelled by their end
    boundary, so a bucket's value is fully observable at its own timestamp and
    resampling an already-resampled series is a no-op.  Empty buckets are
    simply absent: no forward fill.
    """
    if bucket_seconds < 1:
        raise ValueError(f"bucket_seconds must be >= 1, got {bucket_seconds}")
    if len(series) == 0:
        raise DataError("cannot resample an empty series")
    b = np.int64(bucket_seconds)
    ends = -(-series.timestamps // b) * b  # ceil division
    # last index of each run of equal bucket ends
    keep = np.nonzero(np.diff(ends) != 0)[0]
    idx = np.concatenate([keep, [len(ends) - 1]])
    return PriceSeries(series.pair, ends[idx], series.closes[idx])


def summary_stats(series: PriceSeries) -> StatsRow:
    """Mean, population std, extrema and linear-interpolation quartiles.

    Computed on a sorted copy so the result is bit-identical for any ordering
    of the same values (summation order changes the last ulp otherwise).
    """
    if len(series) == 0:
        raise DataError("summary statistics need at least one observation")
    c = np.sort(series.closes)
    q1, q2, q3 = np.quantile(c, [0.25, 0.5, 0.75])
    return StatsRow(
        mean=float(c.mean()),
        std=float(c.std()),
        min=float(c[0]),
        q1=float(q1),
        q2=float(q2),
        q3=float(q3),
        max=float(c[-1]),
    )


def stats_csv(rows: dict) -> str:
    """Render ``pair -> StatsRow`` as CSV, pairs in lexicographic order."""
    out = ["pair,mean,std,min,q1,q2,q3,max"]
    for pair in sorted(rows):
        r = rows[pair]
        out.append(
            f"{pair},{r.mean:.6f},{r.std:.6f},{r.min:.6f},"
            f"{r.q1:.6f},{r.q2:.6f},{r.q3:.6f},{r.max:.6f}"
        )
    return "\n".join(out) + "\n"


def split_index(n: int, train_fraction: float) -> int:
    """First ``floor(n * train_fraction)`` items are train, the rest test."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    k = int(math.floor(n * train_fraction))
    if k == 0 or k >= n:
        raise DataError(
            f"split of {n} samples at fraction {train_fraction} leaves an empty side"
        )
    return k


def chronological_split(
    dataset: WindowedDataset, train_fraction: float
) -> Tuple[WindowedDataset, WindowedDataset]:
    """Split windowed samples in time order; no shuffling, no overlap."""
    if len(dataset) == 0:
        raise DataError("cannot split an empty dataset")
    k = split_index(len(dataset), train_fraction)
    return dataset.slice(0, k), dataset.slice(k, len(dataset))
