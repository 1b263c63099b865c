"""Min-max scaling with an exact affine inverse, and sliding-window samples.

Windows are univariate: ``window_len`` consecutive scaled closes as features,
the immediately following close as the label, stride 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, ShapeError
from .numkit import as_vector


@dataclass(frozen=True)
class Scaler:
    """Min-max bounds mapping rates onto [0, 1] (and exactly back)."""

    x_min: float
    x_max: float

    def __post_init__(self):
        if not (np.isfinite(self.x_min) and np.isfinite(self.x_max)):
            raise DataError("scaler bounds must be finite")
        if not self.x_max > self.x_min:
            raise DataError(
                f"scaler needs x_max > x_min, got [{self.x_min}, {self.x_max}]"
            )


def fit_scaler(values) -> Scaler:
    """Scaler from the extrema of ``values``; a constant series is an error."""
    v = as_vector(values)
    if v.size == 0:
        raise DataError("cannot fit a scaler on an empty series")
    lo, hi = float(v.min()), float(v.max())
    if not hi > lo:
        raise DataError(f"constant series (min == max == {lo}): scaling undefined")
    return Scaler(lo, hi)


def scale(s: Scaler, x):
    """Affine map onto [0, 1]; inputs outside the fit range map outside [0, 1]."""
    return (x - s.x_min) / (s.x_max - s.x_min)


def unscale(s: Scaler, y):
    """Exact inverse of ``scale``."""
    return y * (s.x_max - s.x_min) + s.x_min


@dataclass(frozen=True)
class WindowedDataset:
    """Stride-1 sliding windows with next-step labels.

    ``origin_index[i]`` is the index of sample i's label in the source vector
    that ``make_windows`` consumed.
    """

    window_len: int
    features: np.ndarray
    labels: np.ndarray
    origin_index: np.ndarray

    def __post_init__(self):
        f, l, o = self.features, self.labels, self.origin_index
        if f.ndim != 2 or l.ndim != 1 or o.ndim != 1:
            raise ShapeError("features must be 2-d; labels and origin_index 1-d")
        if not (f.shape[0] == l.shape[0] == o.shape[0]):
            raise ShapeError(
                f"sample counts disagree: {f.shape[0]} features, "
                f"{l.shape[0]} labels, {o.shape[0]} origins"
            )
        if f.shape[1] != self.window_len:
            raise ShapeError(
                f"features have {f.shape[1]} columns, expected window_len={self.window_len}"
            )

    def __len__(self) -> int:
        return len(self.labels)

    def slice(self, start: int, stop: int) -> "WindowedDataset":
        return WindowedDataset(
            self.window_len,
            self.features[start:stop],
            self.labels[start:stop],
            self.origin_index[start:stop],
        )


def make_windows(values, window_len: int) -> WindowedDataset:
    """Build all length-``window_len`` windows with their next-step labels."""
    if window_len < 1:
        raise ValueError(f"window_len must be >= 1, got {window_len}")
    v = as_vector(values)
    if v.size < window_len + 1:
        raise DataError(
            f"need at least {window_len + 1} values to build one window of "
            f"length {window_len}, got {v.size}"
        )
    n = v.size - window_len
    features = np.lib.stride_tricks.sliding_window_view(v, window_len)[:n].copy()
    labels = v[window_len:].copy()
    origin = np.arange(window_len, v.size, dtype=np.int64)
    return WindowedDataset(window_len, features, labels, origin)
