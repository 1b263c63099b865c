"""Deterministic synthetic price series for experiments and tests.

Two generators: a noisy sine (smooth, short memory, easy to learn) and a
seasonal AR(1) process (long-memory structure that rewards models able to
carry state across the window). Both return regular 5-minute-style series
with positive levels, so they flow through the same ingestion, resampling and
windowing path as real data.
"""

from __future__ import annotations

import numpy as np

from .dataio import PriceSeries

DEFAULT_START = 1_600_000_000  # an arbitrary round epoch anchor
DEFAULT_STEP_SECONDS = 300


def noisy_sine(n: int = 2000, *, level: float = 1.0, amplitude: float = 0.1,
               period: int = 50, noise_sigma: float = 0.01, seed: int = 0,
               start: int = DEFAULT_START,
               step_seconds: int = DEFAULT_STEP_SECONDS,
               pair: str = "SINE/USD") -> PriceSeries:
    """Sine wave around ``level`` with additive Gaussian noise."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    t = np.arange(n)
    closes = (level
              + amplitude * np.sin(2.0 * np.pi * t / period)
              + noise_sigma * rng.standard_normal(n))
    timestamps = start + t.astype(np.int64) * step_seconds
    return PriceSeries(pair, timestamps, closes)


def seasonal_ar(n: int = 3000, *, level: float = 1.0,
                season_amplitude: float = 0.05, season_period: int = 20,
                period_drift: float = 0.0, period_band: float = 0.15,
                obs_sigma: float = 0.0,
                ar_coeff: float = 0.8, shock_sigma: float = 0.01,
                seed: int = 0, start: int = DEFAULT_START,
                step_seconds: int = DEFAULT_STEP_SECONDS,
                pair: str = "ARSN/USD") -> PriceSeries:
    """AR(1) deviations plus a seasonal cycle around ``level``.

    The AR part is x_t = ar_coeff * x_{t-1} + shock, so the optimal predictor
    needs both the season phase and the decaying memory of past shocks.

    With ``period_drift`` > 0 the seasonal angular frequency performs a slow
    random walk, reflected inside ``period_band`` (a fraction of the base
    frequency on either side). The per-step increment has standard deviation
    period_drift times the base frequency. A wandering period means no fixed
    linear combination of window values predicts the next sample well; the
    current cycle speed has to be tracked through the noise, which is where
    gated state helps. ``obs_sigma`` adds white measurement noise on top of
    the structural series.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not -1.0 < ar_coeff < 1.0:
        raise ValueError(f"ar_coeff must be inside (-1, 1), got {ar_coeff}")
    if period_drift < 0.0:
        raise ValueError(f"period_drift must be >= 0, got {period_drift}")
    if not 0.0 < period_band < 1.0:
        raise ValueError(f"period_band must be inside (0, 1), got {period_band}")
    if obs_sigma < 0.0:
        raise ValueError(f"obs_sigma must be >= 0, got {obs_sigma}")
    rng = np.random.default_rng(seed)
    shocks = shock_sigma * rng.standard_normal(n)
    x = np.empty(n)
    acc = 0.0
    for k in range(n):
        acc = ar_coeff * acc + shocks[k]
        x[k] = acc
    t = np.arange(n)
    base_freq = 2.0 * np.pi / season_period
    if period_drift > 0.0:
        freq_steps = (period_drift * base_freq) * rng.standard_normal(n)
        lo = base_freq * (1.0 - period_band)
        hi = base_freq * (1.0 + period_band)
        season = np.empty(n)
        freq = base_freq
        phase = 0.0
        for k in range(n):
            freq += freq_steps[k]
            if freq < lo:
                freq = 2.0 * lo - freq
            elif freq > hi:
                freq = 2.0 * hi - freq
            phase += freq
            season[k] = season_amplitude * np.sin(phase)
    else:
        season = season_amplitude * np.sin(base_freq * t)
    closes = level + season + x
    if obs_sigma > 0.0:
        closes = closes + obs_sigma * rng.standard_normal(n)
    timestamps = start + t.astype(np.int64) * step_seconds
    return PriceSeries(pair, timestamps, closes)
