"""Trend removal and training-batch preparation.

The slow temperature-driven component is estimated per channel as the
median of each fixed-length segment (vehicles are sparse spikes, so the
segment median sits on the trend), linearly interpolated between segment
midpoints and constant-extended at the edges. Detrending subtracts this
trend, leaving the vehicle-induced term plus noise.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateChannelError, ShapeError
from .series import MultiChannelSeries

THREADS_ENV_VAR = "TENSION_SENTINEL_THREADS"


def worker_count(n_tasks):
    """Parallelism cap: min(task count, TENSION_SENTINEL_THREADS or cpu count)."""
    cap = os.environ.get(THREADS_ENV_VAR)
    if cap is not None:
        try:
            cap = max(1, int(cap))
        except ValueError:
            cap = 1
    else:
        cap = os.cpu_count() or 1
    return max(1, min(n_tasks, cap))


@dataclass
class TrendModel:
    """Per-segment channel medians with linear interpolation between midpoints."""

    segment_seconds: float
    sample_rate: float
    n_samples: int
    midpoints: np.ndarray  # (S,) sample indices (may be fractional)
    medians: np.ndarray  # (S, M), NaN for segments with no observed data
    undefined_channels: list = field(default_factory=list)

    def evaluate(self):
        """Trend values on the full sample grid, shape (n_samples, M).

        Channels with no observed data anywhere are NaN columns.
        """
        S, M = self.medians.shape
        t = np.arange(self.n_samples, dtype=np.float64)
        out = np.empty((self.n_samples, M))
        for ch in range(M):
            col = self.medians[:, ch]
            ok = ~np.isnan(col)
            if not ok.any():
                out[:, ch] = np.nan
                continue
            out[:, ch] = np.interp(t, self.midpoints[ok], col[ok])
        return out


def estimate_trend(series, segment_seconds=30.0):
    """Segment-median trend per channel.

    Segments with zero observed samples for a channel are skipped and
    bridged by the interpolation; a channel observed nowhere is listed in
    ``undefined_channels`` (its trend is NaN).
    """
    seg_len = int(round(segment_seconds * series.sample_rate))
    if seg_len < 4:
        raise ValueError(
            f"segment of {segment_seconds}s at {series.sample_rate}Hz holds "
            f"{seg_len} samples; need at least 4"
        )
    n, m = series.values.shape
    n_seg = (n + seg_len - 1) // seg_len
    medians = np.full((n_seg, m), np.nan)
    midpoints = np.empty(n_seg)

    vals = np.where(series.mask, series.values, np.nan)

    def one_channel(ch):
        col = vals[:, ch]
        for s in range(n_seg):
            seg = col[s * seg_len : (s + 1) * seg_len]
            if np.any(~np.isnan(seg)):
                medians[s, ch] = np.nanmedian(seg)

    nw = worker_count(m)
    if nw > 1:
        with ThreadPoolExecutor(max_workers=nw) as ex:
            list(ex.map(one_channel, range(m)))
    else:
        for ch in range(m):
            one_channel(ch)

    for s in range(n_seg):
        lo = s * seg_len
        hi = min((s + 1) * seg_len, n)
        midpoints[s] = 0.5 * (lo + hi - 1)

    undefined = [series.names[ch] for ch in range(m) if np.all(np.isnan(medians[:, ch]))]
    return TrendModel(
        segment_seconds=segment_seconds,
        sample_rate=series.sample_rate,
        n_samples=n,
        midpoints=midpoints,
        medians=medians,
        undefined_channels=undefined,
    )


def detrend(series, trend):
    """Subtract the trend from observed entries; the mask is unchanged except
    that channels with an undefined trend become fully missing."""
    if trend.n_samples != series.n_samples:
        raise ShapeError(
            f"trend covers {trend.n_samples} samples, series has {series.n_samples}"
        )
    tvals = trend.evaluate()
    values = np.where(series.mask, series.values - tvals, np.nan)
    mask = series.mask.copy()
    for name in trend.undefined_channels:
        ch = series.names.index(name)
        mask[:, ch] = False
        values[:, ch] = np.nan
    return MultiChannelSeries(list(series.names), series.sample_rate, values, mask)


@dataclass
class ChannelStats:
    """Per-channel mean/std of the detrended training data (z-score normalizer)."""

    names: list
    mean: np.ndarray
    std: np.ndarray

    def to_records(self):
        return [
            {"name": n, "mean": float(mu), "std": float(sd)}
            for n, mu, sd in zip(self.names, self.mean, self.std)
        ]

    @classmethod
    def from_records(cls, records):
        return cls(
            [r["name"] for r in records],
            np.array([r["mean"] for r in records], dtype=np.float64),
            np.array([r["std"] for r in records], dtype=np.float64),
        )


def fit_normalizer(series):
    """Per-channel mean/std over observed entries; raises on degenerate channels."""
    mean = np.empty(series.channel_count)
    std = np.empty(series.channel_count)
    for ch in range(series.channel_count):
        obs = series.values[series.mask[:, ch], ch]
        if obs.size < 2:
            raise DegenerateChannelError(
                f"channel {series.names[ch]} has {obs.size} observed samples (need >= 2)"
            )
        mean[ch] = obs.mean()
        std[ch] = obs.std()
        if std[ch] == 0.0:
            raise DegenerateChannelError(
                f"channel {series.names[ch]} has zero variance"
            )
    return ChannelStats(list(series.names), mean, std)


def apply_normalizer(series, stats):
    values = np.where(series.mask, (series.values - stats.mean) / stats.std, np.nan)
    return MultiChannelSeries(list(series.names), series.sample_rate, values, series.mask.copy())


def invert_normalizer(series, stats):
    values = np.where(series.mask, series.values * stats.std + stats.mean, np.nan)
    return MultiChannelSeries(list(series.names), series.sample_rate, values, series.mask.copy())


def normalize_values(values, stats):
    """Array-level z-scoring (used on window tensors)."""
    return (values - stats.mean) / stats.std


def denormalize_values(values, stats):
    return values * stats.std + stats.mean


def sample_windows(series, window_length, batch_size, rng):
    """Uniformly random (batch, T, M) windows plus their observed masks.

    Missing entries are zero-filled in the returned tensor (the same
    convention the channel-dropout training uses); the mask records which
    entries were really observed. Windows are copies.
    """
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    n = series.n_samples
    if n < window_length:
        raise ShapeError(f"series length {n} shorter than window length {window_length}")
    starts = rng.integers(0, n - window_length + 1, size=batch_size)
    batch = np.empty((batch_size, window_length, series.channel_count))
    masks = np.empty((batch_size, window_length, series.channel_count), dtype=bool)
    for b, s in enumerate(starts):
        w = series.values[s : s + window_length]
        m = series.mask[s : s + window_length]
        batch[b] = np.where(m, w, 0.0)
        masks[b] = m
    return batch, masks, starts


def mask_channels(batch, k, rng):
    """Zero a random k-subset of channels per window (all timesteps alike).

    Returns the masked copy and the per-window dropped index arrays.
    """
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    batch = np.asarray(batch, dtype=np.float64)
    m = batch.shape[2]
    if not 0 <= k < m:
        raise ValueError(f"dropout channel count {k} must be in [0, {m})")
    out = batch.copy()
    dropped = []
    for b in range(batch.shape[0]):
        idx = rng.permutation(m)[:k]
        out[b][:, idx] = 0.0
        dropped.append(np.sort(idx))
    return out, dropped
