"""Multichannel tension series container and its CSV wire format.

CSV layout: header ``timestamp,<name0>,<name1>,...``; timestamp is the
seconds offset from series start; missing entries are empty cells. Values
are written with shortest-round-trip precision so export -> import is
value-exact.
"""

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import ShapeError


@dataclass
class MultiChannelSeries:
    names: list
    sample_rate: float
    values: np.ndarray  # (N, M), NaN where missing
    mask: np.ndarray  # (N, M) bool, True = observed

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.values.ndim != 2:
            raise ShapeError(f"values must be 2-D, got {self.values.shape}")
        if self.mask.shape != self.values.shape:
            raise ShapeError(
                f"mask shape {self.mask.shape} != values shape {self.values.shape}"
            )
        if len(self.names) != self.values.shape[1]:
            raise ShapeError(
                f"{len(self.names)} names for {self.values.shape[1]} channels"
            )
        if len(set(self.names)) != len(self.names):
            raise ValueError("channel names must be unique")
        if self.sample_rate <= 0:
            raise ValueError("sample rate must be positive")
        observed = self.values[self.mask]
        if observed.size and not np.all(np.isfinite(observed)):
            raise ValueError("observed entries must be finite")

    @property
    def n_samples(self):
        return self.values.shape[0]

    @property
    def channel_count(self):
        return self.values.shape[1]

    @property
    def timestamps(self):
        return np.arange(self.n_samples) / self.sample_rate

    def channel_index(self, name):
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown channel {name!r}") from None

    def slice_time(self, start_seconds, end_seconds):
        """Half-open [start, end) slice by time offset."""
        i0 = int(np.ceil(start_seconds * self.sample_rate))
        i1 = int(np.ceil(end_seconds * self.sample_rate))
        i0 = max(i0, 0)
        i1 = min(i1, self.n_samples)
        return MultiChannelSeries(
            list(self.names),
            self.sample_rate,
            self.values[i0:i1].copy(),
            self.mask[i0:i1].copy(),
        )

    def copy(self):
        return MultiChannelSeries(
            list(self.names), self.sample_rate, self.values.copy(), self.mask.copy()
        )


def export_csv(series, path):
    df = pd.DataFrame(
        np.where(series.mask, series.values, np.nan), columns=series.names
    )
    df.insert(0, "timestamp", series.timestamps)
    df.to_csv(path, index=False, na_rep="")


def import_csv(path, sample_rate=None):
    # The default parser can be one ulp off; values must survive the
    # CSV round trip bit-exactly.
    df = pd.read_csv(path, float_precision="round_trip")
    if df.columns[0] != "timestamp":
        raise ValueError(f"first CSV column must be 'timestamp', got {df.columns[0]!r}")
    names = list(df.columns[1:])
    values = df[names].to_numpy(dtype=np.float64)
    mask = ~np.isnan(values)
    if sample_rate is None:
        ts = df["timestamp"].to_numpy(dtype=np.float64)
        if len(ts) < 2:
            raise ValueError("cannot infer sample rate from fewer than 2 rows")
        sample_rate = 1.0 / (ts[1] - ts[0])
    return MultiChannelSeries(names, sample_rate, values, mask)
