"""Training, baseline fitting, imputation, and 3-sigma damage diagnosis.

Training follows the channel-dropout recipe: sample random windows from
the detrended/normalized series, zero a random k-subset of channels per
window, and regress the reconstruction against the unmasked window. The
loss counts intentionally-dropped channels (their ground truth is known)
but excludes really-missing entries (no ground truth).

Diagnosis standardizes each channel's mean per-window reconstruction
error by the healthy-period baseline and flags channels whose z-score
exceeds 3.
"""

import json
import time
from dataclasses import dataclass, field, asdict

import numpy as np

from .errors import DegenerateChannelError, ShapeError, TrainingDiverged
from .nn.losses import mse_loss, mse_loss_grad
from .nn.optim import clip_global_norm, make_optimizer
from .preprocess import (
    ChannelStats,
    mask_channels,
    normalize_values,
    sample_windows,
)
from .series import MultiChannelSeries

DAMAGE_Z_THRESHOLD = 3.0


@dataclass
class TrainConfig:
    window_length: int = 2400
    batch_size: int = 30
    learning_rate: float = 0.005
    max_iterations: int = 100_000
    drop_channels: int = 0
    optimizer: str = "adam"
    clip_norm: float = 5.0
    seed: int = 0
    log_interval: int = 100

    def __post_init__(self):
        if self.window_length < 1 or self.batch_size < 1 or self.max_iterations < 0:
            raise ValueError("window length, batch size and iteration budget must be positive")
        if self.drop_channels < 0:
            raise ValueError("drop_channels must be nonnegative")
        if self.learning_rate < 0:
            raise ValueError("learning rate must be nonnegative")

    @classmethod
    def desk_scale(cls, **overrides):
        """Reduced profile for laptop-scale runs: T=240, 5000 iterations."""
        base = dict(window_length=240, max_iterations=5000)
        base.update(overrides)
        return cls(**base)


@dataclass
class TrainLog:
    iterations: list = field(default_factory=list)
    losses: list = field(default_factory=list)
    wall_times: list = field(default_factory=list)

    def append(self, iteration, loss, wall_time):
        if self.iterations and iteration <= self.iterations[-1]:
            raise ValueError("iterations must be strictly increasing")
        self.iterations.append(int(iteration))
        self.losses.append(float(loss))
        self.wall_times.append(float(wall_time))

    @property
    def final_loss(self):
        return self.losses[-1]

    @property
    def initial_loss(self):
        return self.losses[0]

    def to_csv(self, path):
        # Wall clock stays out of the file so same-seed runs are byte-identical.
        with open(path, "w") as fh:
            fh.write("iteration,loss\n")
            for it, loss in zip(self.iterations, self.losses):
                fh.write(f"{it},{loss!r}\n")

    @classmethod
    def from_csv(cls, path):
        log = cls()
        with open(path) as fh:
            header = fh.readline().strip()
            if header != "iteration,loss":
                raise ValueError(f"unexpected train-log header {header!r}")
            for line in fh:
                it, loss = line.strip().split(",")
                log.iterations.append(int(it))
                log.losses.append(float(loss))
                log.wall_times.append(float("nan"))
        return log


def train(model, series, config):
    """Train in place on a detrended, normalized series; returns the TrainLog."""
    if series.channel_count != model.channel_count:
        raise ShapeError(
            f"series has {series.channel_count} channels, model expects {model.channel_count}"
        )
    if config.drop_channels >= series.channel_count:
        raise ValueError(
            f"cannot drop {config.drop_channels} of {series.channel_count} channels"
        )
    rng = np.random.default_rng(config.seed)
    params = model.parameters()
    optimizer = make_optimizer(config.optimizer, params, config.learning_rate)
    log = TrainLog()
    t0 = time.monotonic()
    m = series.channel_count
    for it in range(1, config.max_iterations + 1):
        batch, masks, _ = sample_windows(
            series, config.window_length, config.batch_size, rng
        )
        inputs, _ = mask_channels(batch, config.drop_channels, rng)
        pred = model.forward_batch(inputs)
        flat_mask = masks.reshape(-1, m)
        loss = mse_loss(pred.reshape(-1, m), batch.reshape(-1, m), mask=flat_mask)
        if not np.isfinite(loss):
            raise TrainingDiverged(it, loss)
        grad = mse_loss_grad(
            pred.reshape(-1, m), batch.reshape(-1, m), mask=flat_mask
        ).reshape(pred.shape)
        model.zero_grad()
        model.backward_batch(grad)
        clip_global_norm(params, config.clip_norm)
        optimizer.step()
        if it == 1 or it % config.log_interval == 0 or it == config.max_iterations:
            log.append(it, loss, time.monotonic() - t0)
    return log


@dataclass
class BaselineStats:
    """Healthy-reference distribution of per-channel window reconstruction error."""

    names: list
    mean: np.ndarray
    std: np.ndarray
    window_count: int
    period_id: str = ""

    def to_dict(self):
        return {
            "names": list(self.names),
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
            "window_count": self.window_count,
            "period_id": self.period_id,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            list(d["names"]),
            np.asarray(d["mean"], dtype=np.float64),
            np.asarray(d["std"], dtype=np.float64),
            int(d["window_count"]),
            d.get("period_id", ""),
        )


def _window_channel_errors(model, series, stats, window_length, windows, masks,
                           zero_channels=None):
    """Per-window per-channel mean squared error in normalized space.

    ``windows``/``masks`` come from sample_windows on the *detrended* series
    (values zero-filled at missing). Channels in ``zero_channels`` are zeroed
    at the model input; errors are still scored against the withheld truth.
    Entries with no ground truth contribute NaN.
    """
    n_w, T, m = windows.shape
    norm = normalize_values(np.where(masks, windows, stats.mean), stats)
    norm = np.where(masks, norm, 0.0)
    inputs = norm.copy()
    if zero_channels:
        inputs[:, :, list(zero_channels)] = 0.0
    pred = model.forward_batch(inputs)
    sq = (pred - norm) ** 2
    sq = np.where(masks, sq, np.nan)
    with np.errstate(invalid="ignore"):
        return np.nanmean(sq, axis=1)  # (n_w, m); NaN where a window has no truth


def fit_baseline(model, series, stats, window_length, n_windows=64, seed=0,
                 min_windows=30, period_id="", declared_missing=()):
    """Per-channel error mean/std over randomly sampled healthy windows.

    No synthetic dropout is applied: this measures the model's native
    reconstruction quality on the reference period. When the evaluation
    will run with known-dead sensors, pass them as ``declared_missing`` so
    the baseline reflects the same input configuration (errors are still
    scored against the withheld reference values).
    """
    if n_windows < min_windows:
        raise ValueError(f"need at least {min_windows} windows, got {n_windows}")
    rng = np.random.default_rng(seed)
    drop_idx = [series.channel_index(name) for name in declared_missing]
    windows, masks, _ = sample_windows(series, window_length, n_windows, rng)
    errors = _window_channel_errors(model, series, stats, window_length, windows,
                                    masks, zero_channels=drop_idx)
    mean = np.nanmean(errors, axis=0)
    std = np.nanstd(errors, axis=0)
    if np.any(~np.isfinite(mean)):
        bad = [series.names[i] for i in np.where(~np.isfinite(mean))[0]]
        raise ValueError(f"no scoreable reference data for channels {bad}")
    if np.any(std == 0.0):
        bad = [series.names[i] for i in np.where(std == 0.0)[0]]
        raise DegenerateChannelError(f"zero error variance on channels {bad}")
    return BaselineStats(list(series.names), mean, std, n_windows, period_id)


def impute(model, series, stats, window_length):
    """Fill missing entries with the model reconstruction (denormalized).

    Observed entries are kept verbatim. The series must be in the same
    (detrended) space the normalizer was fitted on. Returns the imputed
    series plus a boolean matrix marking the filled entries.
    """
    if not series.mask.any():
        raise ValueError("cannot impute a series with no observed data at all")
    n, m = series.values.shape
    T = min(window_length, n)
    starts = list(range(0, n - T + 1, T))
    if starts[-1] + T < n:
        starts.append(n - T)
    out = series.values.copy()
    imputed = ~series.mask
    for s in starts:
        w = series.values[s : s + T]
        msk = series.mask[s : s + T]
        norm = normalize_values(np.where(msk, w, stats.mean), stats)
        norm = np.where(msk, norm, 0.0)
        pred = model.forward_batch(norm[None])[0]
        filled = pred * stats.std + stats.mean
        out[s : s + T] = np.where(msk, w, filled)
    mask = np.ones((n, m), dtype=bool)
    result = MultiChannelSeries(list(series.names), series.sample_rate, out, mask)
    return result, imputed


@dataclass
class ChannelDiagnosis:
    name: str
    mean_error: float
    z: float
    damaged: bool
    missing: bool
    imputed: bool
    scoreable: bool = True


@dataclass
class DamageReport:
    channels: list
    threshold: float = DAMAGE_Z_THRESHOLD

    @property
    def damaged_channels(self):
        return [c.name for c in self.channels if c.damaged]

    @property
    def any_damage(self):
        return bool(self.damaged_channels)

    def to_json(self, path=None):
        recs = []
        for c in self.channels:
            r = asdict(c)
            # Unscoreable channels carry NaN scores; JSON gets null instead.
            for key in ("mean_error", "z"):
                if not np.isfinite(r[key]):
                    r[key] = None
            recs.append(r)
        doc = {"threshold": self.threshold, "channels": recs}
        text = json.dumps(doc, indent=2, sort_keys=True, allow_nan=False)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            doc = json.load(fh)
        channels = []
        for c in doc["channels"]:
            for key in ("mean_error", "z"):
                if c[key] is None:
                    c[key] = float("nan")
            channels.append(ChannelDiagnosis(**c))
        return cls(channels, threshold=doc["threshold"])


def diagnose(model, baseline, series, stats, window_length, declared_missing=()):
    """3-sigma damage diagnosis of an evaluation series.

    ``declared_missing`` channels are zeroed at the model input (simulating
    lost sensors) but still scored against their withheld values where those
    exist. Channels with no ground truth anywhere are reported unscoreable.
    Windows tile the series deterministically.
    """
    if list(baseline.names) != list(series.names):
        raise ShapeError(
            f"baseline channels {baseline.names} != series channels {series.names}"
        )
    declared_missing = list(declared_missing)
    for name in declared_missing:
        series.channel_index(name)
    n, m = series.values.shape
    T = min(window_length, n)
    starts = list(range(0, n - T + 1, T))
    if starts[-1] + T < n:
        starts.append(n - T)
    windows = np.empty((len(starts), T, m))
    masks = np.empty((len(starts), T, m), dtype=bool)
    for b, s in enumerate(starts):
        msk = series.mask[s : s + T]
        windows[b] = np.where(msk, series.values[s : s + T], 0.0)
        masks[b] = msk
    drop_idx = [series.channel_index(name) for name in declared_missing]
    # Really-missing entries are zero-filled by the mask handling; declared
    # channels are zeroed wholesale on top of that.
    errors = _window_channel_errors(
        model, series, stats, T, windows, masks, zero_channels=drop_idx
    )
    mean_err = np.nanmean(errors, axis=0)
    fully_missing = ~series.mask.any(axis=0)
    channels = []
    for ch in range(m):
        name = series.names[ch]
        missing = name in declared_missing or bool(fully_missing[ch])
        scoreable = bool(np.isfinite(mean_err[ch]))
        if scoreable:
            z = float((mean_err[ch] - baseline.mean[ch]) / baseline.std[ch])
            damaged = z > DAMAGE_Z_THRESHOLD
            me = float(mean_err[ch])
        else:
            z = float("nan")
            damaged = False
            me = float("nan")
        channels.append(
            ChannelDiagnosis(
                name=name,
                mean_error=me,
                z=z,
                damaged=damaged,
                missing=missing,
                imputed=missing,
                scoreable=scoreable,
            )
        )
    return DamageReport(channels)
