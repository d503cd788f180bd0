"""Synthetic cable-tension corpus generator.

Total tension per cable is composed as dead load + temperature trend +
vehicle-induced term + Gaussian noise. The vehicle term treats each
vehicle as a moving concentrated force: cable i responds with
weight * eta_x_i(x) * eta_y_i(y), where eta_x is a raised-cosine
influence line peaking at the cable anchorage and eta_y is a transverse
lane factor favouring the cable's own side of the deck.

Scripted damage scales the damaged cable's influence line by (1 - delta)
from the event start; scripted missing intervals blank whole channels in
the output mask.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .series import MultiChannelSeries, export_csv, import_csv  # noqa: F401  (export_csv is part of this module's surface)

DEFAULT_CABLE_NUMBERS = tuple(range(8, 15))


def default_cable_names():
    ups = [f"SJS{n:02d}" for n in DEFAULT_CABLE_NUMBERS]
    downs = [f"SJX{n:02d}" for n in DEFAULT_CABLE_NUMBERS]
    return ups + downs


@dataclass
class BridgeModel:
    """Geometry-free bridge description: anchorages, influence lines, dead loads.

    Cables come in upstream/downstream pairs (SJS*/SJX*) sharing anchorage
    positions along the span. ``side`` is +1 for upstream cables, -1 for
    downstream; a vehicle in lane y (positive = upstream side) loads
    same-side cables with factor 1 and cross-side cables with
    ``cross_factor``.
    """

    span: float = 400.0
    cable_names: list = field(default_factory=default_cable_names)
    anchor_positions: np.ndarray = None
    influence_peak: float = 0.4
    influence_width: float = 80.0
    cross_factor: float = 0.4
    dead_loads: np.ndarray = None

    def __post_init__(self):
        m = len(self.cable_names)
        if m % 2 != 0:
            raise ConfigError("cable count must be even (upstream/downstream pairs)")
        half = m // 2
        if self.anchor_positions is None:
            per_side = np.linspace(0.15 * self.span, 0.9 * self.span, half)
            self.anchor_positions = np.concatenate([per_side, per_side])
        self.anchor_positions = np.asarray(self.anchor_positions, dtype=np.float64)
        if self.anchor_positions.shape != (m,):
            raise ConfigError(
                f"{self.anchor_positions.shape[0]} anchor positions for {m} cables"
            )
        if self.dead_loads is None:
            per_side = np.linspace(2500.0, 4500.0, half)
            self.dead_loads = np.concatenate([per_side, per_side])
        self.dead_loads = np.asarray(self.dead_loads, dtype=np.float64)
        if self.dead_loads.shape != (m,):
            raise ConfigError(f"{self.dead_loads.shape[0]} dead loads for {m} cables")
        self.sides = np.array(
            [1.0 if name.startswith("SJS") else -1.0 for name in self.cable_names]
        )

    @property
    def channel_count(self):
        return len(self.cable_names)

    def eta_x(self, x):
        """Longitudinal influence lines, shape (M,) + shape(x); >= 0, peak at anchorage."""
        x = np.asarray(x, dtype=np.float64)
        d = x[None, ...] - self.anchor_positions.reshape(
            (self.channel_count,) + (1,) * x.ndim
        )
        inside = np.abs(d) <= self.influence_width
        return np.where(
            inside,
            self.influence_peak * 0.5 * (1.0 + np.cos(np.pi * d / self.influence_width)),
            0.0,
        )

    def eta_y(self, y):
        """Transverse lane factors, shape (M,) + shape(y)."""
        y = np.asarray(y, dtype=np.float64)
        sides = self.sides.reshape((self.channel_count,) + (1,) * y.ndim)
        same = sides * np.sign(y[None, ...])
        return np.where(same > 0, 1.0, np.where(same < 0, self.cross_factor, 0.5 * (1.0 + self.cross_factor)))


@dataclass
class TrafficScenario:
    arrival_rate: float = 0.05  # vehicles per second (Poisson)
    speed_mean: float = 22.0  # m/s
    speed_std: float = 3.0
    weight_mean: float = 300.0  # kN
    weight_std: float = 100.0
    lanes: list = field(default_factory=lambda: [-1.0, 1.0])
    duration: float = 86400.0  # seconds
    sample_rate: float = 2.0  # Hz

    def __post_init__(self):
        for attr in ("arrival_rate", "speed_mean", "weight_mean", "duration", "sample_rate"):
            if getattr(self, attr) < 0 or (attr != "arrival_rate" and getattr(self, attr) == 0):
                raise ConfigError(f"{attr} must be positive")


@dataclass
class DamageEvent:
    cable: str
    start: float  # seconds from corpus start
    delta: float  # stiffness reduction in (0, 1); 0 means no-op event


@dataclass
class MissingEvent:
    cable: str
    start: float
    end: float


@dataclass
class ScenarioScript:
    damage_events: list = field(default_factory=list)
    missing_events: list = field(default_factory=list)
    temperature_amplitude: float = 30.0  # kN
    temperature_period: float = 86400.0
    temperature_walk_std: float = 0.0  # kN per step of the slow random walk
    noise_std: float = 2.0  # kN

    def validate(self, bridge, duration):
        names = set(bridge.cable_names)
        for ev in self.damage_events:
            if ev.cable not in names:
                raise ConfigError(f"damage event on unknown cable {ev.cable!r}")
            if not 0.0 <= ev.delta < 1.0:
                raise ConfigError(f"damage delta must be in [0, 1), got {ev.delta}")
            if not 0.0 <= ev.start <= duration:
                raise ConfigError(f"damage start {ev.start} outside corpus duration")
        for ev in self.missing_events:
            if ev.cable not in names:
                raise ConfigError(f"missing event on unknown cable {ev.cable!r}")
            if not (0.0 <= ev.start < ev.end <= duration):
                raise ConfigError(
                    f"missing interval [{ev.start}, {ev.end}) outside corpus duration"
                )
        if self.noise_std < 0 or self.temperature_amplitude < 0:
            raise ConfigError("noise/temperature magnitudes must be nonnegative")


def vehicle_tension(bridge, positions, lanes, weights):
    """Tension vector (M,) from concentrated vehicle loads at one instant.

    Superposition over vehicles: T_i = sum_n F_n * eta_x_i(x_n) * eta_y_i(y_n).
    """
    positions = np.atleast_1d(np.asarray(positions, dtype=np.float64))
    lanes = np.atleast_1d(np.asarray(lanes, dtype=np.float64))
    weights = np.atleast_1d(np.asarray(weights, dtype=np.float64))
    if positions.size == 0:
        return np.zeros(bridge.channel_count)
    if np.any(positions < 0) or np.any(positions > bridge.span):
        raise ValueError(
            f"vehicle position outside span [0, {bridge.span}]: {positions}"
        )
    contrib = weights[None, :] * bridge.eta_x(positions) * bridge.eta_y(lanes)
    return contrib.sum(axis=1)


def _draw_vehicles(traffic, rng):
    n = rng.poisson(traffic.arrival_rate * traffic.duration)
    arrivals = np.sort(rng.uniform(0.0, traffic.duration, size=n))
    speeds = np.clip(
        rng.normal(traffic.speed_mean, traffic.speed_std, size=n), 5.0, None
    )
    weights = np.clip(
        rng.normal(traffic.weight_mean, traffic.weight_std, size=n), 10.0, None
    )
    lanes = rng.choice(np.asarray(traffic.lanes, dtype=np.float64), size=n)
    return arrivals, speeds, weights, lanes


def _vehicle_term(bridge, traffic, rng, n_samples):
    """Vehicle-induced tension (N, M), accumulated crossing by crossing."""
    arrivals, speeds, weights, lanes = _draw_vehicles(traffic, rng)
    tv = np.zeros((n_samples, bridge.channel_count))
    rate = traffic.sample_rate
    for t0, v, w, lane in zip(arrivals, speeds, weights, lanes):
        t1 = t0 + bridge.span / v
        i0 = max(int(math.ceil(t0 * rate)), 0)
        i1 = min(int(math.floor(t1 * rate)), n_samples - 1)
        if i1 < i0:
            continue
        t = np.arange(i0, i1 + 1) / rate
        x = np.clip(v * (t - t0), 0.0, bridge.span)
        contrib = w * bridge.eta_x(x) * bridge.eta_y(np.asarray(lane))[:, None]
        tv[i0 : i1 + 1] += contrib.T
    return tv


def _temperature_term(bridge, script, rng, n_samples, sample_rate):
    """Shared daily sinusoid (+ optional slow random walk), scaled per channel."""
    t = np.arange(n_samples) / sample_rate
    base = script.temperature_amplitude * np.sin(
        2.0 * np.pi * t / script.temperature_period
    )
    if script.temperature_walk_std > 0:
        # Walk at 10-minute resolution, interpolated to the sample grid.
        step = 600.0
        n_knots = int(math.ceil(n_samples / (step * sample_rate))) + 2
        knots = np.cumsum(rng.normal(0.0, script.temperature_walk_std, size=n_knots))
        knot_t = np.arange(n_knots) * step
        base = base + np.interp(t, knot_t, knots)
    scales = rng.uniform(0.8, 1.2, size=bridge.channel_count)
    return base[:, None] * scales[None, :]


def generate_corpus(bridge, traffic, script, seed, return_components=False):
    """Generate a MultiChannelSeries; deterministic for a given seed.

    With ``return_components=True`` also returns a dict with the dead,
    temperature, vehicle (post-damage) and noise terms for oracle checks.
    """
    script.validate(bridge, traffic.duration)
    rng = np.random.default_rng(seed)
    n_samples = int(round(traffic.duration * traffic.sample_rate))
    m = bridge.channel_count

    t_e = _temperature_term(bridge, script, rng, n_samples, traffic.sample_rate)
    t_v = _vehicle_term(bridge, traffic, rng, n_samples)

    for ev in script.damage_events:
        ci = bridge.cable_names.index(ev.cable)
        i0 = int(math.ceil(ev.start * traffic.sample_rate))
        t_v[i0:, ci] *= 1.0 - ev.delta

    t_r = rng.normal(0.0, script.noise_std, size=(n_samples, m)) if script.noise_std > 0 else np.zeros((n_samples, m))

    values = bridge.dead_loads[None, :] + t_e + t_v + t_r
    mask = np.ones((n_samples, m), dtype=bool)
    for ev in script.missing_events:
        ci = bridge.cable_names.index(ev.cable)
        i0 = int(math.ceil(ev.start * traffic.sample_rate))
        i1 = int(math.ceil(ev.end * traffic.sample_rate))
        mask[i0:i1, ci] = False
    values = np.where(mask, values, np.nan)

    series = MultiChannelSeries(list(bridge.cable_names), traffic.sample_rate, values, mask)
    if return_components:
        return series, {
            "dead": np.broadcast_to(bridge.dead_loads, (n_samples, m)),
            "temperature": t_e,
            "vehicle": t_v,
            "noise": t_r,
        }
    return series
