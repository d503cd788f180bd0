"""Inverted dropout: survivors scaled by 1/(1-p) so the expectation is unchanged."""

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError

MODES = ("unit", "channel")


@dataclass
class DropoutSpec:
    probability: float
    mode: str = "unit"
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.probability < 1.0:
            raise ConfigError(f"dropout probability must be in [0, 1), got {self.probability}")
        if self.mode not in MODES:
            raise ConfigError(f"dropout mode must be one of {MODES}, got {self.mode!r}")


def dropout_apply(x, spec, training=True, rng=None):
    """Apply inverted dropout to a 2-D array.

    In "unit" mode each entry is dropped independently; in "channel" mode a
    single draw per column zeroes the whole column (a failed sensor for the
    entire window). Returns ``(output, keep_mask)`` with keep_mask broadcast
    to the input shape. Outside training this is the identity.

    ``rng`` overrides the spec seed when a caller wants to thread one stream
    through many draws.
    """
    x = np.asarray(x, dtype=np.float64)
    if not training or spec.probability == 0.0:
        return x.copy(), np.ones_like(x, dtype=bool)
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    p = spec.probability
    if spec.mode == "channel":
        kept_cols = rng.random(x.shape[1]) >= p
        keep = np.broadcast_to(kept_cols, x.shape).copy()
    else:
        keep = rng.random(x.shape) >= p
    out = np.where(keep, x / (1.0 - p), 0.0)
    return out, keep
