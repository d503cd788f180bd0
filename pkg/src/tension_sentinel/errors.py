"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Array dimensions do not agree with what an operation requires."""


class ConfigError(ValueError):
    """A configuration value is out of range or a config document is malformed."""


class EmptyLossError(ValueError):
    """A loss was requested over zero effective samples."""


class DegenerateChannelError(ValueError):
    """A channel has zero variance (or too few samples) and cannot be normalized."""


class CheckpointError(RuntimeError):
    """A checkpoint file is corrupt, truncated, or of an unsupported version."""


class TrainingDiverged(RuntimeError):
    """The training loss became non-finite."""

    def __init__(self, iteration, loss):
        super().__init__(f"loss became non-finite ({loss}) at iteration {iteration}")
        self.iteration = iteration
        self.loss = loss
