"""tension-sentinel: cable-tension monitoring with an LSTM autoencoder.

Trains an autoencoder with random input-channel dropout to reconstruct
multichannel cable-tension series, then uses per-channel reconstruction
error under a 3-sigma criterion to impute missing channels and flag
damaged cables. Ships a physics-based synthetic data generator for
verification.
"""

__version__ = "0.1.0"

from .autoencoder import (
    DnnAutoencoder,
    LstmAutoencoder,
    load_checkpoint,
    save_checkpoint,
)
from .pipeline import (
    BaselineStats,
    DamageReport,
    TrainConfig,
    TrainLog,
    diagnose,
    fit_baseline,
    impute,
    train,
)
from .series import MultiChannelSeries, export_csv, import_csv

__all__ = [
    "LstmAutoencoder",
    "DnnAutoencoder",
    "save_checkpoint",
    "load_checkpoint",
    "TrainConfig",
    "TrainLog",
    "BaselineStats",
    "DamageReport",
    "train",
    "fit_baseline",
    "impute",
    "diagnose",
    "MultiChannelSeries",
    "export_csv",
    "import_csv",
]
