"""LSTM-structured and dense-structured autoencoders plus checkpoint persistence.

The LSTM model maps a (T, M) window through a stacked-LSTM encoder, a
linear projection down to the code width, a stacked-LSTM decoder fed the
per-timestep codes, and a linear projection back to M channels. The dense
comparison model applies the same encode/decode idea row by row with no
recurrence.
"""

import json
import os
from dataclasses import dataclass

import numpy as np

from .errors import CheckpointError, ShapeError
from .lstm import StackedLSTM
from .nn.layers import DenseLayer, DenseNetwork

CHECKPOINT_FORMAT_VERSION = 1


class LstmAutoencoder:
    """Encoder LSTM -> linear code projection -> decoder LSTM -> linear output."""

    kind = "lstm"

    def __init__(
        self,
        channel_count=14,
        code_dim=5,
        hidden_size=32,
        num_layers=3,
        code_mode="per-step",
        rng=None,
    ):
        if code_mode not in ("per-step", "repeat-last"):
            raise ValueError(f"unknown code_mode {code_mode!r}")
        if rng is None:
            rng = np.random.default_rng(0)
        self.channel_count = channel_count
        self.code_dim = code_dim
        self.hidden_size = hidden_size
        self.num_layers = num_layers
        self.code_mode = code_mode
        self.encoder = StackedLSTM.initialize(channel_count, hidden_size, num_layers, rng)
        self.enc_proj = DenseLayer.initialize(hidden_size, code_dim, "identity", rng)
        self.decoder = StackedLSTM.initialize(code_dim, hidden_size, num_layers, rng)
        self.dec_proj = DenseLayer.initialize(hidden_size, channel_count, "identity", rng)
        # The only path from input to output runs through the code projection.
        assert self.decoder.input_size == self.code_dim

    # ---- batch API used by the trainer; shapes are (B, T, feature) ----

    def _encode_seq(self, x_tbf):
        T, B, _ = x_tbf.shape
        h = self.encoder.forward(x_tbf)
        codes = self.enc_proj.forward(h.reshape(T * B, self.hidden_size))
        return codes.reshape(T, B, self.code_dim)

    def _decode_seq(self, codes_tbf):
        T, B, _ = codes_tbf.shape
        if self.code_mode == "repeat-last":
            codes_tbf = np.broadcast_to(codes_tbf[-1], codes_tbf.shape).copy()
        h = self.decoder.forward(codes_tbf)
        out = self.dec_proj.forward(h.reshape(T * B, self.hidden_size))
        return out.reshape(T, B, self.channel_count)

    def forward_batch(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 3 or x.shape[2] != self.channel_count:
            raise ShapeError(
                f"expected (B, T, {self.channel_count}) batch, got {x.shape}"
            )
        x_tbf = np.ascontiguousarray(x.transpose(1, 0, 2))
        out = self._decode_seq(self._encode_seq(x_tbf))
        return out.transpose(1, 0, 2)

    def backward_batch(self, grad_out):
        grad = np.asarray(grad_out, dtype=np.float64).transpose(1, 0, 2)
        T, B, _ = grad.shape
        g = self.dec_proj.backward(grad.reshape(T * B, self.channel_count))
        g = self.decoder.backward(g.reshape(T, B, self.hidden_size))
        if self.code_mode == "repeat-last":
            summed = g.sum(axis=0)
            g = np.zeros_like(g)
            g[-1] = summed
        g = self.enc_proj.backward(g.reshape(T * B, self.code_dim))
        g = self.encoder.backward(g.reshape(T, B, self.hidden_size))
        return g.transpose(1, 0, 2)

    # ---- single-window convenience API; shapes are (T, feature) ----

    def encode(self, window):
        window = np.asarray(window, dtype=np.float64)
        if window.ndim != 2 or window.shape[1] != self.channel_count:
            raise ShapeError(
                f"window shape {window.shape} != (T, {self.channel_count})"
            )
        return self._encode_seq(window[:, None, :])[:, 0, :]

    def decode(self, codes):
        codes = np.asarray(codes, dtype=np.float64)
        if codes.ndim != 2 or codes.shape[1] != self.code_dim:
            raise ShapeError(f"codes shape {codes.shape} != (T, {self.code_dim})")
        return self._decode_seq(codes[:, None, :])[:, 0, :]

    def reconstruct(self, window):
        return self.decode(self.encode(window))

    def parameters(self):
        out = []
        for prefix, mod in (
            ("encoder", self.encoder),
            ("enc_proj", self.enc_proj),
            ("decoder", self.decoder),
            ("dec_proj", self.dec_proj),
        ):
            for name, p, g in mod.parameters():
                out.append((f"{prefix}.{name}", p, g))
        return out

    def zero_grad(self):
        self.encoder.zero_grad()
        self.enc_proj.zero_grad()
        self.decoder.zero_grad()
        self.dec_proj.zero_grad()

    def structure(self):
        return {
            "channel_count": self.channel_count,
            "code_dim": self.code_dim,
            "hidden_size": self.hidden_size,
            "num_layers": self.num_layers,
            "code_mode": self.code_mode,
        }

    @classmethod
    def from_structure(cls, struct):
        return cls(**struct, rng=np.random.default_rng(0))


class DnnAutoencoder:
    """Dense comparison model applied independently at every timestep.

    Encoder widths M -> 64 -> 32 -> code, decoder code -> 32 -> M; hidden
    activations tanh, code and output layers identity.
    """

    kind = "dnn"

    def __init__(self, channel_count=14, code_dim=5, hidden_sizes=(64, 32), rng=None):
        if rng is None:
            rng = np.random.default_rng(0)
        self.channel_count = channel_count
        self.code_dim = code_dim
        self.hidden_sizes = tuple(hidden_sizes)
        enc_sizes = [channel_count, *hidden_sizes, code_dim]
        dec_sizes = [code_dim, *reversed(hidden_sizes[1:]), channel_count]
        self.encoder = DenseNetwork.initialize(
            enc_sizes, ["tanh"] * len(hidden_sizes) + ["identity"], rng
        )
        self.decoder = DenseNetwork.initialize(
            dec_sizes, ["tanh"] * (len(dec_sizes) - 2) + ["identity"], rng
        )

    def forward_batch(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 3 or x.shape[2] != self.channel_count:
            raise ShapeError(
                f"expected (B, T, {self.channel_count}) batch, got {x.shape}"
            )
        B, T, M = x.shape
        out = self.decoder.forward(self.encoder.forward(x.reshape(B * T, M)))
        return out.reshape(B, T, M)

    def backward_batch(self, grad_out):
        grad = np.asarray(grad_out, dtype=np.float64)
        B, T, M = grad.shape
        g = self.decoder.backward(grad.reshape(B * T, M))
        g = self.encoder.backward(g)
        return g.reshape(B, T, M)

    def encode(self, window):
        window = np.asarray(window, dtype=np.float64)
        return self.encoder.forward(window)

    def decode(self, codes):
        codes = np.asarray(codes, dtype=np.float64)
        return self.decoder.forward(codes)

    def reconstruct(self, window):
        return self.decode(self.encode(window))

    def parameters(self):
        out = []
        for prefix, mod in (("encoder", self.encoder), ("decoder", self.decoder)):
            for name, p, g in mod.parameters():
                out.append((f"{prefix}.{name}", p, g))
        return out

    def zero_grad(self):
        self.encoder.zero_grad()
        self.decoder.zero_grad()

    def structure(self):
        return {
            "channel_count": self.channel_count,
            "code_dim": self.code_dim,
            "hidden_sizes": list(self.hidden_sizes),
        }

    @classmethod
    def from_structure(cls, struct):
        return cls(
            channel_count=struct["channel_count"],
            code_dim=struct["code_dim"],
            hidden_sizes=tuple(struct["hidden_sizes"]),
            rng=np.random.default_rng(0),
        )


MODEL_KINDS = {"lstm": LstmAutoencoder, "dnn": DnnAutoencoder}


def build_model(kind, channel_count, code_dim=5, rng=None, **kwargs):
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {kind!r}")
    return MODEL_KINDS[kind](channel_count=channel_count, code_dim=code_dim, rng=rng, **kwargs)


def save_checkpoint(model, path, channel_stats=None, train_config=None, seed=None):
    """Write a model (plus normalization stats and config snapshot) as JSON.

    Floats are serialized with shortest-round-trip precision, so a
    save -> load -> save cycle is byte-identical.
    """
    params = {name: p.tolist() for name, p, _ in model.parameters()}
    shapes = {name: list(p.shape) for name, p, _ in model.parameters()}
    doc = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "model_kind": model.kind,
        "structure": model.structure(),
        "shapes": shapes,
        "parameters": params,
        "channel_stats": channel_stats,
        "train_config": train_config,
        "seed": seed,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))


def load_checkpoint(path):
    """Load a checkpoint; returns (model, metadata dict)."""
    if not os.path.exists(path):
        raise CheckpointError(f"checkpoint {path} does not exist")
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CheckpointError(f"corrupt checkpoint {path}: {exc}") from exc
    if not isinstance(doc, dict) or "format_version" not in doc:
        raise CheckpointError(f"corrupt checkpoint {path}: not a checkpoint document")
    if doc["format_version"] != CHECKPOINT_FORMAT_VERSION:
        raise CheckpointError(
            f"unsupported checkpoint version {doc['format_version']} "
            f"(expected {CHECKPOINT_FORMAT_VERSION})"
        )
    kind = doc.get("model_kind")
    if kind not in MODEL_KINDS:
        raise CheckpointError(f"unknown model kind {kind!r} in checkpoint")
    model = MODEL_KINDS[kind].from_structure(doc["structure"])
    for name, p, _ in model.parameters():
        if name not in doc["parameters"]:
            raise CheckpointError(f"checkpoint missing parameter {name}")
        arr = np.asarray(doc["parameters"][name], dtype=np.float64)
        if list(arr.shape) != doc["shapes"].get(name):
            raise CheckpointError(
                f"parameter {name}: stored shape {arr.shape} != declared {doc['shapes'].get(name)}"
            )
        if arr.shape != p.shape:
            raise CheckpointError(
                f"parameter {name}: shape {arr.shape} inconsistent with structure {p.shape}"
            )
        p[...] = arr
    meta = {
        "channel_stats": doc.get("channel_stats"),
        "train_config": doc.get("train_config"),
        "seed": doc.get("seed"),
    }
    return model, meta
