"""Autoencoder-style dense network used as the deflection approximator.

The net maps a 2-D point to one scalar. Encoder widths define the layer
stack down to the bottleneck; the decoder mirrors them by default. All
hidden layers share one activation; the output layer is purely affine so
the representable field is unbounded.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .autodiff import (Jet2, ParamTape, aravel, check_finite, jet_activation,
                       jet_affine, jet_seed, tanh, value_of)

SCALED_TANH_FACTOR = math.pi / 2.0

CHECKPOINT_MAGIC = b"PLTZCKP1"


class Tanh:
    """Plain hyperbolic tangent."""

    name = "tanh"

    def __call__(self, u):
        return np.tanh(u)

    def jet_coefficients(self, u):
        f0 = tanh(u)
        f1 = 1.0 - f0 * f0
        f2 = -2.0 * f0 * f1
        return f0, f1, f2


class ScaledTanh:
    """tanh with the argument stretched by pi/2 (steeper mid-range)."""

    name = "scaled_tanh"

    def __init__(self, factor=SCALED_TANH_FACTOR):
        self.factor = factor

    def __call__(self, u):
        return np.tanh(self.factor * u)

    def jet_coefficients(self, u):
        c = self.factor
        f0 = tanh(c * u)
        f1 = c * (1.0 - f0 * f0)
        f2 = -2.0 * c * f0 * f1
        return f0, f1, f2


ACTIVATIONS = {"tanh": Tanh, "scaled_tanh": ScaledTanh}


def scaled_tanh(u):
    """Value and first two derivatives of tanh(pi/2 * u) at ``u``."""
    value = np.tanh(SCALED_TANH_FACTOR * u)
    first = SCALED_TANH_FACTOR * (1.0 - value ** 2)
    second = -math.pi * value * first
    return value, first, second


@dataclass
class NetworkConfig:
    """Layer layout and activation choice.

    ``decoder_widths=None`` mirrors the encoder (bottleneck not repeated);
    an explicit list overrides the mirror, and ``[]`` gives a plain MLP
    with the encoder widths as its only hidden layers.
    """

    encoder_widths: list
    decoder_widths: list | None = None
    input_dim: int = 2
    output_dim: int = 1
    activation: str = "scaled_tanh"
    # physical bounding box mapped onto [-1, 1]^2 before the first layer
    input_lo: tuple = (-1.0, -1.0)
    input_hi: tuple = (1.0, 1.0)

    def __post_init__(self):
        if self.input_dim != 2 or self.output_dim != 1:
            raise ValueError("network maps 2 inputs to 1 output")
        if not self.encoder_widths or any(w < 1 for w in self.encoder_widths):
            raise ValueError("encoder widths must be positive integers")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if any(h <= l for l, h in zip(self.input_lo, self.input_hi)):
            raise ValueError("input_hi must exceed input_lo per axis")

    def hidden_widths(self):
        enc = list(self.encoder_widths)
        dec = list(reversed(enc))[1:] if self.decoder_widths is None else list(self.decoder_widths)
        return enc + dec

    def widths(self):
        return [self.input_dim] + self.hidden_widths() + [self.output_dim]

    def n_params(self):
        ws = self.widths()
        return sum(fi * fo + fo for fi, fo in zip(ws[:-1], ws[1:]))

    def make_activation(self):
        return ACTIVATIONS[self.activation]()

    def input_affine(self):
        """(W, b) of the fixed map taking the physical box onto [-1, 1]^2."""
        lo = np.asarray(self.input_lo, dtype=float)
        hi = np.asarray(self.input_hi, dtype=float)
        half = (hi - lo) / 2.0
        mid = (hi + lo) / 2.0
        W = np.diag(1.0 / half)
        b = -mid / half
        return W, b


@dataclass
class NetworkParams:
    """Per-layer weight matrices and bias vectors."""

    weights: list = field(default_factory=list)
    biases: list = field(default_factory=list)

    def flatten(self):
        parts = []
        for W, b in zip(self.weights, self.biases):
            parts.append(np.asarray(W, dtype=float).ravel())
            parts.append(np.asarray(b, dtype=float).ravel())
        return np.concatenate(parts)

    @staticmethod
    def from_flat(cfg: NetworkConfig, theta):
        theta = np.asarray(theta, dtype=float)
        if theta.size != cfg.n_params():
            raise ValueError(
                f"parameter vector has {theta.size} entries, config needs {cfg.n_params()}")
        ws = cfg.widths()
        weights, biases, k = [], [], 0
        for fi, fo in zip(ws[:-1], ws[1:]):
            weights.append(theta[k:k + fi * fo].reshape(fi, fo).copy())
            k += fi * fo
            biases.append(theta[k:k + fo].copy())
            k += fo
        return NetworkParams(weights, biases)


def init_params(cfg: NetworkConfig, seed: int) -> NetworkParams:
    """Uniform [-s, s] weights with s = sqrt(6/(fan_in+fan_out)), zero biases."""
    rng = np.random.default_rng(seed)
    ws = cfg.widths()
    weights, biases = [], []
    for fi, fo in zip(ws[:-1], ws[1:]):
        s = math.sqrt(6.0 / (fi + fo))
        weights.append(rng.uniform(-s, s, size=(fi, fo)))
        biases.append(np.zeros(fo))
    return NetworkParams(weights, biases)


def lift_params(tape: ParamTape, params: NetworkParams):
    """Register every weight/bias as a tape leaf, in flatten order."""
    lifted = NetworkParams()
    for W, b in zip(params.weights, params.biases):
        lifted.weights.append(tape.leaf(W))
        lifted.biases.append(tape.leaf(b))
    return lifted


def forward(params: NetworkParams, cfg: NetworkConfig, x, return_hidden=False):
    """Plain scalar evaluation at points ``x`` of shape (n, 2) or (2,)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    check_finite(pts, "network input")
    Ws, bs = cfg.input_affine()
    act = cfg.make_activation()
    z = pts @ Ws + bs
    hidden = []
    last = len(params.weights) - 1
    for i, (W, b) in enumerate(zip(params.weights, params.biases)):
        u = z @ W + b
        check_finite(u, f"layer {i} pre-activation")
        z = u if i == last else act(u)
        if i != last:
            hidden.append(z)
    out = z[:, 0]
    result = float(out[0]) if single else out
    return (result, hidden) if return_hidden else result


def forward_jet(params, cfg: NetworkConfig, x) -> Jet2:
    """Field value plus all first/second spatial derivatives at ``x``.

    ``params`` may hold plain arrays or tape Nodes (see lift_params); the
    returned jet slots mirror that choice. Derivatives are taken w.r.t.
    physical coordinates (the fixed input scaling is part of the chain).
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    jx, jy = jet_seed(pts[:, 0], pts[:, 1])
    Ws, bs = cfg.input_affine()
    # pack the two coordinate jets into one (n, 2)-slot jet
    jet = Jet2(*(np.column_stack([a, b]) for a, b in
                 zip(jx.slots(), jy.slots())))
    jet = jet_affine(Ws, bs, jet)
    act = cfg.make_activation()
    last = len(params.weights) - 1
    for i, (W, b) in enumerate(zip(params.weights, params.biases)):
        jet = jet_affine(W, b, jet)
        check_finite(jet.v, f"layer {i} pre-activation")
        if i != last:
            jet = jet_activation(jet, act)
    # collapse the single output column to a flat vector per slot
    out = Jet2(*(aravel(s) for s in jet.slots()))
    if single:
        out = Jet2(*(float(value_of(s)[0]) for s in out.slots()))
    return out


# ---------------------------------------------------------------------------
# Checkpoint format
# ---------------------------------------------------------------------------
# bytes 0..7   magic "PLTZCKP1"
# bytes 8..11  uint32 little-endian: header length H
# bytes 12..12+H-1  UTF-8 JSON header: widths, activation, seed, count,
#                   input_lo, input_hi
# remainder    count * 8 bytes, little-endian float64 flattened parameters


def save_checkpoint(path, params: NetworkParams, cfg: NetworkConfig, seed: int):
    theta = params.flatten()
    header = {
        "widths": cfg.widths(),
        "encoder_widths": list(cfg.encoder_widths),
        "decoder_widths": None if cfg.decoder_widths is None else list(cfg.decoder_widths),
        "activation": cfg.activation,
        "seed": int(seed),
        "count": int(theta.size),
        "input_lo": list(cfg.input_lo),
        "input_hi": list(cfg.input_hi),
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(theta.astype("<f8").tobytes())


def load_checkpoint(path, cfg: NetworkConfig | None = None):
    """Load (params, header); verifies the header against ``cfg`` if given."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < len(CHECKPOINT_MAGIC) + 4 or not data.startswith(CHECKPOINT_MAGIC):
        raise ValueError("not a checkpoint file (bad magic)")
    off = len(CHECKPOINT_MAGIC)
    (hlen,) = struct.unpack_from("<I", data, off)
    off += 4
    if len(data) < off + hlen:
        raise ValueError("truncated checkpoint: header incomplete")
    header = json.loads(data[off:off + hlen].decode("utf-8"))
    off += hlen
    count = int(header["count"])
    if len(data) < off + 8 * count:
        raise ValueError("truncated checkpoint: parameter payload incomplete")
    theta = np.frombuffer(data[off:off + 8 * count], dtype="<f8").astype(float)
    if cfg is not None:
        if header["widths"] != cfg.widths() or header["activation"] != cfg.activation:
            raise ValueError(
                f"checkpoint header mismatch: file has widths {header['widths']} "
                f"activation {header['activation']!r}, config expects "
                f"{cfg.widths()} {cfg.activation!r}")
        params = NetworkParams.from_flat(cfg, theta)
    else:
        rebuilt = NetworkConfig(
            encoder_widths=header["encoder_widths"],
            decoder_widths=header["decoder_widths"],
            activation=header["activation"],
            input_lo=tuple(header["input_lo"]),
            input_hi=tuple(header["input_hi"]),
        )
        params = NetworkParams.from_flat(rebuilt, theta)
    return params, header
