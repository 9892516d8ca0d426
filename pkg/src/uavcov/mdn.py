"""Recurrent mixture-density inference from a portable weight file.

The predictor is a 2-layer LSTM over a window of H past velocity pairs
followed by a mixture-density head: softmax for component weights, linear
for displacement means (added to the query anchor) and exp for positive
standard deviations.

Weight file format ``PISMDN1`` (all integers uint32 LE, floats float32 LE,
row-major):

    magic "PISMDN1" | H | K | hidden | n_layers | n_tensors
    per tensor: name_len | name bytes (utf-8) | rank | dims... | data

Gate blocks inside each (4*hidden, ...) LSTM tensor are ordered input,
forget, cell, output; gate activations are sigmoid, cell activations tanh.
Expected tensor names for layer i: ``lstm{i}.w_x`` (4h, in), ``lstm{i}.w_h``
(4h, h), ``lstm{i}.b`` (4h,); head: ``mdn.w_pi`` (K, h), ``mdn.b_pi`` (K,),
``mdn.w_mu`` (2K, h), ``mdn.b_mu`` (2K,), ``mdn.w_s`` (2K, h), ``mdn.b_s``
(2K,).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from uavcov.errors import ConfigError
from uavcov.proposal import GaussianMixture2D

MAGIC = b"PISMDN1"

_LSTM_TENSORS = ("w_x", "w_h", "b")
_HEAD_TENSORS = ("w_pi", "b_pi", "w_mu", "b_mu", "w_s", "b_s")


@dataclass(frozen=True)
class MdnWeights:
    history_len: int
    k: int
    hidden: int
    n_layers: int
    tensors: dict[str, np.ndarray]

    def __post_init__(self) -> None:
        h = self.hidden
        if min(self.history_len, self.k, self.hidden, self.n_layers) < 1:
            raise ConfigError("mdn: H, K, hidden and n_layers must all be >= 1")
        expected: dict[str, tuple[int, ...]] = {}
        for i in range(self.n_layers):
            d_in = 2 if i == 0 else h
            expected[f"lstm{i}.w_x"] = (4 * h, d_in)
            expected[f"lstm{i}.w_h"] = (4 * h, h)
            expected[f"lstm{i}.b"] = (4 * h,)
        expected["mdn.w_pi"] = (self.k, h)
        expected["mdn.b_pi"] = (self.k,)
        expected["mdn.w_mu"] = (2 * self.k, h)
        expected["mdn.b_mu"] = (2 * self.k,)
        expected["mdn.w_s"] = (2 * self.k, h)
        expected["mdn.b_s"] = (2 * self.k,)
        for name, shape in expected.items():
            if name not in self.tensors:
                raise ConfigError(f"mdn weights: missing tensor {name!r}")
            got = self.tensors[name].shape
            if got != shape:
                raise ConfigError(f"mdn weights: tensor {name!r} has shape {got}, expected {shape}")
            if not np.isfinite(self.tensors[name]).all():
                raise ConfigError(f"mdn weights: tensor {name!r} contains non-finite values")
        extra = set(self.tensors) - set(expected)
        if extra:
            raise ConfigError(f"mdn weights: unexpected tensors {sorted(extra)}")

    @classmethod
    def zeros(cls, history_len: int = 8, k: int = 5, hidden: int = 128, n_layers: int = 2) -> "MdnWeights":
        tensors: dict[str, np.ndarray] = {}
        for i in range(n_layers):
            d_in = 2 if i == 0 else hidden
            tensors[f"lstm{i}.w_x"] = np.zeros((4 * hidden, d_in))
            tensors[f"lstm{i}.w_h"] = np.zeros((4 * hidden, hidden))
            tensors[f"lstm{i}.b"] = np.zeros(4 * hidden)
        tensors["mdn.w_pi"] = np.zeros((k, hidden))
        tensors["mdn.b_pi"] = np.zeros(k)
        tensors["mdn.w_mu"] = np.zeros((2 * k, hidden))
        tensors["mdn.b_mu"] = np.zeros(2 * k)
        tensors["mdn.w_s"] = np.zeros((2 * k, hidden))
        tensors["mdn.b_s"] = np.zeros(2 * k)
        return cls(history_len, k, hidden, n_layers, tensors)


def save_mdn_weights(w: MdnWeights, path: str | Path) -> None:
    """Write the PISMDN1 container; tensors are stored as float32."""
    buf = bytearray()
    buf += MAGIC
    buf += struct.pack("<5I", w.history_len, w.k, w.hidden, w.n_layers, len(w.tensors))
    for name in sorted(w.tensors):
        data = np.ascontiguousarray(w.tensors[name], dtype="<f4")
        nb = name.encode("utf-8")
        buf += struct.pack("<I", len(nb))
        buf += nb
        buf += struct.pack("<I", data.ndim)
        buf += struct.pack(f"<{data.ndim}I", *data.shape)
        buf += data.tobytes()
    Path(path).write_bytes(bytes(buf))


def load_mdn_weights(path: str | Path) -> MdnWeights:
    raw = Path(path).read_bytes()
    if raw[: len(MAGIC)] != MAGIC:
        raise ConfigError(f"mdn weights {path}: bad magic, not a PISMDN1 file")
    off = len(MAGIC)
    try:
        h_len, k, hidden, n_layers, n_tensors = struct.unpack_from("<5I", raw, off)
        off += 20
        tensors: dict[str, np.ndarray] = {}
        for _ in range(n_tensors):
            (name_len,) = struct.unpack_from("<I", raw, off)
            off += 4
            name = raw[off:off + name_len].decode("utf-8")
            off += name_len
            (rank,) = struct.unpack_from("<I", raw, off)
            off += 4
            dims = struct.unpack_from(f"<{rank}I", raw, off)
            off += 4 * rank
            count = int(np.prod(dims)) if rank else 1
            arr = np.frombuffer(raw, dtype="<f4", count=count, offset=off).astype(float)
            off += 4 * count
            tensors[name] = arr.reshape(dims)
    except (struct.error, ValueError) as exc:
        raise ConfigError(f"mdn weights {path}: truncated or corrupt ({exc})") from exc
    if off != len(raw):
        raise ConfigError(f"mdn weights {path}: {len(raw) - off} trailing bytes")
    return MdnWeights(h_len, k, hidden, n_layers, tensors)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # exp(-logaddexp(0, -x)) is overflow-safe for large |x|
    return np.exp(-np.logaddexp(0.0, -x))


def mdn_infer(history: np.ndarray, w: MdnWeights, anchor: tuple[float, float]) -> GaussianMixture2D:
    """Run the LSTM over an (H, 2) velocity history and map the final hidden
    state through the mixture-density head.

    Means are displacements from ``anchor``; standard deviations come out of
    an exp so the returned mixture always satisfies its invariants.
    """
    x = np.asarray(history, dtype=float)
    if x.shape != (w.history_len, 2):
        raise ConfigError(f"mdn_infer: history has shape {x.shape}, expected ({w.history_len}, 2)")
    if not np.isfinite(x).all():
        raise ConfigError("mdn_infer: history contains non-finite values")

    hidden = w.hidden
    seq = x
    for layer in range(w.n_layers):
        w_x = w.tensors[f"lstm{layer}.w_x"]
        w_h = w.tensors[f"lstm{layer}.w_h"]
        b = w.tensors[f"lstm{layer}.b"]
        h = np.zeros(hidden)
        c = np.zeros(hidden)
        outputs = np.empty((seq.shape[0], hidden))
        for t in range(seq.shape[0]):
            gates = w_x @ seq[t] + w_h @ h + b
            i_g = _sigmoid(gates[0:hidden])
            f_g = _sigmoid(gates[hidden:2 * hidden])
            g_g = np.tanh(gates[2 * hidden:3 * hidden])
            o_g = _sigmoid(gates[3 * hidden:4 * hidden])
            c = f_g * c + i_g * g_g
            h = o_g * np.tanh(c)
            outputs[t] = h
        seq = outputs

    logits = w.tensors["mdn.w_pi"] @ h + w.tensors["mdn.b_pi"]
    logits -= logits.max()
    pi = np.exp(logits)
    pi /= pi.sum()
    mu = (w.tensors["mdn.w_mu"] @ h + w.tensors["mdn.b_mu"]).reshape(w.k, 2)
    log_sigma = (w.tensors["mdn.w_s"] @ h + w.tensors["mdn.b_s"]).reshape(w.k, 2)
    sigma = np.exp(np.clip(log_sigma, -40.0, 40.0))
    means = mu + np.asarray(anchor, dtype=float)[None, :]
    return GaussianMixture2D(pi, means, sigma * sigma)
