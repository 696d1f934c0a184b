"""Parameter storage, the Adam update and the binary checkpoint format.

Checkpoint layout (all integers little-endian)::

    b"FLWSCKPT"             magic
    uint32                  format version
    uint64                  header length in bytes
    header                  UTF-8 JSON: parameter names/shapes, step, metadata
    float64[...]            parameter payloads in header order
    float64[...]            Adam first moments, same order
    float64[...]            Adam second moments, same order
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import FormatError, NumericError, ShapeError
from .tape import Tensor

MAGIC = b"FLWSCKPT"
FORMAT_VERSION = 1


class ParameterStore:
    """Named float64 parameter arrays plus Adam moments and a shared step count."""

    def __init__(self, params: dict[str, np.ndarray] | None = None):
        self.params: dict[str, np.ndarray] = {}
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.step = 0
        for name, value in (params or {}).items():
            self.add(name, value)

    def add(self, name: str, value) -> None:
        value = np.array(value, dtype=np.float64)
        if not np.isfinite(value).all():
            raise NumericError("parameter", f"{name} has non-finite entries")
        self.params[name] = value
        self.m[name] = np.zeros_like(value)
        self.v[name] = np.zeros_like(value)

    def __getitem__(self, name):
        return self.params[name]

    def __contains__(self, name):
        return name in self.params

    def __iter__(self):
        return iter(self.params)

    def __len__(self):
        return len(self.params)

    def names(self) -> list[str]:
        return list(self.params)

    def leaves(self) -> dict[str, Tensor]:
        """Fresh differentiable leaf tensors wrapping the current values."""
        return {k: Tensor(v, requires_grad=True, op=f"param:{k}")
                for k, v in self.params.items()}

    def copy(self) -> "ParameterStore":
        out = ParameterStore()
        for k in self.params:
            out.params[k] = self.params[k].copy()
            out.m[k] = self.m[k].copy()
            out.v[k] = self.v[k].copy()
        out.step = self.step
        return out

    def equals(self, other: "ParameterStore") -> bool:
        """Bitwise equality of values, moments and step."""
        if self.names() != other.names() or self.step != other.step:
            return False
        return all(np.array_equal(getattr(self, a)[k], getattr(other, a)[k])
                   for a in ("params", "m", "v") for k in self.params)

    def num_values(self) -> int:
        return sum(v.size for v in self.params.values())


def adam_step(store: ParameterStore, grads: dict[str, np.ndarray], lr: float = 1e-3,
              weight_decay: float = 0.0, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8) -> ParameterStore:
    """One bias-corrected Adam update with L2 weight decay folded into the gradient.

    Updates ``store`` in place and returns it.
    """
    for k in store.params:
        if k not in grads:
            raise ShapeError(f"missing gradient for parameter {k!r}")
        if np.shape(grads[k]) != store.params[k].shape:
            raise ShapeError(f"gradient for {k!r} has shape {np.shape(grads[k])}, "
                             f"expected {store.params[k].shape}")
    extra = set(grads) - set(store.params)
    if extra:
        raise ShapeError(f"gradients for unknown parameters: {sorted(extra)}")
    store.step += 1
    t = store.step
    c1 = 1.0 - beta1 ** t
    c2 = 1.0 - beta2 ** t
    for k, theta in store.params.items():
        g = np.asarray(grads[k], dtype=np.float64)
        if not np.isfinite(g).all():
            raise NumericError("adam_step", f"non-finite gradient for {k!r}")
        if weight_decay:
            g = g + weight_decay * theta
        m = beta1 * store.m[k] + (1.0 - beta1) * g
        v = beta2 * store.v[k] + (1.0 - beta2) * g * g
        store.m[k] = m
        store.v[k] = v
        store.params[k] = theta - lr * (m / c1) / (np.sqrt(v / c2) + eps)
    return store


def save_checkpoint(path, store: ParameterStore, meta: dict | None = None) -> None:
    header = {
        "params": [{"name": k, "shape": list(v.shape)} for k, v in store.params.items()],
        "step": store.step,
        "meta": meta or {},
    }
    hbytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IQ", FORMAT_VERSION, len(hbytes)))
        fh.write(hbytes)
        for table in (store.params, store.m, store.v):
            for k in store.params:
                fh.write(np.ascontiguousarray(table[k], dtype="<f8").tobytes())


def load_checkpoint(path) -> tuple[ParameterStore, dict]:
    """Inverse of :func:`save_checkpoint`; returns the store and its metadata."""
    raw = Path(path).read_bytes()
    if raw[:len(MAGIC)] != MAGIC:
        raise FormatError(f"{path}: not a checkpoint file")
    off = len(MAGIC)
    try:
        version, hlen = struct.unpack_from("<IQ", raw, off)
    except struct.error:
        raise FormatError(f"{path}: truncated checkpoint header") from None
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported checkpoint version {version}")
    off += struct.calcsize("<IQ")
    header = json.loads(raw[off:off + hlen].decode("utf-8"))
    off += hlen
    specs = [(p["name"], tuple(p["shape"])) for p in header["params"]]
    total = sum(int(np.prod(s)) for _, s in specs)
    if len(raw) - off != 3 * total * 8:
        raise FormatError(f"{path}: payload size does not match header")
    flat = np.frombuffer(raw, dtype="<f8", offset=off).astype(np.float64)
    store = ParameterStore()
    pos = 0
    for attr in ("params", "m", "v"):
        table = getattr(store, attr)
        for name, shape in specs:
            size = int(np.prod(shape))
            table[name] = flat[pos:pos + size].reshape(shape).copy()
            pos += size
    store.step = int(header["step"])
    return store, header.get("meta", {})
