"""GraphSAGE-style mean-aggregation encoder and the two latent samplers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tape
from .errors import ConfigError, NumericError, ShapeError
from .tape import Tensor

LAWS = ("normal", "gumbel")


@dataclass(frozen=True)
class EncoderConfig:
    num_layers: int = 2
    hidden_dim: int = 32
    latent_dim: int = 16
    # fixed-size uniform neighbor subsample per forward pass; None uses all neighbors
    neighbor_sample: int | None = None

    def __post_init__(self):
        for name in ("num_layers", "hidden_dim", "latent_dim"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.neighbor_sample is not None and self.neighbor_sample < 1:
            raise ConfigError("neighbor_sample must be >= 1 or None")


@dataclass(frozen=True)
class LatentConfig:
    law: str = "gumbel"
    temperature: float = 1.0
    gumbel_eps: float = 1e-10
    standard_gumbel_sign: bool = False
    # one noise draw for both views instead of independent draws per view
    shared_noise: bool = True

    def __post_init__(self):
        if self.law not in LAWS:
            raise ConfigError(f"latent law must be one of {LAWS}, got {self.law!r}")
        if not self.temperature > 0:
            raise ConfigError(f"temperature must be > 0, got {self.temperature}")
        if not self.gumbel_eps > 0:
            raise ConfigError(f"gumbel_eps must be > 0, got {self.gumbel_eps}")


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_encoder(d: int, cfg: EncoderConfig, latent: LatentConfig,
                 rng: np.random.Generator) -> dict[str, np.ndarray]:
    params = {}
    width = d
    for i in range(cfg.num_layers):
        params[f"enc.{i}.self"] = glorot(rng, width, cfg.hidden_dim)
        params[f"enc.{i}.neigh"] = glorot(rng, width, cfg.hidden_dim)
        params[f"enc.{i}.bias"] = np.zeros(cfg.hidden_dim)
        width = cfg.hidden_dim
    heads = ("mu", "logvar") if latent.law == "normal" else ("logits",)
    for h in heads:
        params[f"head.{h}.W"] = glorot(rng, width, cfg.latent_dim)
        params[f"head.{h}.b"] = np.zeros(cfg.latent_dim)
    return params


def sample_neighbors(indptr, indices, k: int, rng: np.random.Generator):
    """CSR with at most ``k`` neighbors per row, drawn uniformly without replacement."""
    new_ptr = [0]
    new_idx = []
    for u in range(len(indptr) - 1):
        nbrs = indices[indptr[u]:indptr[u + 1]]
        if len(nbrs) > k:
            nbrs = np.sort(rng.choice(nbrs, size=k, replace=False))
        new_idx.extend(nbrs.tolist())
        new_ptr.append(len(new_idx))
    return np.asarray(new_ptr, dtype=np.int64), np.asarray(new_idx, dtype=np.int64)


def sage_layer(h, csr, weights: dict) -> Tensor:
    """``relu(h @ W_self + mean_neighbors(h) @ W_neigh + b)``.

    ``csr`` is ``(indptr, indices)`` or anything with those attributes, such as
    a :class:`~flowsentry.graph.WorkflowGraph`.
    """
    indptr, indices = (csr.indptr, csr.indices) if hasattr(csr, "indptr") else csr
    h = tape.as_tensor(h)
    if h.shape[0] != len(indptr) - 1:
        raise ShapeError(f"sage_layer: {h.shape[0]} feature rows for {len(indptr) - 1} nodes")
    agg = tape.neighbor_mean(h, indptr, indices)
    pre = tape.matmul(h, weights["self"]) + tape.matmul(agg, weights["neigh"])
    return tape.relu(tape.add(pre, weights["bias"]))


def _layer_weights(params, i):
    return {"self": params[f"enc.{i}.self"], "neigh": params[f"enc.{i}.neigh"],
            "bias": params[f"enc.{i}.bias"]}


def encode(g, x_in, cfg: EncoderConfig, params, rng: np.random.Generator | None = None):
    """Stacked SAGE layers followed by linear heads.

    Returns ``{"logits": f}`` for the Gumbel law or ``{"mu": ..., "logvar": ...}``
    for the Normal law, decided by which head parameters are present.
    """
    x_in = tape.as_tensor(x_in)
    if x_in.shape[0] != g.n:
        raise ShapeError(f"encode: {x_in.shape[0]} feature rows for {g.n} nodes")
    first = params["enc.0.self"]
    if x_in.shape[1] != first.shape[0]:
        raise ShapeError(f"encode: model expects {first.shape[0]} features, got {x_in.shape[1]}")
    if cfg.neighbor_sample is not None:
        if rng is None:
            raise ConfigError("neighbor sampling needs a random generator")
        csr = sample_neighbors(g.indptr, g.indices, cfg.neighbor_sample, rng)
    else:
        csr = (g.indptr, g.indices)
    h = x_in
    for i in range(cfg.num_layers):
        h = sage_layer(h, csr, _layer_weights(params, i))
    heads = [k[len("head."):-len(".W")] for k in params if k.startswith("head.") and k.endswith(".W")]
    return {name: tape.add(tape.matmul(h, params[f"head.{name}.W"]), params[f"head.{name}.b"])
            for name in heads}


def sample_normal(mu, log_var, noise) -> Tensor:
    """Reparameterized draw ``mu + exp(log_var / 2) * noise``."""
    mu, log_var, noise = tape.as_tensor(mu), tape.as_tensor(log_var), tape.as_tensor(noise)
    if not (mu.shape == log_var.shape == noise.shape):
        raise ShapeError(f"sample_normal: shapes {mu.shape}, {log_var.shape}, {noise.shape}")
    sigma = tape.exp(tape.scale(log_var, 0.5))
    return tape.add(mu, tape.mul(sigma, noise))


def gumbel_noise(p, cfg: LatentConfig) -> np.ndarray:
    """``log(-log(p + eps))``, negated when ``standard_gumbel_sign`` is set."""
    p = np.asarray(p, dtype=np.float64)
    q = p + cfg.gumbel_eps
    if not np.isfinite(q).all() or (q >= 1.0).any() or (q <= 0.0).any():
        raise NumericError("gumbel_noise", "p + eps must lie in (0, 1)")
    rho = np.log(-np.log(q))
    return -rho if cfg.standard_gumbel_sign else rho


def sample_gumbel(logits, p, cfg: LatentConfig, rho=None, subtract_max: bool = True) -> Tensor:
    """Row-wise softmax of ``(rho + logits) / t``.

    ``rho`` defaults to :func:`gumbel_noise` of the uniform draws ``p``; pass it
    explicitly to inject noise.
    """
    logits = tape.as_tensor(logits)
    if rho is None:
        rho = gumbel_noise(p, cfg)
    rho = np.asarray(rho, dtype=np.float64)
    if rho.shape != logits.shape:
        raise ShapeError(f"sample_gumbel: noise {rho.shape} vs logits {logits.shape}")
    z = tape.scale(tape.add(logits, rho), 1.0 / cfg.temperature)
    return tape.softmax_rows(z, subtract_max=subtract_max)
