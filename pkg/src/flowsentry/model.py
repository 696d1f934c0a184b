"""Full forward pass: both views through the encoder, latent sampling, decoding."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .augment import AugmentationResult, AugmentConfig, augment
from .decoder import (LossConfig, ScoreConfig, ScoreReport, anomaly_scores, decide, decode,
                      init_decoder, total_loss)
from .encoder import EncoderConfig, LatentConfig, encode, init_encoder, sample_gumbel, sample_normal
from .graph import WorkflowGraph
from .optim import ParameterStore
from .tape import Tensor


@dataclass(frozen=True)
class ModelConfig:
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    latent: LatentConfig = field(default_factory=LatentConfig)
    loss: LossConfig = field(default_factory=LossConfig)


@dataclass
class LatentNoise:
    """Per-view noise: standard normal draws or uniform draws, shape (n, latent_dim)."""

    original: np.ndarray
    augmented: np.ndarray


@dataclass
class ForwardResult:
    loss: Tensor
    x_hat: Tensor
    z: Tensor
    z_aug: Tensor


def init_parameters(d: int, cfg: ModelConfig, seed: int = 0) -> ParameterStore:
    rng = np.random.default_rng(seed)
    params = init_encoder(d, cfg.encoder, cfg.latent, rng)
    params.update(init_decoder(cfg.encoder.latent_dim, cfg.encoder.hidden_dim, d, rng))
    return ParameterStore(params)


def draw_noise(rng: np.random.Generator, n: int, cfg: ModelConfig) -> LatentNoise:
    shape = (n, cfg.encoder.latent_dim)
    draw = rng.standard_normal if cfg.latent.law == "normal" else rng.random
    first = draw(shape)
    return LatentNoise(first, first if cfg.latent.shared_noise else draw(shape))


def null_noise(n: int, cfg: ModelConfig) -> LatentNoise:
    """Noise that leaves the latent at its location: eps = 0, or uniform draws with rho = 0."""
    shape = (n, cfg.encoder.latent_dim)
    if cfg.latent.law == "normal":
        zero = np.zeros(shape)
        return LatentNoise(zero, zero)
    # log(-log(q)) = 0 at q = exp(-1)
    q = np.full(shape, np.exp(-1.0) - cfg.latent.gumbel_eps)
    return LatentNoise(q, q)


def sample_latent(heads: dict, noise: np.ndarray, cfg: LatentConfig) -> Tensor:
    if cfg.law == "normal":
        return sample_normal(heads["mu"], heads["logvar"], noise)
    return sample_gumbel(heads["logits"], noise, cfg)


def forward(params, g: WorkflowGraph, aug: AugmentationResult, noise: LatentNoise,
            cfg: ModelConfig, rng: np.random.Generator | None = None) -> ForwardResult:
    """Loss and intermediates for one graph.

    ``params`` maps names to arrays or leaf tensors. ``rng`` is only consumed
    when the encoder subsamples neighbors.
    """
    z = sample_latent(encode(g, g.features, cfg.encoder, params, rng), noise.original, cfg.latent)
    z_aug = sample_latent(encode(g, aug.X_prime, cfg.encoder, params, rng), noise.augmented,
                          cfg.latent)
    x_hat = decode(z, params)
    loss = total_loss(x_hat, g.features, z, z_aug, aug.y_prime, cfg.loss)
    return ForwardResult(loss, x_hat, z, z_aug)


def graph_rng(seed: int, *stream: int) -> np.random.Generator:
    """Independent generator for one (seed, stream...) coordinate."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, stream)]))


def identity_view(g: WorkflowGraph) -> AugmentationResult:
    none = np.zeros(g.n, dtype=bool)
    return AugmentationResult(g.features.copy(), np.zeros(g.n, dtype=np.int8), np.ones(g.n),
                              {"swap": none, "up": none, "down": none})


def score_graph(store: ParameterStore, g: WorkflowGraph, cfg: ModelConfig,
                aug_cfg: AugmentConfig, score_cfg: ScoreConfig,
                rng: np.random.Generator) -> ScoreReport:
    """Per-node scores from one forward pass.

    With ``score_cfg.augment`` the augmented view comes from a seeded
    augmentation pass; otherwise it is the graph itself with all pseudo-labels 0.
    """
    if score_cfg.augment:
        aug = augment(g, aug_cfg, rng)
    else:
        aug = identity_view(g)
    noise = draw_noise(rng, g.n, cfg) if score_cfg.sample_latent else null_noise(g.n, cfg)
    out = forward(store.params, g, aug, noise, cfg, rng)
    s = anomaly_scores(out.x_hat, g.features, out.z, out.z_aug, aug.y_prime, cfg.loss)
    return decide(s, score_cfg)
