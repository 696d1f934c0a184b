"""MLP decoder, training objective, per-job anomaly scores and thresholding."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tape
from .encoder import glorot
from .errors import ConfigError, ShapeError
from .tape import Tensor


@dataclass(frozen=True)
class LossConfig:
    eta: float = 0.5
    margin: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ConfigError(f"eta must lie in [0, 1], got {self.eta}")
        if not self.margin >= 0:
            raise ConfigError(f"margin must be >= 0, got {self.margin}")


@dataclass(frozen=True)
class ScoreConfig:
    threshold: float = 0.5
    normalize_scores: bool = True
    # False scores with noise-free latents (eps = 0, rho = 0)
    sample_latent: bool = False
    # False scores the unperturbed view: X' = X and y' = 0 for every node
    augment: bool = False

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise ConfigError(f"threshold must lie in [0, 1], got {self.threshold}")


@dataclass
class ScoreReport:
    scores: np.ndarray
    normalized: np.ndarray
    decisions: np.ndarray
    ranking: np.ndarray


def init_decoder(latent_dim: int, hidden_dim: int, d: int,
                 rng: np.random.Generator) -> dict[str, np.ndarray]:
    return {
        "dec.0.W": glorot(rng, latent_dim, hidden_dim),
        "dec.0.b": np.zeros(hidden_dim),
        "dec.1.W": glorot(rng, hidden_dim, d),
        "dec.1.b": np.zeros(d),
    }


def decode(z, params) -> Tensor:
    """``relu(z @ W0 + b0) @ W1 + b1``."""
    z = tape.as_tensor(z)
    w0 = params["dec.0.W"]
    if z.data.ndim != 2 or z.shape[1] != np.shape(w0)[0]:
        raise ShapeError(f"decode: latent has shape {z.shape}, decoder expects "
                         f"{np.shape(w0)[0]} columns")
    h = tape.relu(tape.add(tape.matmul(z, w0), params["dec.0.b"]))
    return tape.add(tape.matmul(h, params["dec.1.W"]), params["dec.1.b"])


def _same_shape(op, a, b):
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} differ")


def reconstruction_loss(x_hat, x) -> Tensor:
    """Frobenius norm of ``x_hat - x``."""
    x_hat, x = tape.as_tensor(x_hat), tape.as_tensor(x)
    _same_shape("reconstruction_loss", x_hat, x)
    return tape.frobenius(tape.sub(x_hat, x))


def hinge_terms(z, z_aug, y_aug, margin: float) -> Tensor:
    """Per-node ``max(0, margin - s_i * ||z_i - z'_i||)`` with ``s_i = 2 y'_i - 1``.

    Perturbed nodes are pushed at least ``margin`` apart, the others pulled together.
    """
    z, z_aug = tape.as_tensor(z), tape.as_tensor(z_aug)
    _same_shape("margin_loss", z, z_aug)
    y_aug = np.asarray(y_aug)
    if y_aug.shape != (z.shape[0],):
        raise ShapeError(f"margin_loss: pseudo-labels {y_aug.shape} for {z.shape[0]} nodes")
    sign = 2.0 * y_aug.astype(np.float64) - 1.0
    dist = tape.row_norm(tape.sub(z, z_aug))
    return tape.hinge(tape.add(tape.mul(dist, -sign), margin))


def margin_loss(z, z_aug, y_aug, margin: float) -> Tensor:
    return tape.mean(hinge_terms(z, z_aug, y_aug, margin))


def total_loss(x_hat, x, z, z_aug, y_aug, cfg: LossConfig) -> Tensor:
    rec = reconstruction_loss(x_hat, x)
    mar = margin_loss(z, z_aug, y_aug, cfg.margin)
    return tape.add(tape.scale(rec, cfg.eta), tape.scale(mar, 1.0 - cfg.eta))


def anomaly_scores(x_hat, x, z, z_aug, y_aug, cfg: LossConfig) -> np.ndarray:
    """``eta * ||x_hat_i - x_i|| + (1 - eta) * hinge_i`` for every node."""
    x_hat, x = tape.as_tensor(x_hat), tape.as_tensor(x)
    _same_shape("anomaly_scores", x_hat, x)
    rec = tape.row_norm(tape.sub(x_hat, x)).data
    hin = hinge_terms(z, z_aug, y_aug, cfg.margin).data
    return cfg.eta * rec + (1.0 - cfg.eta) * hin


def minmax(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    span = v.max() - v.min()
    if span > 0:
        return (v - v.min()) / span
    return np.zeros_like(v)


def rank_order(scores) -> np.ndarray:
    """Indices by descending score, ties by ascending index."""
    scores = np.asarray(scores, dtype=np.float64)
    return np.lexsort((np.arange(scores.size), -scores))


def decide(scores, cfg: ScoreConfig = ScoreConfig()) -> ScoreReport:
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 1 or scores.size < 1:
        raise ShapeError("decide needs a non-empty score vector")
    norm = minmax(scores) if cfg.normalize_scores else scores.copy()
    decisions = (norm > cfg.threshold).astype(np.int8)
    return ScoreReport(scores, norm, decisions, rank_order(scores))
