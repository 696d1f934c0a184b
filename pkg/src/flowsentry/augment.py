"""Feature augmentation with pseudo-labels.

One uniform draw ``p`` per node decides everything. With selection rate ``r``
the interval ``[0, r)`` is cut into three bands::

    [0, r/4)        scale up by ``scale_factor``
    [r/4, 3r/4]     replace by the closest neighbor's features
                    (``[r/2, 3r/4]`` with ``strict_paper_mask``)
    (3r/4, r)       scale down by ``scale_factor``

and the pseudo-label is ``p < r``. Nodes with ``p >= r`` are left untouched.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernel
from .errors import ConfigError, ShapeError
from .graph import WorkflowGraph


@dataclass(frozen=True)
class AugmentConfig:
    selection_rate: float = 0.1
    scale_factor: float = 1.5
    seed: int = 0
    strict_paper_mask: bool = False

    def __post_init__(self):
        if not 0.0 <= self.selection_rate <= 1.0:
            raise ConfigError(f"selection_rate must lie in [0, 1], got {self.selection_rate}")
        if not self.scale_factor > 0 or self.scale_factor == 1.0:
            raise ConfigError(f"scale_factor must be positive and != 1, got {self.scale_factor}")


@dataclass
class AugmentationResult:
    X_prime: np.ndarray
    y_prime: np.ndarray
    p: np.ndarray
    masks: dict = field(default_factory=dict)


def draw_mask(p, r: float) -> np.ndarray:
    """``(p >= r/2) & (p <= 3r/4)``; defined as all-false when ``r == 0``."""
    p = np.asarray(p, dtype=np.float64)
    if r == 0:
        return np.zeros(p.shape, dtype=bool)
    return (p >= 0.5 * r) & (p <= 0.75 * r)


def swap_mask(p, r: float, strict: bool = False) -> np.ndarray:
    if strict:
        return draw_mask(p, r)
    p = np.asarray(p, dtype=np.float64)
    if r == 0:
        return np.zeros(p.shape, dtype=bool)
    return (p >= 0.25 * r) & (p <= 0.75 * r)


def pseudo_labels(p, r: float) -> np.ndarray:
    return (np.asarray(p) < r).astype(np.int8)


def neighbor_swap(g: WorkflowGraph, mask, features=None) -> np.ndarray:
    """Masked rows take the row of their Euclidean-closest neighbor.

    Distances and copied rows both come from the unmodified matrix, so the
    result does not depend on node order. Isolated nodes pass through.
    """
    x = g.features if features is None else np.asarray(features, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (g.n,):
        raise ShapeError(f"mask must have length {g.n}, got shape {mask.shape}")
    if x.shape[0] != g.n:
        raise ShapeError(f"features must have {g.n} rows, got {x.shape[0]}")
    return kernel.nearest_neighbor_swap(g.indptr, g.indices, x, mask)


def group_scale(x, up_mask, down_mask, factor: float) -> np.ndarray:
    x = np.array(x, dtype=np.float64)
    up = np.asarray(up_mask, dtype=bool)
    down = np.asarray(down_mask, dtype=bool)
    if (up & down).any():
        raise ConfigError("scale-up and scale-down masks overlap")
    if not factor > 0 or factor == 1.0:
        raise ConfigError(f"scale factor must be positive and != 1, got {factor}")
    x[up] *= factor
    x[down] /= factor
    return x


def augment_with(g: WorkflowGraph, p, cfg: AugmentConfig) -> AugmentationResult:
    """Augmentation for a given draw vector ``p``."""
    p = np.asarray(p, dtype=np.float64)
    if p.shape != (g.n,):
        raise ShapeError(f"p must have length {g.n}, got shape {p.shape}")
    r = cfg.selection_rate
    swap = swap_mask(p, r, cfg.strict_paper_mask)
    up = p < 0.25 * r
    down = (p > 0.75 * r) & (p < r)
    x_prime = group_scale(neighbor_swap(g, swap), up, down, cfg.scale_factor)
    return AugmentationResult(x_prime, pseudo_labels(p, r), p,
                              {"swap": swap, "up": up, "down": down})


def augment(g: WorkflowGraph, cfg: AugmentConfig, rng: np.random.Generator | None = None
            ) -> AugmentationResult:
    """Draw ``p ~ U[0, 1)`` per node and apply :func:`augment_with`."""
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    return augment_with(g, rng.random(g.n), cfg)
