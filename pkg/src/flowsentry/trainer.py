"""Whole-graph mini-batch training and evaluation."""

from __future__ import annotations

import dataclasses
import logging
import zlib
from dataclasses import dataclass, field

import numpy as np

from . import metrics, tape
from .augment import AugmentConfig, augment
from .decoder import LossConfig, ScoreConfig, ScoreReport
from .encoder import EncoderConfig, LatentConfig
from .errors import ConfigError, DataError, EvaluationError, NumericError, TrainingError
from .graph import DatasetSplit, WorkflowGraph, forbid_labels
from .model import ModelConfig, draw_noise, forward, graph_rng, init_parameters, score_graph
from .optim import ParameterStore, adam_step

log = logging.getLogger(__name__)

# stream tags for graph_rng; each purpose draws from its own generator
_SHUFFLE, _TRAIN, _VAL, _SCORE = 0, 1, 2, 3


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 32
    learning_rate: float = 1e-3
    weight_decay: float = 1e-4
    seed: int = 0
    model: ModelConfig = field(default_factory=ModelConfig)
    augment: AugmentConfig = field(default_factory=AugmentConfig)
    score: ScoreConfig = field(default_factory=ScoreConfig)
    eval_ks: tuple = (5, 20)

    def __post_init__(self):
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.weight_decay < 0:
            raise ConfigError(f"weight_decay must be >= 0, got {self.weight_decay}")

    @property
    def law(self) -> str:
        return self.model.latent.law

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        """Build from a nested dict; unknown keys are rejected.

        A top-level ``law`` key is accepted as a shortcut for ``model.latent.law``.
        """
        data = dict(data)
        law = data.pop("law", None)
        model = dict(data.pop("model", {}) or {})
        sub = {"encoder": EncoderConfig, "latent": LatentConfig, "loss": LossConfig}
        kwargs = {}
        for key, klass in sub.items():
            part = dict(model.pop(key, {}) or {})
            if key == "latent" and law is not None:
                part["law"] = law
            kwargs[key] = _build(klass, part, f"model.{key}")
        if model:
            raise ConfigError(f"unknown config keys under model: {sorted(model)}")
        out = {"model": ModelConfig(**kwargs)}
        out["augment"] = _build(AugmentConfig, data.pop("augment", {}) or {}, "augment")
        out["score"] = _build(ScoreConfig, data.pop("score", {}) or {}, "score")
        if "eval_ks" in data:
            data["eval_ks"] = tuple(int(k) for k in data["eval_ks"])
        return _build(cls, {**data, **out}, "train")


def _build(klass, values: dict, where: str):
    names = {f.name for f in dataclasses.fields(klass)}
    unknown = set(values) - names
    if unknown:
        raise ConfigError(f"unknown config keys under {where}: {sorted(unknown)}")
    try:
        return klass(**values)
    except TypeError as exc:
        raise ConfigError(f"bad config under {where}: {exc}") from None


def graph_key(graph_id: str) -> int:
    """Stable integer stream id of a graph, independent of dataset order."""
    return zlib.crc32(graph_id.encode("utf-8"))


@dataclass
class EvalResult:
    reports: dict
    metrics: dict | None


def _check_dims(graphs) -> int:
    dims = {g.d for g in graphs}
    if len(dims) != 1:
        raise DataError(f"graphs have inconsistent feature dimensions {sorted(dims)}")
    return dims.pop()


def _graph_loss(params, g: WorkflowGraph, cfg: TrainConfig, rng) -> tape.Tensor:
    aug = augment(g, cfg.augment, rng)
    noise = draw_noise(rng, g.n, cfg.model)
    return forward(params, g, aug, noise, cfg.model, rng).loss


def batch_loss(params, graphs, cfg: TrainConfig, rngs) -> tape.Tensor:
    """Sum of per-graph losses. Runs with label reads forbidden."""
    with forbid_labels("the training loss"):
        total = None
        for g, rng in zip(graphs, rngs):
            loss = _graph_loss(params, g, cfg, rng)
            total = loss if total is None else tape.add(total, loss)
        return total


def validation_loss(store: ParameterStore, graphs, cfg: TrainConfig) -> float:
    if not graphs:
        return float("nan")
    rngs = [graph_rng(cfg.seed, _VAL, graph_key(g.graph_id)) for g in graphs]
    return batch_loss(store.params, graphs, cfg, rngs).item() / len(graphs)


def train(dataset, split: DatasetSplit, cfg: TrainConfig = TrainConfig()
          ) -> tuple[ParameterStore, list[dict]]:
    """Train on ``split.train``; log train/validation loss and validation metrics per epoch.

    ``dataset`` is a list of graphs or a mapping from graph id to graph.
    """
    by_id = dataset if isinstance(dataset, dict) else {g.graph_id: g for g in dataset}
    train_ids = list(split.train)
    if not train_ids:
        raise DataError("training split is empty")
    missing = [i for i in (*split.train, *split.val) if i not in by_id]
    if missing:
        raise DataError(f"split references unknown graphs: {missing[:5]}")
    d = _check_dims(by_id[i] for i in (*split.train, *split.val))
    val_graphs = [by_id[i] for i in split.val]
    store = init_parameters(d, cfg.model, cfg.seed)
    history: list[dict] = []
    for epoch in range(1, cfg.epochs + 1):
        order = graph_rng(cfg.seed, _SHUFFLE, epoch).permutation(len(train_ids))
        ids = [train_ids[i] for i in order]
        epoch_total = 0.0
        for b, start in enumerate(range(0, len(ids), cfg.batch_size)):
            graphs = [by_id[i] for i in ids[start:start + cfg.batch_size]]
            rngs = [graph_rng(cfg.seed, _TRAIN, epoch, graph_key(g.graph_id)) for g in graphs]
            leaves = store.leaves()
            try:
                loss = batch_loss(leaves, graphs, cfg, rngs)
                grads = tape.gradients(loss, leaves)
                adam_step(store, grads, cfg.learning_rate, cfg.weight_decay)
            except NumericError as exc:
                raise TrainingError(f"training diverged at epoch {epoch}, batch {b}: {exc}") from exc
            epoch_total += loss.item()
        rec = {"epoch": epoch, "train_loss": epoch_total / len(ids)}
        try:
            rec["val_loss"] = validation_loss(store, val_graphs, cfg) if val_graphs else None
        except NumericError as exc:
            raise TrainingError(f"validation loss not finite at epoch {epoch}: {exc}") from exc
        if val_graphs and all(g.has_labels for g in val_graphs):
            rec["val_metrics"] = evaluate(val_graphs, split.val, store, cfg).metrics
        history.append(rec)
        log.info("epoch %d train_loss %.6f val_loss %s", epoch, rec["train_loss"], rec["val_loss"])
    return store, history


def evaluate(dataset, ids, store: ParameterStore, cfg: TrainConfig, seed: int | None = None,
             with_metrics: bool = True) -> EvalResult:
    """Score every listed graph; metrics are over the concatenated raw scores."""
    by_id = dataset if isinstance(dataset, dict) else {g.graph_id: g for g in dataset}
    seed = cfg.seed if seed is None else seed
    reports: dict[str, ScoreReport] = {}
    for gid in ids:
        g = by_id[gid]
        rng = graph_rng(seed, _SCORE, graph_key(gid))
        reports[gid] = score_graph(store, g, cfg.model, cfg.augment, cfg.score, rng)
    summary = None
    if with_metrics:
        unlabeled = [gid for gid in ids if not by_id[gid].has_labels]
        if unlabeled:
            raise EvaluationError(f"graphs without labels cannot be evaluated: {unlabeled[:5]}")
        scores = np.concatenate([reports[gid].scores for gid in ids])
        labels = np.concatenate([by_id[gid].labels for gid in ids])
        summary = metrics.summary(scores, labels, cfg.eval_ks)
    return EvalResult(reports, summary)
