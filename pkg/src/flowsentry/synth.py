"""Synthetic layered workflows with planted per-node anomalies.

The telemetry model here is our own construction, made so that planted
anomalies are statistically detectable. It makes no claim to match real
workflow-management traces.

Every level of the DAG is one job type with its own runtime and I/O scale.
Jobs in a level look alike up to small lognormal jitter::

    runtime       level scale * jitter
    cpu_time      runtime * efficiency, efficiency ~ U(0.85, 0.95)
    bytes_read    level I/O scale * jitter
    bytes_written bytes_read * level write ratio * jitter
    timestamp     level start time + U(0, 5) s

``cpu`` anomalies with severity K stretch the runtime by ``1 + K/2`` while the
CPU time stays put, so CPU efficiency drops. ``hdd`` anomalies add the time to
move the job's bytes through a disk capped at K MB/s for writes and 2K MB/s for
reads, so smaller K is more severe.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError
from .io import RawWorkflow
from .graph import WorkflowGraph

FEATURES = ["runtime", "cpu_time", "bytes_read", "bytes_written", "timestamp"]
TIMESTAMP_COLUMNS = ("timestamp",)
ANOMALY_TYPES = ("cpu", "hdd", "none")
_MB = 1e6


@dataclass(frozen=True)
class SynthConfig:
    # 7 x 20 = 140 jobs and ~250-290 edges, the size of a mid-sized scientific workflow run
    levels: int = 7
    width: int = 20
    fan_in: int = 2
    anomaly: str = "cpu"
    severity: float = 5.0
    anomaly_fraction: float = 0.1
    seed: int = 0
    graph_id: str = "g0000"

    def __post_init__(self):
        if self.levels < 1 or self.width < 1 or self.fan_in < 1:
            raise ConfigError("levels, width and fan_in must all be >= 1")
        if self.anomaly not in ANOMALY_TYPES:
            raise ConfigError(f"anomaly must be one of {ANOMALY_TYPES}, got {self.anomaly!r}")
        if not 0.0 <= self.anomaly_fraction <= 1.0:
            raise ConfigError("anomaly_fraction must lie in [0, 1]")
        if self.anomaly != "none" and not self.severity > 0:
            raise ConfigError("severity must be > 0")


def _layered_edges(rng, levels, width, fan_in):
    edges = []
    for lvl in range(levels - 1):
        parents = np.arange(lvl * width, (lvl + 1) * width)
        has_child = np.zeros(width, dtype=bool)
        for child in range((lvl + 1) * width, (lvl + 2) * width):
            chosen = np.sort(rng.choice(parents, size=min(fan_in, width), replace=False))
            has_child[chosen - lvl * width] = True
            edges.extend((int(p), child) for p in chosen)
        for p in parents[~has_child]:
            child = int(rng.integers((lvl + 1) * width, (lvl + 2) * width))
            edges.append((int(p), child))
    return sorted(set(edges))


def generate_raw(cfg: SynthConfig) -> RawWorkflow:
    rng = np.random.default_rng(cfg.seed)
    lv, w = cfg.levels, cfg.width
    n = lv * w
    edges = _layered_edges(rng, lv, w, cfg.fan_in)
    level = np.repeat(np.arange(lv), w)

    rt_scale = np.exp(rng.normal(3.0, 0.3, lv))
    io_scale = np.exp(rng.normal(np.log(50 * _MB), 0.3, lv))
    write_ratio = rng.uniform(0.2, 1.0, lv)

    def jitter(sigma):
        return np.exp(rng.normal(0.0, sigma, n))

    runtime = rt_scale[level] * jitter(0.1)
    cpu_time = runtime * rng.uniform(0.85, 0.95, n)
    bytes_read = io_scale[level] * jitter(0.1)
    bytes_written = bytes_read * write_ratio[level] * jitter(0.1)

    n_anom = 0 if cfg.anomaly == "none" else int(round(cfg.anomaly_fraction * n))
    labels = np.zeros(n, dtype=np.int8)
    labels[rng.choice(n, size=n_anom, replace=False)] = 1
    hit = labels == 1
    if cfg.anomaly == "cpu":
        runtime[hit] *= 1.0 + 0.5 * cfg.severity
    elif cfg.anomaly == "hdd":
        cap = cfg.severity * _MB
        runtime[hit] += bytes_written[hit] / cap + bytes_read[hit] / (2.0 * cap)

    t0 = 1.6e9 + rng.uniform(0.0, 1e7)
    level_end = np.array([runtime[level == i].max() for i in range(lv)])
    level_start = t0 + np.r_[0.0, np.cumsum(level_end)[:-1]]
    timestamp = level_start[level] + rng.uniform(0.0, 5.0, n)

    feats = np.column_stack([runtime, cpu_time, bytes_read, bytes_written, timestamp])
    node_ids = [f"job{i:04d}" for i in range(n)]
    str_edges = [(node_ids[a], node_ids[b]) for a, b in edges]
    return RawWorkflow(cfg.graph_id, node_ids, list(FEATURES), feats, str_edges, labels)


def generate_synthetic(cfg: SynthConfig) -> WorkflowGraph:
    """Preprocessed (symmetrized, timestamp-shifted, normalized) synthetic graph."""
    return generate_raw(cfg).to_graph([FEATURES.index(c) for c in TIMESTAMP_COLUMNS])


def generate_dataset_raw(n_graphs: int, base: SynthConfig = SynthConfig(),
                         seed: int = 0) -> list[RawWorkflow]:
    """``n_graphs`` workflows, each from its own seed stream of ``seed``."""
    if n_graphs < 1:
        raise ConfigError("n_graphs must be >= 1")
    seeds = np.random.SeedSequence(int(seed)).spawn(n_graphs)
    return [generate_raw(replace(base, seed=int(s.generate_state(1)[0]), graph_id=f"g{i:04d}"))
            for i, s in enumerate(seeds)]


def generate_dataset(n_graphs: int, base: SynthConfig = SynthConfig(),
                     seed: int = 0) -> list[WorkflowGraph]:
    ts = [FEATURES.index(c) for c in TIMESTAMP_COLUMNS]
    return [raw.to_graph(ts) for raw in generate_dataset_raw(n_graphs, base, seed)]
