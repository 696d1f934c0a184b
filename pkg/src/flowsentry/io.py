"""Dataset files, manifests, score CSVs and train logs.

A dataset directory looks like::

    manifest.json
    graphs/<graph_id>/nodes.csv     node_id,<feature columns...>
    graphs/<graph_id>/edges.csv     src,dst        (directed, node ids)
    graphs/<graph_id>/labels.csv    node_id,label  (optional)

Floats are written with ``repr`` so a write/read cycle is bit exact.
"""

from __future__ import annotations

import csv
import graphlib
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, CycleError, DataError, FormatError, InputFileError, SchemaError
from .graph import DEFAULT_SPLIT, WorkflowGraph

MANIFEST_VERSION = 1
SCORE_COLUMNS = ("graph_id", "node_id", "raw_score", "normalized_score", "decision", "rank")


@dataclass
class RawWorkflow:
    """One workflow execution as stored on disk, before preprocessing."""

    graph_id: str
    node_ids: list
    feature_names: list
    features: np.ndarray
    edges: list
    labels: np.ndarray | None = None

    def adjacency(self) -> np.ndarray:
        index = {nid: i for i, nid in enumerate(self.node_ids)}
        a = np.zeros((len(self.node_ids),) * 2, dtype=np.int8)
        for src, dst in self.edges:
            a[index[src], index[dst]] = 1
        return a

    def to_graph(self, timestamp_columns: Sequence[int] = (), normalize: bool = True
                 ) -> WorkflowGraph:
        check_acyclic(self.node_ids, self.edges, self.graph_id)
        return WorkflowGraph.from_raw(self.adjacency(), self.features, labels=self.labels,
                                      node_ids=self.node_ids, graph_id=self.graph_id,
                                      feature_names=self.feature_names,
                                      timestamp_columns=timestamp_columns,
                                      normalize=normalize)


def check_acyclic(node_ids, edges, graph_id="") -> list:
    """Topological order of the directed edges; raises :class:`CycleError` otherwise."""
    ts = graphlib.TopologicalSorter({nid: () for nid in node_ids})
    for src, dst in edges:
        if src != dst:
            ts.add(dst, src)
    try:
        return list(ts.static_order())
    except graphlib.CycleError as exc:
        raise CycleError(f"graph {graph_id!r}: edges contain a cycle through {exc.args[1]}") from None


def _fmt(x: float) -> str:
    return repr(float(x))


def _open_csv(path):
    try:
        return open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise InputFileError(f"cannot read {path}: {exc.strerror}") from None


def _write_rows(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_graph_files(directory, raw: RawWorkflow) -> dict:
    """Write one workflow's CSVs; returns its manifest entry (paths relative to parent)."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    _write_rows(d / "nodes.csv", ["node_id", *raw.feature_names],
                ([nid, *map(_fmt, row)] for nid, row in zip(raw.node_ids, raw.features)))
    _write_rows(d / "edges.csv", ["src", "dst"], raw.edges)
    entry = {"id": raw.graph_id, "nodes": "nodes.csv", "edges": "edges.csv"}
    if raw.labels is not None:
        _write_rows(d / "labels.csv", ["node_id", "label"],
                    zip(raw.node_ids, (int(v) for v in raw.labels)))
        entry["labels"] = "labels.csv"
    return entry


def write_dataset(directory, raws: Iterable[RawWorkflow], timestamp_columns=("timestamp",),
                  ratios=DEFAULT_SPLIT, seed: int = 0) -> Path:
    """Write a dataset directory and its manifest; returns the manifest path."""
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    entries, names = [], None
    for raw in raws:
        if names is None:
            names = list(raw.feature_names)
        elif list(raw.feature_names) != names:
            raise SchemaError(f"graph {raw.graph_id!r}: feature columns differ")
        e = write_graph_files(root / "graphs" / raw.graph_id, raw)
        base = f"graphs/{raw.graph_id}/"
        entries.append({k: (base + v if k != "id" else v) for k, v in e.items()})
    manifest = {
        "format_version": MANIFEST_VERSION,
        "features": [{"name": n, "timestamp": n in timestamp_columns} for n in names or []],
        "graphs": entries,
        "split": {"ratios": list(ratios), "seed": int(seed)},
    }
    path = root / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return path


@dataclass
class Manifest:
    path: Path
    feature_names: list
    timestamp_columns: list
    graphs: list
    ratios: tuple
    split_seed: int

    @property
    def graph_ids(self) -> list:
        return [g["id"] for g in self.graphs]


def read_manifest(path) -> Manifest:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputFileError(f"cannot read manifest {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise FormatError(f"manifest {path} is not valid JSON: {exc.msg}") from None
    try:
        if data["format_version"] != MANIFEST_VERSION:
            raise FormatError(f"unsupported manifest version {data['format_version']}")
        feats = data["features"]
        names = [f["name"] for f in feats]
        ts = [i for i, f in enumerate(feats) if f.get("timestamp")]
        graphs = data["graphs"]
        for g in graphs:
            g["id"], g["nodes"], g["edges"]
        split = data.get("split", {})
        ratios = tuple(split.get("ratios", DEFAULT_SPLIT))
        seed = int(split.get("seed", 0))
    except (KeyError, TypeError) as exc:
        raise FormatError(f"manifest {path} is missing field {exc}") from None
    if not graphs:
        raise FormatError(f"manifest {path} lists no graphs")
    return Manifest(path, names, ts, graphs, ratios, seed)


def read_graph_files(base: Path, entry: dict, feature_names: list) -> RawWorkflow:
    gid = str(entry["id"])
    with _open_csv(base / entry["nodes"]) as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:1] != ["node_id"]:
        raise FormatError(f"graph {gid!r}: nodes file needs a header starting with node_id")
    if rows[0][1:] != feature_names:
        raise SchemaError(f"graph {gid!r}: feature columns {rows[0][1:]} differ from "
                          f"manifest {feature_names}")
    node_ids, feats = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(feature_names) + 1:
            raise FormatError(f"graph {gid!r}: nodes line {lineno} has {len(row)} fields")
        node_ids.append(row[0])
        vals = []
        for col, cell in zip(feature_names, row[1:]):
            if cell.strip() == "":
                raise DataError(f"graph {gid!r}: missing value for {col} at line {lineno}")
            try:
                v = float(cell)
            except ValueError:
                raise DataError(f"graph {gid!r}: bad number {cell!r} at line {lineno}") from None
            if not math.isfinite(v):
                raise DataError(f"graph {gid!r}: non-finite {col} at line {lineno}")
            vals.append(v)
        feats.append(vals)
    if not node_ids:
        raise FormatError(f"graph {gid!r}: no nodes")
    if len(set(node_ids)) != len(node_ids):
        raise FormatError(f"graph {gid!r}: duplicate node ids")
    known = set(node_ids)
    with _open_csv(base / entry["edges"]) as fh:
        erows = list(csv.reader(fh))
    if not erows or erows[0] != ["src", "dst"]:
        raise FormatError(f"graph {gid!r}: edges file needs header src,dst")
    edges = []
    for lineno, row in enumerate(erows[1:], start=2):
        if len(row) != 2 or row[0] not in known or row[1] not in known:
            raise FormatError(f"graph {gid!r}: bad edge at line {lineno}: {row}")
        edges.append((row[0], row[1]))
    labels = None
    if entry.get("labels"):
        with _open_csv(base / entry["labels"]) as fh:
            lrows = list(csv.reader(fh))
        if not lrows or lrows[0] != ["node_id", "label"]:
            raise FormatError(f"graph {gid!r}: labels file needs header node_id,label")
        lab = {}
        for row in lrows[1:]:
            if len(row) != 2 or row[1] not in ("0", "1"):
                raise DataError(f"graph {gid!r}: bad label row {row}")
            lab[row[0]] = int(row[1])
        if set(lab) != known:
            raise DataError(f"graph {gid!r}: labels do not cover exactly the node set")
        labels = np.array([lab[n] for n in node_ids], dtype=np.int8)
    return RawWorkflow(gid, node_ids, list(feature_names),
                       np.array(feats, dtype=np.float64).reshape(len(node_ids), -1),
                       edges, labels)


def load_raw(manifest) -> list[RawWorkflow]:
    m = manifest if isinstance(manifest, Manifest) else read_manifest(manifest)
    base = m.path.parent
    return [read_graph_files(base, e, m.feature_names) for e in m.graphs]


def load_dataset(manifest, normalize: bool = True) -> list[WorkflowGraph]:
    """Read, validate and preprocess every graph listed in a manifest."""
    m = manifest if isinstance(manifest, Manifest) else read_manifest(manifest)
    return [raw.to_graph(m.timestamp_columns, normalize) for raw in load_raw(m)]


def write_scores(path, rows: Iterable[Sequence]) -> None:
    """Rows of (graph_id, node_id, raw_score, normalized_score, decision, rank)."""
    _write_rows(path, SCORE_COLUMNS,
                ([g, n, _fmt(r), _fmt(s), int(dcs), int(rk)] for g, n, r, s, dcs, rk in rows))


def read_scores(path) -> list[dict]:
    with _open_csv(path) as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != SCORE_COLUMNS:
            raise FormatError(f"{path}: score CSV must have columns {','.join(SCORE_COLUMNS)}")
        out = []
        for row in reader:
            try:
                out.append({"graph_id": row["graph_id"], "node_id": row["node_id"],
                            "raw_score": float(row["raw_score"]),
                            "normalized_score": float(row["normalized_score"]),
                            "decision": int(row["decision"]), "rank": int(row["rank"])})
            except (TypeError, ValueError):
                raise FormatError(f"{path}: malformed row {row}") from None
    return out


def read_labels_csv(path) -> dict:
    """``{(graph_id, node_id): label}`` from a ``graph_id,node_id,label`` CSV."""
    with _open_csv(path) as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != ("graph_id", "node_id", "label"):
            raise FormatError(f"{path}: labels CSV must have columns graph_id,node_id,label")
        out = {}
        for row in reader:
            if row["label"] not in ("0", "1"):
                raise DataError(f"{path}: bad label {row['label']!r}")
            out[(row["graph_id"], row["node_id"])] = int(row["label"])
    return out


def write_jsonl(path, records: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_jsonl(path) -> list[dict]:
    try:
        with open(path, encoding="utf-8") as fh:
            return [json.loads(line) for line in fh if line.strip()]
    except OSError as exc:
        raise InputFileError(f"cannot read {path}: {exc.strerror}") from None


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputFileError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path} is not valid JSON: {exc.msg}") from None


def env_seed(default: int) -> int:
    """``FLOWSENTRY_SEED`` when set, else ``default``."""
    raw = os.environ.get("FLOWSENTRY_SEED")
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"FLOWSENTRY_SEED must be an integer, got {raw!r}") from None
