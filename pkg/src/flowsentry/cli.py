"""Command-line interface.

Subcommands::

    synth   write a synthetic dataset directory with planted anomalies
    train   train on a manifest's train/val split; write checkpoint + JSONL log
    score   score graphs from a manifest with a checkpoint; write a score CSV
    eval    compare a score CSV with ground-truth labels; write metrics JSON
    grid    train + score + eval for each of several config files

Exit status is 0 on success, 2 for usage errors and the ``exit_code`` of the
raised :class:`~flowsentry.errors.FlowSentryError` otherwise.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import metrics
from .errors import ConfigError, DataError, EvaluationError, FlowSentryError, InputFileError
from .graph import DatasetSplit, split_dataset
from .io import (env_seed, load_dataset, read_json, read_labels_csv, read_manifest, read_scores,
                 write_dataset, write_jsonl, write_scores)
from .optim import load_checkpoint, save_checkpoint
from .synth import TIMESTAMP_COLUMNS, SynthConfig, generate_dataset_raw
from .trainer import TrainConfig, evaluate, train

log = logging.getLogger("flowsentry")


def _load_train_config(path) -> TrainConfig:
    data = read_json(path) if path else {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    cfg = TrainConfig.from_dict(data)
    seed = env_seed(cfg.seed)
    return dataclasses.replace(cfg, seed=seed) if seed != cfg.seed else cfg


def _manifest_split(manifest) -> DatasetSplit:
    return split_dataset(manifest.graph_ids, manifest.ratios, manifest.split_seed)


def _select_ids(manifest, which: str) -> list:
    if which == "all":
        return manifest.graph_ids
    return list(getattr(_manifest_split(manifest), which))


def cmd_synth(args) -> int:
    values = read_json(args.config) if args.config else {}
    if not isinstance(values, dict):
        raise ConfigError(f"{args.config}: synth config must be a JSON object")
    n_graphs = int(values.pop("graphs", args.graphs))
    ratios = tuple(values.pop("split_ratios", (0.6, 0.2, 0.2)))
    split_seed = int(values.pop("split_seed", 0))
    for flag in ("levels", "width", "fan_in", "anomaly", "severity", "anomaly_fraction", "seed"):
        v = getattr(args, flag)
        if v is not None:
            values[flag] = v
    unknown = set(values) - {f.name for f in dataclasses.fields(SynthConfig)}
    if unknown:
        raise ConfigError(f"unknown synth config keys: {sorted(unknown)}")
    base = SynthConfig(**values)
    seed = env_seed(base.seed)
    raws = generate_dataset_raw(n_graphs, base, seed)
    path = write_dataset(args.out, raws, TIMESTAMP_COLUMNS, ratios, split_seed)
    print(f"wrote {n_graphs} graphs to {path}")
    return 0


def cmd_train(args) -> int:
    cfg = _load_train_config(args.config)
    manifest = read_manifest(args.manifest)
    graphs = load_dataset(manifest)
    split = _manifest_split(manifest)
    store, history = train(graphs, split, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ckpt = Path(args.checkpoint) if args.checkpoint else out / "checkpoint.bin"
    log_path = Path(args.log) if args.log else out / "train_log.jsonl"
    save_checkpoint(ckpt, store, {"train_config": cfg.to_dict(),
                                  "feature_names": manifest.feature_names})
    write_jsonl(log_path, history)
    print(f"trained {cfg.epochs} epochs; checkpoint {ckpt}; log {log_path}")
    return 0


def _config_from_checkpoint(meta) -> TrainConfig:
    if "train_config" not in meta:
        raise ConfigError("checkpoint carries no training config")
    data = dict(meta["train_config"])
    return TrainConfig.from_dict(data)


def score_rows(graphs, ids, store, cfg, seed):
    by_id = {g.graph_id: g for g in graphs}
    result = evaluate(by_id, ids, store, cfg, seed=seed, with_metrics=False)
    rows = []
    for gid in ids:
        rep = result.reports[gid]
        rank = np.empty(rep.scores.size, dtype=np.int64)
        rank[rep.ranking] = np.arange(1, rep.scores.size + 1)
        for i, nid in enumerate(by_id[gid].node_ids):
            rows.append((gid, nid, rep.scores[i], rep.normalized[i], rep.decisions[i], rank[i]))
    return rows


def cmd_score(args) -> int:
    store, meta = load_checkpoint(args.checkpoint)
    cfg = _config_from_checkpoint(meta)
    base_seed = args.seed if args.seed is not None else cfg.seed
    seed = env_seed(base_seed)
    if args.threshold is not None:
        cfg = dataclasses.replace(cfg, score=dataclasses.replace(cfg.score,
                                                                 threshold=args.threshold))
    manifest = read_manifest(args.manifest)
    graphs = load_dataset(manifest)
    names = meta.get("feature_names")
    if names is not None and names != manifest.feature_names:
        raise DataError(f"checkpoint features {names} differ from manifest {manifest.feature_names}")
    rows = score_rows(graphs, _select_ids(manifest, args.split), store, cfg, seed)
    write_scores(args.out, rows)
    print(f"scored {len(rows)} nodes into {args.out}")
    return 0


def _labels_for(args, rows) -> np.ndarray:
    if args.labels:
        table = read_labels_csv(args.labels)
    else:
        manifest = read_manifest(args.manifest)
        table = {}
        for g in load_dataset(manifest):
            if g.has_labels:
                table.update({(g.graph_id, nid): int(v) for nid, v in zip(g.node_ids, g.labels)})
    try:
        return np.array([table[(r["graph_id"], r["node_id"])] for r in rows], dtype=np.int64)
    except KeyError as exc:
        raise EvaluationError(f"no ground-truth label for node {exc.args[0]}") from None


def evaluate_scores(rows, labels, ks) -> dict:
    scores = np.array([r["raw_score"] for r in rows])
    decisions = np.array([r["decision"] for r in rows])
    out = metrics.summary(scores, labels, ks)
    tp = int(((decisions == 1) & (labels == 1)).sum())
    out["decision_precision"] = tp / max(int(decisions.sum()), 1)
    out["decision_recall"] = tp / max(int(labels.sum()), 1)
    return out


def cmd_eval(args) -> int:
    if not args.labels and not args.manifest:
        raise ConfigError("eval needs --labels or --manifest")
    rows = read_scores(args.scores)
    if not rows:
        raise DataError(f"{args.scores} has no score rows")
    summary = evaluate_scores(rows, _labels_for(args, rows), tuple(args.k or (5, 20)))
    text = json.dumps(summary, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_grid(args) -> int:
    manifest = read_manifest(args.manifest)
    graphs = load_dataset(manifest)
    split = _manifest_split(manifest)
    by_id = {g.graph_id: g for g in graphs}
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    results = []
    for cfg_path in args.configs:
        cfg = _load_train_config(cfg_path)
        name = Path(cfg_path).stem
        run_dir = out / name
        run_dir.mkdir(parents=True, exist_ok=True)
        store, history = train(graphs, split, cfg)
        save_checkpoint(run_dir / "checkpoint.bin", store,
                        {"train_config": cfg.to_dict(), "feature_names": manifest.feature_names})
        write_jsonl(run_dir / "train_log.jsonl", history)
        rows = score_rows(graphs, list(split.test), store, cfg, cfg.seed)
        write_scores(run_dir / "scores.csv", rows)
        labels = np.concatenate([by_id[g].labels for g in split.test]) if all(
            by_id[g].has_labels for g in split.test) else None
        rec = {"config": str(cfg_path), "final_train_loss": history[-1]["train_loss"] if history
               else None, "final_val_loss": history[-1]["val_loss"] if history else None}
        if labels is not None:
            rec["test_metrics"] = metrics.summary(np.array([r[2] for r in rows]), labels,
                                                  cfg.eval_ks)
        results.append(rec)
        print(f"{name}: {json.dumps(rec.get('test_metrics', {}), sort_keys=True)}")
    (out / "grid_summary.json").write_text(json.dumps(results, indent=2, sort_keys=True) + "\n",
                                           encoding="utf-8")
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(2, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="flowsentry", description=__doc__.split("\n\n")[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log per-epoch progress")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synth", help="generate a synthetic dataset")
    s.add_argument("--out", required=True, help="dataset directory to create")
    s.add_argument("--config", help="JSON with SynthConfig fields plus graphs/split_ratios/split_seed")
    s.add_argument("--graphs", type=int, default=60)
    s.add_argument("--levels", type=int)
    s.add_argument("--width", type=int)
    s.add_argument("--fan-in", dest="fan_in", type=int)
    s.add_argument("--anomaly", choices=("cpu", "hdd", "none"))
    s.add_argument("--severity", type=float)
    s.add_argument("--fraction", dest="anomaly_fraction", type=float)
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_synth)

    t = sub.add_parser("train", help="train a model")
    t.add_argument("--manifest", required=True)
    t.add_argument("--config", help="TrainConfig JSON (defaults are used when omitted)")
    t.add_argument("--out", default=".", help="directory for checkpoint.bin and train_log.jsonl")
    t.add_argument("--checkpoint")
    t.add_argument("--log")
    t.set_defaults(func=cmd_train)

    c = sub.add_parser("score", help="score graphs with a checkpoint")
    c.add_argument("--checkpoint", required=True)
    c.add_argument("--manifest", required=True)
    c.add_argument("--out", required=True, help="score CSV to write")
    c.add_argument("--split", choices=("all", "train", "val", "test"), default="all")
    c.add_argument("--seed", type=int)
    c.add_argument("--threshold", type=float)
    c.set_defaults(func=cmd_score)

    e = sub.add_parser("eval", help="metrics for a score CSV")
    e.add_argument("--scores", required=True)
    e.add_argument("--labels", help="CSV with graph_id,node_id,label")
    e.add_argument("--manifest", help="take labels from the dataset manifest")
    e.add_argument("--k", type=int, action="append", help="precision@k cutoffs (repeatable)")
    e.add_argument("--out", help="metrics JSON to write (stdout when omitted)")
    e.set_defaults(func=cmd_eval)

    gr = sub.add_parser("grid", help="train/score/eval over several config files")
    gr.add_argument("--manifest", required=True)
    gr.add_argument("--out", required=True)
    gr.add_argument("configs", nargs="+")
    gr.set_defaults(func=cmd_grid)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s")
    try:
        return args.func(args)
    except FlowSentryError as exc:
        print(f"flowsentry: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"flowsentry: error: {exc}", file=sys.stderr)
        return InputFileError.exit_code


if __name__ == "__main__":
    sys.exit(main())
