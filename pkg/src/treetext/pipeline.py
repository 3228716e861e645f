"""Stage-file orchestration: parsed docs -> graphs -> trees -> model -> report.

Every stage reads and writes interchange files so each is re-runnable in
isolation; documents are independent, so build stages can fan out over a
process pool. Reports are JSON with sorted keys (byte-stable apart from
wall-clock fields).
"""
from __future__ import annotations

import hashlib
import json
import os
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import entropy, features, graphio, learner


class StageError(RuntimeError):
    pass


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def load_parsed_document(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    for fld in ("doc_id", "label", "tokens"):
        if fld not in doc:
            raise graphio.GraphParseError(f"{path}: missing field {fld!r}")
    return doc


def _graph_from_parsed(doc: dict, mode: str, window: int) -> graphio.DocumentGraph:
    tokens = [graphio.Token(id=t["id"], text=t["text"], sentence_index=t["sentence"])
              for t in doc["tokens"]]
    if mode == "dependency":
        deps = [graphio.DependencyRecord(head=d["head"], dependent=d["dependent"],
                                         relation=d.get("relation", "dep"))
                for d in doc.get("dependencies", [])]
        return graphio.build_dependency_graph(tokens, deps, doc.get("roots", []),
                                              doc["doc_id"], doc["label"])
    if mode == "cooccurrence":
        return graphio.build_cooccurrence_graph(tokens, window, doc["doc_id"],
                                                doc["label"])
    raise graphio.ConfigError(f"unknown graph mode {mode!r}")


def _build_one_graph(args):
    entry, mode, window, out_dir = args
    try:
        doc = load_parsed_document(entry["path"])
        g = _graph_from_parsed(doc, mode, window)
        path = Path(out_dir) / f"{g.doc_id}.graph.json"
        _atomic_write(path, graphio.serialize_graph(g))
        return {"doc_id": entry["doc_id"], "split": entry["split"],
                "path": str(path)}, None
    except Exception as exc:  # per-document partial-failure contract
        return None, {"doc_id": entry.get("doc_id"), "error": str(exc)}


def build_graphs(manifest_path, mode: str, out_dir, window: int = 3,
                 workers: int = 1) -> tuple[list[dict], list[dict]]:
    entries = graphio.read_manifest(manifest_path)
    Path(out_dir).mkdir(parents=True, exist_ok=True)
    jobs = [(e, mode, window, str(out_dir)) for e in entries]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_build_one_graph, jobs))
    else:
        results = [_build_one_graph(j) for j in jobs]
    written = [ok for ok, _ in results if ok]
    errors = [err for _, err in results if err]
    _write_manifest(Path(out_dir) / "graphs.manifest.jsonl", written)
    if errors:
        _write_manifest(Path(out_dir) / "errors.jsonl", errors)
    return written, errors


def _write_manifest(path: Path, entries: list[dict]) -> None:
    body = "".join(json.dumps(e, sort_keys=True) + "\n" for e in entries)
    _atomic_write(path, body.encode("utf-8"))


def _build_one_tree(args):
    entry, height, method, seed, out_dir = args
    try:
        g = graphio.parse_graph(Path(entry["path"]).read_bytes())
        if method == "sema":
            t = entropy.sema(g, height)
        elif method == "random":
            t = entropy.random_tree(g, height, seed)
        else:
            raise graphio.ConfigError(f"unknown tree method {method!r}")
        path = Path(out_dir) / f"{g.doc_id}.tree.json"
        _atomic_write(path, json.dumps(entropy.tree_to_dict(t),
                                       sort_keys=True).encode("utf-8"))
        return {"doc_id": entry["doc_id"], "split": entry["split"],
                "path": str(path), "entropy_bits": t.entropy_bits}, None
    except Exception as exc:
        return None, {"doc_id": entry.get("doc_id"), "error": str(exc)}


def build_trees(graphs_manifest, height: int, method: str, out_dir,
                seed: int = 0, workers: int = 1) -> tuple[list[dict], list[dict]]:
    entries = graphio.read_manifest(graphs_manifest)
    Path(out_dir).mkdir(parents=True, exist_ok=True)
    jobs = [(e, height, method, seed, str(out_dir)) for e in entries]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_build_one_tree, jobs))
    else:
        results = [_build_one_tree(j) for j in jobs]
    written = [ok for ok, _ in results if ok]
    errors = [err for _, err in results if err]
    _write_manifest(Path(out_dir) / "trees.manifest.jsonl", written)
    if errors:
        _write_manifest(Path(out_dir) / "errors.jsonl", errors)
    return written, errors


def load_dataset(graphs_manifest, trees_dir, embeddings_path,
                 pos_slots: int, seed: int) -> dict:
    """Assemble (tree, features, label) triples per split; returns splits,
    dimensions, class count, and a feature-matrix digest."""
    entries = graphio.read_manifest(graphs_manifest)
    table = features.load_embeddings(embeddings_path)
    splits: dict[str, list] = {"train": [], "test": []}
    digest = hashlib.sha256()
    labels = set()
    for entry in sorted(entries, key=lambda e: e["doc_id"]):
        g = graphio.parse_graph(Path(entry["path"]).read_bytes())
        tree_path = Path(trees_dir) / f"{g.doc_id}.tree.json"
        if not tree_path.exists():
            raise StageError(f"missing tree file {tree_path}; run build-trees first")
        t = entropy.tree_from_dict(json.loads(tree_path.read_text(encoding="utf-8")))
        x0 = features.featurize(g, table, pos_slots, seed)
        digest.update(x0.tobytes())
        labels.add(g.label)
        splits[entry["split"]].append((t, x0, g.label))
    n_classes = max(labels) + 1
    d0 = table.dimension + pos_slots
    return {"splits": splits, "n_classes": n_classes, "input_dim": d0,
            "feature_digest": digest.hexdigest()}


def run_training(dataset: dict, config: learner.TrainConfig) -> dict:
    t0 = time.time()
    model = learner.TreeModel(input_dim=dataset["input_dim"], hidden=config.hidden,
                              height=config.height, n_classes=dataset["n_classes"],
                              seed=config.seed, pool=config.pool,
                              dropout=config.dropout)
    result = learner.train(model, dataset["splits"]["train"], config)
    report = {
        "config": {"height": config.height, "hidden": config.hidden,
                   "pool": config.pool, "lr": config.lr, "dropout": config.dropout,
                   "batch": config.batch, "seed": config.seed,
                   "max_epochs": config.max_epochs, "patience": config.patience},
        "train_acc": learner.evaluate(result.model, dataset["splits"]["train"]),
        "val_acc": result.best_val_acc,
        "best_epoch": result.best_epoch,
        "param_count": learner.count_params(result.model),
        "wall_clock_sec": time.time() - t0,
    }
    if dataset["splits"]["test"]:
        report["test_acc"] = learner.evaluate(result.model, dataset["splits"]["test"])
    return {"report": report, "model": result.model, "history": result.history}


def run_multi(dataset: dict, config: learner.TrainConfig, runs: int) -> dict:
    t0 = time.time()
    per_run = []
    for r in range(runs):
        cfg = learner.TrainConfig(**{**_cfg_dict(config), "seed": config.seed + r})
        per_run.append(run_training(dataset, cfg))
    accs = [r["report"].get("test_acc", r["report"]["train_acc"]) for r in per_run]
    report = {
        "config": per_run[0]["report"]["config"],
        "runs": runs,
        "per_run": [r["report"] for r in per_run],
        "mean_acc": statistics.fmean(accs),
        "param_count": per_run[0]["report"]["param_count"],
        "wall_clock_sec": time.time() - t0,
    }
    if runs >= 2:
        report["std_acc"] = statistics.stdev(accs)
    return {"report": report, "model": per_run[0]["model"]}


def _cfg_dict(config: learner.TrainConfig) -> dict:
    return {"height": config.height, "hidden": config.hidden, "pool": config.pool,
            "lr": config.lr, "dropout": config.dropout, "batch": config.batch,
            "seed": config.seed, "max_epochs": config.max_epochs,
            "patience": config.patience}


def ablate_random_trees(graphs_manifest, embeddings_path, config: learner.TrainConfig,
                        pos_slots: int, seeds: list[int], work_dir) -> dict:
    """Identical configs on entropy-minimized vs random trees; the feature
    matrices are asserted identical across arms."""
    work = Path(work_dir)
    arms = {}
    for method in ("sema", "random"):
        tree_dir = work / f"trees-{method}"
        build_trees(graphs_manifest, config.height, method, tree_dir,
                    seed=config.seed)
        ds = load_dataset(graphs_manifest, tree_dir, embeddings_path,
                          pos_slots, config.seed)
        tree_manifest = graphio.read_manifest(tree_dir / "trees.manifest.jsonl")
        entropies = [e["entropy_bits"] for e in tree_manifest]
        accs = []
        for s in seeds:
            cfg = learner.TrainConfig(**{**_cfg_dict(config), "seed": s})
            accs.append(run_training(ds, cfg)["report"].get("test_acc"))
        arms[method] = {"mean_acc": statistics.fmean(accs), "accs": accs,
                        "mean_entropy_bits": statistics.fmean(entropies),
                        "feature_digest": ds["feature_digest"]}
    if arms["sema"]["feature_digest"] != arms["random"]["feature_digest"]:
        raise StageError("feature matrices differ between ablation arms")
    return {"sema": arms["sema"], "random_tree": arms["random"],
            "seeds": list(seeds)}


def format_report(report: dict, fmt: str = "json") -> str:
    if fmt == "json":
        return json.dumps(report, sort_keys=True, indent=2)
    if fmt == "tsv":
        flat = _flatten(report)
        return "\n".join(f"{k}\t{v}" for k, v in sorted(flat.items()))
    raise graphio.ConfigError(f"unknown report format {fmt!r}")


def _flatten(obj, prefix="") -> dict:
    out = {}
    if isinstance(obj, dict):
        for k, v in obj.items():
            out.update(_flatten(v, f"{prefix}{k}."))
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            out.update(_flatten(v, f"{prefix}{i}."))
    else:
        out[prefix.rstrip(".")] = obj
    return out
