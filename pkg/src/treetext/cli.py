"""Command-line pipeline. Exit codes: 0 success, 1 runtime failure, 2 usage."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import entropy, graphio, learner, pipeline
from .fixtures import write_fixture

HEIGHT_RANGE = (2, 12)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="treetext",
                                description="Document graphs, entropy-minimized "
                                            "coding trees, and tree classification")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("build-graphs", help="parsed documents -> graph files")
    g.add_argument("--manifest", required=True)
    g.add_argument("--mode", required=True, choices=["dependency", "cooccurrence"])
    g.add_argument("--window", type=int, default=3)
    g.add_argument("--out-dir", required=True)
    g.add_argument("--workers", type=int, default=1)
    g.set_defaults(func=cmd_build_graphs)

    t = sub.add_parser("build-trees", help="graph files -> coding tree files")
    t.add_argument("--graphs-manifest", required=True)
    t.add_argument("--height", type=int, required=True)
    t.add_argument("--method", default="sema", choices=["sema", "random"])
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out-dir", required=True)
    t.add_argument("--workers", type=int, default=1)
    t.add_argument("--allow-any-height", action="store_true")
    t.set_defaults(func=cmd_build_trees)

    for name in ("train", "eval"):
        c = sub.add_parser(name)
        c.add_argument("--graphs-manifest", required=True)
        c.add_argument("--trees-dir", required=True)
        c.add_argument("--embeddings", required=True)
        c.add_argument("--pos-slots", type=int, default=350)
        c.add_argument("--seed", type=int, default=0)
        c.add_argument("--format", default="json", choices=["json", "tsv"])
        if name == "train":
            c.add_argument("--height", type=int, default=2)
            c.add_argument("--hidden", type=int, default=96)
            c.add_argument("--pool", default="mean", choices=["sum", "mean"])
            c.add_argument("--lr", type=float, default=1e-3)
            c.add_argument("--dropout", type=float, default=0.5)
            c.add_argument("--batch", type=int, default=4)
            c.add_argument("--epochs", type=int, default=200)
            c.add_argument("--patience", type=int, default=10)
            c.add_argument("--runs", type=int, default=1)
            c.add_argument("--out-dir", required=True)
            c.set_defaults(func=cmd_train)
        else:
            c.add_argument("--checkpoint", required=True)
            c.set_defaults(func=cmd_eval)

    s = sub.add_parser("sweep", help="train across a range of tree heights")
    s.add_argument("--graphs-manifest", required=True)
    s.add_argument("--embeddings", required=True)
    s.add_argument("--pos-slots", type=int, default=350)
    s.add_argument("--heights", type=int, nargs="+", default=[2, 4, 6, 8, 10, 12])
    s.add_argument("--method", default="sema", choices=["sema", "random"])
    s.add_argument("--hidden", type=int, default=96)
    s.add_argument("--pool", default="mean", choices=["sum", "mean"])
    s.add_argument("--dropout", type=float, default=0.5)
    s.add_argument("--epochs", type=int, default=200)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out-dir", required=True)
    s.add_argument("--format", default="json", choices=["json", "tsv"])
    s.set_defaults(func=cmd_sweep)

    a = sub.add_parser("ablate-rt", help="entropy-minimized vs random trees")
    a.add_argument("--graphs-manifest", required=True)
    a.add_argument("--embeddings", required=True)
    a.add_argument("--pos-slots", type=int, default=350)
    a.add_argument("--height", type=int, default=2)
    a.add_argument("--hidden", type=int, default=96)
    a.add_argument("--dropout", type=float, default=0.5)
    a.add_argument("--epochs", type=int, default=200)
    a.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    a.add_argument("--out-dir", required=True)
    a.add_argument("--format", default="json", choices=["json", "tsv"])
    a.set_defaults(func=cmd_ablate)

    r = sub.add_parser("report", help="parameter and multiply-add counts")
    r.add_argument("--checkpoint", required=True)
    r.add_argument("--tree-nodes", type=int, default=100,
                   help="node count used for the per-document cost estimate")
    r.set_defaults(func=cmd_report)

    f = sub.add_parser("make-fixture", help="write the bundled fixture corpus")
    f.add_argument("--out-dir", required=True)
    f.add_argument("--seed", type=int, default=7)
    f.set_defaults(func=cmd_make_fixture)
    return p


def cmd_build_graphs(args) -> int:
    written, errors = pipeline.build_graphs(args.manifest, args.mode, args.out_dir,
                                            window=args.window, workers=args.workers)
    print(f"wrote {len(written)} graph files to {args.out_dir}")
    if errors:
        for e in errors:
            print(f"error: doc {e['doc_id']}: {e['error']}", file=sys.stderr)
        return 1
    return 0


def cmd_build_trees(args) -> int:
    lo, hi = HEIGHT_RANGE
    if not (lo <= args.height <= hi):
        if not args.allow_any_height:
            print(f"height {args.height} outside [{lo}, {hi}]; "
                  "pass --allow-any-height to proceed", file=sys.stderr)
            return 2
        print(f"warning: height {args.height} outside [{lo}, {hi}]", file=sys.stderr)
    written, errors = pipeline.build_trees(args.graphs_manifest, args.height,
                                           args.method, args.out_dir,
                                           seed=args.seed, workers=args.workers)
    if written:
        mean_h = sum(e["entropy_bits"] for e in written) / len(written)
        print(f"wrote {len(written)} tree files to {args.out_dir} "
              f"(mean entropy {mean_h:.4f} bits)")
    if errors:
        for e in errors:
            print(f"error: doc {e['doc_id']}: {e['error']}", file=sys.stderr)
        return 1
    return 0


def _make_config(args) -> learner.TrainConfig:
    return learner.TrainConfig(height=args.height, hidden=args.hidden,
                               pool=args.pool, lr=args.lr, dropout=args.dropout,
                               batch=args.batch, seed=args.seed,
                               max_epochs=args.epochs, patience=args.patience)


def cmd_train(args) -> int:
    dataset = pipeline.load_dataset(args.graphs_manifest, args.trees_dir,
                                    args.embeddings, args.pos_slots, args.seed)
    config = _make_config(args)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.runs > 1:
        result = pipeline.run_multi(dataset, config, args.runs)
    else:
        result = pipeline.run_training(dataset, config)
        with open(out / "history.jsonl", "w", encoding="utf-8") as fh:
            for row in result["history"]:
                fh.write(json.dumps(row, sort_keys=True) + "\n")
    learner.save_checkpoint(result["model"], out / "checkpoint.npz", config)
    report_text = pipeline.format_report(result["report"], args.format)
    (out / f"report.{args.format}").write_text(report_text + "\n", encoding="utf-8")
    print(report_text)
    return 0


def cmd_eval(args) -> int:
    model, _ = learner.load_checkpoint(args.checkpoint)
    dataset = pipeline.load_dataset(args.graphs_manifest, args.trees_dir,
                                    args.embeddings, args.pos_slots, args.seed)
    report = {"param_count": learner.count_params(model)}
    for split, docs in dataset["splits"].items():
        if docs:
            report[f"{split}_acc"] = learner.evaluate(model, docs)
    print(pipeline.format_report(report, args.format))
    return 0


def cmd_sweep(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    per_height = []
    for h in args.heights:
        tree_dir = out / f"trees-h{h}"
        pipeline.build_trees(args.graphs_manifest, h, args.method, tree_dir,
                             seed=args.seed)
        dataset = pipeline.load_dataset(args.graphs_manifest, tree_dir,
                                        args.embeddings, args.pos_slots, args.seed)
        config = learner.TrainConfig(height=h, hidden=args.hidden, pool=args.pool,
                                     dropout=args.dropout, seed=args.seed,
                                     max_epochs=args.epochs)
        result = pipeline.run_training(dataset, config)
        row = dict(result["report"])
        row["height"] = h
        per_height.append(row)
    report = {"per_height": per_height, "method": args.method}
    report_text = pipeline.format_report(report, args.format)
    (out / f"sweep.{args.format}").write_text(report_text + "\n", encoding="utf-8")
    print(report_text)
    return 0


def cmd_ablate(args) -> int:
    config = learner.TrainConfig(height=args.height, hidden=args.hidden,
                                 dropout=args.dropout, seed=args.seeds[0],
                                 max_epochs=args.epochs)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = pipeline.ablate_random_trees(args.graphs_manifest, args.embeddings,
                                          config, args.pos_slots, args.seeds, out)
    report_text = pipeline.format_report(report, args.format)
    (out / f"ablation.{args.format}").write_text(report_text + "\n", encoding="utf-8")
    print(report_text)
    return 0


def cmd_report(args) -> int:
    model, meta = learner.load_checkpoint(args.checkpoint)
    # synthetic chain-shaped tree of the requested size for the cost estimate
    n_leaves = max(1, args.tree_nodes - model.height)
    import math as _math
    from .graphio import Token, build_cooccurrence_graph
    toks = [Token(id=i, text=f"t{i}", sentence_index=0) for i in range(n_leaves)]
    g = build_cooccurrence_graph(toks, 2, "synthetic", 0) if n_leaves > 1 else None
    if g is not None:
        tree = entropy.sema(g, model.height)
        flops = learner.forward_flops(tree, model.input_dim, model.hidden,
                                      model.n_classes)
        node_count = len(tree.nodes)
    else:
        flops, node_count = 0, 1
    report = {"param_count": learner.count_params(model),
              "model": meta["model"],
              "per_document_multiply_adds": flops,
              "tree_node_count": node_count}
    print(json.dumps(report, sort_keys=True, indent=2))
    return 0


def cmd_make_fixture(args) -> int:
    paths = write_fixture(args.out_dir, seed=args.seed)
    print(json.dumps(paths, sort_keys=True, indent=2))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (graphio.ConfigError,) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
