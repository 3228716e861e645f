"""docprep CLI: parse a raw corpus, validate emitted files."""
from __future__ import annotations

import argparse
import json
import sys

from .corpus import parse_corpus
from .validate import validate_output


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="docprep")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("parse", help="raw JSON-lines corpus -> parsed files")
    c.add_argument("--input", required=True,
                   help="JSON-lines of {doc_id, label, split, text}")
    c.add_argument("--out-dir", required=True)
    c.add_argument("--backend", default="chain", choices=["chain", "spacy"])
    c.add_argument("--force", action="store_true",
                   help="re-parse documents whose output already exists")
    c.add_argument("--workers", type=int, default=1)
    c.set_defaults(func=cmd_parse)

    v = sub.add_parser("validate", help="schema-check emitted parsed files")
    v.add_argument("--dir", required=True)
    v.set_defaults(func=cmd_validate)
    return p


def cmd_parse(args) -> int:
    result = parse_corpus(args.input, args.out_dir, backend=args.backend,
                          force=args.force, workers=args.workers)
    print(f"parsed {len(result['written'])} documents "
          f"({result['skipped']} skipped, {len(result['errors'])} errors)")
    for e in result["errors"]:
        print(f"error: doc {e['doc_id']}: {e['error']}", file=sys.stderr)
    return 1 if result["errors"] else 0


def cmd_validate(args) -> int:
    report = validate_output(args.dir)
    print(json.dumps(report, sort_keys=True, indent=2))
    if report["files"] == 0 or report["failed"]:
        return 1
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
