"""Batch corpus parsing: raw labeled docs in, interchange files out.

Input is JSON-lines of {doc_id, label, split, text}. Each document becomes
one parsed file {doc_id, label, tokens, dependencies, roots} with
document-level token ids, plus a manifest of {doc_id, split, path}.
Re-runs skip documents whose output already exists unless forced; parse
failures go to an errors file and the run continues.
"""
from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path


def parse_document(doc: dict, backend) -> dict:
    sentences = backend.parse(doc["text"])
    if not sentences:
        raise ValueError(f"doc {doc['doc_id']!r}: no tokens after parsing")
    tokens, deps, roots = [], [], []
    offset = 0
    for s_idx, sent in enumerate(sentences):
        for k, word in enumerate(sent.tokens):
            tokens.append({"id": offset + k, "text": word, "sentence": s_idx})
        for head, dep, rel in sent.arcs:
            deps.append({"head": offset + head, "dependent": offset + dep,
                         "relation": rel})
        roots.append(offset + sent.root)
        offset += len(sent.tokens)
    return {"doc_id": doc["doc_id"], "label": int(doc["label"]),
            "tokens": tokens, "dependencies": deps, "roots": roots}


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _parse_one(args):
    doc, backend_name, out_dir, force = args
    from .backends import get_backend
    path = Path(out_dir) / f"{doc['doc_id']}.json"
    try:
        if path.exists() and not force:
            return {"doc_id": doc["doc_id"], "split": doc.get("split", "train"),
                    "path": str(path), "skipped": True}, None
        parsed = parse_document(doc, get_backend(backend_name))
        _atomic_write(path, json.dumps(parsed, sort_keys=True))
        return {"doc_id": doc["doc_id"], "split": doc.get("split", "train"),
                "path": str(path)}, None
    except Exception as exc:
        return None, {"doc_id": doc.get("doc_id"), "error": str(exc)}


def read_raw(input_path) -> list[dict]:
    docs = []
    with open(input_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            for fld in ("doc_id", "label", "text"):
                if fld not in doc:
                    raise ValueError(f"{input_path}:{lineno}: missing field {fld!r}")
            docs.append(doc)
    return docs


def parse_corpus(input_path, out_dir, backend: str = "chain",
                 force: bool = False, workers: int = 1) -> dict:
    docs = read_raw(input_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(doc, backend, str(out), force) for doc in docs]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_parse_one, jobs))
    else:
        results = [_parse_one(j) for j in jobs]
    written = [ok for ok, _ in results if ok]
    errors = [err for _, err in results if err]
    manifest = out / "manifest.jsonl"
    _atomic_write(manifest, "".join(
        json.dumps({k: e[k] for k in ("doc_id", "split", "path")},
                   sort_keys=True) + "\n" for e in written))
    if errors:
        _atomic_write(out / "errors.jsonl", "".join(
            json.dumps(e, sort_keys=True) + "\n" for e in errors))
    return {"written": written, "errors": errors,
            "skipped": sum(1 for e in written if e.get("skipped"))}
