"""Bundled desk-scale fixture corpus: 40 training + 10 test documents over
two classes with class-discriminative vocabularies, pre-parsed (tokens,
dependency chains, sentence roots) so the full pipeline runs without any
external parser. Deterministic for a fixed seed."""
from __future__ import annotations

import json
import random
from pathlib import Path

CLASS_WORDS = {
    0: ["alpha", "bravo", "charlie", "delta", "echo"],
    1: ["zulu", "yankee", "xray", "whiskey", "victor"],
}
FILLER = ["the", "a", "on", "near", "stone", "river", "runs", "slowly"]
EMBED_DIM = 16
POS_SLOTS = 12


def fixture_documents(seed: int = 7) -> list[dict]:
    """Parsed-document records: 40 train (20 per class) then 10 test."""
    rng = random.Random(seed)
    docs = []
    plan = [("train", 20), ("test", 5)]
    for split, per_class in plan:
        for label in (0, 1):
            for k in range(per_class):
                doc_id = f"{split}-{label}-{k:02d}"
                docs.append(_make_doc(doc_id, label, split, rng))
    return docs


def _make_doc(doc_id: str, label: int, split: str, rng: random.Random) -> dict:
    tokens, deps, roots = [], [], []
    tid = 0
    for sent in range(2):
        words = [rng.choice(FILLER), rng.choice(CLASS_WORDS[label]),
                 rng.choice(FILLER), rng.choice(CLASS_WORDS[label]),
                 rng.choice(FILLER)]
        start = tid
        for j, w in enumerate(words):
            tokens.append({"id": tid, "text": w, "sentence": sent})
            if j > 0:
                deps.append({"head": tid - 1, "dependent": tid, "relation": "dep"})
            tid += 1
        roots.append(start)
    return {"doc_id": doc_id, "label": label, "split": split,
            "tokens": tokens, "dependencies": deps, "roots": roots}


def fixture_embedding_lines(seed: int = 7) -> list[str]:
    """Embedding file lines; class words carry opposite signs in the first
    four dimensions, fillers are near zero."""
    rng = random.Random(seed + 1)
    lines = []
    for label, words in CLASS_WORDS.items():
        sign = 1.0 if label == 0 else -1.0
        for w in words:
            vec = [sign * 0.5 + rng.uniform(-0.05, 0.05) if d < 4
                   else rng.uniform(-0.05, 0.05) for d in range(EMBED_DIM)]
            lines.append(w + " " + " ".join(f"{v:.6f}" for v in vec))
    for w in FILLER:
        vec = [rng.uniform(-0.05, 0.05) for _ in range(EMBED_DIM)]
        lines.append(w + " " + " ".join(f"{v:.6f}" for v in vec))
    return lines


def write_fixture(out_dir, seed: int = 7) -> dict:
    """Materialize parsed docs, manifest, and embeddings under out_dir."""
    out = Path(out_dir)
    parsed = out / "parsed"
    parsed.mkdir(parents=True, exist_ok=True)
    manifest_path = out / "manifest.jsonl"
    entries = []
    for doc in fixture_documents(seed):
        path = parsed / f"{doc['doc_id']}.json"
        path.write_text(json.dumps(doc, sort_keys=True), encoding="utf-8")
        entries.append({"doc_id": doc["doc_id"], "split": doc["split"],
                        "path": str(path)})
    with open(manifest_path, "w", encoding="utf-8") as fh:
        for e in entries:
            fh.write(json.dumps(e, sort_keys=True) + "\n")
    emb_path = out / "embeddings.txt"
    emb_path.write_text("\n".join(fixture_embedding_lines(seed)) + "\n",
                        encoding="utf-8")
    return {"manifest": str(manifest_path), "embeddings": str(emb_path),
            "parsed_dir": str(parsed)}
