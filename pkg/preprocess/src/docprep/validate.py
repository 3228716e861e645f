"""Schema and invariant checks for emitted parsed-document files."""
from __future__ import annotations

import json
from pathlib import Path


def validate_file(path) -> list[str]:
    """Returns a list of problems; empty means the file is valid."""
    problems = []
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        return [f"unreadable: {exc}"]
    for fld in ("doc_id", "label", "tokens", "dependencies", "roots"):
        if fld not in doc:
            problems.append(f"missing field {fld!r}")
    if problems:
        return problems
    tokens = doc["tokens"]
    if not tokens:
        problems.append("no tokens")
        return problems
    sent_of = {}
    prev_sent = 0
    for pos, tok in enumerate(tokens):
        if tok.get("id") != pos:
            problems.append(f"token id {tok.get('id')} at position {pos}")
        if tok.get("sentence", 0) < prev_sent:
            problems.append(f"sentence index decreases at token {pos}")
        prev_sent = tok.get("sentence", 0)
        sent_of[pos] = tok.get("sentence", 0)
    n = len(tokens)
    for d in doc["dependencies"]:
        h, m = d.get("head"), d.get("dependent")
        if not (isinstance(h, int) and 0 <= h < n):
            problems.append(f"bad head {h}")
        elif not (isinstance(m, int) and 0 <= m < n):
            problems.append(f"bad dependent {m}")
        elif h == m:
            problems.append(f"self-dependency on {h}")
        elif sent_of[h] != sent_of[m]:
            problems.append(f"cross-sentence dependency {h}->{m}")
    n_sent = sent_of[n - 1] + 1
    if len(doc["roots"]) != n_sent:
        problems.append(f"{len(doc['roots'])} roots for {n_sent} sentences")
    else:
        for s, r in enumerate(doc["roots"]):
            if not (isinstance(r, int) and 0 <= r < n and sent_of[r] == s):
                problems.append(f"root {r} invalid for sentence {s}")
    return problems


def validate_output(parsed_dir) -> dict:
    parsed_dir = Path(parsed_dir)
    files = sorted(p for p in parsed_dir.glob("*.json"))
    per_file = {}
    for p in files:
        per_file[str(p)] = validate_file(p)
    failed = {k: v for k, v in per_file.items() if v}
    return {"files": len(files), "passed": len(files) - len(failed),
            "failed": failed}
