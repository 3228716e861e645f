"""Per-document graph construction, validation, and interchange files.

A document graph has one node per token occurrence (not per unique word).
Dependency edges are undirected and deduplicated; the root words of
adjacent sentences are chained so the document graph is connected whenever
each sentence parse is a tree.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field


class GraphValidationError(ValueError):
    """A graph or its inputs violate a structural invariant."""

    def __init__(self, doc_id: str, message: str):
        self.doc_id = doc_id
        super().__init__(f"doc {doc_id!r}: {message}")


class GraphParseError(ValueError):
    """Interchange bytes could not be decoded into a valid graph."""


class ConfigError(ValueError):
    """A builder was configured with an out-of-range parameter."""


@dataclass(frozen=True)
class Token:
    id: int
    text: str
    sentence_index: int


@dataclass(frozen=True)
class DependencyRecord:
    head: int
    dependent: int
    relation: str = "dep"


@dataclass
class DocumentGraph:
    doc_id: str
    label: int
    tokens: list[Token]
    edges: set[tuple[int, int]]  # (i, j) with i < j
    sentence_roots: list[int]
    # relation labels kept for provenance only; ignored downstream
    relations: dict[tuple[int, int], str] = field(default_factory=dict)

    @property
    def num_tokens(self) -> int:
        return len(self.tokens)

    @property
    def num_sentences(self) -> int:
        if not self.tokens:
            return 0
        return self.tokens[-1].sentence_index + 1

    def degrees(self) -> list[int]:
        deg = [0] * len(self.tokens)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def validate(self) -> None:
        doc = self.doc_id
        if not self.tokens:
            raise GraphValidationError(doc, "document has no tokens")
        for pos, tok in enumerate(self.tokens):
            if tok.id != pos:
                raise GraphValidationError(
                    doc, f"token ids must be consecutive from 0; found {tok.id} at position {pos}")
        prev_sent = 0
        for tok in self.tokens:
            if tok.sentence_index < prev_sent:
                raise GraphValidationError(
                    doc, f"sentence index decreases at token {tok.id}")
            prev_sent = tok.sentence_index
        n = len(self.tokens)
        for edge in self.edges:
            i, j = edge
            if i == j:
                raise GraphValidationError(doc, f"self-loop on token {i}")
            if not (0 <= i < j < n):
                raise GraphValidationError(doc, f"edge {edge} out of range for {n} tokens")
        if self.sentence_roots:
            n_sent = self.num_sentences
            if len(self.sentence_roots) != n_sent:
                raise GraphValidationError(
                    doc, f"{len(self.sentence_roots)} roots for {n_sent} sentences")
            for k, r in enumerate(self.sentence_roots):
                if not (0 <= r < n):
                    raise GraphValidationError(doc, f"root {r} is not a token id")
                if self.tokens[r].sentence_index != k:
                    raise GraphValidationError(
                        doc, f"root {r} does not belong to sentence {k}")
            for k in range(n_sent - 1):
                a, b = self.sentence_roots[k], self.sentence_roots[k + 1]
                if _pair(a, b) not in self.edges:
                    raise GraphValidationError(
                        doc, f"missing chain edge between roots of sentences {k} and {k + 1}")


def _pair(i: int, j: int) -> tuple[int, int]:
    return (i, j) if i < j else (j, i)


def build_dependency_graph(tokens: list[Token], deps: list[DependencyRecord],
                           roots: list[int], doc_id: str, label: int) -> DocumentGraph:
    if not tokens:
        raise GraphValidationError(doc_id, "empty document")
    n = len(tokens)
    sent_of = {t.id: t.sentence_index for t in tokens}
    edges: set[tuple[int, int]] = set()
    relations: dict[tuple[int, int], str] = {}
    for d in deps:
        if not (0 <= d.head < n):
            raise GraphValidationError(doc_id, f"dependency head {d.head} is not a token id")
        if not (0 <= d.dependent < n):
            raise GraphValidationError(doc_id, f"dependent {d.dependent} is not a token id")
        if d.head == d.dependent:
            raise GraphValidationError(doc_id, f"dependency self-loop on token {d.head}")
        if sent_of[d.head] != sent_of[d.dependent]:
            raise GraphValidationError(
                doc_id, f"cross-sentence dependency {d.head}->{d.dependent}")
        p = _pair(d.head, d.dependent)
        edges.add(p)
        relations.setdefault(p, d.relation)
    for k in range(len(roots) - 1):
        edges.add(_pair(roots[k], roots[k + 1]))
    g = DocumentGraph(doc_id=doc_id, label=label, tokens=list(tokens),
                      edges=edges, sentence_roots=list(roots), relations=relations)
    g.validate()
    return g


def build_cooccurrence_graph(tokens: list[Token], window: int,
                             doc_id: str, label: int) -> DocumentGraph:
    if window < 2:
        raise ConfigError(f"co-occurrence window must be >= 2, got {window}")
    if not tokens:
        raise GraphValidationError(doc_id, "empty document")
    n = len(tokens)
    edges = {(i, j) for i in range(n) for j in range(i + 1, min(i + window, n))}
    g = DocumentGraph(doc_id=doc_id, label=label, tokens=list(tokens),
                      edges=edges, sentence_roots=[])
    g.validate()
    return g


# -- interchange ------------------------------------------------------------

def graph_to_dict(g: DocumentGraph) -> dict:
    return {
        "doc_id": g.doc_id,
        "label": g.label,
        "tokens": [{"id": t.id, "text": t.text, "sentence": t.sentence_index}
                   for t in g.tokens],
        "edges": sorted([list(e) for e in g.edges]),
        "sentence_roots": list(g.sentence_roots),
        "relations": {f"{i},{j}": rel for (i, j), rel in sorted(g.relations.items())},
    }


def serialize_graph(g: DocumentGraph) -> bytes:
    g.validate()
    return json.dumps(graph_to_dict(g), sort_keys=True, indent=None).encode("utf-8")


def graph_from_dict(obj: dict) -> DocumentGraph:
    for fld in ("doc_id", "label", "tokens", "edges", "sentence_roots"):
        if fld not in obj:
            raise GraphParseError(f"missing field {fld!r}")
    try:
        tokens = [Token(id=t["id"], text=t["text"], sentence_index=t["sentence"])
                  for t in obj["tokens"]]
    except (KeyError, TypeError) as exc:
        raise GraphParseError(f"malformed token record: {exc}") from exc
    edges = set()
    for e in obj["edges"]:
        if not (isinstance(e, (list, tuple)) and len(e) == 2):
            raise GraphParseError(f"malformed edge {e!r} in field 'edges'")
        edges.add(_pair(int(e[0]), int(e[1])))
    relations = {}
    for key, rel in obj.get("relations", {}).items():
        i, j = key.split(",")
        relations[_pair(int(i), int(j))] = rel
    g = DocumentGraph(doc_id=obj["doc_id"], label=int(obj["label"]), tokens=tokens,
                      edges=edges, sentence_roots=[int(r) for r in obj["sentence_roots"]],
                      relations=relations)
    try:
        g.validate()
    except GraphValidationError as exc:
        raise GraphParseError(str(exc)) from exc
    return g


def parse_graph(data: bytes) -> DocumentGraph:
    try:
        obj = json.loads(data.decode("utf-8"))
    except json.JSONDecodeError as exc:
        raise GraphParseError(f"invalid JSON at offset {exc.pos}: {exc.msg}") from exc
    if not isinstance(obj, dict):
        raise GraphParseError("top-level value must be an object")
    return graph_from_dict(obj)


def read_manifest(path) -> list[dict]:
    """JSON-lines manifest of {doc_id, split, path}."""
    entries = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                entry = json.loads(line)
            except json.JSONDecodeError as exc:
                raise GraphParseError(f"{path}:{lineno}: {exc.msg}") from exc
            for fld in ("doc_id", "split", "path"):
                if fld not in entry:
                    raise GraphParseError(f"{path}:{lineno}: missing field {fld!r}")
            if entry["split"] not in ("train", "test"):
                raise GraphParseError(f"{path}:{lineno}: bad split {entry['split']!r}")
            entries.append(entry)
    return entries
