"""Pluggable sentence-split/tokenize/parse backends.

A backend turns raw text into sentences of (tokens, dependency arcs with
sentence-local indices, root index). The default ChainParser is a
deterministic heuristic with no model downloads: regex sentence splitting,
regex tokenization, and chain dependencies rooted at the first token. A
spaCy backend is provided for real parses when a model is installed.
"""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass

log = logging.getLogger(__name__)


@dataclass
class ParsedSentence:
    tokens: list[str]
    # (head_local, dependent_local, relation), indices within the sentence
    arcs: list[tuple[int, int, str]]
    root: int  # sentence-local index


_SENT_SPLIT = re.compile(r"(?<=[.!?])\s+")
_TOKEN = re.compile(r"\w+(?:'\w+)?|[^\w\s]")


class ChainParser:
    """Heuristic default: each token depends on its predecessor; the first
    token is the sentence root. Structurally a valid projective tree."""

    name = "chain"

    def parse(self, text: str) -> list[ParsedSentence]:
        sentences = []
        for chunk in _SENT_SPLIT.split(text.strip()):
            tokens = _TOKEN.findall(chunk)
            if not tokens:
                continue
            arcs = [(i - 1, i, "dep") for i in range(1, len(tokens))]
            sentences.append(ParsedSentence(tokens=tokens, arcs=arcs, root=0))
        return sentences


class SpacyParser:
    """Real dependency parses via an installed spaCy pipeline."""

    name = "spacy"

    def __init__(self, model: str = "en_core_web_sm"):
        import spacy  # deferred; optional dependency
        self.nlp = spacy.load(model)

    def parse(self, text: str) -> list[ParsedSentence]:
        sentences = []
        for sent in self.nlp(text.strip()).sents:
            tokens = [t.text for t in sent]
            local = {t.i: k for k, t in enumerate(sent)}
            arcs, roots = [], []
            for t in sent:
                if t.head is t or t.dep_ == "ROOT":
                    roots.append(local[t.i])
                else:
                    arcs.append((local[t.head.i], local[t.i], t.dep_))
            if not tokens:
                continue
            if len(roots) > 1:
                # parser artifact; downstream accepts exactly one root
                log.warning("sentence %r has %d roots; keeping the first",
                            sent.text[:40], len(roots))
            sentences.append(ParsedSentence(tokens=tokens, arcs=arcs,
                                            root=roots[0] if roots else 0))
        return sentences


_BACKENDS = {"chain": ChainParser, "spacy": SpacyParser}


def get_backend(name: str, **kwargs):
    if name not in _BACKENDS:
        raise ValueError(f"unknown parser backend {name!r}; "
                         f"choose from {sorted(_BACKENDS)}")
    return _BACKENDS[name](**kwargs)
