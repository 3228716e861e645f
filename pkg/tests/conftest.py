import random

import pytest

from treetext.graphio import DocumentGraph, Token


def make_graph(n, edges, doc_id="g", label=0, words=None, roots=None):
    words = words or [f"w{i}" for i in range(n)]
    tokens = [Token(id=i, text=words[i], sentence_index=0) for i in range(n)]
    return DocumentGraph(doc_id=doc_id, label=label, tokens=tokens,
                         edges={tuple(sorted(e)) for e in edges},
                         sentence_roots=roots or [])


def random_connected_graph(n, seed, extra_prob=0.3):
    rng = random.Random(seed)
    edges = set()
    for i in range(1, n):
        edges.add((rng.randrange(i), i))
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < extra_prob:
                edges.add((i, j))
    return make_graph(n, edges, doc_id=f"rand{seed}")


@pytest.fixture(scope="session")
def fixture_corpus(tmp_path_factory):
    """Materialized fixture corpus with graphs and sema trees at height 2."""
    from treetext import pipeline
    from treetext.fixtures import write_fixture

    root = tmp_path_factory.mktemp("fixture-corpus")
    paths = write_fixture(root)
    written, errors = pipeline.build_graphs(paths["manifest"], "dependency",
                                            root / "graphs")
    assert not errors
    written, errors = pipeline.build_trees(root / "graphs" / "graphs.manifest.jsonl",
                                           2, "sema", root / "trees")
    assert not errors
    return {"root": root, **paths,
            "graphs_manifest": str(root / "graphs" / "graphs.manifest.jsonl"),
            "trees_dir": str(root / "trees")}
