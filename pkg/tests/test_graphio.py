import json

import pytest

from treetext.graphio import (ConfigError, DependencyRecord, DocumentGraph,
                              GraphParseError, GraphValidationError, Token,
                              build_cooccurrence_graph, build_dependency_graph,
                              parse_graph, read_manifest, serialize_graph)

from conftest import make_graph, random_connected_graph


def toks(words, sentences=None):
    sentences = sentences or [0] * len(words)
    return [Token(id=i, text=w, sentence_index=s)
            for i, (w, s) in enumerate(zip(words, sentences))]


class TestDependencyGraph:
    def test_single_sentence_no_chain_edge(self):
        tokens = toks(["Tom", "chases", "Jerry"])
        deps = [DependencyRecord(1, 0), DependencyRecord(1, 2)]
        g = build_dependency_graph(tokens, deps, [1], "d1", 0)
        assert g.num_tokens == 3
        assert g.edges == {(0, 1), (1, 2)}

    def test_adjacent_sentence_roots_are_chained(self):
        tokens = toks(["a", "b", "c", "d"], [0, 0, 1, 1])
        deps = [DependencyRecord(0, 1), DependencyRecord(2, 3)]
        g = build_dependency_graph(tokens, deps, [0, 2], "d2", 0)
        assert (0, 2) in g.edges

    def test_duplicate_and_reversed_deps_collapse(self):
        tokens = toks(["a", "b"])
        deps = [DependencyRecord(0, 1), DependencyRecord(1, 0)]
        g = build_dependency_graph(tokens, deps, [0], "d3", 0)
        assert g.edges == {(0, 1)}

    def test_nodes_are_occurrences_not_unique_words(self):
        tokens = toks(["the", "cat", "the", "cat"])
        deps = [DependencyRecord(0, 1), DependencyRecord(1, 2), DependencyRecord(2, 3)]
        g = build_dependency_graph(tokens, deps, [0], "d4", 0)
        assert g.num_tokens == 4

    def test_invalid_token_reference(self):
        tokens = toks(["a", "b"])
        with pytest.raises(GraphValidationError, match="d5.*99"):
            build_dependency_graph(tokens, [DependencyRecord(0, 99)], [0], "d5", 0)

    def test_self_loop_dependency_rejected(self):
        tokens = toks(["a", "b"])
        with pytest.raises(GraphValidationError, match="self-loop"):
            build_dependency_graph(tokens, [DependencyRecord(1, 1)], [0], "d6", 0)

    def test_cross_sentence_dependency_rejected(self):
        tokens = toks(["a", "b"], [0, 1])
        with pytest.raises(GraphValidationError, match="cross-sentence"):
            build_dependency_graph(tokens, [DependencyRecord(0, 1)], [0, 1], "d7", 0)

    def test_empty_document_rejected(self):
        with pytest.raises(GraphValidationError, match="empty"):
            build_dependency_graph([], [], [], "d8", 0)

    def test_chained_sentence_trees_are_connected(self):
        # each sentence a chain parse rooted at its first token
        for n_sent in (2, 3, 4):
            tokens, deps, roots = [], [], []
            tid = 0
            for s in range(n_sent):
                start = tid
                for j in range(3):
                    tokens.append(Token(tid, f"w{tid}", s))
                    if j:
                        deps.append(DependencyRecord(tid - 1, tid))
                    tid += 1
                roots.append(start)
            g = build_dependency_graph(tokens, deps, roots, f"c{n_sent}", 0)
            assert _is_connected(g)


def _is_connected(g):
    adj = {i: set() for i in range(g.num_tokens)}
    for a, b in g.edges:
        adj[a].add(b)
        adj[b].add(a)
    seen, stack = {0}, [0]
    while stack:
        for nb in adj[stack.pop()]:
            if nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return len(seen) == g.num_tokens


class TestCooccurrenceGraph:
    def test_window_2_gives_path(self):
        g = build_cooccurrence_graph(toks(["a", "b", "c"]), 2, "c1", 0)
        assert g.edges == {(0, 1), (1, 2)}
        assert g.sentence_roots == []

    def test_window_3_enumeration(self):
        # oracle: all pairs with 0 < |i-j| < 3
        g = build_cooccurrence_graph(toks(["a", "b", "c", "d"]), 3, "c2", 0)
        expect = {(i, j) for i in range(4) for j in range(4)
                  if i < j and j - i < 3}
        assert g.edges == expect == {(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)}

    def test_single_token(self):
        g = build_cooccurrence_graph(toks(["a"]), 5, "c3", 0)
        assert g.num_tokens == 1 and not g.edges

    def test_window_below_2_rejected(self):
        with pytest.raises(ConfigError):
            build_cooccurrence_graph(toks(["a", "b"]), 1, "c4", 0)


class TestInterchange:
    def test_round_trip_identity(self):
        for seed in range(10):
            g = random_connected_graph(5, seed)
            g2 = parse_graph(serialize_graph(g))
            assert g2 == g

    def test_round_trip_with_roots_and_relations(self):
        tokens = toks(["a", "b", "c", "d"], [0, 0, 1, 1])
        deps = [DependencyRecord(0, 1, "nsubj"), DependencyRecord(2, 3, "obj")]
        g = build_dependency_graph(tokens, deps, [0, 2], "rt", 3)
        assert parse_graph(serialize_graph(g)) == g

    def test_missing_field_named(self):
        obj = json.loads(serialize_graph(make_graph(3, [(0, 1)])))
        del obj["edges"]
        with pytest.raises(GraphParseError, match="edges"):
            parse_graph(json.dumps(obj).encode())

    def test_out_of_range_edge_rejected(self):
        obj = json.loads(serialize_graph(make_graph(3, [(0, 1)])))
        obj["edges"].append([0, 99])
        with pytest.raises(GraphParseError, match="99"):
            parse_graph(json.dumps(obj).encode())

    def test_malformed_json_offset(self):
        with pytest.raises(GraphParseError, match="offset"):
            parse_graph(b"{not json")

    def test_edges_stored_smaller_first_sorted(self):
        g = make_graph(4, [(3, 1), (2, 0), (1, 0)])
        obj = json.loads(serialize_graph(g))
        assert obj["edges"] == sorted(obj["edges"])
        assert all(a < b for a, b in obj["edges"])


class TestManifest:
    def test_read_manifest(self, tmp_path):
        p = tmp_path / "m.jsonl"
        p.write_text('{"doc_id": "a", "split": "train", "path": "x"}\n'
                     '{"doc_id": "b", "split": "test", "path": "y"}\n')
        entries = read_manifest(p)
        assert [e["doc_id"] for e in entries] == ["a", "b"]

    def test_bad_split_rejected(self, tmp_path):
        p = tmp_path / "m.jsonl"
        p.write_text('{"doc_id": "a", "split": "dev", "path": "x"}\n')
        with pytest.raises(GraphParseError, match="split"):
            read_manifest(p)
