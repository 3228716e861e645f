import json
from pathlib import Path

import pytest

from docprep.backends import ChainParser, get_backend
from docprep.corpus import parse_corpus, parse_document, read_raw
from docprep.validate import validate_file, validate_output


def write_corpus(tmp_path, docs):
    p = tmp_path / "docs.jsonl"
    p.write_text("\n".join(json.dumps(d) for d in docs) + "\n")
    return p


SAMPLE = [
    {"doc_id": "a", "label": 0, "split": "train",
     "text": "Tom chases Jerry. Jerry hides fast."},
    {"doc_id": "b", "label": 1, "split": "test",
     "text": "The river runs slowly."},
]


class TestChainParser:
    def test_sentence_split_and_tokens(self):
        sents = ChainParser().parse("Tom chases Jerry. Jerry hides!")
        assert len(sents) == 2
        assert sents[0].tokens == ["Tom", "chases", "Jerry", "."]
        assert sents[0].root == 0
        # a chain: every non-root token has its predecessor as head
        assert sents[0].arcs == [(0, 1, "dep"), (1, 2, "dep"), (2, 3, "dep")]

    def test_punctuation_kept_as_tokens(self):
        sents = ChainParser().parse("Hello, world.")
        assert sents[0].tokens == ["Hello", ",", "world", "."]

    def test_unknown_backend(self):
        with pytest.raises(ValueError, match="backend"):
            get_backend("nope")


class TestParseDocument:
    def test_document_level_ids_and_roots(self):
        doc = parse_document(SAMPLE[0], ChainParser())
        ids = [t["id"] for t in doc["tokens"]]
        assert ids == list(range(len(ids)))
        assert len(doc["roots"]) == 2
        sentences = {t["id"]: t["sentence"] for t in doc["tokens"]}
        for s, r in enumerate(doc["roots"]):
            assert sentences[r] == s
        for d in doc["dependencies"]:
            assert sentences[d["head"]] == sentences[d["dependent"]]

    def test_no_silent_token_drops(self):
        doc = parse_document(SAMPLE[0], ChainParser())
        parsed = ChainParser().parse(SAMPLE[0]["text"])
        assert len(doc["tokens"]) == sum(len(s.tokens) for s in parsed)

    def test_empty_text_rejected(self):
        with pytest.raises(ValueError, match="no tokens"):
            parse_document({"doc_id": "x", "label": 0, "text": "   "},
                           ChainParser())


class TestParseCorpus:
    def test_writes_files_and_manifest(self, tmp_path):
        inp = write_corpus(tmp_path, SAMPLE)
        result = parse_corpus(inp, tmp_path / "out")
        assert len(result["written"]) == 2 and not result["errors"]
        manifest = [json.loads(l) for l in
                    (tmp_path / "out" / "manifest.jsonl").read_text().splitlines()]
        assert {e["doc_id"] for e in manifest} == {"a", "b"}
        assert all(Path(e["path"]).exists() for e in manifest)

    def test_idempotent_rerun(self, tmp_path):
        inp = write_corpus(tmp_path, SAMPLE)
        parse_corpus(inp, tmp_path / "out")
        mtimes = {p: p.stat().st_mtime_ns
                  for p in (tmp_path / "out").glob("*.json")}
        result = parse_corpus(inp, tmp_path / "out")
        assert result["skipped"] == 2
        assert all(p.stat().st_mtime_ns == m for p, m in mtimes.items())

    def test_force_rewrites(self, tmp_path):
        inp = write_corpus(tmp_path, SAMPLE)
        parse_corpus(inp, tmp_path / "out")
        result = parse_corpus(inp, tmp_path / "out", force=True)
        assert result["skipped"] == 0

    def test_failures_recorded_and_run_continues(self, tmp_path):
        docs = SAMPLE + [{"doc_id": "bad", "label": 0, "split": "train",
                          "text": ""}]
        inp = write_corpus(tmp_path, docs)
        result = parse_corpus(inp, tmp_path / "out")
        assert len(result["written"]) == 2
        assert result["errors"][0]["doc_id"] == "bad"
        assert (tmp_path / "out" / "errors.jsonl").exists()

    def test_missing_field_rejected(self, tmp_path):
        inp = write_corpus(tmp_path, [{"doc_id": "a", "label": 0}])
        with pytest.raises(ValueError, match="text"):
            read_raw(inp)


class TestValidate:
    def test_clean_dir_all_pass(self, tmp_path):
        inp = write_corpus(tmp_path, SAMPLE)
        parse_corpus(inp, tmp_path / "out")
        report = validate_output(tmp_path / "out")
        assert report["files"] == 2 and report["passed"] == 2

    def test_corrupted_file_named(self, tmp_path):
        inp = write_corpus(tmp_path, SAMPLE)
        parse_corpus(inp, tmp_path / "out")
        bad = tmp_path / "out" / "a.json"
        doc = json.loads(bad.read_text())
        doc["dependencies"][0]["head"] = 99
        bad.write_text(json.dumps(doc))
        report = validate_output(tmp_path / "out")
        assert str(bad) in report["failed"]

    def test_empty_dir(self, tmp_path):
        report = validate_output(tmp_path)
        assert report["files"] == 0

    def test_validate_file_missing_field(self, tmp_path):
        p = tmp_path / "x.json"
        p.write_text(json.dumps({"doc_id": "x"}))
        assert any("missing" in msg for msg in validate_file(p))
