"""M2/TSV parsing, serialization round-trips, splitting, judgment loading."""
from __future__ import annotations

import json

import numpy as np
import pytest

from gecval.corpus import (
    JudgmentSet,
    PairwiseJudgment,
    Sentence,
    SplitSpec,
    judgments_from_dict,
    load_judgments,
    parse_m2,
    parse_parallel_tsv,
    serialize_m2,
    serialize_parallel_tsv,
    split_dataset,
)
from gecval.errors import EditError, ParseError, SchemaError

M2_SIMPLE = """S I like cats .
A 1 2|||R:VERB|||love|||REQUIRED|||-NONE-|||0
"""

M2_NOOP = """S I like cats .
A -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||0
"""

M2_MULTI = """S the cat sat
A 0 1|||R:DET|||The|||REQUIRED|||-NONE-|||0
A 3 3|||M:PUNCT|||.|||REQUIRED|||-NONE-|||0
A 1 2|||R:NOUN|||dog|||REQUIRED|||-NONE-|||1
"""


class TestSentence:
    def test_from_text(self):
        s = Sentence.from_text("I like cats .", id="x")
        assert s.tokens == ("I", "like", "cats", ".")
        assert s.text == "I like cats ."

    def test_empty_allowed(self):
        assert Sentence(()).tokens == ()

    def test_whitespace_token_rejected(self):
        with pytest.raises(ValueError):
            Sentence(("a b",))
        with pytest.raises(ValueError):
            Sentence(("",))


class TestParseM2:
    def test_single_edit(self):
        (pair,) = parse_m2(M2_SIMPLE)
        assert pair.source.tokens == ("I", "like", "cats", ".")
        assert pair.corrections[0].tokens == ("I", "love", "cats", ".")
        assert len(pair.annotator_edits[0]) == 1
        assert pair.annotator_edits[0][0].etype == "R:VERB"

    def test_no_a_lines(self):
        (pair,) = parse_m2("S I like cats .\n")
        assert pair.corrections[0].tokens == pair.source.tokens
        assert pair.annotator_edits == ((),)

    def test_noop(self):
        (pair,) = parse_m2(M2_NOOP)
        assert pair.corrections[0].tokens == pair.source.tokens
        assert pair.annotator_edits == ((),)

    def test_multiple_annotators(self):
        (pair,) = parse_m2(M2_MULTI)
        assert len(pair.corrections) == 2
        assert pair.corrections[0].tokens == ("The", "cat", "sat", ".")
        assert pair.corrections[1].tokens == ("the", "dog", "sat")

    def test_multiple_blocks(self):
        pairs = parse_m2(M2_SIMPLE + "\n" + M2_NOOP)
        assert len(pairs) == 2

    def test_malformed_line_has_line_number(self):
        with pytest.raises(ParseError, match="line 2"):
            parse_m2("S a b\nnot an A line\n")

    def test_bad_span_is_structural_error(self):
        with pytest.raises(EditError, match="outside source"):
            parse_m2("S a b\nA 5 6|||R:X|||z|||REQUIRED|||-NONE-|||0\n")

    def test_too_few_fields(self):
        with pytest.raises(ParseError, match="fields"):
            parse_m2("S a b\nA 0 1|||R:X|||z\n")

    def test_overlapping_edits_rejected(self):
        text = (
            "S a b c\n"
            "A 0 2|||R:X|||z|||REQUIRED|||-NONE-|||0\n"
            "A 1 3|||R:X|||y|||REQUIRED|||-NONE-|||0\n"
        )
        with pytest.raises(EditError, match="overlap"):
            parse_m2(text)


class TestSerializeM2:
    def test_roundtrip_simple(self):
        pairs = parse_m2(M2_SIMPLE)
        assert parse_m2(serialize_m2(pairs)) == pairs

    def test_roundtrip_multi_annotator(self):
        pairs = parse_m2(M2_MULTI)
        assert parse_m2(serialize_m2(pairs)) == pairs

    def test_roundtrip_noop_normalizes_to_bare_block(self):
        pairs = parse_m2(M2_NOOP)
        text = serialize_m2(pairs)
        assert "noop" not in text  # single unchanged correction: S line only
        assert parse_m2(text) == pairs

    def test_noop_kept_for_multi_annotator_identity(self):
        text = (
            "S a b\n"
            "A -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||0\n"
            "A 0 1|||R:X|||c|||REQUIRED|||-NONE-|||1\n"
        )
        pairs = parse_m2(text)
        out = serialize_m2(pairs)
        assert "noop" in out
        assert parse_m2(out) == pairs

    def test_serializes_computed_edits_for_tsv_pairs(self):
        pairs = parse_parallel_tsv("I like cats .\tI dislike cats .\n")
        text = serialize_m2(pairs)
        assert text.startswith("S I like cats .")
        assert "|||R:" in text

    def test_roundtrip_fixture_corpus(self, roundtrip_corpus):
        sample = roundtrip_corpus[:100]
        once = serialize_m2(sample)
        reparsed = parse_m2(once)
        assert serialize_m2(reparsed) == once
        for orig, new in zip(sample, reparsed):
            assert orig.source.tokens == new.source.tokens
            assert orig.corrections[0].tokens == new.corrections[0].tokens


class TestParseTsv:
    def test_identity(self):
        (pair,) = parse_parallel_tsv("a b\ta b\n")
        assert pair.source.tokens == pair.corrections[0].tokens
        assert pair.annotator_edits is None

    def test_single_pair(self):
        (pair,) = parse_parallel_tsv("I like cats .\tI dislike cats .\n")
        assert len(pair.corrections) == 1

    def test_multiple_corrections(self):
        (pair,) = parse_parallel_tsv("a\tb\tc\n")
        assert len(pair.corrections) == 2

    def test_one_field_is_error(self):
        with pytest.raises(ParseError, match="line 1"):
            parse_parallel_tsv("a b\n")

    def test_serialize_roundtrip(self):
        text = "a b\tb a\nx\ty z\n"
        assert serialize_parallel_tsv(parse_parallel_tsv(text)) == text


class TestSplitDataset:
    def test_8_1_1_on_ten(self):
        pairs = parse_parallel_tsv("\n".join(f"w{i}\tw{i}" for i in range(10)) + "\n")
        train, dev, devtest = split_dataset(pairs, SplitSpec((0.8, 0.1, 0.1), seed=0))
        assert (len(train), len(dev), len(devtest)) == (8, 1, 1)

    def test_all_train(self):
        pairs = parse_parallel_tsv("a\ta\nb\tb\n")
        train, dev, devtest = split_dataset(pairs, SplitSpec((1.0, 0.0, 0.0), seed=1))
        assert len(train) == 2 and not dev and not devtest

    def test_deterministic(self):
        pairs = parse_parallel_tsv("\n".join(f"w{i}\tw{i}" for i in range(23)) + "\n")
        spec = SplitSpec((0.8, 0.1, 0.1), seed=5)
        assert split_dataset(pairs, spec) == split_dataset(pairs, spec)

    def test_partition_property(self):
        pairs = parse_parallel_tsv("\n".join(f"w{i}\tw{i}" for i in range(57)) + "\n")
        rng = np.random.default_rng(0)
        for _ in range(20):
            seed = int(rng.integers(0, 10_000))
            train, dev, devtest = split_dataset(pairs, SplitSpec((0.6, 0.2, 0.2), seed=seed))
            ids = sorted(p.source.id for p in train + dev + devtest)
            assert ids == sorted(p.source.id for p in pairs)

    def test_remainder_goes_to_train(self):
        pairs = parse_parallel_tsv("\n".join(f"w{i}\tw{i}" for i in range(11)) + "\n")
        train, dev, devtest = split_dataset(pairs, SplitSpec((0.8, 0.1, 0.1), seed=0))
        assert (len(train), len(dev), len(devtest)) == (9, 1, 1)

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError):
            split_dataset([], SplitSpec())

    def test_bad_ratios_rejected(self):
        with pytest.raises(ValueError):
            SplitSpec((0.5, 0.1, 0.1))


def _judgment_doc(n_systems=2):
    systems = [f"sys{i}" for i in range(n_systems)]
    return {
        "sources": [{"id": "s1", "tokens": ["a", "b"]}],
        "systems": systems,
        "hypotheses": {"s1": {s: ["a", "b"] for s in systems}},
        "human_pairwise": [
            {"source": "s1", "a": systems[0], "b": systems[1], "verdict": "a"}
        ],
    }


class TestJudgments:
    def test_minimal_valid(self, tmp_path):
        path = tmp_path / "j.json"
        path.write_text(json.dumps(_judgment_doc()), encoding="utf-8")
        judgments = load_judgments(path)
        assert judgments.systems == ("sys0", "sys1")
        assert judgments.hypothesis("s1", "sys0").tokens == ("a", "b")
        assert judgments.human_pairwise[0].verdict == "a"

    def test_unknown_system_rejected(self):
        doc = _judgment_doc()
        doc["human_pairwise"][0]["a"] = "X"
        with pytest.raises(SchemaError, match="X"):
            judgments_from_dict(doc)

    def test_unknown_source_rejected(self):
        doc = _judgment_doc()
        doc["human_pairwise"][0]["source"] = "nope"
        with pytest.raises(SchemaError, match="nope"):
            judgments_from_dict(doc)

    def test_self_comparison_rejected(self):
        doc = _judgment_doc()
        doc["human_pairwise"][0]["b"] = doc["human_pairwise"][0]["a"]
        with pytest.raises(SchemaError):
            judgments_from_dict(doc)

    def test_twelve_systems(self):
        doc = _judgment_doc(n_systems=12)
        judgments = judgments_from_dict(doc)
        assert len(judgments.systems) == 12

    def test_direct_construction_validates(self):
        with pytest.raises(SchemaError):
            JudgmentSet(
                sources=(Sentence(("a",), id="s"),),
                systems=("x",),
                hypotheses={},
                human_pairwise=(PairwiseJudgment("s", "x", "y", "a"),),
            )
