"""Edit impacts and ordered pair generation."""
from __future__ import annotations

import itertools

import numpy as np
import pytest

from gecval.align import Edit, apply_edits, edits_from_pair
from gecval.corpus import ParallelPair, Sentence, parse_parallel_tsv
from gecval.encoder import EncoderConfig, UNK_TOKEN, build_vocab, new_checkpoint, similarity
from gecval.impact import (
    PairExample,
    build_pair_dataset,
    compute_impacts,
    edit_impact,
    generate_pairs,
    read_pair_dataset,
    write_pair_dataset,
)

from conftest import CLEAN_TOKENS, NOISY_TOKENS


def _fixture_pair() -> ParallelPair:
    return ParallelPair(
        source=Sentence(tuple(NOISY_TOKENS), id="fx"),
        corrections=(Sentence(tuple(CLEAN_TOKENS), id="fx.0"),),
    )


def _checkpoint(seed=0, depth=1, dim=8):
    vocab = build_vocab(
        [
            Sentence(tuple(NOISY_TOKENS)),
            Sentence(tuple(CLEAN_TOKENS)),
            Sentence(("I", "like", "dislike", "love", "cats")),
        ]
    )
    return new_checkpoint(EncoderConfig(vocab=vocab, dim=dim, depth=depth, seed=seed))


class TestEditImpact:
    def test_single_edit_impact_is_one_minus_similarity(self):
        ckpt = _checkpoint()
        src = Sentence(("I", "like", "cats", "."))
        corr = Sentence(("I", "love", "cats", "."))
        edits = edits_from_pair(src, corr)
        assert len(edits) == 1
        impact = edit_impact(ckpt, src, corr, edits, edits[0])
        expected = max(0.0, 1.0 - similarity(ckpt, corr, src))
        assert impact == pytest.approx(expected, abs=1e-12)

    def test_vacuous_edit_impact_zero(self):
        # An edit whose removal still reproduces the correction: identical
        # replacement elsewhere makes the reduced sentence encode the same.
        ckpt = _checkpoint()
        src = Sentence(("a", "zzz1"))
        corr = Sentence(("a", "zzz2"))  # both unknown -> same UNK encoding
        edits = edits_from_pair(src, corr)
        impact = edit_impact(ckpt, src, corr, edits, edits[0])
        assert impact == pytest.approx(0.0, abs=1e-12)

    def test_membership_enforced(self):
        ckpt = _checkpoint()
        pair = _fixture_pair()
        edits = list(pair.edits_for(0))
        rogue = Edit((0, 1), (0, 1), "substitute", (NOISY_TOKENS[0],), ("x",))
        with pytest.raises(ValueError):
            edit_impact(ckpt, pair.source, pair.corrections[0], edits, rogue)

    def test_recompute_via_similarity(self):
        ckpt = _checkpoint(seed=0)
        pair = _fixture_pair()
        edits = list(pair.edits_for(0))
        target = edits[0]  # the healty -> healthy substitution
        rest = [e for e in edits if e != target]
        reduced = apply_edits(pair.source, rest)
        expected = max(0.0, 1.0 - similarity(ckpt, pair.corrections[0], reduced))
        got = edit_impact(ckpt, pair.source, pair.corrections[0], edits, target)
        assert got == pytest.approx(expected, abs=1e-15)

    def test_impacts_non_negative(self):
        ckpt = _checkpoint(seed=3)
        pair = _fixture_pair()
        for item in compute_impacts(ckpt, pair.source, pair.corrections[0], pair.edits_for(0)):
            assert item.impact >= 0.0


class TestGeneratePairs:
    def test_single_edit_pair_is_corrected_vs_source(self):
        ckpt = _checkpoint()
        (pair,) = parse_parallel_tsv("I like cats .\tI dislike cats .\n")
        examples = generate_pairs(ckpt, pair, k=1, seed=0)
        assert len(examples) == 1
        ex = examples[0]
        assert ex.s_plus.tokens == pair.corrections[0].tokens
        assert ex.s_minus.tokens == pair.source.tokens
        assert ex.q_plus > ex.q_minus == 0.0

    def test_zero_edits_skipped(self):
        ckpt = _checkpoint()
        (pair,) = parse_parallel_tsv("a b\ta b\n")
        assert generate_pairs(ckpt, pair, k=4, seed=0) == []

    def test_fixture_three_edits(self):
        ckpt = _checkpoint(seed=0)
        pair = _fixture_pair()
        examples = generate_pairs(ckpt, pair, k=2, seed=0)
        assert len(examples) == 2
        impacts = {
            e: i.impact
            for e, i in zip(
                pair.edits_for(0),
                compute_impacts(ckpt, pair.source, pair.corrections[0], pair.edits_for(0)),
            )
        }
        for ex in examples:
            assert ex.q_plus > ex.q_minus
            assert ex.s_plus.tokens != ex.s_minus.tokens
        # Quality sums must be reachable from per-edit impacts.
        subset_sums = {
            round(sum(combo), 12)
            for r in range(len(impacts) + 1)
            for combo in itertools.combinations(impacts.values(), r)
        }
        for ex in examples:
            assert round(ex.q_plus, 12) in subset_sums
            assert round(ex.q_minus, 12) in subset_sums

    def test_deterministic(self):
        ckpt = _checkpoint(seed=1)
        pair = _fixture_pair()
        a = generate_pairs(ckpt, pair, k=4, seed=42)
        b = generate_pairs(ckpt, pair, k=4, seed=42)
        assert a == b

    def test_invariants_on_emitted_pairs(self):
        ckpt = _checkpoint(seed=2)
        pair = _fixture_pair()
        for ex in generate_pairs(ckpt, pair, k=16, seed=3):
            assert ex.q_plus > ex.q_minus
            assert abs(ex.q_plus - ex.q_minus) >= 1e-9
            assert ex.s_plus.tokens != ex.s_minus.tokens


class TestBuildPairDataset:
    def test_error_free_corpus_empty(self):
        ckpt = _checkpoint()
        corpus = parse_parallel_tsv("a b\ta b\nc d\tc d\n")
        assert build_pair_dataset(ckpt, corpus, k=2, seed=0) == []

    def test_single_edit_corpus(self):
        ckpt = _checkpoint()
        lines = [f"w{i} like cats\tw{i} love cats" for i in range(10)]
        corpus = parse_parallel_tsv("\n".join(lines) + "\n")
        dataset = build_pair_dataset(ckpt, corpus, k=1, seed=0)
        assert len(dataset) <= 10
        assert all(ex.q_plus > ex.q_minus for ex in dataset)

    def test_determinism(self, roundtrip_corpus):
        ckpt = _checkpoint(seed=5)
        sample = roundtrip_corpus[:30]
        a = build_pair_dataset(ckpt, sample, k=2, seed=9)
        b = build_pair_dataset(ckpt, sample, k=2, seed=9)
        assert a == b

    def test_subset_quality_equals_bruteforce(self, roundtrip_corpus):
        # For small edit sets, emitted qualities are exact subset sums and
        # the full set dominates every subset (impacts clamped at 0).
        ckpt = _checkpoint(seed=6)
        checked = 0
        for pair in roundtrip_corpus:
            edits = pair.edits_for(0)
            if not 1 <= len(edits) <= 4:
                continue
            impacts = [
                i.impact
                for i in compute_impacts(ckpt, pair.source, pair.corrections[0], edits)
            ]
            full = sum(impacts)
            for r in range(len(impacts) + 1):
                for combo in itertools.combinations(impacts, r):
                    assert full >= sum(combo) - 1e-12
            for ex in generate_pairs(ckpt, pair, k=4, seed=1):
                sums = {
                    round(sum(c), 10)
                    for r in range(len(impacts) + 1)
                    for c in itertools.combinations(impacts, r)
                }
                assert round(ex.q_plus, 10) in sums
                assert round(ex.q_minus, 10) in sums
            checked += 1
            if checked >= 40:
                break
        assert checked >= 20


class TestPairIO:
    def test_jsonl_roundtrip(self, tmp_path):
        ckpt = _checkpoint()
        pair = _fixture_pair()
        examples = generate_pairs(ckpt, pair, k=3, seed=0)
        path = tmp_path / "pairs.jsonl"
        write_pair_dataset(examples, path)
        loaded = read_pair_dataset(path)
        assert len(loaded) == len(examples)
        for orig, new in zip(examples, loaded):
            assert orig.s_plus.tokens == new.s_plus.tokens
            assert orig.s_minus.tokens == new.s_minus.tokens
            assert orig.q_plus == new.q_plus
            assert orig.q_minus == new.q_minus

    def test_pair_example_validation(self):
        s = Sentence(("a",))
        with pytest.raises(ValueError):
            PairExample(s, Sentence(("b",)), Sentence(("b",)), 1.0, 0.0)
        with pytest.raises(ValueError):
            PairExample(s, Sentence(("b",)), Sentence(("c",)), 0.0, 0.0)
