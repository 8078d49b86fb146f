"""Alignment, edit extraction, application, and classification tests.

The alignment cost is checked against an independently written recursive
oracle; edit extraction is checked by round-tripping through apply_edits.
"""
from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np
import pytest

from gecval.align import (
    AlignmentCosts,
    Edit,
    align_tokens,
    apply_edits,
    char_edit_distance,
    classify_edit,
    edits_from_pair,
    extract_edits,
    normalized_char_distance,
    validate_edit_list,
)
from gecval.corpus import Sentence
from gecval.errors import EditError
from gecval.postag import default_tagger

from conftest import CLEAN_TOKENS, NOISY_TOKENS

ALPHABET = ("a", "b", "ab", "A", "ba")


# ---------------------------------------------------------------------------
# Independent cost oracle: plain recursion with memoization, costs written
# out directly, no tie-breaking machinery.
# ---------------------------------------------------------------------------

def oracle_cost(s: tuple[str, ...], c: tuple[str, ...]) -> float:
    @lru_cache(maxsize=None)
    def sub(a: str, b: str) -> float:
        if a == b:
            return 0.0
        if a.lower() == b.lower():
            return 0.1
        grid = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
        for i in range(len(a) + 1):
            grid[i][0] = i
        for j in range(len(b) + 1):
            grid[0][j] = j
        for i in range(1, len(a) + 1):
            for j in range(1, len(b) + 1):
                grid[i][j] = min(
                    grid[i - 1][j - 1] + (a[i - 1] != b[j - 1]),
                    grid[i - 1][j] + 1,
                    grid[i][j - 1] + 1,
                )
        return 1.0 + grid[len(a)][len(b)] / max(len(a), len(b))

    @lru_cache(maxsize=None)
    def best(i: int, j: int) -> float:
        if i == len(s) and j == len(c):
            return 0.0
        options = []
        if i < len(s) and j < len(c):
            options.append(sub(s[i], c[j]) + best(i + 1, j + 1))
        if i < len(s):
            options.append(1.0 + best(i + 1, j))
        if j < len(c):
            options.append(1.0 + best(i, j + 1))
        return min(options)

    return best(0, 0)


def all_sequences(alphabet, max_len):
    for length in range(max_len + 1):
        yield from itertools.product(alphabet, repeat=length)


class TestAlignCost:
    def test_identity(self):
        trace = align_tokens(["a", "b", "c"], ["a", "b", "c"])
        assert trace.cost == 0.0
        assert [op.kind for op in trace.ops] == ["match"] * 3

    def test_empty_source(self):
        trace = align_tokens([], ["a"])
        assert [op.kind for op in trace.ops] == ["ins"]
        assert trace.cost == 1.0

    def test_like_dislike(self):
        trace = align_tokens(
            ["I", "like", "cats", "."], ["I", "dislike", "cats", "."]
        )
        assert [op.kind for op in trace.ops] == ["match", "sub", "match", "match"]
        # dislike needs 3 character insertions over length 7
        assert trace.cost == pytest.approx(1.0 + 3 / 7)

    def test_cost_equals_sum_of_op_costs(self):
        trace = align_tokens(NOISY_TOKENS, CLEAN_TOKENS)
        assert trace.cost == pytest.approx(sum(op.cost for op in trace.ops))

    def test_replay_reconstructs_sequences(self):
        trace = align_tokens(NOISY_TOKENS, CLEAN_TOKENS)
        src, tgt = trace.replay()
        assert src == tuple(NOISY_TOKENS)
        assert tgt == tuple(CLEAN_TOKENS)

    def test_oracle_exhaustive_short(self):
        # Every pair up to length 2 over the 5-symbol alphabet.
        seqs = list(all_sequences(ALPHABET, 2))
        for s in seqs:
            for c in seqs:
                assert align_tokens(s, c).cost == pytest.approx(
                    oracle_cost(s, c), abs=1e-12
                )

    def test_oracle_random_lengths_to_eight(self):
        rng = np.random.default_rng(7)
        for ls in range(9):
            for lc in range(9):
                for _ in range(3):
                    s = tuple(rng.choice(ALPHABET, size=ls))
                    c = tuple(rng.choice(ALPHABET, size=lc))
                    assert align_tokens(s, c).cost == pytest.approx(
                        oracle_cost(s, c), abs=1e-12
                    )

    def test_case_only_substitution_cheap(self):
        trace = align_tokens(["a"], ["A"])
        assert trace.cost == pytest.approx(0.1)
        assert trace.ops[0].kind == "sub"


class TestExtractEdits:
    def test_noisy_clean_three_edits(self):
        edits = edits_from_pair(NOISY_TOKENS, CLEAN_TOKENS)
        assert [e.operation for e in edits] == ["substitute", "delete", "substitute"]
        assert edits[0].src_tokens == ("healty",)
        assert edits[0].tgt_tokens == ("healthy",)
        assert edits[1].src_tokens == ("as", "it", "is", ",")
        assert edits[2].src_tokens == ("emtional",)

    def test_identity_trace_empty(self):
        assert extract_edits(align_tokens(["a", "b"], ["a", "b"])) == []

    def test_multi_token_insert(self):
        edits = edits_from_pair(["a", "b"], ["a", "x", "y", "b"])
        assert len(edits) == 1
        (e,) = edits
        assert e.operation == "insert"
        assert e.src_span == (1, 1)
        assert e.tgt_tokens == ("x", "y")

    def test_ins_del_fusion_substitutes(self):
        # Construct a trace with an explicit del run next to an ins run.
        from gecval.align import AlignOp, AlignmentTrace

        trace = AlignmentTrace(
            source=("x", "k"),
            target=("k", "y"),
            ops=(
                AlignOp("del", 0, None, 1.0),
                AlignOp("match", 1, 0, 0.0),
                AlignOp("ins", None, 1, 1.0),
            ),
            cost=2.0,
        )
        edits = extract_edits(trace)
        assert [e.operation for e in edits] == ["delete", "insert"]

        fused = AlignmentTrace(
            source=("x",),
            target=("zzz",),
            ops=(
                AlignOp("del", 0, None, 1.0),
                AlignOp("ins", None, 0, 1.0),
            ),
            cost=2.0,
        )
        edits = extract_edits(fused)
        assert [e.operation for e in edits] == ["substitute"]
        assert edits[0].src_tokens == ("x",)
        assert edits[0].tgt_tokens == ("zzz",)

    def test_canonical_on_corpus(self, roundtrip_corpus):
        for pair in roundtrip_corpus[:200]:
            edits = edits_from_pair(pair.source, pair.corrections[0])
            validate_edit_list(edits, len(pair.source))
            for e in edits:
                assert e.src_tokens or e.tgt_tokens
                assert e.etype


class TestApplyEdits:
    def test_full_set_reproduces_correction(self):
        edits = edits_from_pair(NOISY_TOKENS, CLEAN_TOKENS)
        assert apply_edits(NOISY_TOKENS, edits) == tuple(CLEAN_TOKENS)

    def test_empty_set_identity(self):
        sent = Sentence.from_text("a b c")
        assert apply_edits(sent, []).tokens == sent.tokens

    def test_partial_application(self):
        edits = edits_from_pair(NOISY_TOKENS, CLEAN_TOKENS)
        only_first = apply_edits(NOISY_TOKENS, [edits[0]])
        assert "healthy" in only_first
        assert "as" in only_first and "emtional" in only_first

    def test_overlap_rejected(self):
        e1 = Edit((0, 2), (0, 1), "substitute", ("a", "b"), ("x",))
        e2 = Edit((1, 3), (0, 1), "substitute", ("b", "c"), ("y",))
        with pytest.raises(EditError):
            apply_edits(["a", "b", "c"], [e1, e2])

    def test_out_of_bounds_rejected(self):
        e = Edit((4, 5), (0, 1), "substitute", ("z",), ("x",))
        with pytest.raises(EditError):
            apply_edits(["a", "b"], [e])

    def test_mismatched_tokens_rejected(self):
        e = Edit((0, 1), (0, 1), "substitute", ("not-there",), ("x",))
        with pytest.raises(EditError):
            apply_edits(["a", "b"], [e])

    def test_roundtrip_random_pairs(self):
        rng = np.random.default_rng(11)
        vocab = ["a", "b", "c", "A", "ab", "xy", ".", "the"]
        for _ in range(300):
            s = [vocab[i] for i in rng.integers(0, len(vocab), rng.integers(0, 10))]
            c = [vocab[i] for i in rng.integers(0, len(vocab), rng.integers(0, 10))]
            edits = edits_from_pair(s, c)
            assert apply_edits(tuple(s), edits) == tuple(c)


class TestClassifyEdit:
    def test_spelling_substitution(self):
        edits = edits_from_pair(NOISY_TOKENS, CLEAN_TOKENS)
        assert edits[0].etype == "R:SPELL"
        assert edits[2].etype == "R:SPELL"

    def test_case_only_is_orth(self):
        e = Edit((0, 1), (0, 1), "substitute", ("i",), ("I",))
        assert classify_edit(e) == "R:ORTH"

    def test_multi_token_mixed_pos_delete_is_other(self):
        edits = edits_from_pair(NOISY_TOKENS, CLEAN_TOKENS)
        assert edits[1].etype == "U:OTHER"

    def test_word_order(self):
        e = Edit((0, 2), (0, 2), "substitute", ("b", "a"), ("a", "b"))
        assert classify_edit(e) == "R:WO"

    def test_insert_uses_target_pos(self):
        e = Edit((0, 0), (0, 1), "insert", (), ("the",))
        assert classify_edit(e) == "M:DET"

    def test_total_on_corpus(self, roundtrip_corpus):
        tagger = default_tagger()
        for pair in roundtrip_corpus[:150]:
            for e in edits_from_pair(pair.source, pair.corrections[0]):
                etype = classify_edit(e, tagger)
                assert etype.startswith(("M:", "U:", "R:"))
                assert len(etype.split(":", 1)[1]) > 0


class TestDistances:
    def test_char_edit_distance(self):
        assert char_edit_distance("kitten", "sitting") == 3
        assert char_edit_distance("", "ab") == 2
        assert char_edit_distance("abc", "abc") == 0

    def test_normalized_bounds(self):
        rng = np.random.default_rng(3)
        letters = "abcde"
        for _ in range(200):
            a = "".join(rng.choice(list(letters), rng.integers(1, 8)))
            b = "".join(rng.choice(list(letters), rng.integers(1, 8)))
            d = normalized_char_distance(a, b)
            assert 0.0 <= d <= 1.0

    def test_custom_costs(self):
        costs = AlignmentCosts(insert=2.0, delete=2.0)
        trace = align_tokens(["a"], ["a", "b"], costs)
        assert trace.cost == 2.0
