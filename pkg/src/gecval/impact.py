"""Edit-impact scoring and ordered training-pair generation.

The impact of an edit is the semantic change observed when that edit is
removed from the full correction: 1 - cosine similarity between the
correction and the sentence rebuilt without the edit, clamped at zero.
Subset sampling turns one (source, correction) pair into ordered
(higher-quality, lower-quality) sentence pairs.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .align import Edit, apply_edits
from .corpus import ParallelPair, Sentence
from .encoder import EncoderCheckpoint, similarity

QUALITY_EPS = 1e-9


@dataclass(frozen=True)
class ImpactedEdit:
    edit: Edit
    impact: float

    def __post_init__(self):
        if self.impact < 0:
            raise ValueError("impact must be non-negative")


@dataclass(frozen=True)
class PairExample:
    """Ordered pair of corrections of one source; s_plus is strictly better."""

    source: Sentence
    s_plus: Sentence
    s_minus: Sentence
    q_plus: float
    q_minus: float

    def __post_init__(self):
        if not self.q_plus > self.q_minus:
            raise ValueError("q_plus must be strictly greater than q_minus")
        if self.s_plus.tokens == self.s_minus.tokens:
            raise ValueError("pair sides must differ token-wise")


def edit_impact(ckpt: EncoderCheckpoint, source: Sentence, correction: Sentence,
                edits, e: Edit) -> float:
    """Impact of one edit: 1 - sim(correction, source with e removed)."""
    edits = list(edits)
    if e not in edits:
        raise ValueError("edit is not a member of the edit set")
    rest = [x for x in edits if x != e]
    reduced = apply_edits(source, rest)
    return max(0.0, 1.0 - similarity(ckpt, correction, reduced))


def compute_impacts(ckpt: EncoderCheckpoint, source: Sentence, correction: Sentence,
                    edits) -> list[ImpactedEdit]:
    edits = list(edits)
    return [
        ImpactedEdit(edit=e, impact=edit_impact(ckpt, source, correction, edits, e))
        for e in edits
    ]


def generate_pairs(ckpt: EncoderCheckpoint, pair: ParallelPair, k: int = 8,
                   seed=0, annotator: int = 0, max_retries: int = 16) -> list[PairExample]:
    """Sample up to k ordered pairs from one parallel pair.

    Each attempt draws two edit subsets by independent inclusion with
    probability 0.5; a candidate is rejected and resampled when the
    qualities are within QUALITY_EPS or the surface forms coincide.
    Sentences without edits yield no pairs.
    """
    correction = pair.corrections[annotator]
    edits = list(pair.edits_for(annotator))
    if not edits:
        return []
    impacts = np.array(
        [i.impact for i in compute_impacts(ckpt, pair.source, correction, edits)]
    )
    rng = np.random.default_rng(seed)
    results: list[PairExample] = []
    for _ in range(k):
        for _ in range(max_retries):
            mask_a = rng.random(len(edits)) < 0.5
            mask_b = rng.random(len(edits)) < 0.5
            if np.array_equal(mask_a, mask_b):
                continue
            q_a = float(impacts[mask_a].sum())
            q_b = float(impacts[mask_b].sum())
            if abs(q_a - q_b) < QUALITY_EPS:
                continue
            sent_a = apply_edits(pair.source, [e for e, m in zip(edits, mask_a) if m])
            sent_b = apply_edits(pair.source, [e for e, m in zip(edits, mask_b) if m])
            if sent_a.tokens == sent_b.tokens:
                continue
            if q_a > q_b:
                plus, minus, q_plus, q_minus = sent_a, sent_b, q_a, q_b
            else:
                plus, minus, q_plus, q_minus = sent_b, sent_a, q_b, q_a
            results.append(
                PairExample(
                    source=pair.source,
                    s_plus=plus,
                    s_minus=minus,
                    q_plus=q_plus,
                    q_minus=q_minus,
                )
            )
            break
    return results


def build_pair_dataset(ckpt: EncoderCheckpoint, corpus, k: int = 8, seed: int = 0,
                       annotator: int = 0, max_retries: int = 16) -> list[PairExample]:
    """Concatenate generate_pairs over a corpus with per-sentence seeds."""
    dataset: list[PairExample] = []
    for index, pair in enumerate(corpus):
        dataset.extend(
            generate_pairs(
                ckpt, pair, k=k, seed=[seed, index], annotator=annotator,
                max_retries=max_retries,
            )
        )
    return dataset


# ---------------------------------------------------------------------------
# JSON-lines serialization
# ---------------------------------------------------------------------------

def write_pair_dataset(pairs, path) -> None:
    with open(Path(path), "w", encoding="utf-8") as fp:
        for p in pairs:
            fp.write(
                json.dumps(
                    {
                        "source": list(p.source.tokens),
                        "s_plus": list(p.s_plus.tokens),
                        "s_minus": list(p.s_minus.tokens),
                        "q_plus": p.q_plus,
                        "q_minus": p.q_minus,
                    },
                    sort_keys=True,
                    separators=(",", ":"),
                )
            )
            fp.write("\n")


def read_pair_dataset(path) -> list[PairExample]:
    pairs = []
    with open(Path(path), "r", encoding="utf-8") as fp:
        for i, line in enumerate(fp):
            if not line.strip():
                continue
            rec = json.loads(line)
            pairs.append(
                PairExample(
                    source=Sentence(tuple(rec["source"]), id=str(i)),
                    s_plus=Sentence(tuple(rec["s_plus"]), id=f"{i}.plus"),
                    s_minus=Sentence(tuple(rec["s_minus"]), id=f"{i}.minus"),
                    q_plus=float(rec["q_plus"]),
                    q_minus=float(rec["q_minus"]),
                )
            )
    return pairs
