"""Sentence scoring: filter-free sigmoid scores and the legacy
similarity-filtered variant kept for ablations.

The filter-free score is sigma(R(O)) and depends only on the system
output. The legacy mode additionally zeroes the score whenever the
input/output cosine similarity does not exceed the threshold theta.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from scipy.special import expit

from .corpus import JudgmentSet, Sentence
from .encoder import EncoderCheckpoint, ModelError, content_hash, qe_score, similarity
from .errors import DataError

MODES = ("filter_free", "legacy")


@dataclass(frozen=True)
class ScoreRecord:
    source_id: str
    system: str
    score: float
    mode: str
    theta: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score {self.score} outside [0, 1]")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if (self.theta is None) != (self.mode == "filter_free"):
            raise ValueError("theta is required exactly for legacy mode")


def score_filter_free(qe_checkpoint: EncoderCheckpoint, input_sentence: Sentence,
                      output_sentence: Sentence) -> float:
    """sigma(R(O)); the input sentence is accepted for interface parity."""
    del input_sentence  # unused by construction
    return float(expit(qe_score(qe_checkpoint, output_sentence)))


def score_legacy(qe_checkpoint: EncoderCheckpoint, sim_checkpoint: EncoderCheckpoint,
                 input_sentence: Sentence, output_sentence: Sentence,
                 theta: float = 0.9) -> float:
    """sigma(R(O)) when sim(I, O) strictly exceeds theta, else exactly 0."""
    if not -1.0 <= theta <= 1.0:
        raise ValueError(f"theta {theta} outside [-1, 1]")
    if similarity(sim_checkpoint, input_sentence, output_sentence) > theta:
        return float(expit(qe_score(qe_checkpoint, output_sentence)))
    return 0.0


def score_corpus(qe_checkpoint: EncoderCheckpoint, judgments: JudgmentSet,
                 mode: str = "filter_free", sim_checkpoint: EncoderCheckpoint | None = None,
                 theta: float = 0.9) -> list[ScoreRecord]:
    """One record per (source, system), ordered by source id then system."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if mode == "legacy" and sim_checkpoint is None:
        raise ModelError("legacy scoring needs a similarity checkpoint")
    records = []
    for source in sorted(judgments.sources, key=lambda s: s.id):
        for system in sorted(judgments.systems):
            hyp = judgments.hypothesis(source.id, system)
            if hyp is None:
                raise DataError(
                    f"missing hypothesis for source {source.id!r}, system {system!r}"
                )
            if mode == "filter_free":
                value = score_filter_free(qe_checkpoint, source, hyp)
                records.append(
                    ScoreRecord(source.id, system, value, mode="filter_free")
                )
            else:
                value = score_legacy(qe_checkpoint, sim_checkpoint, source, hyp, theta)
                records.append(
                    ScoreRecord(source.id, system, value, mode="legacy", theta=theta)
                )
    return records


# ---------------------------------------------------------------------------
# Score files
# ---------------------------------------------------------------------------

def write_scores_tsv(records, path) -> None:
    """TSV rows "source_id<TAB>system<TAB>score" with full float precision."""
    with open(Path(path), "w", encoding="utf-8") as fp:
        for r in records:
            fp.write(f"{r.source_id}\t{r.system}\t{r.score!r}\n")


def read_scores_tsv(path) -> dict:
    """Read a score file into a {(source_id, system): score} mapping."""
    scores: dict[tuple[str, str], float] = {}
    with open(Path(path), "r", encoding="utf-8") as fp:
        for lineno, raw in enumerate(fp, start=1):
            if not raw.strip():
                continue
            parts = raw.rstrip("\n").split("\t")
            if len(parts) != 3:
                raise DataError(f"{path}: line {lineno}: expected 3 tab-separated fields")
            try:
                value = float(parts[2])
            except ValueError:
                raise DataError(f"{path}: line {lineno}: bad score {parts[2]!r}") from None
            scores[(parts[0], parts[1])] = value
    return scores


def write_scores_json(records, path, qe_checkpoint: EncoderCheckpoint | None = None,
                      mode: str | None = None, theta: float | None = None) -> None:
    doc = {
        "metadata": {
            "mode": mode,
            "theta": theta,
            "checkpoint_hash": content_hash(qe_checkpoint) if qe_checkpoint else None,
        },
        "scores": [
            {
                "source": r.source_id,
                "system": r.system,
                "score": r.score,
            }
            for r in records
        ],
    }
    with open(Path(path), "w", encoding="utf-8") as fp:
        json.dump(doc, fp, sort_keys=True, separators=(",", ":"))
        fp.write("\n")
