"""Parallel-data ingestion (M2 and TSV), judgment files, dataset splitting.

Tokenization is whitespace-only throughout; callers pre-tokenize. M2
parsing reconstructs one correction per annotator by applying that
annotator's edits right to left.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .align import DELETE, INSERT, SUBSTITUTE, Edit, apply_edits, edits_from_pair
from .errors import EditError, ParseError, SchemaError

VERDICTS = ("a", "b", "tie")


@dataclass(frozen=True)
class Sentence:
    """Whitespace-free tokens plus an opaque identifier.

    An empty token tuple is allowed and represents an explicitly empty
    source sentence.
    """

    tokens: tuple[str, ...]
    id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        for t in self.tokens:
            if not t or any(ch.isspace() for ch in t):
                raise ValueError(f"invalid token {t!r}: empty or contains whitespace")

    @classmethod
    def from_text(cls, text: str, id: str = "") -> "Sentence":
        return cls(tokens=tuple(text.split()), id=id)

    @property
    def text(self) -> str:
        return " ".join(self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class ParallelPair:
    """A source sentence with one correction per annotator.

    ``annotator_edits`` is present when the pair came from an M2 file; in
    that case applying edits[i] to the source yields corrections[i].
    """

    source: Sentence
    corrections: tuple[Sentence, ...]
    annotator_edits: tuple[tuple[Edit, ...], ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "corrections", tuple(self.corrections))
        if not self.corrections:
            raise ValueError("a ParallelPair needs at least one correction")
        if self.annotator_edits is not None:
            edits = tuple(tuple(e) for e in self.annotator_edits)
            object.__setattr__(self, "annotator_edits", edits)
            if len(edits) != len(self.corrections):
                raise ValueError("one edit list per correction required")
            for elist, corr in zip(edits, self.corrections):
                rebuilt = apply_edits(self.source, elist)
                if rebuilt.tokens != corr.tokens:
                    raise EditError(
                        f"edits do not reproduce the correction for source {self.source.id!r}"
                    )

    def edits_for(self, annotator: int = 0) -> tuple[Edit, ...]:
        """Edit list for one annotator, aligning on demand if absent."""
        if self.annotator_edits is not None:
            return self.annotator_edits[annotator]
        return tuple(edits_from_pair(self.source, self.corrections[annotator]))


@dataclass(frozen=True)
class SplitSpec:
    """Train/dev/devtest ratios plus the shuffle seed."""

    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "ratios", tuple(float(r) for r in self.ratios))
        if len(self.ratios) != 3 or any(r < 0 for r in self.ratios):
            raise ValueError("ratios must be three non-negative reals")
        if abs(sum(self.ratios) - 1.0) > 1e-9:
            raise ValueError(f"ratios must sum to 1, got {sum(self.ratios)}")


@dataclass(frozen=True)
class PairwiseJudgment:
    source_id: str
    a: str
    b: str
    verdict: str

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"verdict must be one of {VERDICTS}, got {self.verdict!r}")
        if self.a == self.b:
            raise ValueError(f"pairwise judgment compares {self.a!r} with itself")


@dataclass(frozen=True)
class JudgmentSet:
    """Sources, system hypotheses, and human pairwise preferences."""

    sources: tuple[Sentence, ...]
    systems: tuple[str, ...]
    hypotheses: dict = field(default_factory=dict)  # (source_id, system) -> Sentence
    human_pairwise: tuple[PairwiseJudgment, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "sources", tuple(self.sources))
        object.__setattr__(self, "systems", tuple(self.systems))
        object.__setattr__(self, "human_pairwise", tuple(self.human_pairwise))
        ids = [s.id for s in self.sources]
        if len(set(ids)) != len(ids):
            raise SchemaError("duplicate source ids")
        if len(set(self.systems)) != len(self.systems):
            raise SchemaError("duplicate system names")
        known_ids = set(ids)
        known_sys = set(self.systems)
        for (sid, system) in self.hypotheses:
            if sid not in known_ids or system not in known_sys:
                raise SchemaError(f"hypothesis for unknown pair ({sid!r}, {system!r})")
        for rec in self.human_pairwise:
            if rec.source_id not in known_ids:
                raise SchemaError(f"pairwise record references unknown source {rec.source_id!r}")
            for name in (rec.a, rec.b):
                if name not in known_sys:
                    raise SchemaError(f"pairwise record references unknown system {name!r}")

    def hypothesis(self, source_id: str, system: str) -> Sentence | None:
        return self.hypotheses.get((source_id, system))


# ---------------------------------------------------------------------------
# M2 format
# ---------------------------------------------------------------------------

def parse_m2(text: str) -> list[ParallelPair]:
    """Parse M2 blocks into ParallelPairs.

    Each block is one "S <tokens>" line followed by zero or more
    "A <start> <end>|||<type>|||<replacement>|||<req>|||<comment>|||<annot>"
    lines. A noop edit (-1 -1) stands for "this annotator left the sentence
    unchanged" and must be the annotator's only edit.
    """
    pairs: list[ParallelPair] = []
    block: list[tuple[int, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\n")
        if line.strip() == "":
            if block:
                pairs.append(_parse_block(block, len(pairs)))
                block = []
            continue
        block.append((lineno, line))
    if block:
        pairs.append(_parse_block(block, len(pairs)))
    return pairs


def _parse_block(block: list[tuple[int, str]], index: int) -> ParallelPair:
    lineno, first = block[0]
    if not first.startswith("S ") and first != "S":
        raise ParseError(f"expected an S line, got {first!r}", line=lineno)
    source = Sentence.from_text(first[2:], id=str(index))
    n = len(source)

    raw_edits: dict[int, list] = {}
    noop: dict[int, bool] = {}
    for lineno, line in block[1:]:
        if not line.startswith("A "):
            raise ParseError(f"expected an A line, got {line!r}", line=lineno)
        fields = line[2:].split("|||")
        if len(fields) < 6:
            raise ParseError(f"A line has {len(fields)} fields, expected 6", line=lineno)
        span = fields[0].split()
        if len(span) != 2:
            raise ParseError(f"bad edit span {fields[0]!r}", line=lineno)
        try:
            start, end = int(span[0]), int(span[1])
        except ValueError:
            raise ParseError(f"non-integer edit span {fields[0]!r}", line=lineno)
        etype = fields[1]
        replacement = fields[2]
        try:
            annotator = int(fields[-1])
        except ValueError:
            raise ParseError(f"non-integer annotator id {fields[-1]!r}", line=lineno)
        if etype == "noop" or (start == -1 and end == -1):
            noop[annotator] = True
            raw_edits.setdefault(annotator, [])
            continue
        if not (0 <= start <= end <= n):
            raise EditError(
                f"line {lineno}: edit span {start} {end} outside source of length {n}"
            )
        repl_tokens = () if replacement in ("-NONE-", "") else tuple(replacement.split())
        if start == end and not repl_tokens:
            raise ParseError("edit with empty span and empty replacement", line=lineno)
        raw_edits.setdefault(annotator, []).append((start, end, etype, repl_tokens, lineno))

    if not raw_edits:
        return ParallelPair(
            source=source,
            corrections=(Sentence(source.tokens, id=f"{index}.0"),),
            annotator_edits=((),),
        )

    corrections: list[Sentence] = []
    all_edits: list[tuple[Edit, ...]] = []
    for position, annotator in enumerate(sorted(raw_edits)):
        entries = sorted(raw_edits[annotator], key=lambda e: (e[0], e[1]))
        if noop.get(annotator) and entries:
            raise ParseError(
                f"annotator {annotator} mixes a noop with real edits",
                line=entries[0][4],
            )
        edits: list[Edit] = []
        offset = 0
        prev_end = -1
        for start, end, etype, repl_tokens, lineno in entries:
            if start < prev_end:
                raise EditError(f"line {lineno}: overlapping edits at index {start}")
            prev_end = max(prev_end, end)
            tgt_start = start + offset
            tgt_end = tgt_start + len(repl_tokens)
            if start == end:
                operation = INSERT
            elif not repl_tokens:
                operation = DELETE
            else:
                operation = SUBSTITUTE
            edits.append(
                Edit(
                    src_span=(start, end),
                    tgt_span=(tgt_start, tgt_end),
                    operation=operation,
                    src_tokens=source.tokens[start:end],
                    tgt_tokens=repl_tokens,
                    etype=etype,
                )
            )
            offset += len(repl_tokens) - (end - start)
        corrected = apply_edits(source, edits)
        corrections.append(Sentence(corrected.tokens, id=f"{index}.{position}"))
        all_edits.append(tuple(edits))
    return ParallelPair(
        source=source,
        corrections=tuple(corrections),
        annotator_edits=tuple(all_edits),
    )


def serialize_m2(pairs) -> str:
    """Render pairs as M2 text; parse_m2(serialize_m2(p)) == p structurally.

    Pairs without stored edits are aligned on the fly. A noop A-line is
    emitted only when needed to preserve annotator multiplicity; a single
    unchanged correction yields a bare S line.
    """
    blocks = []
    for pair in pairs:
        lines = [f"S {pair.source.text}".rstrip()]
        multiple = len(pair.corrections) > 1
        for annotator in range(len(pair.corrections)):
            edits = pair.edits_for(annotator)
            if not edits:
                if multiple:
                    lines.append(f"A -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||{annotator}")
                continue
            for e in edits:
                replacement = " ".join(e.tgt_tokens) if e.tgt_tokens else "-NONE-"
                etype = e.etype or "UNK"
                s0, s1 = e.src_span
                lines.append(
                    f"A {s0} {s1}|||{etype}|||{replacement}|||REQUIRED|||-NONE-|||{annotator}"
                )
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n" if blocks else ""


# ---------------------------------------------------------------------------
# TSV format
# ---------------------------------------------------------------------------

def parse_parallel_tsv(text: str) -> list[ParallelPair]:
    """Parse "source<TAB>correction1[<TAB>correction2...]" lines."""
    pairs: list[ParallelPair] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if raw.strip() == "":
            continue
        fields = raw.split("\t")
        if len(fields) < 2:
            raise ParseError("expected at least 2 tab-separated fields", line=lineno)
        index = len(pairs)
        source = Sentence.from_text(fields[0], id=str(index))
        corrections = tuple(
            Sentence.from_text(f, id=f"{index}.{k}") for k, f in enumerate(fields[1:])
        )
        pairs.append(ParallelPair(source=source, corrections=corrections))
    return pairs


def serialize_parallel_tsv(pairs) -> str:
    lines = []
    for pair in pairs:
        fields = [pair.source.text] + [c.text for c in pair.corrections]
        lines.append("\t".join(fields))
    return "\n".join(lines) + "\n" if lines else ""


# ---------------------------------------------------------------------------
# Splitting
# ---------------------------------------------------------------------------

def split_dataset(pairs, spec: SplitSpec):
    """Deterministically shuffle and partition into (train, dev, devtest).

    Sizes are floor(ratio * n) with the remainder assigned to train, so a
    multiple of ten under (0.8, 0.1, 0.1) splits exactly 8:1:1.
    """
    items = list(pairs)
    n = len(items)
    if n == 0:
        raise ValueError("cannot split an empty dataset")
    order = np.random.default_rng(spec.seed).permutation(n)
    shuffled = [items[i] for i in order]
    sizes = [int(np.floor(r * n)) for r in spec.ratios]
    sizes[0] += n - sum(sizes)
    train = shuffled[: sizes[0]]
    dev = shuffled[sizes[0] : sizes[0] + sizes[1]]
    devtest = shuffled[sizes[0] + sizes[1] :]
    return train, dev, devtest


# ---------------------------------------------------------------------------
# Judgments
# ---------------------------------------------------------------------------

def load_judgments(path) -> JudgmentSet:
    """Load and validate a judgment JSON document."""
    with open(Path(path), "r", encoding="utf-8") as fp:
        try:
            doc = json.load(fp)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON in {path}: {exc}") from exc
    return judgments_from_dict(doc)


def judgments_from_dict(doc: dict) -> JudgmentSet:
    for key in ("sources", "systems"):
        if key not in doc:
            raise SchemaError(f"judgment document missing {key!r}")
    sources = tuple(
        Sentence(tokens=tuple(rec["tokens"]), id=str(rec["id"])) for rec in doc["sources"]
    )
    systems = tuple(str(s) for s in doc["systems"])
    hypotheses = {}
    for sid, by_system in doc.get("hypotheses", {}).items():
        for system, tokens in by_system.items():
            hypotheses[(str(sid), str(system))] = Sentence(
                tokens=tuple(tokens), id=f"{sid}:{system}"
            )
    records = []
    for rec in doc.get("human_pairwise", []):
        try:
            records.append(
                PairwiseJudgment(
                    source_id=str(rec["source"]),
                    a=str(rec["a"]),
                    b=str(rec["b"]),
                    verdict=str(rec["verdict"]),
                )
            )
        except (KeyError, ValueError) as exc:
            raise SchemaError(f"bad pairwise record {rec!r}: {exc}") from exc
    return JudgmentSet(
        sources=sources,
        systems=systems,
        hypotheses=hypotheses,
        human_pairwise=tuple(records),
    )


def judgments_to_dict(judgments: JudgmentSet) -> dict:
    hyp: dict[str, dict[str, list[str]]] = {}
    for (sid, system), sentence in judgments.hypotheses.items():
        hyp.setdefault(sid, {})[system] = list(sentence.tokens)
    return {
        "sources": [{"id": s.id, "tokens": list(s.tokens)} for s in judgments.sources],
        "systems": list(judgments.systems),
        "hypotheses": hyp,
        "human_pairwise": [
            {"source": r.source_id, "a": r.a, "b": r.b, "verdict": r.verdict}
            for r in judgments.human_pairwise
        ],
    }
