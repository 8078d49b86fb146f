"""Token-level error-detection label taxonomies and edit projection.

Four taxonomies are bundled: binary (correct/incorrect), op4 (correct/
insertion/deletion/substitution), pos25 (correct + 24 type categories),
and full55 (correct + operation x category combinations). The category
tables are data, loaded from ``data/taxonomies.json``, and can be swapped
out for custom inventories.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

from .align import DELETE, INSERT, OP_PREFIX, SUBSTITUTE, Edit
from .corpus import Sentence
from .errors import DataError, EditError

CORRECT = "CORRECT"
TAXONOMY_NAMES = ("binary", "op4", "pos25", "full55")

_OP4_BY_OPERATION = {INSERT: "INS", DELETE: "DEL", SUBSTITUTE: "SUB"}
_OP4_BY_PREFIX = {"M": "INS", "U": "DEL", "R": "SUB"}


@dataclass(frozen=True)
class Taxonomy:
    """Ordered label inventory with CORRECT at index 0."""

    name: str
    labels: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        if not self.labels or self.labels[0] != CORRECT:
            raise ValueError("labels must start with CORRECT")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("labels must be unique")

    def __len__(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"label {label!r} not in taxonomy {self.name}") from None


@dataclass(frozen=True)
class LabeledSentence:
    """Tokens with one label index per token under a named taxonomy."""

    tokens: tuple[str, ...]
    labels: tuple[int, ...]
    taxonomy: str

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "labels", tuple(int(x) for x in self.labels))
        if len(self.tokens) != len(self.labels):
            raise ValueError("one label per token required")

    def label_strings(self, taxonomy: Taxonomy) -> tuple[str, ...]:
        return tuple(taxonomy.labels[i] for i in self.labels)


def _load_tables() -> dict:
    with resources.files("gecval.data").joinpath("taxonomies.json").open("r") as fp:
        return json.load(fp)


def build_taxonomies(tables: dict) -> dict[str, Taxonomy]:
    pos_cats = tuple(tables["pos25_categories"])
    full_cats = tuple(tables["full55_categories"])
    combos = tuple(
        f"{prefix}:{cat}" for prefix in ("M", "U", "R") for cat in full_cats
    )
    return {
        "binary": Taxonomy("binary", (CORRECT, "INCORRECT")),
        "op4": Taxonomy("op4", (CORRECT, "INS", "DEL", "SUB")),
        "pos25": Taxonomy("pos25", (CORRECT,) + pos_cats),
        "full55": Taxonomy("full55", (CORRECT,) + combos),
    }


_BUILTIN: dict[str, Taxonomy] | None = None


def get_taxonomy(name: str) -> Taxonomy:
    global _BUILTIN
    if _BUILTIN is None:
        _BUILTIN = build_taxonomies(_load_tables())
    try:
        return _BUILTIN[name]
    except KeyError:
        raise KeyError(f"unknown taxonomy {name!r}; expected one of {TAXONOMY_NAMES}") from None


def _etype_category(edit: Edit) -> str:
    etype = edit.etype or "OTHER"
    return etype.split(":", 1)[1] if ":" in etype else etype


def edit_label(edit: Edit, taxonomy: Taxonomy) -> int:
    """Label index a token owned by this edit receives."""
    if taxonomy.name == "binary":
        return 1
    if taxonomy.name == "op4":
        return taxonomy.index(_OP4_BY_OPERATION[edit.operation])
    category = _etype_category(edit)
    if taxonomy.name == "pos25":
        if category in taxonomy.labels:
            return taxonomy.index(category)
        return taxonomy.index("OTHER")
    if taxonomy.name == "full55":
        label = f"{OP_PREFIX[edit.operation]}:{category}"
        if label in taxonomy.labels:
            return taxonomy.index(label)
        return taxonomy.index(f"{OP_PREFIX[edit.operation]}:OTHER")
    raise KeyError(f"unknown taxonomy {taxonomy.name!r}")


def project_labels(source: Sentence, edits, taxonomy: Taxonomy,
                   empty_placeholder: str | None = None) -> LabeledSentence:
    """Project an edit list onto per-token labels of the source.

    Tokens inside a deletion or substitution span take that edit's label.
    An insertion labels the source token immediately right of the insertion
    point (the last token for an insertion at the end); span labels win
    when both apply. An insertion into an empty source needs
    ``empty_placeholder`` to stand in as the single labeled token.
    """
    tokens = source.tokens
    n = len(tokens)
    edits = list(edits)

    if n == 0:
        if not edits:
            return LabeledSentence((), (), taxonomy.name)
        if any(e.operation != INSERT for e in edits):
            raise EditError("non-insert edit on an empty source")
        if empty_placeholder is None:
            raise DataError(
                "insertion into an empty source requires an empty_placeholder token"
            )
        return LabeledSentence(
            (empty_placeholder,), (edit_label(edits[0], taxonomy),), taxonomy.name
        )

    owner: list[Edit | None] = [None] * n
    for e in edits:
        if e.operation == INSERT:
            continue
        for i in range(*e.src_span):
            owner[i] = e
    for e in edits:
        if e.operation != INSERT:
            continue
        anchor = min(e.src_span[0], n - 1)
        if owner[anchor] is None:
            owner[anchor] = e
    labels = tuple(
        0 if e is None else edit_label(e, taxonomy) for e in owner
    )
    return LabeledSentence(tokens, labels, taxonomy.name)


def collapse_label(label: str, target: Taxonomy) -> str:
    """Map one full55 label string into a coarser taxonomy."""
    if label == CORRECT:
        return CORRECT
    prefix, category = label.split(":", 1)
    if target.name == "binary":
        return "INCORRECT"
    if target.name == "op4":
        return _OP4_BY_PREFIX[prefix]
    if target.name == "pos25":
        return category if category in target.labels else "OTHER"
    raise KeyError(f"cannot collapse into taxonomy {target.name!r}")


def taxonomy_collapse(labeled: LabeledSentence, target: Taxonomy,
                      source_taxonomy: Taxonomy | None = None) -> LabeledSentence:
    """Collapse full55 labels into binary, op4, or pos25 labels."""
    src_tax = source_taxonomy or get_taxonomy(labeled.taxonomy)
    if src_tax.name != "full55":
        raise ValueError("collapse is defined from the full55 taxonomy only")
    labels = tuple(
        target.index(collapse_label(src_tax.labels[i], target)) for i in labeled.labels
    )
    return LabeledSentence(labeled.tokens, labels, target.name)


# ---------------------------------------------------------------------------
# CoNLL-style serialization: "token<TAB>label" lines, blank-line separated.
# ---------------------------------------------------------------------------

def format_labeled(sentences, taxonomy: Taxonomy) -> str:
    blocks = []
    for sent in sentences:
        lines = [
            f"{tok}\t{taxonomy.labels[lab]}" for tok, lab in zip(sent.tokens, sent.labels)
        ]
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n" if blocks else ""


def parse_labeled(text: str, taxonomy: Taxonomy) -> list[LabeledSentence]:
    sentences = []
    tokens: list[str] = []
    labels: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if raw.strip() == "":
            if tokens:
                sentences.append(LabeledSentence(tuple(tokens), tuple(labels), taxonomy.name))
                tokens, labels = [], []
            continue
        parts = raw.split("\t")
        if len(parts) != 2:
            raise DataError(f"line {lineno}: expected token<TAB>label")
        tokens.append(parts[0])
        labels.append(taxonomy.index(parts[1]))
    if tokens:
        sentences.append(LabeledSentence(tuple(tokens), tuple(labels), taxonomy.name))
    return sentences
