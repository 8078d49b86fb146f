"""Token alignment, edit extraction, edit application, and edit typing.

Alignment is a minimum-cost dynamic program over token sequences with a
lexical substitution cost. Edits are maximal same-operation runs of
non-match cells; adjacent insertion and deletion runs fuse into a single
substitution. Applying a full extracted edit set to the source always
reproduces the correction token for token.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from functools import lru_cache

from .errors import EditError
from .postag import default_tagger

INSERT = "insert"
DELETE = "delete"
SUBSTITUTE = "substitute"

# ERRANT-style operation prefixes: M(issing) for insertions, U(nnecessary)
# for deletions, R(eplacement) for substitutions.
OP_PREFIX = {INSERT: "M", DELETE: "U", SUBSTITUTE: "R"}

_MATCH, _SUB, _DEL, _INS = 0, 1, 2, 3


def _tokens(x) -> tuple[str, ...]:
    return tuple(x.tokens) if hasattr(x, "tokens") else tuple(x)


def _with_tokens(template, tokens: tuple[str, ...]):
    if hasattr(template, "tokens"):
        return dataclasses.replace(template, tokens=tokens)
    return tokens


@dataclass(frozen=True)
class AlignmentCosts:
    """Cost model for token alignment.

    Substitution of distinct tokens costs ``substitute_base`` plus the
    normalized character edit distance (in [0, 1]); tokens differing only
    by case cost ``case_substitute`` instead.
    """

    match: float = 0.0
    insert: float = 1.0
    delete: float = 1.0
    substitute_base: float = 1.0
    case_substitute: float = 0.1


DEFAULT_COSTS = AlignmentCosts()


@dataclass(frozen=True)
class AlignOp:
    """One alignment cell: kind in {match, sub, ins, del} plus indices.

    ``i`` is the consumed source index (None for ins), ``j`` the consumed
    target index (None for del).
    """

    kind: str
    i: int | None
    j: int | None
    cost: float


@dataclass(frozen=True)
class AlignmentTrace:
    source: tuple[str, ...]
    target: tuple[str, ...]
    ops: tuple[AlignOp, ...]
    cost: float

    def replay(self) -> tuple[tuple[str, ...], tuple[str, ...]]:
        """Reconstruct both sequences from the op list."""
        src = [op.i for op in self.ops if op.i is not None]
        tgt = [op.j for op in self.ops if op.j is not None]
        return (
            tuple(self.source[i] for i in src),
            tuple(self.target[j] for j in tgt),
        )


@dataclass(frozen=True)
class Edit:
    """Span replacement transforming the source toward the correction.

    Spans are half-open token index ranges. Insertions have an empty
    src_span, deletions an empty tgt_span, substitutions neither.
    """

    src_span: tuple[int, int]
    tgt_span: tuple[int, int]
    operation: str
    src_tokens: tuple[str, ...]
    tgt_tokens: tuple[str, ...]
    etype: str = ""

    def __post_init__(self):
        object.__setattr__(self, "src_tokens", tuple(self.src_tokens))
        object.__setattr__(self, "tgt_tokens", tuple(self.tgt_tokens))
        object.__setattr__(self, "src_span", tuple(self.src_span))
        object.__setattr__(self, "tgt_span", tuple(self.tgt_span))
        s0, s1 = self.src_span
        t0, t1 = self.tgt_span
        if not (0 <= s0 <= s1) or not (0 <= t0 <= t1):
            raise EditError(f"invalid spans {self.src_span} {self.tgt_span}")
        if len(self.src_tokens) != s1 - s0 or len(self.tgt_tokens) != t1 - t0:
            raise EditError("token count does not match span width")
        src_empty, tgt_empty = s0 == s1, t0 == t1
        expected = {
            (True, False): INSERT,
            (False, True): DELETE,
            (False, False): SUBSTITUTE,
        }.get((src_empty, tgt_empty))
        if expected is None:
            raise EditError("edit with empty source and target spans")
        if self.operation != expected:
            raise EditError(f"operation {self.operation!r} inconsistent with spans")


def char_edit_distance(a: str, b: str) -> int:
    """Plain Levenshtein distance on characters."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i] + [0] * len(b)
        for j, cb in enumerate(b, start=1):
            cur[j] = min(
                prev[j - 1] + (ca != cb),
                prev[j] + 1,
                cur[j - 1] + 1,
            )
        prev = cur
    return prev[-1]


@lru_cache(maxsize=65536)
def normalized_char_distance(a: str, b: str) -> float:
    """char_edit_distance normalized by the longer token length."""
    longest = max(len(a), len(b))
    if longest == 0:
        return 0.0
    return char_edit_distance(a, b) / longest


def substitution_cost(a: str, b: str, costs: AlignmentCosts = DEFAULT_COSTS) -> float:
    if a.lower() == b.lower():
        return costs.case_substitute
    return costs.substitute_base + normalized_char_distance(a, b)


def align_tokens(source, correction, costs: AlignmentCosts = DEFAULT_COSTS) -> AlignmentTrace:
    """Minimum-cost alignment between two token sequences.

    Ties are broken preferring match > sub > del > ins at equal cost, which
    makes the trace deterministic.
    """
    s = _tokens(source)
    c = _tokens(correction)
    n, m = len(s), len(c)
    ins_cost, del_cost = costs.insert, costs.delete

    # cost[i][j] = best cost aligning s[:i] with c[:j]; back[i][j] the op.
    cost = [[0.0] * (m + 1) for _ in range(n + 1)]
    back = [[_MATCH] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        cost[i][0] = i * del_cost
        back[i][0] = _DEL
    for j in range(1, m + 1):
        cost[0][j] = j * ins_cost
        back[0][j] = _INS
    for i in range(1, n + 1):
        si = s[i - 1]
        row = cost[i]
        above = cost[i - 1]
        brow = back[i]
        for j in range(1, m + 1):
            cj = c[j - 1]
            if si == cj:
                best = above[j - 1] + costs.match
                op = _MATCH
            else:
                best = above[j - 1] + substitution_cost(si, cj, costs)
                op = _SUB
            alt = above[j] + del_cost
            if alt < best:
                best, op = alt, _DEL
            alt = row[j - 1] + ins_cost
            if alt < best:
                best, op = alt, _INS
            row[j] = best
            brow[j] = op

    ops = []
    i, j = n, m
    while i > 0 or j > 0:
        op = back[i][j]
        if op == _MATCH:
            ops.append(AlignOp("match", i - 1, j - 1, costs.match))
            i, j = i - 1, j - 1
        elif op == _SUB:
            ops.append(AlignOp("sub", i - 1, j - 1, substitution_cost(s[i - 1], c[j - 1], costs)))
            i, j = i - 1, j - 1
        elif op == _DEL:
            ops.append(AlignOp("del", i - 1, None, del_cost))
            i -= 1
        else:
            ops.append(AlignOp("ins", None, j - 1, ins_cost))
            j -= 1
    ops.reverse()
    return AlignmentTrace(source=s, target=c, ops=tuple(ops), cost=cost[n][m])


@dataclass
class _Run:
    kind: str
    src_start: int
    src_end: int
    tgt_start: int
    tgt_end: int


def _collect_runs(trace: AlignmentTrace) -> list[list[_Run]]:
    """Group non-match cells into same-kind runs, segmented at matches."""
    segments: list[list[_Run]] = []
    current: list[_Run] = []
    si = ti = 0
    for op in trace.ops:
        if op.kind == "match":
            if current:
                segments.append(current)
                current = []
            si, ti = op.i + 1, op.j + 1
            continue
        consumed_s = 1 if op.kind in ("sub", "del") else 0
        consumed_t = 1 if op.kind in ("sub", "ins") else 0
        if current and current[-1].kind == op.kind:
            current[-1].src_end += consumed_s
            current[-1].tgt_end += consumed_t
        else:
            current.append(_Run(op.kind, si, si + consumed_s, ti, ti + consumed_t))
        si += consumed_s
        ti += consumed_t
    if current:
        segments.append(current)
    return segments


def extract_edits(trace: AlignmentTrace, tagger=None, lexicon=None) -> list[Edit]:
    """Turn an alignment trace into a canonical, classified edit list.

    Runs of the same operation become one edit each; an insertion run
    directly adjacent to a deletion run fuses into a substitution. Every
    edit is classified with :func:`classify_edit`.
    """
    s, c = trace.source, trace.target
    edits: list[Edit] = []
    for segment in _collect_runs(trace):
        merged: list[_Run] = []
        for run in segment:
            if merged and {merged[-1].kind, run.kind} == {"ins", "del"}:
                prev = merged.pop()
                merged.append(
                    _Run(
                        "sub",
                        min(prev.src_start, run.src_start),
                        max(prev.src_end, run.src_end),
                        min(prev.tgt_start, run.tgt_start),
                        max(prev.tgt_end, run.tgt_end),
                    )
                )
            else:
                merged.append(run)
        for run in merged:
            src_empty = run.src_start == run.src_end
            tgt_empty = run.tgt_start == run.tgt_end
            if src_empty and tgt_empty:
                continue
            operation = INSERT if src_empty else DELETE if tgt_empty else SUBSTITUTE
            edit = Edit(
                src_span=(run.src_start, run.src_end),
                tgt_span=(run.tgt_start, run.tgt_end),
                operation=operation,
                src_tokens=s[run.src_start:run.src_end],
                tgt_tokens=c[run.tgt_start:run.tgt_end],
            )
            edits.append(
                dataclasses.replace(edit, etype=classify_edit(edit, tagger, lexicon))
            )
    return edits


def edits_from_pair(source, correction, costs: AlignmentCosts = DEFAULT_COSTS,
                    tagger=None, lexicon=None) -> list[Edit]:
    """Align a (source, correction) pair and extract classified edits."""
    return extract_edits(align_tokens(source, correction, costs), tagger, lexicon)


def apply_edits(source, edits):
    """Apply non-overlapping edits to the source token sequence.

    Returns the same container type as the input (Sentence in, Sentence
    out). Raises EditError on out-of-bounds spans, overlap, or edits whose
    recorded source tokens do not match the sentence.
    """
    toks = list(_tokens(source))
    n = len(toks)
    ordered = sorted(edits, key=lambda e: (e.src_span[0], e.src_span[1]))
    prev_end = -1
    for e in ordered:
        s0, s1 = e.src_span
        if s1 > n:
            raise EditError(f"edit span {e.src_span} outside source of length {n}")
        if s0 < prev_end:
            raise EditError(f"overlapping edits at source index {s0}")
        prev_end = max(prev_end, s1)
        if tuple(toks[s0:s1]) != e.src_tokens:
            raise EditError(
                f"edit source tokens {e.src_tokens} do not match sentence slice"
            )
    for e in reversed(ordered):
        s0, s1 = e.src_span
        toks[s0:s1] = list(e.tgt_tokens)
    return _with_tokens(source, tuple(toks))


def classify_edit(edit: Edit, tagger=None, lexicon=None) -> str:
    """Assign an ERRANT-style error type string to an edit.

    The type is an operation prefix (M:/U:/R:) plus a category: ORTH for
    case-only substitutions, WO for reordered token spans, SPELL for close
    out-of-lexicon single-token substitutions with matching POS, otherwise
    the common POS of the spanned tokens, or OTHER.
    """
    if tagger is None:
        tagger = default_tagger()
    known = lexicon if lexicon is not None else getattr(tagger, "is_known", None)
    prefix = OP_PREFIX[edit.operation]
    return f"{prefix}:{_category(edit, tagger, known)}"


def _category(edit: Edit, tagger, known) -> str:
    src, tgt = edit.src_tokens, edit.tgt_tokens
    if edit.operation == SUBSTITUTE:
        if " ".join(src).lower() == " ".join(tgt).lower():
            return "ORTH"
        if (
            len(src) == len(tgt) >= 2
            and sorted(t.lower() for t in src) == sorted(t.lower() for t in tgt)
        ):
            return "WO"
        if len(src) == 1 and len(tgt) == 1:
            if callable(known):
                unknown = not known(src[0])
            else:
                unknown = src[0].lower() not in (known or ())
            if (
                unknown
                and normalized_char_distance(src[0], tgt[0]) <= 0.5
                and tagger(src[0]) == tagger(tgt[0])
            ):
                return "SPELL"
        span = src + tgt
    elif edit.operation == DELETE:
        span = src
    else:
        span = tgt
    tags = [tagger(t) for t in span]
    if tags and all(t == tags[0] for t in tags) and tags[0]:
        return tags[0]
    return "OTHER"


def validate_edit_list(edits, source_len: int) -> None:
    """Check canonical form: sorted, in-bounds, non-overlapping."""
    prev_end = -1
    prev_start = -1
    for e in edits:
        s0, s1 = e.src_span
        if s1 > source_len:
            raise EditError(
                f"edit span {e.src_span} outside source of length {source_len}"
            )
        if s0 < prev_start:
            raise EditError("edits not sorted by source start")
        if s0 < prev_end:
            raise EditError(f"overlapping edits at source index {s0}")
        prev_start, prev_end = s0, max(prev_end, s1)
