#!/usr/bin/env python3
"""Regenerate the bundled test fixtures (seeded, deterministic).

Writes tests/fixtures/roundtrip_corpus.tsv: ~1200 noisy parallel pairs
exercising token drops, insertions, substitutions, adjacent swaps, case
flips, and character-level typos.
"""
from __future__ import annotations

import random
from pathlib import Path

WORDS = [
    "the", "a", "an", "this", "that", "these", "my", "his", "her", "our",
    "i", "you", "he", "she", "it", "we", "they",
    "is", "are", "was", "were", "have", "has", "had", "will", "would",
    "can", "could", "do", "does", "did",
    "go", "make", "know", "think", "take", "see", "come", "want", "look",
    "use", "find", "give", "tell", "work", "call", "try", "ask", "need",
    "feel", "become", "leave", "put", "mean", "keep", "let", "begin",
    "seem", "help", "talk", "turn", "start", "play", "move", "like",
    "live", "believe", "hold", "bring", "happen", "write", "provide",
    "people", "time", "year", "way", "day", "man", "thing", "woman",
    "life", "child", "world", "school", "state", "family", "student",
    "group", "country", "problem", "hand", "part", "place", "case",
    "week", "company", "system", "program", "question", "government",
    "number", "night", "point", "home", "water", "room", "mother",
    "area", "money", "story", "fact", "month", "lot", "right", "study",
    "book", "eye", "job", "word", "business", "issue", "side", "kind",
    "good", "new", "first", "last", "long", "great", "little", "own",
    "other", "old", "big", "high", "different", "small", "large",
    "important", "happy", "healthy", "emotional", "mental", "serious",
    "quickly", "slowly", "really", "very", "too", "also", "well",
    "in", "on", "at", "by", "for", "with", "about", "from", "to", "of",
    "and", "or", "but", "because", "when", "while", "without",
]
PUNCT = [".", ",", "!", "?", ";"]


def typo(word: str, rng: random.Random) -> str:
    if len(word) < 2:
        return word + word[-1] if word else "x"
    kind = rng.randrange(4)
    pos = rng.randrange(len(word) - 1)
    if kind == 0:  # drop a character
        return word[:pos] + word[pos + 1 :]
    if kind == 1:  # double a character
        return word[:pos] + word[pos] + word[pos:]
    if kind == 2:  # swap adjacent characters
        if word[pos] == word[pos + 1]:
            return word[:pos] + word[pos + 1 :]
        return word[: pos] + word[pos + 1] + word[pos] + word[pos + 2 :]
    return word[:pos] + rng.choice("aeiou") + word[pos + 1 :]  # replace


def corrupt(tokens: list[str], rng: random.Random) -> list[str]:
    out = list(tokens)
    n_ops = rng.randrange(0, 5)
    for _ in range(n_ops):
        if not out:
            break
        op = rng.randrange(6)
        pos = rng.randrange(len(out))
        if op == 0:
            out.pop(pos)
        elif op == 1:
            out.insert(pos, rng.choice(WORDS))
        elif op == 2:
            out[pos] = rng.choice(WORDS)
        elif op == 3 and pos + 1 < len(out) and out[pos] != out[pos + 1]:
            out[pos], out[pos + 1] = out[pos + 1], out[pos]
        elif op == 4:
            out[pos] = typo(out[pos], rng)
        else:
            out[pos] = out[pos].upper() if out[pos].islower() else out[pos].lower()
    return out


def make_roundtrip_corpus(fixtures: Path) -> None:
    rng = random.Random(20240612)
    rows = []
    for _ in range(1200):
        length = rng.randrange(4, 18)
        base = [rng.choice(WORDS) for _ in range(length)] + [rng.choice(PUNCT)]
        noisy = corrupt(base, rng)
        if not noisy:
            noisy = ["x"]
        rows.append(f"{' '.join(noisy)}\t{' '.join(base)}")
    # A few hand-picked shapes: identity, single edits, heavy rewrites.
    rows.append("a b c .\ta b c .")
    rows.append("I like cats .\tI dislike cats .")
    rows.append(
        "I think the family will stay mentally healty as it is , without having emtional stress ."
        "\tI think the family will stay mentally healthy without having emotional stress ."
    )
    out = fixtures / "roundtrip_corpus.tsv"
    out.write_text("\n".join(rows) + "\n", encoding="utf-8")
    print(f"wrote {len(rows)} pairs to {out}")


def make_tiny_parallel(fixtures: Path) -> None:
    """Small training corpus: every sentence has one to three token errors."""
    rng = random.Random(7151)
    rows = []
    for _ in range(48):
        length = rng.randrange(5, 11)
        base = [rng.choice(WORDS) for _ in range(length)] + ["."]
        noisy = list(base)
        for _ in range(rng.randrange(1, 4)):
            pos = rng.randrange(len(noisy) - 1)
            kind = rng.randrange(3)
            if kind == 0:
                noisy[pos] = typo(noisy[pos], rng)
            elif kind == 1:
                noisy[pos] = rng.choice(WORDS)
            else:
                noisy.insert(pos, rng.choice(WORDS))
        rows.append(f"{' '.join(noisy)}\t{' '.join(base)}")
    out = fixtures / "tiny_parallel.tsv"
    out.write_text("\n".join(rows) + "\n", encoding="utf-8")
    print(f"wrote {len(rows)} pairs to {out}")


def make_judgments(fixtures: Path) -> None:
    """Twelve systems over six sources with graded output quality.

    System k repairs the first k (of three) planted errors; human verdicts
    prefer the output with more repairs (with a little seeded noise), which
    yields a clean 12-system ranking for window/pairwise analyses.
    """
    import json

    rng = random.Random(90125)
    systems = [f"sys{i:02d}" for i in range(12)]
    sources = []
    hypotheses = {}
    quality = {}
    for s_idx in range(6):
        length = rng.randrange(8, 12)
        clean = [rng.choice(WORDS) for _ in range(length)] + ["."]
        positions = rng.sample(range(length), 3)
        noisy = list(clean)
        for pos in positions:
            noisy[pos] = typo(clean[pos], rng)
        sid = f"src{s_idx}"
        sources.append({"id": sid, "tokens": noisy})
        for k, system in enumerate(systems):
            repaired = list(noisy)
            n_fixed = min(3, k // 4 + (1 if k % 4 > rng.randrange(1, 4) else 0))
            for pos in sorted(positions)[:n_fixed]:
                repaired[pos] = clean[pos]
            hypotheses.setdefault(sid, {})[system] = repaired
            quality[(sid, system)] = n_fixed + 0.05 * k
    records = []
    for sid in hypotheses:
        for i, sys_a in enumerate(systems):
            for sys_b in systems[i + 1 :]:
                qa, qb = quality[(sid, sys_a)], quality[(sid, sys_b)]
                if abs(qa - qb) < 1e-9:
                    verdict = "tie"
                elif rng.random() < 0.9:
                    verdict = "a" if qa > qb else "b"
                else:
                    verdict = "b" if qa > qb else "a"
                records.append(
                    {"source": sid, "a": sys_a, "b": sys_b, "verdict": verdict}
                )
    doc = {
        "sources": sources,
        "systems": systems,
        "hypotheses": hypotheses,
        "human_pairwise": records,
    }
    out = fixtures / "judgments.json"
    out.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {len(records)} judgments for {len(systems)} systems to {out}")

    # Two complete external metric score files over the same grid.
    good_lines = []
    noisy_lines = []
    for sid in sorted(hypotheses):
        for system in sorted(systems):
            q = quality[(sid, system)]
            good = q / 3.5 + rng.uniform(-0.02, 0.02)
            noise = 0.5 * rng.random() + 0.15 * q
            good_lines.append(f"{sid}\t{system}\t{good!r}")
            noisy_lines.append(f"{sid}\t{system}\t{noise!r}")
    (fixtures / "external_metric.tsv").write_text(
        "\n".join(good_lines) + "\n", encoding="utf-8"
    )
    (fixtures / "external_noisy.tsv").write_text(
        "\n".join(noisy_lines) + "\n", encoding="utf-8"
    )
    print(f"wrote external metric score files to {fixtures}")


def main() -> None:
    fixtures = Path(__file__).resolve().parent.parent / "tests" / "fixtures"
    fixtures.mkdir(parents=True, exist_ok=True)
    make_roundtrip_corpus(fixtures)
    make_tiny_parallel(fixtures)
    make_judgments(fixtures)


if __name__ == "__main__":
    main()
