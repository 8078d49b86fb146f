"""Coarse rule-based POS tagging used by the edit classifier.

The default tagger is deliberately small: a closed-class lexicon plus
ordered suffix rules, covering the coarse categories the label taxonomies
need. Any callable mapping a token to a tag string can replace it.
"""
from __future__ import annotations

import json
from importlib import resources

_PUNCT_CHARS = set(".,;:!?\"'`()[]{}<>-/\\&%$#@*+=~^_|")
_CONTRACTION_SUFFIXES = ("'s", "'re", "'ve", "'ll", "'d", "'m", "n't")


def _load_lexicon_data():
    with resources.files("gecval.data").joinpath("lexicon.json").open("r") as fp:
        return json.load(fp)


class RulePosTagger:
    """Closed-class lexicon + suffix-rule tagger.

    Tags are drawn from {ADJ, ADV, CONJ, CONTR, DET, NOUN, PART, PREP,
    PRON, PUNCT, VERB}. Unmatched tokens default to NOUN. The tagger also
    carries a known-word set used for spelling-error detection.
    """

    def __init__(self, closed_class=None, suffix_rules=None, known_words=None):
        if closed_class is None or suffix_rules is None or known_words is None:
            data = _load_lexicon_data()
            closed_class = data["closed_class"] if closed_class is None else closed_class
            suffix_rules = data["suffix_rules"] if suffix_rules is None else suffix_rules
            known_words = data["known_words"] if known_words is None else known_words
        self._closed_class = dict(closed_class)
        self._suffix_rules = [(str(s), str(t)) for s, t in suffix_rules]
        self._known = {w.lower() for w in known_words}
        self._known.update(self._closed_class)

    def __call__(self, token: str) -> str:
        return self.tag(token)

    def tag(self, token: str) -> str:
        if not token:
            return "OTHER"
        if all(ch in _PUNCT_CHARS for ch in token):
            return "PUNCT"
        low = token.lower()
        if low in self._closed_class:
            return self._closed_class[low]
        if any(low.endswith(suf) for suf in _CONTRACTION_SUFFIXES):
            return "CONTR"
        if low[0].isdigit():
            return "NOUN"
        for suffix, tag in self._suffix_rules:
            # Require a stem of at least two characters so rules do not
            # fire on tokens that are mostly suffix.
            if len(low) >= len(suffix) + 2 and low.endswith(suffix):
                return tag
        return "NOUN"

    def is_known(self, token: str) -> bool:
        low = token.lower()
        if low in self._known:
            return True
        return all(ch in _PUNCT_CHARS for ch in token) or low[0].isdigit()


_default_tagger: RulePosTagger | None = None


def default_tagger() -> RulePosTagger:
    global _default_tagger
    if _default_tagger is None:
        _default_tagger = RulePosTagger()
    return _default_tagger
