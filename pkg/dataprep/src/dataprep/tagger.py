"""POS/dependency taggers.

`rule` is a self-contained deterministic English tagger: a closed-class
lexicon plus suffix heuristics for the universal POS inventory, and a flat
head-attachment scheme producing one root (head 0) per sentence with all
other heads pointing at valid 1-based token indices. `spacy` delegates to
an installed spaCy pipeline when one is available.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from . import ExportError

DETERMINERS = {"the", "a", "an", "this", "that", "these", "those", "my", "your", "his", "its", "our", "their", "every", "some", "any", "no", "each"}
ADPOSITIONS = {"in", "on", "at", "of", "for", "with", "from", "to", "by", "about", "against", "between", "into", "through", "during", "before", "after", "above", "below", "under", "over", "near"}
PRONOUNS = {"i", "you", "he", "she", "it", "we", "they", "me", "him", "her", "us", "them", "who", "what", "which", "someone", "everyone", "nobody", "anything", "something"}
AUXILIARIES = {"is", "are", "was", "were", "be", "been", "being", "am", "do", "does", "did", "have", "has", "had", "will", "would", "can", "could", "may", "might", "must", "shall", "should"}
COORDINATORS = {"and", "or", "but", "nor", "yet"}
SUBORDINATORS = {"if", "because", "while", "although", "since", "unless", "whether", "that", "when", "as"}
PARTICLES = {"not", "n't"}
ADVERBS = {"very", "never", "always", "often", "soon", "now", "then", "here", "there", "too", "also", "just", "still", "really", "quite", "fast", "daily"}
NUMBER_WORDS = {"zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "hundred", "thousand", "million", "billion"}

VERB_SUFFIXES = ("ise", "ize", "ate", "ify")
ADJ_SUFFIXES = ("ous", "ful", "ive", "al", "ic", "able", "ible", "ant", "ent", "less", "ish")

_PUNCT_RE = re.compile(r"^[^\w\s]+$")
_DIGIT_RE = re.compile(r"\d")


def tokenize(text: str) -> list[str]:
    """Whitespace tokens with trailing sentence punctuation split off."""
    tokens = []
    for raw in text.split():
        core = raw
        tail = ""
        while core and core[-1] in ".,!?;:":
            tail = core[-1] + tail
            core = core[:-1]
        if core:
            tokens.append(core)
        for ch in tail:
            tokens.append(ch)
    return tokens


def tag_upos(tokens: list[str]) -> list[str]:
    tags = []
    for i, token in enumerate(tokens):
        lowered = token.lower()
        if _PUNCT_RE.match(token):
            tags.append("PUNCT")
        elif _DIGIT_RE.search(token) and not any(c.isalpha() for c in token):
            tags.append("NUM")
        elif lowered in NUMBER_WORDS:
            tags.append("NUM")
        elif lowered in DETERMINERS:
            tags.append("DET")
        elif lowered in ADPOSITIONS:
            tags.append("ADP")
        elif lowered in PRONOUNS:
            tags.append("PRON")
        elif lowered in AUXILIARIES:
            tags.append("AUX")
        elif lowered in COORDINATORS:
            tags.append("CCONJ")
        elif lowered in SUBORDINATORS:
            tags.append("SCONJ")
        elif lowered in PARTICLES:
            tags.append("PART")
        elif lowered in ADVERBS or lowered.endswith("ly"):
            tags.append("ADV")
        elif lowered.endswith(("ing", "ed")) or lowered.endswith(VERB_SUFFIXES):
            tags.append("VERB")
        elif lowered.endswith("s") and len(lowered) > 3 and i > 0 and tags[i - 1] in ("NOUN", "PRON", "PROPN"):
            # simple 3rd-person singular verb after a nominal
            tags.append("VERB")
        elif lowered.endswith(ADJ_SUFFIXES):
            tags.append("ADJ")
        elif token[:1].isupper() and i > 0:
            tags.append("PROPN")
        else:
            tags.append("NOUN")
    return tags


def parse_heads(tokens: list[str], tags: list[str]) -> tuple[list[str], list[int]]:
    """Flat dependency structure: one root, valid 1-based head indices."""
    n = len(tokens)
    root_idx = next((i for i, t in enumerate(tags) if t == "VERB"), None)
    if root_idx is None:
        root_idx = next((i for i, t in enumerate(tags) if t == "AUX"), None)
    if root_idx is None:
        root_idx = next((i for i, t in enumerate(tags) if t in ("NOUN", "PROPN")), 0)

    def next_nominal(start: int) -> int | None:
        for j in range(start + 1, n):
            if tags[j] in ("NOUN", "PROPN", "PRON", "NUM"):
                return j
        return None

    deprel = ["dep"] * n
    head = [root_idx + 1] * n
    for i in range(n):
        if i == root_idx:
            deprel[i] = "root"
            head[i] = 0
            continue
        tag = tags[i]
        if tag == "DET":
            target = next_nominal(i)
            deprel[i] = "det"
            head[i] = (target + 1) if target is not None else root_idx + 1
        elif tag == "ADJ":
            target = next_nominal(i)
            deprel[i] = "amod"
            head[i] = (target + 1) if target is not None else root_idx + 1
        elif tag == "NUM":
            target = next_nominal(i)
            deprel[i] = "nummod"
            head[i] = (target + 1) if target is not None else root_idx + 1
        elif tag == "ADP":
            target = next_nominal(i)
            deprel[i] = "case"
            head[i] = (target + 1) if target is not None else root_idx + 1
        elif tag in ("NOUN", "PROPN", "PRON"):
            deprel[i] = "nsubj" if i < root_idx else "obj"
        elif tag == "AUX":
            deprel[i] = "aux"
        elif tag == "ADV":
            deprel[i] = "advmod"
        elif tag == "CCONJ":
            deprel[i] = "cc"
        elif tag == "SCONJ":
            deprel[i] = "mark"
        elif tag == "PART":
            deprel[i] = "advmod"
        elif tag == "PUNCT":
            deprel[i] = "punct"
        elif tag == "VERB":
            deprel[i] = "conj"
        if head[i] == i + 1:
            # never self-attach; fall back to the root
            head[i] = root_idx + 1 if i != root_idx else 0
    return deprel, head


@dataclass
class Tagged:
    tokens: list[str]
    upos: list[str]
    deprel: list[str]
    head: list[int]


class RuleTagger:
    name = "rule"
    version = "1"

    def tag(self, text: str) -> Tagged:
        tokens = tokenize(text)
        if not tokens:
            raise ExportError("no tokens after tokenization")
        tags = tag_upos(tokens)
        deprel, head = parse_heads(tokens, tags)
        return Tagged(tokens=tokens, upos=tags, deprel=deprel, head=head)


class SpacyTagger:
    name = "spacy"

    def __init__(self, model: str = "en_core_web_sm"):
        try:
            import spacy
        except ImportError as exc:
            raise ExportError("tagger 'spacy' requested but spacy is not installed") from exc
        self._nlp = spacy.load(model)
        self.version = getattr(self._nlp.meta, "get", lambda *_: "unknown")("version", "unknown")

    def tag(self, text: str) -> Tagged:
        doc = self._nlp(text)
        tokens = [t.text for t in doc]
        if not tokens:
            raise ExportError("no tokens after tokenization")
        heads = [0 if t.head is t else t.head.i + 1 for t in doc]
        return Tagged(
            tokens=tokens,
            upos=[t.pos_ for t in doc],
            deprel=[t.dep_.lower() for t in doc],
            head=heads,
        )


def make_tagger(name: str):
    if name == "rule":
        return RuleTagger()
    if name == "spacy":
        return SpacyTagger()
    raise ExportError(f"unknown tagger {name!r}")
