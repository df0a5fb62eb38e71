from __future__ import annotations

import json

import pytest

from lesa.corpus import VIEWPOINT_BY_SOURCE, Record

POS_TAGS = ["ADJ", "ADP", "ADV", "AUX", "DET", "NOUN", "NUM", "PRON", "PROPN", "VERB"]
DEP_TAGS = ["amod", "case", "det", "nsubj", "obj", "obl", "root", "advmod", "nummod"]

_SOURCE_CYCLE = ["TWR", "OC", "PE"]


def make_record(
    rec_id: str,
    tokens: list[str],
    upos: list[str],
    label,
    source: str = "TWR",
    deprel: list[str] | None = None,
    head: list[int] | None = None,
    text: str | None = None,
) -> Record:
    n = len(tokens)
    if deprel is None:
        deprel = ["root"] + ["obj"] * (n - 1)
    if head is None:
        head = [0] + [1] * (n - 1)
    return Record(
        id=rec_id,
        text=text if text is not None else " ".join(tokens),
        tokens=tokens,
        upos=upos,
        deprel=deprel,
        head=head,
        label=label,
        source=source,
        viewpoint=VIEWPOINT_BY_SOURCE[source],
    )


def make_separable_corpus(n: int, seed: int) -> list[Record]:
    """Synthetic corpus whose claims carry a NUM tag and digit tokens.

    Records are spread evenly over one source per viewpoint; labels are
    balanced within each source.
    """
    import random

    rng = random.Random(seed)
    nouns = ["virus", "city", "hospital", "mask", "river", "garden", "letter", "signal"]
    verbs = ["spreads", "closes", "reports", "shows", "keeps", "finds"]
    adjs = ["new", "old", "large", "small", "quiet", "rapid"]
    records = []
    for i in range(n):
        source = _SOURCE_CYCLE[i % 3]
        label = 1 if (i // 3) % 2 == 0 else 0
        subject = rng.choice(nouns)
        verb = rng.choice(verbs)
        obj = rng.choice(nouns)
        adj = rng.choice(adjs)
        if label == 1:
            count = rng.randint(2, 900)
            tokens = ["the", subject, verb, str(count), adj, obj]
            upos = ["DET", "NOUN", "VERB", "NUM", "ADJ", "NOUN"]
            deprel = ["det", "nsubj", "root", "nummod", "amod", "obj"]
            head = [2, 3, 0, 6, 6, 3]
        else:
            tokens = ["the", subject, verb, "a", adj, obj]
            upos = ["DET", "NOUN", "VERB", "DET", "ADJ", "NOUN"]
            deprel = ["det", "nsubj", "root", "det", "amod", "obj"]
            head = [2, 3, 0, 6, 6, 3]
        records.append(
            make_record(
                f"syn-{i:04d}",
                tokens,
                upos,
                label,
                source=source,
                deprel=deprel,
                head=head,
            )
        )
    return records


def write_jsonl(path, rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")


@pytest.fixture
def separable_corpus():
    return make_separable_corpus(120, seed=7)
