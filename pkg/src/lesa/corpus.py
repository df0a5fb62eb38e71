"""Record model, ingestion, tweet preprocessing, dedup, splits and stats.

Records travel as JSON Lines with keys exactly
{"id","text","tokens","upos","deprel","head","label","source","viewpoint"?};
label is 0, 1 or "x" and head uses 0 for the root. The viewpoint is derived
from the source when absent.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DataError
from .nn.store import Rng

__all__ = [
    "Record",
    "Split",
    "SpellDictionary",
    "VIEWPOINTS",
    "VIEWPOINT_BY_SOURCE",
    "REJECTED",
    "parse_records",
    "write_records",
    "preprocess_tweet",
    "dedup",
    "split_records",
    "downsample",
    "dataset_stats",
]

VIEWPOINTS = ("noisy", "semi_noisy", "non_noisy")

VIEWPOINT_BY_SOURCE = {
    "TWR": "noisy",
    "OC": "semi_noisy",
    "WTP": "semi_noisy",
    "MT": "non_noisy",
    "PE": "non_noisy",
    "VG": "non_noisy",
    "WD": "non_noisy",
}

OBSCURE = "x"

# sentinel returned by preprocess_tweet for texts below the length thresholds
REJECTED = None

_RECORD_KEYS = {"id", "text", "tokens", "upos", "deprel", "head", "label", "source", "viewpoint"}


@dataclass
class Record:
    id: str
    text: str
    tokens: list[str]
    upos: list[str]
    deprel: list[str]
    head: list[int]
    label: int | str
    source: str
    viewpoint: str = ""

    def __post_init__(self):
        n = len(self.tokens)
        if n < 1:
            raise DataError(f"record {self.id}: empty token list")
        for name, seq in (("upos", self.upos), ("deprel", self.deprel), ("head", self.head)):
            if len(seq) != n:
                raise DataError(
                    f"record {self.id}: {name} length {len(seq)} != tokens length {n}"
                )
        for h in self.head:
            if not 0 <= h <= n:
                raise DataError(f"record {self.id}: head index {h} outside [0, {n}]")
        if self.label not in (0, 1, OBSCURE):
            raise DataError(f"record {self.id}: label must be 0, 1 or 'x', got {self.label!r}")
        if self.source not in VIEWPOINT_BY_SOURCE:
            raise DataError(f"record {self.id}: unknown source {self.source!r}")
        expected = VIEWPOINT_BY_SOURCE[self.source]
        if not self.viewpoint:
            self.viewpoint = expected
        elif self.viewpoint != expected:
            raise DataError(
                f"record {self.id}: viewpoint {self.viewpoint!r} conflicts with "
                f"source {self.source} ({expected})"
            )

    @property
    def n_tokens(self) -> int:
        return len(self.tokens)

    def as_dict(self) -> dict:
        return {
            "id": self.id,
            "text": self.text,
            "tokens": self.tokens,
            "upos": self.upos,
            "deprel": self.deprel,
            "head": self.head,
            "label": self.label,
            "source": self.source,
            "viewpoint": self.viewpoint,
        }


def parse_records(path: str | Path) -> list[Record]:
    """Load and validate a JSON Lines record file."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise DataError(f"{path}:{lineno}: expected an object")
            unknown = set(obj) - _RECORD_KEYS
            if unknown:
                raise DataError(f"{path}:{lineno}: unknown keys {sorted(unknown)}")
            missing = (_RECORD_KEYS - {"viewpoint"}) - set(obj)
            if missing:
                raise DataError(f"{path}:{lineno}: missing keys {sorted(missing)}")
            try:
                records.append(
                    Record(
                        id=str(obj["id"]),
                        text=obj["text"],
                        tokens=list(obj["tokens"]),
                        upos=list(obj["upos"]),
                        deprel=list(obj["deprel"]),
                        head=[int(h) for h in obj["head"]],
                        label=obj["label"],
                        source=obj["source"],
                        viewpoint=obj.get("viewpoint", ""),
                    )
                )
            except DataError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
    return records


def write_records(path: str | Path, records: list[Record]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.as_dict(), sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# spell correction (frequency dictionary, symmetric-delete candidate index)


class SpellDictionary:
    """Term-frequency dictionary with edit-distance-bounded lookup.

    Candidate generation uses the symmetric-delete strategy: every term is
    indexed under all of its deletes up to `max_edit_distance`; a query visits
    its own deletes and verifies true edit distance on the survivors. Words
    with no candidate inside the bound are kept unchanged.
    """

    def __init__(self, frequencies: dict[str, int], max_edit_distance: int = 2):
        if any(f <= 0 for f in frequencies.values()):
            raise DataError("spell dictionary frequencies must be positive")
        self.max_edit_distance = max_edit_distance
        self.frequencies = dict(frequencies)
        self._deletes: dict[str, list[str]] = {}
        for term in self.frequencies:
            for variant in _deletes_within(term, max_edit_distance):
                self._deletes.setdefault(variant, []).append(term)

    @classmethod
    def load(cls, path: str | Path, max_edit_distance: int = 2) -> "SpellDictionary":
        freqs: dict[str, int] = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) != 2:
                    raise DataError(f"{path}:{lineno}: expected 'term<TAB>frequency'")
                term, freq = parts
                try:
                    freqs[term] = int(freq)
                except ValueError as exc:
                    raise DataError(f"{path}:{lineno}: bad frequency {freq!r}") from exc
        return cls(freqs, max_edit_distance=max_edit_distance)

    def correct(self, word: str) -> str:
        """Best dictionary term within the distance bound, else `word`.

        Ranking: smallest edit distance first, then highest corpus frequency.
        Tokens containing digits and tokens shorter than three characters are
        returned untouched.
        """
        if len(word) < 3 or any(ch.isdigit() for ch in word):
            return word
        lowered = word.lower()
        if lowered in self.frequencies:
            return word
        best: tuple[int, int, str] | None = None
        seen: set[str] = set()
        for variant in _deletes_within(lowered, self.max_edit_distance):
            for term in self._deletes.get(variant, ()):
                if term in seen:
                    continue
                seen.add(term)
                dist = _edit_distance(lowered, term, self.max_edit_distance)
                if dist > self.max_edit_distance:
                    continue
                key = (dist, -self.frequencies[term], term)
                if best is None or key < best:
                    best = key
        return best[2] if best is not None else word


def _deletes_within(term: str, depth: int) -> set[str]:
    variants = {term}
    frontier = {term}
    for _ in range(depth):
        nxt = set()
        for word in frontier:
            for i in range(len(word)):
                nxt.add(word[:i] + word[i + 1 :])
        nxt -= variants
        variants |= nxt
        frontier = nxt
    return variants


def _edit_distance(a: str, b: str, cap: int) -> int:
    """Levenshtein distance, early-exiting once it must exceed `cap`."""
    if abs(len(a) - len(b)) > cap:
        return cap + 1
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        row_min = i
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            val = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
            cur.append(val)
            row_min = min(row_min, val)
        if row_min > cap:
            return cap + 1
        prev = cur
    return prev[-1]


# ---------------------------------------------------------------------------
# tweet preprocessing

MIN_CHARS = 20
MIN_WORDS = 4


def _is_noise_token(token: str) -> bool:
    lowered = token.lower()
    return (
        token.startswith("#")
        or token.startswith("@")
        or "://" in token
        or lowered.startswith("www.")
    )


def preprocess_tweet(text: str, dictionary: SpellDictionary | None = None) -> str | None:
    """Clean one raw tweet; returns REJECTED (None) below the length floor.

    Non-ASCII characters are stripped before token filtering so that a
    stripped prefix can never expose a fresh '#'/'@' token.
    """
    ascii_text = text.encode("ascii", errors="ignore").decode("ascii")
    kept = [tok for tok in ascii_text.split() if tok and not _is_noise_token(tok)]
    if dictionary is not None:
        kept = [dictionary.correct(tok) for tok in kept]
    cleaned = " ".join(kept)
    if len(cleaned) < MIN_CHARS or len(kept) < MIN_WORDS:
        return REJECTED
    return cleaned


def dedup(records: list[Record]) -> list[Record]:
    """Drop later records whose normalized text duplicates an earlier one."""
    seen: set[str] = set()
    out = []
    for rec in records:
        key = " ".join(rec.text.lower().split())
        if key in seen:
            continue
        seen.add(key)
        out.append(rec)
    return out


# ---------------------------------------------------------------------------
# splitting and balancing


@dataclass
class Split:
    train: set[str] = field(default_factory=set)
    val: set[str] = field(default_factory=set)
    test: set[str] = field(default_factory=set)
    seed: int = 0

    def select(self, records: list[Record], part: str) -> list[Record]:
        ids = getattr(self, part)
        return [r for r in records if r.id in ids]


_SPLIT_FRACTIONS = (("train", 0.70), ("val", 0.15), ("test", 0.15))


def _apportion(n: int) -> dict[str, int]:
    """Largest-remainder apportionment of n items onto 70:15:15."""
    floors = {name: int(frac * n) for name, frac in _SPLIT_FRACTIONS}
    remainders = sorted(
        ((frac * n - floors[name], name) for name, frac in _SPLIT_FRACTIONS),
        key=lambda item: (-item[0], item[1] != "train", item[1] != "val"),
    )
    leftover = n - sum(floors.values())
    for _, name in remainders[:leftover]:
        floors[name] += 1
    return floors


def split_records(records: list[Record], seed: int) -> Split:
    """Stratified, deterministic 70:15:15 split over labels {0, 1}.

    Records labeled obscure are excluded. Each stratum must be able to put
    at least one record in every part.
    """
    eligible = [r for r in records if r.label in (0, 1)]
    if len(eligible) < 10:
        raise DataError(f"need at least 10 labeled records to split, got {len(eligible)}")
    result = Split(seed=seed)
    rng = Rng(seed)
    for label in (0, 1):
        stratum = [r.id for r in eligible if r.label == label]
        counts = _apportion(len(stratum))
        if min(counts.values()) == 0:
            raise DataError(
                f"label-{label} stratum of {len(stratum)} records cannot fill all three splits"
            )
        shuffled = rng.shuffled(stratum)
        train_end = counts["train"]
        val_end = train_end + counts["val"]
        result.train.update(shuffled[:train_end])
        result.val.update(shuffled[train_end:val_end])
        result.test.update(shuffled[val_end:])
    return result


def downsample(records: list[Record], seed: int) -> list[Record]:
    """Subsample the majority class to the minority count (1:1), seeded."""
    claims = [r for r in records if r.label == 1]
    non_claims = [r for r in records if r.label == 0]
    if not claims or not non_claims:
        raise DataError("downsample requires both classes to be present")
    if len(claims) == len(non_claims):
        return list(records)
    majority, target = (claims, len(non_claims)) if len(claims) > len(non_claims) else (
        non_claims,
        len(claims),
    )
    rng = Rng(seed)
    keep_idx = set(rng.permutation(len(majority))[:target].tolist())
    keep_ids = {majority[i].id for i in keep_idx}
    minority_ids = {r.id for r in (non_claims if majority is claims else claims)}
    return [
        r
        for r in records
        if r.label not in (0, 1) or r.id in keep_ids or r.id in minority_ids
    ]


def dataset_stats(records: list[Record]) -> dict:
    """Per-source and overall claim/non-claim counts, token totals, mean words."""

    def bucket(rows: list[Record]) -> dict:
        tokens = sum(r.n_tokens for r in rows)
        return {
            "records": len(rows),
            "claims": sum(1 for r in rows if r.label == 1),
            "non_claims": sum(1 for r in rows if r.label == 0),
            "obscure": sum(1 for r in rows if r.label == OBSCURE),
            "tokens": tokens,
            "mean_words": (tokens / len(rows)) if rows else 0.0,
        }

    per_source: dict[str, dict] = {}
    for src in sorted({r.source for r in records}):
        per_source[src] = bucket([r for r in records if r.source == src])
    per_viewpoint: dict[str, dict] = {}
    for vp in VIEWPOINTS:
        rows = [r for r in records if r.viewpoint == vp]
        if rows:
            per_viewpoint[vp] = bucket(rows)
    return {
        "overall": bucket(records),
        "per_source": per_source,
        "per_viewpoint": per_viewpoint,
    }
