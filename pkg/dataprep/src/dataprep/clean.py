"""Text cleaning rules, matching the consumer toolkit's preprocessing.

The exporter and the downstream toolkit never import each other, so these
rules are re-specified here and pinned by the contract tests: strip
non-ASCII characters, drop hashtag/handle/URL tokens, collapse whitespace,
and reject texts below 20 characters or 4 words.
"""

from __future__ import annotations

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


def clean_text(text: str) -> str | None:
    """Cleaned text, or None when the result is too short to keep."""
    ascii_text = text.encode("ascii", errors="ignore").decode("ascii")
    kept = [tok for tok in ascii_text.split() if tok and not _is_noise_token(tok)]
    cleaned = " ".join(kept)
    if len(cleaned) < MIN_CHARS or len(kept) < MIN_WORDS:
        return None
    return cleaned
