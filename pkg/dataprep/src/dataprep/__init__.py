"""Offline tagging and sentence-embedding exporter.

Produces the claim-detection toolkit's record JSONL and embedding binary
from raw labeled texts, using pluggable POS/dependency taggers and sentence
encoders.
"""

__version__ = "0.1.0"


class ExportError(Exception):
    """Configuration or data problem while exporting."""
