"""Export jobs: raw labeled texts to record JSONL and embedding binary.

Output files follow the consumer toolkit's formats exactly. Records:
JSON Lines with keys {"id","text","tokens","upos","deprel","head","label",
"source","viewpoint"}, head indices 1-based with 0 for the root. Embedding
binary: magic "LESAEMB1", u32 LE count, u32 LE dim, then per record a u16
LE id length, the UTF-8 id, and dim float32 LE values. All writes are
atomic (temp file + rename). A metadata JSON sidecar records the tagger
and encoder provenance.
"""

from __future__ import annotations

import json
import logging
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import ExportError
from .clean import clean_text
from .encoder import make_encoder
from .tagger import make_tagger

log = logging.getLogger("dataprep")

EMBEDDING_MAGIC = b"LESAEMB1"

VIEWPOINT_BY_SOURCE = {
    "TWR": "noisy",
    "OC": "semi_noisy",
    "WTP": "semi_noisy",
    "MT": "non_noisy",
    "PE": "non_noisy",
    "VG": "non_noisy",
    "WD": "non_noisy",
}


@dataclass
class ExportJob:
    rows: list[dict]
    records_path: str | Path
    embeddings_path: str | Path
    metadata_path: str | Path | None = None
    tagger: str = "rule"
    encoder: str = "hash"
    dim: int = 768
    skip_cleaning: bool = False
    stats: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.rows:
            raise ExportError("export job has no input rows")
        for i, row in enumerate(self.rows):
            if "text" not in row or "label" not in row or "source" not in row:
                raise ExportError(f"input row {i} needs 'text', 'label' and 'source'")
            if row["source"] not in VIEWPOINT_BY_SOURCE:
                raise ExportError(f"input row {i}: unknown source {row['source']!r}")
            if row["label"] not in (0, 1, "x"):
                raise ExportError(f"input row {i}: label must be 0, 1 or 'x'")


def load_rows(path: str | Path) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ExportError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
    return rows


def _atomic_write_bytes(path: str | Path, payload: bytes) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(payload)
    os.replace(tmp, path)


def _atomic_write_text(path: str | Path, payload: str) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(payload, encoding="utf-8")
    os.replace(tmp, path)


def tag_and_export(job: ExportJob) -> list[dict]:
    """Clean, tag and write the record JSONL; returns the exported records."""
    tagger = make_tagger(job.tagger)
    records = []
    rejected = 0
    failed = 0
    for i, row in enumerate(job.rows):
        text = row["text"]
        if not job.skip_cleaning:
            cleaned = clean_text(text)
            if cleaned is None:
                rejected += 1
                log.info("row %d rejected by length rules", i)
                continue
            text = cleaned
        try:
            tagged = tagger.tag(text)
        except ExportError as exc:
            failed += 1
            log.warning("row %d skipped: tagger failure: %s", i, exc)
            continue
        rec_id = str(row.get("id") or f"{row['source'].lower()}-{i:06d}")
        records.append(
            {
                "id": rec_id,
                "text": text,
                "tokens": tagged.tokens,
                "upos": tagged.upos,
                "deprel": tagged.deprel,
                "head": tagged.head,
                "label": row["label"],
                "source": row["source"],
                "viewpoint": VIEWPOINT_BY_SOURCE[row["source"]],
            }
        )
    seen = set()
    for record in records:
        if record["id"] in seen:
            raise ExportError(f"duplicate record id {record['id']!r}")
        seen.add(record["id"])
    payload = "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)
    _atomic_write_text(job.records_path, payload)
    job.stats.update({"input": len(job.rows), "exported": len(records), "rejected": rejected, "tagger_failures": failed})
    return records


def embed_export(job: ExportJob, records: list[dict]) -> None:
    """Encode every exported record and write the embedding binary."""
    encoder = make_encoder(job.encoder, job.dim)
    failures = []
    out = bytearray(EMBEDDING_MAGIC)
    out += struct.pack("<II", len(records), job.dim)
    for record in records:
        try:
            vec = encoder.encode(record["text"])
        except Exception as exc:   # per-row encoder failures abort the job
            failures.append(record["id"])
            log.error("encoding failed for %s: %s", record["id"], exc)
            continue
        if vec.shape != (job.dim,) or not np.all(np.isfinite(vec)):
            failures.append(record["id"])
            continue
        encoded = record["id"].encode("utf-8")
        out += struct.pack("<H", len(encoded))
        out += encoded
        out += vec.astype("<f4").tobytes()
    if failures:
        raise ExportError(f"encoder failed for ids: {failures}")
    _atomic_write_bytes(job.embeddings_path, bytes(out))
    if job.metadata_path:
        tagger = make_tagger(job.tagger)
        metadata = {
            "tagger": tagger.name,
            "tagger_version": getattr(tagger, "version", "unknown"),
            "encoder": encoder.name,
            "pooling": encoder.pooling,
            "dim": job.dim,
            "records": len(records),
        }
        _atomic_write_text(job.metadata_path, json.dumps(metadata, indent=2, sort_keys=True) + "\n")


def run_export(job: ExportJob) -> dict:
    records = tag_and_export(job)
    embed_export(job, records)
    return dict(job.stats)
