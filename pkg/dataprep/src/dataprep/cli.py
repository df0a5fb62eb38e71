"""Command line front end: `dataprep export`."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import ExportError
from .export import ExportJob, load_rows, run_export


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dataprep", description="record and embedding exporter")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("export", description="tag texts and emit records plus embeddings")
    p.add_argument("--in", dest="input", required=True, help="JSONL rows with text/label/source")
    p.add_argument("--out-records", required=True)
    p.add_argument("--out-embeddings", required=True)
    p.add_argument("--metadata", default=None)
    p.add_argument("--tagger", default="rule", choices=["rule", "spacy"])
    p.add_argument("--encoder", default="hash", choices=["hash", "transformers"])
    p.add_argument("--dim", type=int, default=768)
    p.add_argument("--skip-cleaning", action="store_true")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level="INFO")
    args = build_parser().parse_args(argv)
    try:
        job = ExportJob(
            rows=load_rows(args.input),
            records_path=args.out_records,
            embeddings_path=args.out_embeddings,
            metadata_path=args.metadata,
            tagger=args.tagger,
            encoder=args.encoder,
            dim=args.dim,
            skip_cleaning=args.skip_cleaning,
        )
        stats = run_export(job)
    except (ExportError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(stats, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
