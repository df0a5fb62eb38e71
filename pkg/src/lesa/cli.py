"""Operator entry point.

Subcommands: preprocess | build-vocab | train-skipgram | pretrain | train |
predict | eval | stats | kappa. Exit codes: 0 success, 1 usage error,
2 data error, 3 numeric failure. stdout carries machine-readable JSON only;
logs go to stderr.

Options may come from a "key = value" config file ('#' comments), named by
--config or the LESA_CONFIG environment variable; explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from pathlib import Path

from .corpus import (
    SpellDictionary,
    dataset_stats,
    dedup,
    downsample,
    parse_records,
    preprocess_tweet,
    split_records,
)
from .dep import build_dep_vocab
from .errors import ConfigError, DataError, LesaError, NumericError
from .evaluate import AgreementMatrix, ConfusionMatrix, cohen_kappa, f1_scores, paired_ttest, weighted_average
from .model import (
    SemanticSource,
    TrainConfig,
    build_model,
    build_vocabularies,
    evaluate_records,
    load_checkpoint,
    pretrain_pillars,
    save_checkpoint,
    train,
)
from .nn.layers import Dropout
from .nn.store import Rng, small_uniform
from .pos import SkipgramConfig, build_pos_vocab, load_embedding_file, save_embedding_file, train_skipgram
from .semantic import load_embeddings

log = logging.getLogger("lesa")

POS_MAGIC = "LESAPOS1"
DEP_MAGIC = "LESADEP1"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# config file handling


def load_config_file(path: str | Path) -> dict[str, str]:
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DataError(f"{path}:{lineno}: expected 'key = value'")
            key, value = line.split("=", 1)
            values[key.strip().replace("-", "_")] = value.strip()
    return values


def _coerce(value: str, like) -> object:
    if isinstance(like, bool):
        lowered = value.lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise DataError(f"expected a boolean, got {value!r}")
    if isinstance(like, int):
        return int(value)
    if isinstance(like, float):
        return float(value)
    return value


class Options:
    """Flag values over config-file values over defaults."""

    def __init__(self, args: argparse.Namespace, defaults: dict):
        self._args = vars(args)
        self._defaults = defaults
        config_path = self._args.get("config") or os.environ.get("LESA_CONFIG")
        self._file = load_config_file(config_path) if config_path else {}

    def get(self, key: str):
        flag = self._args.get(key)
        if flag is not None:
            return flag
        if key in self._file:
            like = self._defaults.get(key)
            return _coerce(self._file[key], like) if like is not None else self._file[key]
        if key in self._defaults:
            return self._defaults[key]
        return None

    def explicit(self, key: str):
        """Flag or config-file value only; None when neither was given."""
        flag = self._args.get(key)
        if flag is not None:
            return flag
        if key in self._file:
            like = self._defaults.get(key)
            return _coerce(self._file[key], like) if like is not None else self._file[key]
        return None

    def require_path(self, key: str) -> str:
        value = self.get(key)
        if not value:
            raise DataError(f"missing required path: --{key.replace('_', '-')}")
        return str(value)


_TRAIN_DEFAULTS = {
    "seed": 0,
    "k": 3,
    "epochs": 30,
    "batch_size": 32,
    "lr": 1e-3,
    "aux_weight": 0.3,
    "pretrain_epochs": 3,
    "patience": 10,
    "dropout": 0.3,
    "semantic_dim": 768,
    "combined_view": False,
    "fallback_embeddings": False,
    "threads": 1,
}


def _train_config(opts: Options) -> TrainConfig:
    cfg = TrainConfig(
        lr=float(opts.get("lr")),
        epochs=int(opts.get("epochs")),
        batch_size=int(opts.get("batch_size")),
        seed=int(opts.get("seed")),
        aux_weight=float(opts.get("aux_weight")),
        pretrain_epochs=int(opts.get("pretrain_epochs")),
        use_fallback_embeddings=bool(opts.get("fallback_embeddings")),
        k=int(opts.get("k")),
        semantic_dim=int(opts.get("semantic_dim")),
        dropout=float(opts.get("dropout")),
        combined_view=bool(opts.get("combined_view")),
        patience=int(opts.get("patience")),
    )
    cfg.validate()
    return cfg


def _emit(payload: dict) -> None:
    print(json.dumps(payload, sort_keys=True))


def _load_source(opts: Options, cfg: TrainConfig) -> SemanticSource:
    embeddings_path = opts.get("embeddings")
    table = load_embeddings(embeddings_path, expected_dim=cfg.semantic_dim) if embeddings_path else None
    return SemanticSource(cfg.semantic_dim, table=table, use_fallback=cfg.use_fallback_embeddings)


# ---------------------------------------------------------------------------
# guideline hints (error-analysis cues, never labels)

_NEGATION_WORDS = {
    "not",
    "no",
    "never",
    "none",
    "cannot",
    "cant",
    "dont",
    "doesnt",
    "didnt",
    "wont",
    "isnt",
    "arent",
    "wasnt",
    "werent",
    "couldnt",
    "shouldnt",
    "wouldnt",
    "nothing",
    "nobody",
}

_QUESTION_STARTERS = {"who", "what", "when", "where", "why", "how", "do", "does", "did", "is", "are", "can", "could", "would", "should"}


def _doubt_words() -> frozenset[str]:
    text = resources.files("lesa.data").joinpath("doubt_words.txt").read_text(encoding="utf-8")
    return frozenset(w.strip().lower() for w in text.splitlines() if w.strip())


_DOUBT_CACHE: frozenset[str] | None = None


def guideline_hints(text: str) -> list[str]:
    """Surface cue tags: numbers/statistics, doubt words, question form,
    negation. Diagnostics only."""
    global _DOUBT_CACHE
    if _DOUBT_CACHE is None:
        _DOUBT_CACHE = _doubt_words()
    tags = []
    tokens = [t.strip(".,!?;:'\"").lower() for t in text.split()]
    tokens = [t for t in tokens if t]
    if re.search(r"\d", text):
        tags.append("has_number")
    if any(t in _DOUBT_CACHE for t in tokens):
        tags.append("has_doubt_word")
    if "?" in text or (tokens and tokens[0] in _QUESTION_STARTERS):
        tags.append("is_question")
    if any(t in _NEGATION_WORDS for t in tokens) or "n't" in text.lower():
        tags.append("has_negation")
    return tags


# ---------------------------------------------------------------------------
# subcommands


def _cmd_preprocess(opts: Options) -> int:
    in_path = opts.require_path("records")
    out_path = opts.require_path("out")
    dictionary = None
    if not opts.get("no_spell"):
        dict_path = opts.get("dict")
        if dict_path:
            dictionary = SpellDictionary.load(dict_path)
        else:
            with resources.as_file(
                resources.files("lesa.data").joinpath("frequency_dictionary.tsv")
            ) as path:
                dictionary = SpellDictionary.load(path)
    kept, rejected = [], 0
    with open(in_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{in_path}:{lineno}: invalid JSON: {exc}") from exc
            if "text" not in row:
                raise DataError(f"{in_path}:{lineno}: missing 'text'")
            cleaned = preprocess_tweet(row["text"], dictionary)
            if cleaned is None:
                rejected += 1
                continue
            row["text"] = cleaned
            kept.append(row)
    with open(out_path, "w", encoding="utf-8") as fh:
        for row in kept:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    _emit({"read": len(kept) + rejected, "kept": len(kept), "rejected": rejected})
    return 0


def _view_rows(records, viewpoint: str):
    if viewpoint == "combined":
        return records
    return [r for r in records if r.viewpoint == viewpoint]


def _cmd_build_vocab(opts: Options) -> int:
    records = parse_records(opts.require_path("records"))
    viewpoint = opts.get("viewpoint") or "combined"
    kind = opts.get("kind") or "pos"
    k = int(opts.get("k"))
    rows = _view_rows(records, viewpoint)
    if kind == "pos":
        vocab = build_pos_vocab([r.upos for r in rows], k)
        magic = POS_MAGIC
    elif kind == "dep":
        vocab = build_dep_vocab([r.deprel for r in rows])
        magic = DEP_MAGIC
    else:
        raise UsageError(f"unknown --kind {kind!r}")
    out_path = opts.get("out")
    if out_path:
        dim = int(opts.get("dim") or 20)
        table = small_uniform(Rng(int(opts.get("seed"))), (len(vocab), dim))
        save_embedding_file(out_path, magic, vocab, table)
    _emit({"kind": kind, "viewpoint": viewpoint, "k": vocab.k, "size": len(vocab)})
    return 0


def _cmd_train_skipgram(opts: Options) -> int:
    records = parse_records(opts.require_path("records"))
    viewpoint = opts.get("viewpoint") or "combined"
    k = int(opts.get("k"))
    rows = _view_rows(records, viewpoint)
    vocab = build_pos_vocab([r.upos for r in rows], k)
    cfg = SkipgramConfig(
        window=int(opts.get("window") or 6),
        dim=int(opts.get("dim") or 20),
        epochs=int(opts.get("epochs")),
        neg_k=int(opts.get("neg") or 5),
        lr=float(opts.get("lr")),
    )
    sequences = [vocab.encode(r.upos) for r in rows]
    table, history = train_skipgram(sequences, len(vocab), cfg, Rng(int(opts.get("seed"))))
    out_path = opts.get("out")
    if out_path:
        save_embedding_file(out_path, POS_MAGIC, vocab, table)
    _emit(
        {
            "viewpoint": viewpoint,
            "k": k,
            "vocab_size": len(vocab),
            "epochs": cfg.epochs,
            "initial_loss": history[0] if history else None,
            "final_loss": history[-1] if history else None,
        }
    )
    return 0


def _prepare_corpus(opts: Options, cfg: TrainConfig):
    records = dedup(parse_records(opts.require_path("records")))
    split = split_records(records, seed=cfg.seed)
    train_rows = downsample(split.select(records, "train"), seed=cfg.seed)
    val_rows = split.select(records, "val")
    test_rows = split.select(records, "test")
    return records, train_rows, val_rows, test_rows


def _cmd_pretrain(opts: Options) -> int:
    cfg = _train_config(opts)
    _, train_rows, _, _ = _prepare_corpus(opts, cfg)
    vocabs = build_vocabularies(train_rows, cfg)
    # a trained POS embedding file carries its own vocabulary; it replaces
    # the built one so the table rows line up with the pillar's indices
    pos_tables = {}
    for spec_item in opts.get("pos_embeddings") or []:
        if "=" not in spec_item:
            raise UsageError("--pos-embeddings expects viewpoint=path")
        viewpoint, path = spec_item.split("=", 1)
        if viewpoint not in vocabs.pos:
            raise DataError(f"unknown viewpoint {viewpoint!r} for this model")
        vocab, table = load_embedding_file(path, POS_MAGIC)
        if vocab.k != cfg.k:
            raise ConfigError(f"embedding file k={vocab.k} does not match configured k={cfg.k}")
        vocabs.pos[viewpoint] = vocab
        pos_tables[viewpoint] = table
    model = build_model(cfg, vocabs)
    for viewpoint, table in pos_tables.items():
        model.pos_pillars[viewpoint].set_embedding_table(table)
    pretrain_pillars(model, train_rows)
    save_checkpoint(model, opts.require_path("out"))
    _emit(
        {
            "pretrained_views": model.views,
            "train_records": len(train_rows),
            "parameters": model.parameter_count(),
        }
    )
    return 0


def _cmd_train(opts: Options) -> int:
    cfg = _train_config(opts)
    _, train_rows, val_rows, test_rows = _prepare_corpus(opts, cfg)
    source = _load_source(opts, cfg)
    source.check_coverage(train_rows + val_rows)
    init = opts.get("init")
    if init:
        model = load_checkpoint(init, runtime_cfg=cfg)
        # architecture keys are guarded equal; training knobs follow the run
        model.cfg = cfg
        model.clf_dropout = Dropout(cfg.dropout)
    else:
        vocabs = build_vocabularies(train_rows, cfg)
        model = build_model(cfg, vocabs)
        if cfg.pretrain_epochs > 0:
            pretrain_pillars(model, train_rows)
    history = train(model, train_rows, val_rows, source)
    out = opts.get("out")
    if out:
        save_checkpoint(model, out)
    history_path = opts.get("history")
    if history_path:
        with open(history_path, "w", encoding="utf-8") as fh:
            for entry in history:
                fh.write(json.dumps(entry, sort_keys=True) + "\n")
    report = {
        "train_records": len(train_rows),
        "val_records": len(val_rows),
        "test_records": len(test_rows),
        "parameters": model.parameter_count(),
        "epochs_run": len(history),
        "best_val_c_f1": max((h["val_c_f1"] for h in history), default=0.0),
        "val": evaluate_records(model, val_rows, source) if val_rows else None,
        "test": evaluate_records(model, test_rows, source) if test_rows else None,
    }
    _emit(report)
    return 0


def _cmd_predict(opts: Options) -> int:
    model = load_checkpoint(opts.require_path("checkpoint"))
    # the checkpoint's config governs inference; explicitly-set flags are
    # compatibility guards
    for key in ("k", "semantic_dim", "combined_view"):
        explicit = opts.explicit(key)
        if explicit is not None and explicit != getattr(model.cfg, key):
            raise ConfigError(
                f"checkpoint {key}={getattr(model.cfg, key)!r} incompatible "
                f"with requested {key}={explicit!r}"
            )
    records = parse_records(opts.require_path("records"))
    use_fallback = bool(opts.get("fallback_embeddings")) or model.cfg.use_fallback_embeddings
    source = SemanticSource(
        model.cfg.semantic_dim,
        table=(
            load_embeddings(opts.get("embeddings"), expected_dim=model.cfg.semantic_dim)
            if opts.get("embeddings")
            else None
        ),
        use_fallback=use_fallback,
    )
    source.check_coverage(records)
    threads = int(opts.get("threads"))
    force_branch = opts.get("force_branch")

    def run_chunk(args):
        worker_model, chunk = args
        rows = []
        for record in chunk:
            label, probs, attention = worker_model.predict(record, source, force_branch=force_branch)
            rows.append(
                {
                    "id": record.id,
                    "label": label,
                    "probs": [float(p) for p in probs],
                    "attention": attention,
                    "hints": guideline_hints(record.text),
                }
            )
        return rows

    if threads > 1 and len(records) > 1:
        chunks = [records[i::threads] for i in range(threads)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(run_chunk, [(model.clone_for_inference(), c) for c in chunks]))
        by_id = {row["id"]: row for part in partials for row in part}
        rows = [by_id[r.id] for r in records]
    else:
        rows = run_chunk((model, records))

    out = opts.get("out")
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            for row in rows:
                fh.write(json.dumps(row, sort_keys=True) + "\n")
    else:
        for row in rows:
            print(json.dumps(row, sort_keys=True))
    return 0


def _read_label_file(path: str) -> dict[str, object]:
    labels: dict[str, object] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if "id" not in row or "label" not in row:
                raise DataError(f"{path}:{lineno}: rows need 'id' and 'label'")
            labels[str(row["id"])] = row["label"]
    return labels


def _gold_rows(path: str) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            if "id" not in row or "label" not in row:
                raise DataError(f"{path}:{lineno}: rows need 'id' and 'label'")
            rows.append(row)
    return rows


def _score_predictions(pred: dict[str, object], gold_rows: list[dict]) -> dict:
    per_source: dict[str, ConfusionMatrix] = {}
    overall = ConfusionMatrix()
    missing = []
    for row in gold_rows:
        gold_label = row["label"]
        if gold_label not in (0, 1):
            continue
        rid = str(row["id"])
        if rid not in pred:
            missing.append(rid)
            continue
        predicted = int(pred[rid])
        overall.add(predicted, int(gold_label))
        source = row.get("source", "all")
        per_source.setdefault(source, ConfusionMatrix()).add(predicted, int(gold_label))
    if missing:
        raise DataError(f"prediction file missing ids: {missing[:5]}")
    if overall.total == 0:
        raise DataError("no binary-labeled overlap between predictions and gold")
    report = {
        "overall": {"confusion": overall.as_dict(), **f1_scores(overall)},
        "per_dataset": {
            src: {"confusion": cm.as_dict(), **f1_scores(cm), "size": cm.total}
            for src, cm in sorted(per_source.items())
        },
    }
    report["weighted"] = {
        "m_f1": weighted_average(
            [(entry["m_f1"], entry["size"]) for entry in report["per_dataset"].values()]
        ),
        "c_f1": weighted_average(
            [(entry["c_f1"], entry["size"]) for entry in report["per_dataset"].values()]
        ),
    }
    return report


def _cmd_eval(opts: Options) -> int:
    pred = _read_label_file(opts.require_path("pred"))
    gold_rows = _gold_rows(opts.require_path("gold"))
    report = _score_predictions(pred, gold_rows)
    compare = opts.get("compare_pred")
    if compare:
        other = _score_predictions(_read_label_file(compare), gold_rows)
        ours = [entry["m_f1"] for _, entry in sorted(report["per_dataset"].items())]
        theirs = [entry["m_f1"] for _, entry in sorted(other["per_dataset"].items())]
        if len(ours) >= 2:
            result = paired_ttest(ours, theirs)
            report["significance"] = {
                "metric": "m_f1",
                "unit": "dataset",
                "t": result.t,
                "p": result.p,
                "n": result.n,
                "degenerate": result.degenerate,
            }
        else:
            report["significance"] = {"note": "need at least two datasets to pair"}
    _emit(report)
    return 0


def _cmd_stats(opts: Options) -> int:
    records = parse_records(opts.require_path("records"))
    _emit(dataset_stats(records))
    return 0


def _cmd_kappa(opts: Options) -> int:
    counts_arg = opts.get("counts")
    if counts_arg:
        parts = [int(x) for x in str(counts_arg).replace(" ", "").split(",")]
        if len(parts) != 4:
            raise UsageError("--counts expects four comma-separated integers")
        matrix = AgreementMatrix([[parts[0], parts[1]], [parts[2], parts[3]]])
        _emit({"kappa": cohen_kappa(matrix), "n": matrix.total, "skipped": 0})
        return 0
    a = _read_label_file(opts.require_path("a"))
    b = _read_label_file(opts.require_path("b"))
    counts = [[0, 0], [0, 0]]
    skipped = 0
    shared = sorted(set(a) & set(b))
    if not shared:
        raise DataError("no shared ids between the two annotation files")
    for rid in shared:
        la, lb = a[rid], b[rid]
        if la not in (0, 1) or lb not in (0, 1):
            skipped += 1
            continue
        counts[int(la)][int(lb)] += 1
    matrix = AgreementMatrix(counts)
    _emit({"kappa": cohen_kappa(matrix), "n": matrix.total, "skipped": skipped})
    return 0


# ---------------------------------------------------------------------------
# parser / dispatch


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=None)
    parser.add_argument("--seed", type=int, default=None)


def build_parser() -> _Parser:
    parser = _Parser(prog="lesa", description="claim detection toolkit")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("preprocess", description="clean raw tweet text")
    _add_common(p)
    p.add_argument("--records", default=None, help="input JSONL with a 'text' field")
    p.add_argument("--out", default=None)
    p.add_argument("--dict", default=None, help="term<TAB>frequency spell dictionary")
    p.add_argument("--no-spell", dest="no_spell", action="store_true")

    p = sub.add_parser("build-vocab", description="index frequent n-grams")
    _add_common(p)
    p.add_argument("--records", default=None)
    p.add_argument("--kind", choices=["pos", "dep"], default=None)
    p.add_argument("--viewpoint", default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--out", default=None)

    p = sub.add_parser("train-skipgram", description="train POS k-gram vectors")
    _add_common(p)
    p.add_argument("--records", default=None)
    p.add_argument("--viewpoint", default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--window", type=int, default=None)
    p.add_argument("--neg", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--out", default=None)

    p = sub.add_parser("pretrain", description="pre-train viewpoint pillars")
    _add_common(p)
    p.add_argument("--records", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--pretrain-epochs", dest="pretrain_epochs", type=int, default=None)
    p.add_argument("--combined-view", dest="combined_view", action="store_const", const=True, default=None)
    p.add_argument("--pos-embeddings", dest="pos_embeddings", action="append", default=None,
                   help="viewpoint=path of a trained POS embedding file (repeatable)")

    p = sub.add_parser("train", description="train the full model")
    _add_common(p)
    p.add_argument("--records", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--history", default=None)
    p.add_argument("--init", default=None, help="start from a pretrained checkpoint")
    p.add_argument("--embeddings", default=None)
    p.add_argument("--fallback-embeddings", dest="fallback_embeddings", action="store_const", const=True, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--aux-weight", dest="aux_weight", type=float, default=None)
    p.add_argument("--pretrain-epochs", dest="pretrain_epochs", type=int, default=None)
    p.add_argument("--patience", type=int, default=None)
    p.add_argument("--dropout", type=float, default=None)
    p.add_argument("--semantic-dim", dest="semantic_dim", type=int, default=None)
    p.add_argument("--combined-view", dest="combined_view", action="store_const", const=True, default=None)

    p = sub.add_parser("predict", description="label records with a trained model")
    _add_common(p)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--records", default=None)
    p.add_argument("--embeddings", default=None)
    p.add_argument("--fallback-embeddings", dest="fallback_embeddings", action="store_const", const=True, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--force-branch", dest="force_branch", choices=["pos", "dep", "sem"], default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--semantic-dim", dest="semantic_dim", type=int, default=None)
    p.add_argument("--combined-view", dest="combined_view", action="store_const", const=True, default=None)

    p = sub.add_parser("eval", description="score prediction files")
    _add_common(p)
    p.add_argument("--pred", default=None)
    p.add_argument("--gold", default=None)
    p.add_argument("--compare-pred", dest="compare_pred", default=None)

    p = sub.add_parser("stats", description="dataset statistics")
    _add_common(p)
    p.add_argument("--records", default=None)

    p = sub.add_parser("kappa", description="inter-annotator agreement")
    _add_common(p)
    p.add_argument("--a", default=None)
    p.add_argument("--b", default=None)
    p.add_argument("--counts", default=None, help="tp,fp,fn,tn as one comma list")

    return parser


_COMMANDS = {
    "preprocess": _cmd_preprocess,
    "build-vocab": _cmd_build_vocab,
    "train-skipgram": _cmd_train_skipgram,
    "pretrain": _cmd_pretrain,
    "train": _cmd_train,
    "predict": _cmd_predict,
    "eval": _cmd_eval,
    "stats": _cmd_stats,
    "kappa": _cmd_kappa,
}


def dispatch(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=os.environ.get("LESA_LOG", "WARNING"))
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    if not args.command:
        parser.print_usage(sys.stderr)
        return 1
    try:
        opts = Options(args, _TRAIN_DEFAULTS)
        return _COMMANDS[args.command](opts)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3
    except (DataError, ConfigError, FileNotFoundError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except LesaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
