"""Full claim-detection model: six linguistic pillars, semantic head,
attention fusion at the viewpoint and branch levels, classifier with
auxiliary branch heads, plus the pre-training and joint training loops.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .corpus import VIEWPOINTS, Record
from .dep import DepPillar, build_dep_vocab
from .errors import ConfigError, DataError, NumericError
from .nn.checkpoint import load_tensors, save_tensors
from .nn.functional import cross_entropy, softmax
from .nn.layers import AttentionPool, Dense, Dropout
from .nn.store import ParamStore, Rng
from .pos import NgramVocab, PosPillar, build_pos_vocab
from .semantic import EmbeddingTable, SemanticHead, fallback_embed

__all__ = [
    "TrainConfig",
    "Vocabularies",
    "LesaModel",
    "SemanticSource",
    "ForwardResult",
    "build_model",
    "build_vocabularies",
    "pretrain_pillars",
    "train",
    "evaluate_records",
    "save_checkpoint",
    "load_checkpoint",
]

log = logging.getLogger("lesa")

COMBINED_VIEW = "combined"
BRANCHES = ("pos", "dep", "sem")

CHECKPOINT_FORMAT = 1


@dataclass
class TrainConfig:
    lr: float = 1e-3
    epochs: int = 30
    batch_size: int = 32
    seed: int = 0
    aux_weight: float = 0.3
    pretrain_epochs: int = 3
    use_fallback_embeddings: bool = False
    k: int = 3
    embed_dim: int = 20
    bilstm_hidden: int = 32
    fusion_dim: int = 32
    heads: int = 5
    ff_dim: int = 128
    semantic_dim: int = 768
    max_seq_len: int = 128
    dropout: float = 0.3
    combined_view: bool = False
    patience: int = 10

    def validate(self) -> None:
        if self.aux_weight < 0:
            raise ConfigError("aux_weight must be >= 0")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.k not in (2, 3, 4):
            raise ConfigError("k must be 2, 3 or 4")
        if self.fusion_dim != 32:
            raise ConfigError("fusion interface is fixed at 32 dims")
        if self.embed_dim % self.heads != 0:
            raise ConfigError(
                f"embed_dim {self.embed_dim} not divisible by {self.heads} heads"
            )
        if self.embed_dim % 2 != 0:
            raise ConfigError("embed_dim must be even (position signal split)")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must lie in [0, 1)")
        if self.semantic_dim < 1 or self.max_seq_len < 1:
            raise ConfigError("semantic_dim and max_seq_len must be positive")


@dataclass
class Vocabularies:
    pos: dict[str, NgramVocab] = field(default_factory=dict)
    dep: dict[str, NgramVocab] = field(default_factory=dict)


def build_vocabularies(records: list[Record], cfg: TrainConfig) -> Vocabularies:
    """Per-viewpoint POS/dep n-gram vocabularies (or shared combined ones)."""
    views = [COMBINED_VIEW] if cfg.combined_view else list(VIEWPOINTS)
    vocabs = Vocabularies()
    for view in views:
        rows = records if view == COMBINED_VIEW else [r for r in records if r.viewpoint == view]
        vocabs.pos[view] = build_pos_vocab([r.upos for r in rows], cfg.k)
        vocabs.dep[view] = build_dep_vocab([r.deprel for r in rows])
    return vocabs


class SemanticSource:
    """Resolves a record to its semantic vector (file table or fallback)."""

    def __init__(self, dim: int, table: EmbeddingTable | None = None, use_fallback: bool = False):
        if table is not None and table.dim != dim:
            raise DataError(f"embedding table dim {table.dim} != configured {dim}")
        self.dim = dim
        self.table = table
        self.use_fallback = use_fallback

    def vector(self, record: Record) -> np.ndarray:
        if self.table is not None and record.id in self.table:
            return self.table.get(record.id).astype(np.float64)
        if self.use_fallback:
            return fallback_embed(record.text, self.dim)
        raise DataError(f"missing semantic vector for record id {record.id!r}")

    def check_coverage(self, records: list[Record]) -> None:
        if self.use_fallback:
            return
        if self.table is None:
            if records:
                raise DataError(
                    f"missing semantic vector for record id {records[0].id!r} "
                    "(no embedding table and fallback disabled)"
                )
            return
        for record in records:
            if record.id not in self.table:
                raise DataError(f"missing semantic vector for record id {record.id!r}")


@dataclass
class ForwardResult:
    probs: np.ndarray
    aux_probs: dict[str, np.ndarray]
    label: int
    attention: dict[str, list[float]]
    loss: float | None = None


class LesaModel:
    """Assembled architecture over one shared ParamStore."""

    def __init__(self, cfg: TrainConfig, vocabs: Vocabularies):
        cfg.validate()
        self.cfg = cfg
        self.vocabs = vocabs
        self.views = [COMBINED_VIEW] if cfg.combined_view else list(VIEWPOINTS)
        for view in self.views:
            if view not in vocabs.pos or view not in vocabs.dep:
                raise ConfigError(f"vocabularies missing viewpoint {view!r}")
        self.store = ParamStore()
        rng = Rng(cfg.seed)
        self.pos_pillars = {
            view: PosPillar(
                self.store,
                f"pos.{view}",
                vocabs.pos[view],
                rng,
                embed_dim=cfg.embed_dim,
                hidden=cfg.bilstm_hidden,
                max_len=cfg.max_seq_len,
            )
            for view in self.views
        }
        self.dep_pillars = {
            view: DepPillar(
                self.store,
                f"dep.{view}",
                vocabs.dep[view],
                rng,
                embed_dim=cfg.embed_dim,
                heads=cfg.heads,
                ff_dim=cfg.ff_dim,
                max_len=cfg.max_seq_len,
            )
            for view in self.views
        }
        self.pos_fusion = AttentionPool(self.store, "fuse.pos", cfg.fusion_dim, rng)
        self.dep_fusion = AttentionPool(self.store, "fuse.dep", cfg.fusion_dim, rng)
        self.semantic_head = SemanticHead(self.store, "sem", rng, in_dim=cfg.semantic_dim)
        self.branch_fusion = AttentionPool(self.store, "fuse.branch", cfg.fusion_dim, rng)
        self.clf1 = Dense(self.store, "clf.fc1", cfg.fusion_dim, 16, rng, activation="relu")
        self.clf_dropout = Dropout(cfg.dropout)
        self.clf2 = Dense(self.store, "clf.fc2", 16, 8, rng, activation="relu")
        self.clf3 = Dense(self.store, "clf.fc3", 8, 2, rng)
        self.aux_heads = {
            branch: Dense(self.store, f"aux.{branch}", cfg.fusion_dim, 2, rng)
            for branch in BRANCHES
        }

    # -- forward / backward -------------------------------------------------

    def parameter_count(self) -> int:
        return self.store.total_size()

    def forward(
        self,
        record: Record,
        semantic_vec: np.ndarray,
        training: bool = False,
        rng: Rng | None = None,
        force_branch: str | None = None,
    ) -> ForwardResult:
        pos_outs = [
            self.pos_pillars[v].forward(self.pos_pillars[v].encode_record(record))
            for v in self.views
        ]
        pos_weights, pos_fused = self.pos_fusion.forward(np.stack(pos_outs))
        dep_outs = []
        for v in self.views:
            idx, positions, parents = self.dep_pillars[v].encode_record(record)
            dep_outs.append(self.dep_pillars[v].forward(idx, positions, parents))
        dep_weights, dep_fused = self.dep_fusion.forward(np.stack(dep_outs))
        sem_out = self.semantic_head.forward(semantic_vec)

        branch_vecs = np.stack([pos_fused, dep_fused, sem_out])
        if force_branch is None:
            branch_weights, fused = self.branch_fusion.forward(branch_vecs)
        else:
            if force_branch not in BRANCHES:
                raise ConfigError(f"unknown branch {force_branch!r}")
            branch_weights = np.zeros(len(BRANCHES))
            branch_weights[BRANCHES.index(force_branch)] = 1.0
            fused = branch_vecs[BRANCHES.index(force_branch)]

        hidden = self.clf1.forward(fused)
        dropped = self.clf_dropout.forward(hidden, rng=rng, training=training)
        hidden2 = self.clf2.forward(dropped)
        logits = self.clf3.forward(hidden2)[0]
        probs = softmax(logits)
        aux_probs = {
            branch: softmax(self.aux_heads[branch].forward(vec)[0])
            for branch, vec in zip(BRANCHES, branch_vecs)
        }
        return ForwardResult(
            probs=probs,
            aux_probs=aux_probs,
            label=int(np.argmax(probs)),
            attention={
                "pos_view_weights": [float(w) for w in pos_weights],
                "dep_view_weights": [float(w) for w in dep_weights],
                "branch_weights": [float(w) for w in branch_weights],
            },
        )

    def loss(self, result: ForwardResult, gold: int) -> float:
        total = cross_entropy(result.probs, gold)
        for branch in BRANCHES:
            total += self.cfg.aux_weight * cross_entropy(result.aux_probs[branch], gold)
        return total

    def backward(self, result: ForwardResult, gold: int, scale: float = 1.0) -> None:
        """Accumulate gradients of `scale * loss(result, gold)`.

        Must run directly after the forward pass that produced `result`
        (layers cache a single invocation).
        """
        dlogits = result.probs.copy()
        dlogits[gold] -= 1.0
        dlogits *= scale
        dhidden2 = self.clf3.backward(dlogits[None, :])
        ddropped = self.clf2.backward(dhidden2)
        dhidden = self.clf_dropout.backward(ddropped)
        dfused = self.clf1.backward(dhidden)[0]
        dbranch_vecs = self.branch_fusion.backward(dfused)

        for i, branch in enumerate(BRANCHES):
            if self.cfg.aux_weight == 0.0:
                continue
            daux = result.aux_probs[branch].copy()
            daux[gold] -= 1.0
            daux *= scale * self.cfg.aux_weight
            dbranch_vecs[i] += self.aux_heads[branch].backward(daux[None, :])[0]

        dpos_fused, ddep_fused, dsem = dbranch_vecs
        self.semantic_head.backward(dsem)
        dpos_outs = self.pos_fusion.backward(dpos_fused)
        for view, dout in zip(self.views, dpos_outs):
            self.pos_pillars[view].backward(dout)
        ddep_outs = self.dep_fusion.backward(ddep_fused)
        for view, dout in zip(self.views, ddep_outs):
            self.dep_pillars[view].backward(dout)

    def predict(
        self,
        record: Record,
        source: SemanticSource,
        force_branch: str | None = None,
    ) -> tuple[int, np.ndarray, dict[str, list[float]]]:
        result = self.forward(record, source.vector(record), training=False, force_branch=force_branch)
        return result.label, result.probs, result.attention

    def clone_for_inference(self) -> "LesaModel":
        """An independent wrapper with its own layer caches and a value copy
        of the parameters; lets a worker pool predict concurrently."""
        twin = LesaModel(self.cfg, self.vocabs)
        twin.store.restore(self.store.params)
        return twin


def build_model(cfg: TrainConfig, vocabs: Vocabularies) -> LesaModel:
    return LesaModel(cfg, vocabs)


# ---------------------------------------------------------------------------
# pillar pre-training


def _pretrain_one(
    model: LesaModel,
    pillar,
    is_pos: bool,
    records: list[Record],
    rng: Rng,
) -> None:
    """Train one pillar plus a throwaway softmax head on its own records."""
    cfg = model.cfg
    head_store = ParamStore()
    head = Dense(head_store, "head", pillar.OUT_DIM, 2, rng)
    names = [n for n in model.store.params if n.startswith(pillar.param_prefix())]
    for _ in range(cfg.pretrain_epochs):
        order = rng.shuffled(records)
        for start in range(0, len(order), cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            scale = 1.0 / len(batch)
            for record in batch:
                if is_pos:
                    out = pillar.forward(pillar.encode_record(record))
                else:
                    idx, positions, parents = pillar.encode_record(record)
                    out = pillar.forward(idx, positions, parents)
                probs = softmax(head.forward(out)[0])
                dlogits = probs.copy()
                dlogits[int(record.label)] -= 1.0
                dlogits *= scale
                dout = head.backward(dlogits[None, :])[0]
                pillar.backward(dout)
            model.store.adam_step(cfg.lr, names=names)
            head_store.adam_step(cfg.lr)


def pretrain_pillars(model: LesaModel, records: list[Record]) -> LesaModel:
    """Pre-train every pillar on its viewpoint's labeled records.

    Viewpoints with no records leave their pillars at initialization (a
    warning is logged). Temporary heads are discarded.
    """
    labeled = [r for r in records if r.label in (0, 1)]
    for view in model.views:
        rows = labeled if view == COMBINED_VIEW else [r for r in labeled if r.viewpoint == view]
        if not rows:
            log.warning("viewpoint %s has no records; pillars left at initialization", view)
            continue
        base = Rng(model.cfg.seed)
        _pretrain_one(model, model.pos_pillars[view], True, rows, base.spawn(f"pretrain.pos.{view}"))
        _pretrain_one(model, model.dep_pillars[view], False, rows, base.spawn(f"pretrain.dep.{view}"))
    return model


# ---------------------------------------------------------------------------
# joint training


def evaluate_records(
    model: LesaModel,
    records: list[Record],
    source: SemanticSource,
) -> dict:
    """Overall and per-source confusion plus F1 metrics over `records`."""
    from .evaluate import ConfusionMatrix, f1_scores

    overall = ConfusionMatrix()
    per_source: dict[str, ConfusionMatrix] = {}
    for record in records:
        label, _, _ = model.predict(record, source)
        overall.add(label, int(record.label))
        per_source.setdefault(record.source, ConfusionMatrix()).add(label, int(record.label))
    report = {"overall": {"confusion": overall.as_dict(), **f1_scores(overall)}}
    report["per_source"] = {
        src: {"confusion": cm.as_dict(), **f1_scores(cm), "size": cm.total}
        for src, cm in sorted(per_source.items())
    }
    return report


def train(
    model: LesaModel,
    train_records: list[Record],
    val_records: list[Record],
    source: SemanticSource,
) -> list[dict]:
    """Mini-batch Adam over main + auxiliary cross-entropy.

    Returns the per-epoch history; the model is left at the parameters of
    the best val claim-F1 epoch. Early stopping after `patience` epochs
    without improvement.
    """
    cfg = model.cfg
    if not train_records:
        raise DataError("empty training set")
    for record in train_records + val_records:
        if record.label not in (0, 1):
            raise DataError(f"record {record.id} is not binary-labeled; exclude 'x' first")
    source.check_coverage(train_records + val_records)

    model.store.reset_optimizer()
    base = Rng(cfg.seed)
    shuffle_rng = base.spawn("train.shuffle")
    dropout_rng = base.spawn("train.dropout")

    history: list[dict] = []
    best_c_f1 = -1.0
    best_params: dict[str, np.ndarray] | None = None
    epochs_since_best = 0

    for epoch in range(cfg.epochs):
        order = shuffle_rng.shuffled(train_records)
        epoch_loss = 0.0
        for start in range(0, len(order), cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            scale = 1.0 / len(batch)
            batch_loss = 0.0
            for record in batch:
                result = model.forward(
                    record,
                    source.vector(record),
                    training=True,
                    rng=dropout_rng,
                )
                loss = model.loss(result, int(record.label))
                batch_loss += loss * scale
                model.backward(result, int(record.label), scale=scale)
            if not np.isfinite(batch_loss):
                raise NumericError(
                    f"non-finite loss at epoch {epoch} batch starting {start} "
                    f"(records {[r.id for r in batch]})"
                )
            model.store.adam_step(cfg.lr)
            epoch_loss += batch_loss * len(batch)
        epoch_loss /= len(order)

        val_report = evaluate_records(model, val_records, source) if val_records else None
        val_m = val_report["overall"]["m_f1"] if val_report else 0.0
        val_c = val_report["overall"]["c_f1"] if val_report else 0.0
        history.append(
            {
                "epoch": epoch,
                "loss": epoch_loss,
                "val_m_f1": val_m,
                "val_c_f1": val_c,
            }
        )
        log.info("epoch %d loss %.4f val m-F1 %.4f c-F1 %.4f", epoch, epoch_loss, val_m, val_c)
        if val_c > best_c_f1:
            best_c_f1 = val_c
            best_params = model.store.snapshot()
            epochs_since_best = 0
        else:
            epochs_since_best += 1
            if epochs_since_best > cfg.patience:
                log.info("early stop at epoch %d (no val c-F1 improvement)", epoch)
                break

    if best_params is not None:
        model.store.restore(best_params)
    return history


# ---------------------------------------------------------------------------
# checkpointing


def _vocab_to_json(vocab: NgramVocab) -> dict:
    return {
        "k": vocab.k,
        "ngrams": ["|".join(gram) for gram in vocab.ordered_ngrams()[1:]],
    }


def _vocab_from_json(obj: dict) -> NgramVocab:
    vocab = NgramVocab(k=int(obj["k"]))
    for i, joined in enumerate(obj["ngrams"], start=1):
        vocab.index[tuple(joined.split("|"))] = i
    return vocab


def save_checkpoint(model: LesaModel, path) -> None:
    config = {
        "format": CHECKPOINT_FORMAT,
        "train_config": asdict(model.cfg),
        "views": model.views,
        "vocabs": {
            "pos": {v: _vocab_to_json(model.vocabs.pos[v]) for v in model.views},
            "dep": {v: _vocab_to_json(model.vocabs.dep[v]) for v in model.views},
        },
    }
    save_tensors(path, model.store.params, config=config)


def load_checkpoint(path, runtime_cfg: TrainConfig | None = None) -> LesaModel:
    """Rebuild a model from a checkpoint; `runtime_cfg` guards architecture
    keys (k, dims, viewpoint layout) against mismatched runtimes."""
    tensors, config = load_tensors(path)
    if not config or config.get("format") != CHECKPOINT_FORMAT:
        raise DataError(f"{path}: missing or unsupported checkpoint config trailer")
    cfg = TrainConfig(**config["train_config"])
    if runtime_cfg is not None:
        for key in (
            "k",
            "embed_dim",
            "bilstm_hidden",
            "heads",
            "ff_dim",
            "semantic_dim",
            "combined_view",
            "max_seq_len",
        ):
            want = getattr(runtime_cfg, key)
            have = getattr(cfg, key)
            if want != have:
                raise ConfigError(
                    f"checkpoint {key}={have!r} incompatible with runtime {key}={want!r}"
                )
    vocabs = Vocabularies(
        pos={v: _vocab_from_json(obj) for v, obj in config["vocabs"]["pos"].items()},
        dep={v: _vocab_from_json(obj) for v, obj in config["vocabs"]["dep"].items()},
    )
    model = LesaModel(cfg, vocabs)
    if set(tensors) != set(model.store.params):
        missing = set(model.store.params) - set(tensors)
        extra = set(tensors) - set(model.store.params)
        raise DataError(
            f"{path}: checkpoint tensors do not match architecture "
            f"(missing {sorted(missing)[:3]}, extra {sorted(extra)[:3]})"
        )
    for name, value in tensors.items():
        if value.shape != model.store.params[name].shape:
            raise DataError(
                f"{path}: tensor {name} shape {value.shape} != {model.store.params[name].shape}"
            )
        model.store.params[name][...] = value
    return model
