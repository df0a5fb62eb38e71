"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to watch the lines appear.
"""

from __future__ import annotations

import random
import time

import numpy as np

from conftest import make_record, make_separable_corpus
from lesa.corpus import downsample, preprocess_tweet, split_records
from lesa.dep import DepPillar, build_dep_vocab
from lesa.evaluate import AgreementMatrix, ConfusionMatrix, cohen_kappa, f1_scores, weighted_average
from lesa.model import (
    SemanticSource,
    TrainConfig,
    build_model,
    build_vocabularies,
    save_checkpoint,
    train,
)
from lesa.nn import (
    AttentionPool,
    BiLSTM,
    Dense,
    ParamStore,
    Rng,
    TransformerBlock,
    cross_entropy,
    gradient_check,
    softmax,
)
from lesa.pos import PosPillar, build_pos_vocab, pos_ngrams
from test_eval import oracle_f1


def _report(name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"[ACCEPTANCE] {name}: {status}{suffix}", flush=True)
    assert ok, f"{name} failed {suffix}"


GRAD_TOL = 1e-4
NORM_TOL = 1e-9


# ---------------------------------------------------------------------------
# gradient suite


def _check_dense(seed: int) -> float:
    store = ParamStore()
    rng = Rng(seed)
    layer = Dense(store, "fc", 6, 3, rng)
    x = rng.uniform(-1, 1, (2, 6))

    def run():
        logits = layer.forward(x)
        loss = 0.0
        dlogits = np.zeros_like(logits)
        for row, label in enumerate((0, 2)):
            probs = softmax(logits[row])
            loss += cross_entropy(probs, label) / 2
            dlogits[row] = probs
            dlogits[row, label] -= 1.0
        layer.backward(dlogits / 2)
        return loss

    return gradient_check(store, run, Rng(seed + 900), coords_per_param=4)


def _check_bilstm(seed: int) -> float:
    store = ParamStore()
    rng = Rng(seed)
    lstm = BiLSTM(store, "lstm", 4, 3, rng)
    pool = AttentionPool(store, "pool", 6, rng)
    head = Dense(store, "head", 6, 2, rng)
    x = rng.uniform(-1, 1, (5, 4))

    def run():
        states = lstm.forward(x)
        _, pooled = pool.forward(states)
        probs = softmax(head.forward(pooled)[0])
        loss = cross_entropy(probs, 1)
        dlogits = probs.copy()
        dlogits[1] -= 1.0
        dstates = pool.backward(head.backward(dlogits[None, :])[0])
        lstm.backward(dstates)
        return loss

    return gradient_check(store, run, Rng(seed + 901), coords_per_param=3)


def _check_transformer(seed: int) -> float:
    store = ParamStore()
    rng = Rng(seed)
    block = TransformerBlock(store, "tr", 8, 2, 16, rng)
    pool = AttentionPool(store, "pool", 8, rng)
    head = Dense(store, "head", 8, 2, rng)
    x = rng.uniform(-1, 1, (4, 8))

    def run():
        states = block.forward(x)
        _, pooled = pool.forward(states)
        probs = softmax(head.forward(pooled)[0])
        loss = cross_entropy(probs, 0)
        dlogits = probs.copy()
        dlogits[0] -= 1.0
        dstates = pool.backward(head.backward(dlogits[None, :])[0])
        block.backward(dstates)
        return loss

    return gradient_check(store, run, Rng(seed + 902), coords_per_param=3)


def _check_attention_pool(seed: int) -> float:
    store = ParamStore()
    rng = Rng(seed)
    pool = AttentionPool(store, "pool", 5, rng)
    head = Dense(store, "head", 5, 2, rng)
    x = rng.uniform(-1, 1, (4, 5))

    def run():
        _, pooled = pool.forward(x)
        probs = softmax(head.forward(pooled)[0])
        loss = cross_entropy(probs, 1)
        dlogits = probs.copy()
        dlogits[1] -= 1.0
        pool.backward(head.backward(dlogits[None, :])[0])
        return loss

    return gradient_check(store, run, Rng(seed + 903), coords_per_param=3)


def _corpus_vocabs(cfg):
    corpus = make_separable_corpus(24, seed=404)
    return corpus, build_vocabularies(corpus, cfg)


def _check_pos_pillar(seed: int) -> float:
    corpus, vocabs = _corpus_vocabs(TrainConfig())
    store = ParamStore()
    pillar = PosPillar(store, "pos.noisy", vocabs.pos["noisy"], Rng(seed))
    idx = pillar.encode_record(corpus[0])

    def run():
        out = pillar.forward(idx)
        probs = softmax(out[:2])
        loss = cross_entropy(probs, 0)
        dout = np.zeros(32)
        dprobs = probs.copy()
        dprobs[0] -= 1.0
        dout[:2] = dprobs
        pillar.backward(dout)
        return loss

    return gradient_check(store, run, Rng(seed + 904), coords_per_param=2)


def _check_dep_pillar(seed: int) -> float:
    corpus, vocabs = _corpus_vocabs(TrainConfig())
    store = ParamStore()
    pillar = DepPillar(store, "dep.noisy", vocabs.dep["noisy"], Rng(seed))
    idx, positions, parents = pillar.encode_record(corpus[0])

    def run():
        out = pillar.forward(idx, positions, parents)
        probs = softmax(out[:2])
        loss = cross_entropy(probs, 1)
        dout = np.zeros(32)
        dprobs = probs.copy()
        dprobs[1] -= 1.0
        dout[:2] = dprobs
        pillar.backward(dout)
        return loss

    return gradient_check(store, run, Rng(seed + 905), coords_per_param=2)


def _check_full_model(seed: int) -> float:
    cfg = TrainConfig(seed=seed, aux_weight=0.3)
    corpus, vocabs = _corpus_vocabs(cfg)
    model = build_model(cfg, vocabs)
    source = SemanticSource(cfg.semantic_dim, use_fallback=True)
    batch = corpus[:2]

    def run():
        total = 0.0
        for record in batch:
            result = model.forward(record, source.vector(record))
            total += model.loss(result, int(record.label)) / len(batch)
            model.backward(result, int(record.label), scale=1.0 / len(batch))
        return total

    return gradient_check(model.store, run, Rng(seed + 906), coords_per_param=1)


def test_acceptance_gradient_suite():
    start = time.monotonic()
    checks = {
        "dense": _check_dense,
        "bilstm": _check_bilstm,
        "transformer_block": _check_transformer,
        "attention_pool": _check_attention_pool,
        "pos_pillar": _check_pos_pillar,
        "dep_pillar": _check_dep_pillar,
        "full_model": _check_full_model,
    }
    worst = {}
    for name, check in checks.items():
        worst[name] = max(check(seed) for seed in range(10))
    elapsed = time.monotonic() - start
    ok = all(err < GRAD_TOL for err in worst.values()) and elapsed < 300
    detail = ", ".join(f"{n}={e:.2e}" for n, e in worst.items()) + f", {elapsed:.0f}s"
    _report("gradient suite < 1e-4, 10 seeds, < 5 min", ok, detail)


# ---------------------------------------------------------------------------
# normalization suite


def test_acceptance_normalization_suite():
    rng = Rng(2024)
    forwards = 0
    worst = 0.0

    for _ in range(400):
        size = int(rng.integers(1, 40))
        vec = rng.uniform(-60, 60, size)
        worst = max(worst, abs(float(softmax(vec).sum()) - 1.0))
        forwards += 1

    store = ParamStore()
    pool = AttentionPool(store, "pool", 8, Rng(7))
    for _ in range(400):
        n = int(rng.integers(1, 12))
        vectors = rng.uniform(-3, 3, (n, 8))
        mask = rng.random(n) < 0.8 if n > 1 else None
        if mask is not None and not mask.any():
            mask[0] = True
        weights, _ = pool.forward(vectors, mask=mask)
        worst = max(worst, abs(float(weights.sum()) - 1.0))
        forwards += 1

    cfg = TrainConfig(seed=3)
    corpus, vocabs = _corpus_vocabs(cfg)
    model = build_model(cfg, vocabs)
    source = SemanticSource(cfg.semantic_dim, use_fallback=True)
    for record in (corpus * 3)[:60]:
        result = model.forward(record, source.vector(record))
        groups = [result.probs, *result.aux_probs.values()]
        groups += [np.asarray(v) for v in result.attention.values()]
        for group in groups:
            worst = max(worst, abs(float(np.sum(group)) - 1.0))
            forwards += 1

    ok = worst <= NORM_TOL and forwards >= 1000
    _report(
        "normalization: weight vectors sum to 1 within 1e-9",
        ok,
        f"{forwards} forwards, worst deviation {worst:.2e}",
    )


# ---------------------------------------------------------------------------
# metric oracle


def test_acceptance_metric_oracle():
    rng = random.Random(777)
    exact = True
    for _ in range(1000):
        size = rng.randint(1, 60)
        predicted = [rng.randint(0, 1) for _ in range(size)]
        gold = [rng.randint(0, 1) for _ in range(size)]
        ours = f1_scores(ConfusionMatrix.from_pairs(predicted, gold))
        reference = oracle_f1(predicted, gold)
        if ours != reference:
            exact = False
            break
        if ours["m_f1"] != (ours["c_f1"] + ours["nonclaim_f1"]) / 2:
            exact = False
            break
    _report("metric oracle: f1 matches brute force exactly on 1000 vectors", exact)


# ---------------------------------------------------------------------------
# reference-count reproductions


def test_acceptance_kappa_reproduction():
    kappa = cohen_kappa(AgreementMatrix([[301, 47], [64, 550]]))
    ok = abs(kappa - 0.753) <= 1e-3
    _report("kappa over the re-annotation reference counts = 0.753 +- 1e-3", ok, f"kappa={kappa:.4f}")


def test_acceptance_weighted_average_reproduction():
    values = [0.62, 0.53, 0.55, 0.77, 0.74, 0.68, 0.52]
    sizes = [1485, 794, 864, 48, 732, 278, 235]
    avg = weighted_average(list(zip(values, sizes)))
    ok = abs(avg - 0.61) <= 0.005
    _report("weighted average reproduces the reference 0.61 +- 0.005", ok, f"avg={avg:.4f}")


# ---------------------------------------------------------------------------
# dependency encoding identity


def test_acceptance_dep_encode_identity():
    vocab = build_dep_vocab([["det", "nsubj", "root", "obj"]] * 3)
    store = ParamStore()
    pillar = DepPillar(store, "dep.noisy", vocab, Rng(5), use_position_signals=False)
    record = make_record(
        "r",
        ["the", "dog", "barks", "loud"],
        ["DET", "NOUN", "VERB", "ADV"],
        1,
        deprel=["det", "nsubj", "root", "obj"],
        head=[2, 3, 0, 3],
    )
    idx, positions, parents = pillar.encode_record(record)
    vectors = pillar.encode_vectors(idx, positions, parents)
    expected = pillar.embedding.table[np.asarray(idx)]
    ok = vectors.tobytes() == expected.tobytes()
    _report("dep encoding with zeroed signals equals raw embeddings bitwise", ok)


# ---------------------------------------------------------------------------
# POS construction


def test_acceptance_pos_construction():
    rng = random.Random(31)
    tagset = ["ADJ", "ADP", "ADV", "DET", "NOUN", "NUM", "PRON", "VERB", "X"]
    ok = True
    for _ in range(1000):
        n = rng.randint(1, 40)
        tags = [rng.choice(tagset) for _ in range(n)]
        for k in (2, 3, 4):
            if len(pos_ngrams(tags, k)) != n:
                ok = False
    sequences = [["A", "B"]] * 2 + [["C", "D"]] * 3 + [["E", "F", "G"]] * 5
    vocab = build_pos_vocab(sequences, 3)
    counts: dict[tuple, int] = {}
    for tags in sequences:
        for gram in pos_ngrams(tags, 3):
            counts[gram] = counts.get(gram, 0) + 1
    for gram, freq in counts.items():
        kept = vocab.lookup(gram) != 0
        if freq >= 3 and not kept:
            ok = False
        if freq <= 2 and kept:
            ok = False
    _report("pos n-gram count preserved for k in {2,3,4}; freq<=2 excluded", ok)


# ---------------------------------------------------------------------------
# preprocessing conformance


def _fifty_raw_tweets() -> list[str]:
    rng = random.Random(99)
    subjects = ["alcohol", "bleach", "masks", "vaccines", "garlic", "sunlight"]
    verbs = ["cures", "prevents", "spreads", "kills", "causes", "stops"]
    objects = ["corona", "the virus", "covid19", "the outbreak", "infection rates"]
    extras = [
        "#covid19",
        "#fakenews",
        "@who",
        "@user123",
        "https://t.co/abc123",
        "www.example.com/story",
        "☣",
        "\U0001f637",
        "RT",
    ]
    tweets = []
    for i in range(42):
        words = [
            rng.choice(subjects),
            rng.choice(verbs),
            rng.choice(objects),
            "in",
            rng.choice(["india", "china", "europe", "crowded rooms"]),
        ]
        noise = rng.sample(extras, rng.randint(0, 3))
        position = rng.randint(0, len(words))
        tweet = " ".join(words[:position] + noise + words[position:])
        tweets.append(tweet)
    tweets += [
        "corona is bad",                       # below both floors after cleaning
        "#only #hashtags #here",               # empty after cleaning
        "@a @b @c @d",                         # empty after cleaning
        "short one",
        "https://t.co/xyz www.spam.io",
        "ok ☠ no",
        "tiny",
        "one two three",
    ]
    return tweets


def test_acceptance_preprocessing_conformance():
    def oracle_clean(text: str) -> str:
        stripped = "".join(ch for ch in text if ord(ch) < 128)
        kept = [
            tok
            for tok in stripped.split()
            if not (
                tok.startswith("#")
                or tok.startswith("@")
                or "://" in tok
                or tok.lower().startswith("www.")
            )
        ]
        return " ".join(kept)

    tweets = _fifty_raw_tweets()
    assert len(tweets) == 50
    ok = True
    rejected = 0
    for raw in tweets:
        cleaned = preprocess_tweet(raw, None)
        reference = oracle_clean(raw)
        should_reject = len(reference) < 20 or len(reference.split()) < 4
        if cleaned is None:
            rejected += 1
            if not should_reject:
                ok = False
            continue
        if should_reject:
            ok = False
        if cleaned != reference:
            ok = False
        for token in cleaned.split():
            if token.startswith("#") or token.startswith("@") or "://" in token:
                ok = False
        if cleaned.encode("ascii", errors="ignore").decode("ascii") != cleaned:
            ok = False
        if preprocess_tweet(cleaned, None) != cleaned:
            ok = False
    _report(
        "preprocessing: 50-tweet fixture clean, thresholds enforced, idempotent",
        ok and rejected >= 5,
        f"rejected {rejected}/50",
    )


# ---------------------------------------------------------------------------
# end-to-end learning


def test_acceptance_end_to_end_learning():
    start = time.monotonic()
    corpus = make_separable_corpus(600, seed=42)
    results = []
    for seed in (1, 2, 3):
        cfg = TrainConfig(
            seed=seed,
            epochs=30,
            batch_size=32,
            lr=3e-3,
            pretrain_epochs=0,
            use_fallback_embeddings=True,
            patience=3,
        )
        split = split_records(corpus, seed=seed)
        train_rows = downsample(split.select(corpus, "train"), seed=seed)
        val_rows = split.select(corpus, "val")
        vocabs = build_vocabularies(train_rows, cfg)
        model = build_model(cfg, vocabs)
        source = SemanticSource(cfg.semantic_dim, use_fallback=True)
        history = train(model, train_rows, val_rows, source)
        best = max(h["val_c_f1"] for h in history)
        results.append(best)
    elapsed = time.monotonic() - start
    ok = all(best >= 0.95 for best in results) and elapsed < 120
    _report(
        "end-to-end: val c-F1 >= 0.95 within 30 epochs on 3 seeds, < 2 min",
        ok,
        f"best c-F1 {['%.3f' % b for b in results]}, {elapsed:.0f}s",
    )


# ---------------------------------------------------------------------------
# determinism


def test_acceptance_training_determinism(tmp_path):
    corpus = make_separable_corpus(60, seed=8)

    def run(tag: str):
        cfg = TrainConfig(
            seed=11,
            epochs=3,
            batch_size=16,
            pretrain_epochs=1,
            use_fallback_embeddings=True,
            semantic_dim=64,
        )
        split = split_records(corpus, seed=cfg.seed)
        train_rows = downsample(split.select(corpus, "train"), seed=cfg.seed)
        val_rows = split.select(corpus, "val")
        vocabs = build_vocabularies(train_rows, cfg)
        model = build_model(cfg, vocabs)
        from lesa.model import pretrain_pillars

        pretrain_pillars(model, train_rows)
        source = SemanticSource(cfg.semantic_dim, use_fallback=True)
        history = train(model, train_rows, val_rows, source)
        path = tmp_path / f"{tag}.ckpt"
        save_checkpoint(model, path)
        import json

        report = json.dumps(history, sort_keys=True)
        return path.read_bytes(), report

    bytes_a, report_a = run("a")
    bytes_b, report_b = run("b")
    ok = bytes_a == bytes_b and report_a == report_b
    _report("determinism: same seed, byte-identical checkpoint and report", ok)


# ---------------------------------------------------------------------------
# downsampling


def test_acceptance_downsampling():
    big = [make_record(f"c{i}", ["t"], ["NOUN"], 1) for i in range(7354)] + [
        make_record(f"n{i}", ["t"], ["NOUN"], 0) for i in range(1055)
    ]
    out = downsample(big, seed=13)
    claims = sum(1 for r in out if r.label == 1)
    non = sum(1 for r in out if r.label == 0)
    ok = claims == non == 1055

    rng = random.Random(5)
    for _ in range(5):
        a, b = rng.randint(1, 300), rng.randint(1, 300)
        rows = [make_record(f"a{i}", ["t"], ["NOUN"], 1) for i in range(a)] + [
            make_record(f"b{i}", ["t"], ["NOUN"], 0) for i in range(b)
        ]
        balanced = downsample(rows, seed=rng.randint(0, 10_000))
        if sum(1 for r in balanced if r.label == 1) != sum(1 for r in balanced if r.label == 0):
            ok = False
    _report("downsampling: (7354, 1055) -> (1055, 1055); always exactly equal", ok)
