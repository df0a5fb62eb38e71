from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lesa.errors import ConfigError, DataError, NumericError
from lesa.nn import (
    AttentionPool,
    BiLSTM,
    Dense,
    Dropout,
    ParamStore,
    Rng,
    TransformerBlock,
    cross_entropy,
    gradient_check,
    load_tensors,
    save_tensors,
    sigmoid,
    softmax,
)

# ---------------------------------------------------------------------------
# softmax / cross entropy


def test_softmax_symmetry():
    np.testing.assert_allclose(softmax([1.0, 1.0]), [0.5, 0.5], atol=1e-12)


def test_softmax_single_class():
    np.testing.assert_allclose(softmax([0.0]), [1.0], atol=0)


def test_softmax_hand_evaluated():
    # e^{ln 2} = 2, e^0 = 1 -> [2/3, 1/3]
    np.testing.assert_allclose(softmax([math.log(2.0), 0.0]), [2 / 3, 1 / 3], atol=1e-12)


def test_softmax_rejects_empty_and_nonfinite():
    with pytest.raises(DataError):
        softmax([])
    with pytest.raises(NumericError):
        softmax([1.0, float("nan")])
    with pytest.raises(NumericError):
        softmax([1.0, float("inf")])


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=40))
@settings(max_examples=200)
def test_softmax_sums_to_one(values):
    out = softmax(values)
    assert abs(out.sum() - 1.0) < 1e-9
    assert np.all(out >= 0.0)
    assert np.all(out <= 1.0)


@given(st.lists(st.floats(-200, 200), min_size=1, max_size=40))
@settings(max_examples=100)
def test_softmax_strictly_positive_in_representable_range(values):
    # entries only underflow to zero once score gaps exceed ~745 nats
    assert np.all(softmax(values) > 0.0)


def test_cross_entropy_perfect_prediction():
    assert cross_entropy([1.0, 0.0], 0) == 0.0


def test_cross_entropy_half():
    assert cross_entropy([0.5, 0.5], 1) == pytest.approx(0.6931471805599453, abs=1e-12)


def test_cross_entropy_clamped():
    assert cross_entropy([0.0, 1.0], 0) == pytest.approx(-math.log(1e-12), abs=1e-9)


def test_cross_entropy_label_out_of_range():
    with pytest.raises(DataError):
        cross_entropy([0.5, 0.5], 2)


# ---------------------------------------------------------------------------
# Adam


def test_adam_single_scalar_hand_applied():
    store = ParamStore()
    w = store.create("w", np.array([1.0]))
    store.grads["w"][...] = 1.0
    store.adam_step(lr=0.001)
    # hand-applied formulas, step 1: m=0.1, v=0.001, mhat=1, vhat=1
    expected = 1.0 - 0.001 * 1.0 / (math.sqrt(1.0) + 1e-8)
    assert w[0] == pytest.approx(expected, abs=1e-15)
    assert w[0] == pytest.approx(0.999, abs=1e-6)
    assert store.step_count == 1
    assert np.all(store.grads["w"] == 0.0)


def test_adam_zero_grad_is_noop_for_all_steps():
    store = ParamStore()
    w = store.create("w", np.array([0.3, -0.7]))
    before = w.copy()
    for _ in range(5):
        store.adam_step(lr=0.01)
    np.testing.assert_array_equal(w, before)


def test_adam_identical_params_identical_updates():
    store = ParamStore()
    a = store.create("a", np.array([0.5]))
    b = store.create("b", np.array([0.5]))
    store.grads["a"][...] = 0.25
    store.grads["b"][...] = 0.25
    store.adam_step(lr=0.003)
    assert a[0] == b[0]


def test_adam_rejects_missing_and_nonfinite_grad():
    store = ParamStore()
    store.create("w", np.array([1.0]))
    with pytest.raises(NumericError):
        store.adam_step(lr=0.001, names=["nope"])
    store.grads["w"][...] = float("nan")
    with pytest.raises(NumericError):
        store.adam_step(lr=0.001)


# ---------------------------------------------------------------------------
# attention pooling


def test_attention_pool_single_vector():
    store = ParamStore()
    pool = AttentionPool(store, "pool", dim=4, rng=Rng(0))
    v = np.array([[0.3, -1.0, 2.0, 0.5]])
    weights, pooled = pool.forward(v)
    np.testing.assert_allclose(weights, [1.0])
    np.testing.assert_allclose(pooled, v[0])


def test_attention_pool_zero_scorer_is_uniform():
    store = ParamStore()
    pool = AttentionPool(store, "pool", dim=3, rng=Rng(0))
    pool.w[...] = 0.0
    pool.b[...] = 0.0
    pool.v[...] = 0.0
    vectors = Rng(1).uniform(-1, 1, (3, 3))
    weights, pooled = pool.forward(vectors)
    np.testing.assert_allclose(weights, [1 / 3, 1 / 3, 1 / 3], atol=1e-12)
    np.testing.assert_allclose(pooled, vectors.mean(axis=0), atol=1e-12)


def test_attention_pool_mask_rule():
    store = ParamStore()
    pool = AttentionPool(store, "pool", dim=3, rng=Rng(2))
    vectors = Rng(3).uniform(-1, 1, (3, 3))
    weights, _ = pool.forward(vectors, mask=[True, True, False])
    assert weights[2] == 0.0
    assert weights[0] + weights[1] == pytest.approx(1.0, abs=1e-9)


def test_attention_pool_all_masked_is_error():
    store = ParamStore()
    pool = AttentionPool(store, "pool", dim=2, rng=Rng(0))
    with pytest.raises(DataError):
        pool.forward(np.zeros((2, 2)), mask=[False, False])


# ---------------------------------------------------------------------------
# BiLSTM


def _lstm_oracle(x, wx, wh, b):
    """Direct recurrence simulation, independent of the layer code."""
    h = wh.shape[0]
    h_prev = np.zeros(h)
    c_prev = np.zeros(h)
    outs = []
    for t in range(x.shape[0]):
        gates = x[t] @ wx + h_prev @ wh + b
        i = sigmoid(gates[:h])
        f = sigmoid(gates[h : 2 * h])
        g = np.tanh(gates[2 * h : 3 * h])
        o = sigmoid(gates[3 * h :])
        c = f * c_prev + i * g
        h_prev = o * np.tanh(c)
        c_prev = c
        outs.append(h_prev)
    return np.array(outs)


def test_bilstm_zero_params_zero_output():
    store = ParamStore()
    layer = BiLSTM(store, "lstm", in_dim=3, hidden=4, rng=Rng(0))
    for name in store.params:
        store.params[name][...] = 0.0
    out = layer.forward(Rng(1).uniform(-1, 1, (5, 3)))
    np.testing.assert_array_equal(out, np.zeros((5, 8)))


def test_bilstm_length_one_tied_directions_agree():
    store = ParamStore()
    layer = BiLSTM(store, "lstm", in_dim=3, hidden=4, rng=Rng(5))
    layer.bwd.wx[...] = layer.fwd.wx
    layer.bwd.wh[...] = layer.fwd.wh
    layer.bwd.b[...] = layer.fwd.b
    out = layer.forward(Rng(6).uniform(-1, 1, (1, 3)))
    np.testing.assert_allclose(out[0, :4], out[0, 4:], atol=1e-14)


def test_bilstm_matches_direct_recurrence_oracle():
    store = ParamStore()
    layer = BiLSTM(store, "lstm", in_dim=3, hidden=4, rng=Rng(7))
    x = Rng(8).uniform(-1, 1, (6, 3))
    out = layer.forward(x)
    fwd = _lstm_oracle(x, layer.fwd.wx, layer.fwd.wh, layer.fwd.b)
    bwd = _lstm_oracle(x[::-1], layer.bwd.wx, layer.bwd.wh, layer.bwd.b)[::-1]
    np.testing.assert_allclose(out, np.concatenate([fwd, bwd], axis=1), atol=1e-12)


def test_bilstm_reverse_direction_equals_forward_on_reversed_input():
    store = ParamStore()
    layer = BiLSTM(store, "lstm", in_dim=2, hidden=3, rng=Rng(9))
    layer.bwd.wx[...] = layer.fwd.wx
    layer.bwd.wh[...] = layer.fwd.wh
    layer.bwd.b[...] = layer.fwd.b
    x = Rng(10).uniform(-1, 1, (5, 2))
    out = layer.forward(x)
    out_rev = layer.forward(x[::-1])
    np.testing.assert_allclose(out[:, 3:], out_rev[::-1, :3], atol=1e-13)


def test_bilstm_padded_positions_zero():
    store = ParamStore()
    layer = BiLSTM(store, "lstm", in_dim=2, hidden=3, rng=Rng(11))
    x = np.zeros((6, 2))
    x[:4] = Rng(12).uniform(-1, 1, (4, 2))
    out = layer.forward(x, length=4)
    np.testing.assert_array_equal(out[4:], np.zeros((2, 6)))


def test_bilstm_dimension_mismatch():
    store = ParamStore()
    layer = BiLSTM(store, "lstm", in_dim=2, hidden=3, rng=Rng(0))
    with pytest.raises(DataError):
        layer.forward(np.zeros((4, 5)))


# ---------------------------------------------------------------------------
# transformer block


def test_transformer_shape_and_head_dim():
    store = ParamStore()
    block = TransformerBlock(store, "tr", dim=20, heads=5, ff_dim=128, rng=Rng(0))
    assert block.head_dim == 4
    x = Rng(1).uniform(-1, 1, (7, 20))
    out = block.forward(x)
    assert out.shape == x.shape


def test_transformer_rejects_indivisible_heads():
    store = ParamStore()
    with pytest.raises(ConfigError):
        TransformerBlock(store, "tr", dim=20, heads=3, ff_dim=16, rng=Rng(0))


def test_transformer_zero_input_zero_params_zero_output():
    store = ParamStore()
    block = TransformerBlock(store, "tr", dim=8, heads=2, ff_dim=16, rng=Rng(2))
    for name, p in store.params.items():
        p[...] = 1.0 if name.endswith(".gamma") else 0.0
    out = block.forward(np.zeros((4, 8)))
    np.testing.assert_array_equal(out, np.zeros((4, 8)))


def test_transformer_permutation_equivariance():
    store = ParamStore()
    block = TransformerBlock(store, "tr", dim=8, heads=2, ff_dim=16, rng=Rng(3))
    x = Rng(4).uniform(-1, 1, (3, 8))
    perm = [2, 0, 1]
    out = block.forward(x)
    out_perm = block.forward(x[perm])
    np.testing.assert_allclose(out_perm, out[perm], atol=1e-12)


def test_transformer_padding_does_not_leak():
    store = ParamStore()
    block = TransformerBlock(store, "tr", dim=8, heads=2, ff_dim=16, rng=Rng(5))
    x = Rng(6).uniform(-1, 1, (3, 8))
    out_short = block.forward(x, length=3)
    padded = np.vstack([x, Rng(7).uniform(-1, 1, (2, 8))])
    out_padded = block.forward(padded, length=3)
    np.testing.assert_allclose(out_padded[:3], out_short[:3], atol=1e-14)
    np.testing.assert_array_equal(out_padded[3:], np.zeros((2, 8)))


# ---------------------------------------------------------------------------
# dropout


def test_dropout_identity_in_inference():
    drop = Dropout(0.5)
    x = Rng(0).uniform(-1, 1, (100,))
    np.testing.assert_array_equal(drop.forward(x, training=False), x)


def test_dropout_zeroes_about_p_with_binomial_bound():
    drop = Dropout(0.3)
    n = 20000
    out = drop.forward(np.ones(n), rng=Rng(13), training=True)
    zeroed = int(np.sum(out == 0.0))
    sigma = math.sqrt(n * 0.3 * 0.7)
    assert abs(zeroed - 0.3 * n) < 4 * sigma


def test_dropout_inverted_scaling_preserves_expectation():
    drop = Dropout(0.4)
    x = np.full(50000, 2.0)
    out = drop.forward(x, rng=Rng(14), training=True)
    assert out.mean() == pytest.approx(2.0, rel=0.02)
    kept = out[out != 0.0]
    assert kept[0] == pytest.approx(2.0 / 0.6)


# ---------------------------------------------------------------------------
# gradient checks (finite-difference oracle)


def _dense_softmax_ce_fragment(seed):
    store = ParamStore()
    rng = Rng(seed)
    layer = Dense(store, "fc", in_dim=5, out_dim=3, rng=rng)
    x = rng.uniform(-1, 1, (2, 5))
    labels = [0, 2]

    def run():
        logits = layer.forward(x)
        loss = 0.0
        dlogits = np.zeros_like(logits)
        for r, label in enumerate(labels):
            probs = softmax(logits[r])
            loss += cross_entropy(probs, label)
            dlogits[r] = probs
            dlogits[r, label] -= 1.0
        layer.backward(dlogits / len(labels))
        return loss / len(labels)

    return store, run


def test_gradient_check_dense_softmax_ce():
    for seed in range(10):
        store, run = _dense_softmax_ce_fragment(seed)
        assert gradient_check(store, run, Rng(100 + seed)) < 1e-4


def test_gradient_check_bilstm_pool_loss():
    for seed in range(10):
        store = ParamStore()
        rng = Rng(seed)
        lstm = BiLSTM(store, "lstm", in_dim=4, hidden=3, rng=rng)
        pool = AttentionPool(store, "pool", dim=6, rng=rng)
        head = Dense(store, "head", in_dim=6, out_dim=2, rng=rng)
        x = rng.uniform(-1, 1, (5, 4))

        def run():
            states = lstm.forward(x)
            _, pooled = pool.forward(states)
            logits = head.forward(pooled)[0]
            probs = softmax(logits)
            loss = cross_entropy(probs, 1)
            dlogits = probs.copy()
            dlogits[1] -= 1.0
            dpooled = head.backward(dlogits[None, :])[0]
            dstates = pool.backward(dpooled)
            lstm.backward(dstates)
            return loss

        assert gradient_check(store, run, Rng(200 + seed), coords_per_param=3) < 1e-4


def test_gradient_check_transformer_pool_loss():
    for seed in range(10):
        store = ParamStore()
        rng = Rng(seed)
        block = TransformerBlock(store, "tr", dim=8, heads=2, ff_dim=16, rng=rng)
        pool = AttentionPool(store, "pool", dim=8, rng=rng)
        head = Dense(store, "head", in_dim=8, out_dim=2, rng=rng)
        x = rng.uniform(-1, 1, (4, 8))

        def run():
            states = block.forward(x)
            _, pooled = pool.forward(states)
            logits = head.forward(pooled)[0]
            probs = softmax(logits)
            loss = cross_entropy(probs, 0)
            dlogits = probs.copy()
            dlogits[0] -= 1.0
            dpooled = head.backward(dlogits[None, :])[0]
            dstates = pool.backward(dpooled)
            block.backward(dstates)
            return loss

        assert gradient_check(store, run, Rng(300 + seed), coords_per_param=3) < 1e-4


def test_gradient_check_attention_pool_with_mask():
    store = ParamStore()
    rng = Rng(21)
    pool = AttentionPool(store, "pool", dim=5, rng=rng)
    head = Dense(store, "head", in_dim=5, out_dim=2, rng=rng)
    x = rng.uniform(-1, 1, (4, 5))
    mask = np.array([True, True, True, False])

    def run():
        _, pooled = pool.forward(x, mask=mask)
        logits = head.forward(pooled)[0]
        probs = softmax(logits)
        loss = cross_entropy(probs, 1)
        dlogits = probs.copy()
        dlogits[1] -= 1.0
        dpooled = head.backward(dlogits[None, :])[0]
        pool.backward(dpooled)
        return loss

    assert gradient_check(store, run, Rng(22)) < 1e-4


# ---------------------------------------------------------------------------
# determinism and checkpointing


def test_forward_deterministic_given_seed():
    def build():
        store = ParamStore()
        rng = Rng(42)
        layer = BiLSTM(store, "lstm", in_dim=3, hidden=4, rng=rng)
        return layer.forward(Rng(43).uniform(-1, 1, (5, 3)))

    np.testing.assert_array_equal(build(), build())


def test_checkpoint_round_trip_byte_exact(tmp_path):
    store = ParamStore()
    rng = Rng(0)
    Dense(store, "fc", in_dim=4, out_dim=3, rng=rng)
    BiLSTM(store, "lstm", in_dim=4, hidden=2, rng=rng)
    path = tmp_path / "model.ckpt"
    save_tensors(path, store.params, config={"k": 3, "note": "unit"})
    first = path.read_bytes()
    tensors, config = load_tensors(path)
    assert config == {"k": 3, "note": "unit"}
    assert set(tensors) == set(store.params)
    for name, arr in tensors.items():
        np.testing.assert_array_equal(arr, store.params[name])
    again = tmp_path / "again.ckpt"
    save_tensors(again, tensors, config=config)
    assert again.read_bytes() == first


def test_checkpoint_bad_magic(tmp_path):
    path = tmp_path / "bad.ckpt"
    path.write_bytes(b"NOTLESA99" + b"\x00" * 16)
    with pytest.raises(DataError):
        load_tensors(path)


def test_checkpoint_truncated_payload(tmp_path):
    store = ParamStore()
    store.create("w", np.ones((2, 2)))
    path = tmp_path / "trunc.ckpt"
    save_tensors(path, store.params)
    raw = path.read_bytes()
    path.write_bytes(raw[:-5])
    with pytest.raises(DataError):
        load_tensors(path)
