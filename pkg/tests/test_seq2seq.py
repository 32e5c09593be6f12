import math

import numpy as np
import pytest

from curricula.corpus import BOS_ID, EOS_ID, PAD_ID, EncodedPair
from curricula.errors import CapabilityError, ConfigError, EncodingError
from curricula.seq2seq import (
    LN2,
    Batch,
    ModelConfig,
    attention_weights,
    backward_gradients,
    forward_teacher_forced,
    greedy_decode,
    init_params,
    loss_and_gradients,
    make_batch,
    parameter_count,
    parameter_shapes,
)
from oracles import finite_difference_check, sample_coordinates

FP = "test"

BASE_LAYOUT = ModelConfig(8, 8, 2, 2, True, 0.2, 12, 12)
SMALL_LAYOUT = ModelConfig(8, 8, 1, 2, False, 0.2, 12, 12)


def mixed_pairs():
    raw = [
        (0, (4, 5, 6, 7), (5, 6)),
        (1, (8, 9, 10), (7, 8, 9, 10)),
        (2, (11, 4), (11,)),
    ]
    return [EncodedPair(i, s, (1,) + t, t + (2,), FP, FP) for i, s, t in raw]


def check_weights(config, seed=5):
    rng = np.random.default_rng(seed)
    return {n: rng.uniform(-0.5, 0.5, size=sh) for n, sh in parameter_shapes(config)}


# ---------------------------------------------------------------------------
# initialization
# ---------------------------------------------------------------------------

def test_init_deterministic():
    a = init_params(BASE_LAYOUT, seed=3)
    b = init_params(BASE_LAYOUT, seed=3)
    assert set(a) == set(b)
    for k in a:
        assert np.array_equal(a[k], b[k])


def test_init_attention_tensors_follow_preset():
    base = ModelConfig.preset("base", 50, 50)
    small = ModelConfig.preset("small", 50, 50)
    assert base.use_attention and not small.use_attention
    base_names = {n for n, _ in parameter_shapes(base)}
    small_names = {n for n, _ in parameter_shapes(small)}
    assert {"attn_Wq", "attn_Wk", "attn_v"} <= base_names
    assert not {"attn_Wq", "attn_Wk", "attn_v"} & small_names


def test_preset_dimensions():
    base = ModelConfig.preset("base", 50, 50)
    assert (base.hidden_dim, base.encoder_layers, base.decoder_layers) == (512, 2, 2)
    assert base.dropout_p == 0.2
    small = ModelConfig.preset("small", 50, 50)
    assert (small.hidden_dim, small.encoder_layers, small.decoder_layers) == (128, 1, 2)


def test_parameter_count_matches_shape_arithmetic():
    # small preset, vocab 100/100, embed 128: sum the shapes by hand
    config = ModelConfig.preset("small", 100, 100)
    embeddings = 2 * (100 * 128)
    lstm_layer = 128 * 512 + 128 * 512 + 512  # Wx + Wh + b at every layer
    projection = 128 * 100 + 100
    expected = embeddings + 3 * lstm_layer + projection  # 1 encoder + 2 decoder
    assert parameter_count(config) == expected


def test_init_bounds_and_forget_bias():
    params = init_params(BASE_LAYOUT, seed=0)
    h = BASE_LAYOUT.hidden_dim
    for name, arr in params.items():
        if name.endswith("_b") and name != "out_b":
            assert np.all(arr[h : 2 * h] == 1.0)
            rest = np.concatenate([arr[:h], arr[2 * h :]])
            assert np.all(np.abs(rest) <= 0.08)
        else:
            assert np.all(np.abs(arr) <= 0.08)


def test_zero_dimension_rejected():
    with pytest.raises(ConfigError):
        ModelConfig(0, 8, 1, 1, False, 0.0, 12, 12)


# ---------------------------------------------------------------------------
# forward pass
# ---------------------------------------------------------------------------

def test_fresh_init_loss_near_uniform():
    config = ModelConfig(8, 8, 1, 1, False, 0.2, 12, 10)
    params = init_params(config, seed=1)
    raw = [(0, (4, 5, 6, 7), (5, 6)), (1, (8, 9, 10), (7, 8, 9)), (2, (11, 4), (4,))]
    batch = make_batch(
        [EncodedPair(i, s, (1,) + t, t + (2,), FP, FP) for i, s, t in raw]
    )
    loss = forward_teacher_forced(params, config, batch).mean_loss
    assert abs(loss - math.log2(10)) / math.log2(10) < 0.15


def test_extra_pad_columns_do_not_change_losses():
    def pad_cols(arr, n):
        filler = np.full((arr.shape[0], n), PAD_ID, dtype=arr.dtype)
        return np.concatenate([arr, filler], axis=1)

    for config in (BASE_LAYOUT, SMALL_LAYOUT):
        params = check_weights(config)
        b1 = make_batch(mixed_pairs())
        b2 = Batch(
            pad_cols(b1.src, 3), b1.src_lengths,
            pad_cols(b1.tgt_in, 2), pad_cols(b1.tgt_out, 2),
            b1.tgt_lengths, b1.indices,
        )
        r1 = forward_teacher_forced(params, config, b1)
        r2 = forward_teacher_forced(params, config, b2)
        assert np.array_equal(r1.pair_losses, r2.pair_losses)


def test_pair_loss_independent_of_batch_companions():
    # BLAS may pick different kernels for different batch sizes, so allow
    # last-ulp drift; a masking bug would be off by far more than this.
    for config in (BASE_LAYOUT, SMALL_LAYOUT):
        params = check_weights(config)
        pairs = mixed_pairs()
        batched = forward_teacher_forced(params, config, make_batch(pairs))
        for i, pair in enumerate(pairs):
            solo = forward_teacher_forced(params, config, make_batch([pair]))
            assert abs(solo.pair_losses[0] - batched.pair_losses[i]) < 1e-12


def test_forward_deterministic_and_loss_positive():
    params = init_params(BASE_LAYOUT, seed=2)
    batch = make_batch(mixed_pairs())
    a = forward_teacher_forced(params, BASE_LAYOUT, batch, dropout_on=True, seed=9)
    b = forward_teacher_forced(params, BASE_LAYOUT, batch, dropout_on=True, seed=9)
    assert a.mean_loss == b.mean_loss
    assert np.array_equal(a.pair_losses, b.pair_losses)
    assert np.array_equal(a.log_probs, b.log_probs)
    assert a.mean_loss > 0
    c = forward_teacher_forced(params, BASE_LAYOUT, batch, dropout_on=True, seed=10)
    assert c.mean_loss != a.mean_loss  # different masks


def test_mean_loss_is_token_weighted_mean_of_pair_losses():
    params = init_params(SMALL_LAYOUT, seed=4)
    batch = make_batch(mixed_pairs())
    r = forward_teacher_forced(params, SMALL_LAYOUT, batch)
    lengths = batch.tgt_lengths.astype(float)
    expected = float((r.pair_losses * lengths).sum() / lengths.sum())
    assert math.isclose(r.mean_loss, expected, rel_tol=1e-12)


def test_out_of_range_ids_rejected():
    params = init_params(SMALL_LAYOUT, seed=4)
    bad = EncodedPair(0, (4, 99), (1, 5), (5, 2), FP, FP)
    with pytest.raises(EncodingError):
        forward_teacher_forced(params, SMALL_LAYOUT, make_batch([bad]))


# ---------------------------------------------------------------------------
# attention
# ---------------------------------------------------------------------------

def test_attention_single_position_gets_weight_one():
    params = check_weights(BASE_LAYOUT)
    q = np.zeros((1, 8))
    K = np.random.default_rng(0).standard_normal((1, 1, 8))
    alpha = attention_weights(params, BASE_LAYOUT, q, K, np.array([1]))
    assert alpha.shape == (1, 1)
    assert alpha[0, 0] == 1.0


def test_attention_rows_normalized_and_pad_exactly_zero():
    params = check_weights(BASE_LAYOUT)
    rng = np.random.default_rng(1)
    q = rng.standard_normal((4, 8))
    K = rng.standard_normal((4, 6, 8))
    lengths = np.array([1, 3, 6, 4])
    alpha = attention_weights(params, BASE_LAYOUT, q, K, lengths)
    for row, n in zip(alpha, lengths):
        assert np.all(row[n:] == 0.0)
        assert abs(row[:n].sum() - 1.0) < 1e-6


def test_attention_matches_hand_computed_scalars():
    config = ModelConfig(2, 2, 1, 1, True, 0.0, 8, 8)
    params = {n: np.zeros(sh) for n, sh in parameter_shapes(config)}
    params["attn_Wq"] = np.array([[0.3, -0.1], [0.2, 0.5]])
    params["attn_Wk"] = np.array([[-0.4, 0.6], [0.1, 0.2]])
    params["attn_v"] = np.array([0.7, -0.3])
    q = np.array([[0.25, -0.5]])
    K = np.array([[[0.1, 0.4], [-0.5, 0.2]]])
    alpha = attention_weights(params, config, q, K, np.array([2]))
    # independent scalar computation of v . tanh(q Wq + k Wk), then softmax
    qs = [
        0.25 * 0.3 + (-0.5) * 0.2,
        0.25 * (-0.1) + (-0.5) * 0.5,
    ]
    scores = []
    for k in ([0.1, 0.4], [-0.5, 0.2]):
        ks = [
            k[0] * (-0.4) + k[1] * 0.1,
            k[0] * 0.6 + k[1] * 0.2,
        ]
        scores.append(
            0.7 * math.tanh(qs[0] + ks[0]) + (-0.3) * math.tanh(qs[1] + ks[1])
        )
    z = [math.exp(s - max(scores)) for s in scores]
    expected = [e / sum(z) for e in z]
    assert np.allclose(alpha[0], expected, rtol=0, atol=1e-15)


def test_attention_requires_capability():
    params = check_weights(SMALL_LAYOUT)
    with pytest.raises(CapabilityError):
        attention_weights(
            params, SMALL_LAYOUT, np.zeros((1, 8)), np.zeros((1, 2, 8)), np.array([2])
        )


# ---------------------------------------------------------------------------
# greedy decoding
# ---------------------------------------------------------------------------

def test_decode_immediate_eos_gives_empty_output():
    config = SMALL_LAYOUT
    params = {n: np.zeros(sh) for n, sh in parameter_shapes(config)}
    params["out_b"][EOS_ID] = 10.0
    assert greedy_decode(params, config, (4, 5), max_len=7) == []


def test_decode_caps_at_max_len():
    config = SMALL_LAYOUT
    params = {n: np.zeros(sh) for n, sh in parameter_shapes(config)}
    params["out_b"][7] = 10.0  # never EOS
    out = greedy_decode(params, config, (4, 5), max_len=7)
    assert out == [7] * 7


def test_decode_deterministic_and_clean(toy_data, tiny_checkpoint):
    pair = toy_data["train_enc"][0]
    a = greedy_decode(tiny_checkpoint.params, tiny_checkpoint.config, pair.src_ids, 40)
    b = greedy_decode(tiny_checkpoint.params, tiny_checkpoint.config, pair.src_ids, 40)
    assert a == b
    assert PAD_ID not in a and BOS_ID not in a and EOS_ID not in a


def test_decode_argmax_ties_take_smallest_id():
    config = SMALL_LAYOUT
    params = {n: np.zeros(sh) for n, sh in parameter_shapes(config)}
    # all logits tied at zero; PAD/BOS are excluded, so EOS (id 2) wins
    assert greedy_decode(params, config, (4,), max_len=5) == []


# ---------------------------------------------------------------------------
# gradients
# ---------------------------------------------------------------------------

def test_gradients_match_finite_differences():
    batch = make_batch(mixed_pairs())
    for config in (BASE_LAYOUT, SMALL_LAYOUT):
        params = check_weights(config)
        _, grads = loss_and_gradients(params, config, batch)
        coords = sample_coordinates(params, 120, seed=7)
        errors = finite_difference_check(
            params,
            grads,
            lambda p: forward_teacher_forced(p, config, batch).mean_loss,
            coords,
        )
        assert sum(e < 1e-4 for e in errors) >= 0.99 * len(errors)


def test_gradients_match_finite_differences_with_dropout():
    batch = make_batch(mixed_pairs())
    for config in (BASE_LAYOUT, SMALL_LAYOUT):
        params = check_weights(config)
        _, grads = loss_and_gradients(params, config, batch, dropout_on=True, seed=13)
        coords = sample_coordinates(params, 60, seed=8)
        errors = finite_difference_check(
            params,
            grads,
            lambda p: forward_teacher_forced(
                p, config, batch, dropout_on=True, seed=13
            ).mean_loss,
            coords,
        )
        assert sum(e < 1e-4 for e in errors) >= 0.99 * len(errors)


def test_unused_embedding_rows_get_zero_gradient():
    params = check_weights(SMALL_LAYOUT)
    batch = make_batch(mixed_pairs())
    grads = backward_gradients(params, SMALL_LAYOUT, batch)
    used_src = set(batch.src.ravel().tolist())
    used_tgt = set(batch.tgt_in.ravel().tolist())
    for row in range(SMALL_LAYOUT.src_vocab_size):
        if row not in used_src:
            assert np.all(grads["src_embed"][row] == 0.0)
    for row in range(SMALL_LAYOUT.tgt_vocab_size):
        if row not in used_tgt:
            assert np.all(grads["tgt_embed"][row] == 0.0)


def test_output_bias_gradient_is_masked_mean_softmax_error():
    # hand derivation: d(mean loss)/d out_b = mean over real tokens of
    # (softmax - onehot) / ln 2, because the loss is in bits
    config = SMALL_LAYOUT
    params = check_weights(config)
    batch = make_batch(mixed_pairs())
    result, grads = loss_and_gradients(params, config, batch)
    probs = 2.0 ** result.log_probs
    tlen = batch.tgt_in.shape[1]
    mask = np.arange(tlen)[None, :] < batch.tgt_lengths[:, None]
    expected = np.zeros(config.tgt_vocab_size)
    n_tokens = mask.sum()
    for b in range(batch.size):
        for t in range(tlen):
            if mask[b, t]:
                err = probs[b, t].copy()
                err[batch.tgt_out[b, t]] -= 1.0
                expected += err / (n_tokens * LN2)
    assert np.allclose(grads["out_b"], expected, rtol=1e-9, atol=1e-12)


def test_non_finite_gradients_name_the_tensor():
    from curricula.errors import NumericalError

    params = check_weights(SMALL_LAYOUT)
    params["out_W"][0, 0] = np.nan
    batch = make_batch(mixed_pairs())
    with pytest.raises(NumericalError) as err:
        backward_gradients(params, SMALL_LAYOUT, batch)
    assert "tensor" in str(err.value)


def test_backward_deterministic():
    params = init_params(BASE_LAYOUT, seed=6)
    batch = make_batch(mixed_pairs())
    g1 = backward_gradients(params, BASE_LAYOUT, batch, dropout_on=True, seed=21)
    g2 = backward_gradients(params, BASE_LAYOUT, batch, dropout_on=True, seed=21)
    for k in g1:
        assert np.array_equal(g1[k], g2[k])
