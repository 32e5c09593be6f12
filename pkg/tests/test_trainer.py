import math

import numpy as np
import pytest

from curricula.checkpoint import (
    ModelCheckpoint,
    checkpoint_bytes,
    load_checkpoint,
    save_checkpoint,
)
from curricula.errors import (
    CheckpointCorruptError,
    CheckpointFormatError,
    ConfigError,
    StructuralError,
)
from curricula.ordering import Strategy, make_ordering
from curricula.seq2seq import (
    ModelConfig,
    forward_teacher_forced,
    init_params,
    make_batch,
)
from curricula.trainer import (
    AdamState,
    TrainConfig,
    adam_step,
    fit,
    train_epoch,
    validation_perplexity,
)

CONFIG = ModelConfig(8, 8, 1, 1, False, 0.0, 12, 12)


def scalarish_params(value=0.5):
    return {"w": np.array([value])}


# ---------------------------------------------------------------------------
# adam_step
# ---------------------------------------------------------------------------

def test_adam_zero_gradient_leaves_parameters_bit_identical():
    params = scalarish_params()
    state = AdamState.fresh(params)
    new_params, new_state = adam_step(
        params, {"w": np.zeros(1)}, state, TrainConfig()
    )
    assert new_params["w"].tobytes() == params["w"].tobytes()
    assert new_state.t == 1


def test_adam_first_step_matches_hand_derivation():
    # g=1, fresh state: m_hat = v_hat = 1, so the step is -lr / (1 + eps)
    config = TrainConfig(learning_rate=1e-5)
    params = scalarish_params(0.5)
    new_params, _ = adam_step(params, {"w": np.ones(1)}, AdamState.fresh(params), config)
    expected = 0.5 - 1e-5 * 1.0 / (math.sqrt(1.0) + 1e-8)
    assert abs(new_params["w"][0] - expected) <= 1e-12


def test_adam_deterministic():
    params = init_params(CONFIG, seed=0)
    grads = {k: np.full_like(v, 0.01) for k, v in params.items()}
    state = AdamState.fresh(params)
    a_params, a_state = adam_step(params, grads, state, TrainConfig())
    b_params, b_state = adam_step(params, grads, AdamState.fresh(params), TrainConfig())
    for k in a_params:
        assert np.array_equal(a_params[k], b_params[k])
        assert np.array_equal(a_state.m[k], b_state.m[k])


def test_adam_clips_large_gradients():
    config = TrainConfig(clip_norm=1.0)
    params = scalarish_params(0.0)
    big = {"w": np.array([100.0])}
    clipped_step, _ = adam_step(params, big, AdamState.fresh(params), config)
    unit_step, _ = adam_step(
        params, {"w": np.array([1.0])}, AdamState.fresh(params), config
    )
    # after clipping to norm 1, the two updates coincide
    assert clipped_step["w"][0] == unit_step["w"][0]


def test_adam_shape_mismatch_rejected():
    params = scalarish_params()
    with pytest.raises(StructuralError):
        adam_step(params, {"w": np.zeros(2)}, AdamState.fresh(params), TrainConfig())
    with pytest.raises(StructuralError):
        adam_step(params, {"v": np.zeros(1)}, AdamState.fresh(params), TrainConfig())


def test_train_config_validation():
    with pytest.raises(ConfigError):
        TrainConfig(learning_rate=0.0)
    with pytest.raises(ConfigError):
        TrainConfig(patience=0)
    with pytest.raises(ConfigError):
        TrainConfig(clip_norm=0.0)


# ---------------------------------------------------------------------------
# train_epoch / fit
# ---------------------------------------------------------------------------

def small_training_setup(toy_data):
    config = ModelConfig(
        12, 12, 1, 1, False, 0.1,
        len(toy_data["src_vocab"]), len(toy_data["tgt_vocab"]),
    )
    params = init_params(config, seed=5)
    pairs_by_index = {p.index: p for p in toy_data["train_enc"]}
    return config, params, pairs_by_index


def test_single_batch_epoch_equals_one_adam_step(toy_data):
    config, params, by_index = small_training_setup(toy_data)
    indices = list(by_index)[:4]
    batch = make_batch([by_index[i] for i in indices])
    train_config = TrainConfig(learning_rate=1e-3, batch_size=4, seed=7)

    from curricula.rng import derive_seed
    from curricula.seq2seq import loss_and_gradients

    _, grads = loss_and_gradients(
        params, config, batch, dropout_on=True, seed=derive_seed("train", 7, 1, 0)
    )
    direct, _ = adam_step(params, grads, AdamState.fresh(params), train_config)

    stepped, _, stats = train_epoch(
        params, AdamState.fresh(params), [np.array(indices)], by_index,
        config, train_config, epoch=1,
    )
    for k in direct:
        assert np.array_equal(direct[k], stepped[k])
    assert stats.epoch == 1 and stats.train_loss > 0


def test_loss_decreases_on_toy_task(toy_data):
    config, params, by_index = small_training_setup(toy_data)
    train_config = TrainConfig(
        learning_rate=1e-2, batch_size=8, max_epochs=5, patience=5, seed=1
    )
    plan = make_ordering(
        Strategy("shuffle_every_epoch"), None, list(by_index), 5, seed=3
    )
    _, stats, _ = fit(
        params, config, plan, toy_data["train_enc"], toy_data["val_enc"],
        train_config,
        toy_data["src_vocab"].fingerprint(), toy_data["tgt_vocab"].fingerprint(),
    )
    assert stats[4].train_loss < stats[0].train_loss


def test_different_plans_diverge_but_each_reproduces(toy_data):
    config, params, by_index = small_training_setup(toy_data)
    train_config = TrainConfig(learning_rate=1e-2, batch_size=8, max_epochs=2,
                               patience=5, seed=1)
    fps = (
        toy_data["src_vocab"].fingerprint(),
        toy_data["tgt_vocab"].fingerprint(),
    )
    plan_a = make_ordering(Strategy("shuffle_once"), None, list(by_index), 2, seed=1)
    plan_b = make_ordering(
        Strategy("length", side="source", direction="asc"),
        __import__("curricula.metrics", fromlist=["length_scores"]).length_scores(
            toy_data["train"], "source"
        ),
        list(by_index), 2,
    )
    ckpt_a1, _, _ = fit(params, config, plan_a, toy_data["train_enc"],
                        toy_data["val_enc"], train_config, *fps)
    ckpt_a2, _, _ = fit(params, config, plan_a, toy_data["train_enc"],
                        toy_data["val_enc"], train_config, *fps)
    ckpt_b, _, _ = fit(params, config, plan_b, toy_data["train_enc"],
                       toy_data["val_enc"], train_config, *fps)
    assert ckpt_a1.fingerprint == ckpt_a2.fingerprint
    assert ckpt_a1.fingerprint != ckpt_b.fingerprint


def test_fit_patience_arithmetic(toy_data, monkeypatch):
    config, params, by_index = small_training_setup(toy_data)
    sequence = iter([10.0, 9.0, 9.5, 9.4, 9.6, 8.0])
    monkeypatch.setattr(
        "curricula.trainer.validation_perplexity",
        lambda *a, **k: next(sequence),
    )
    train_config = TrainConfig(
        learning_rate=1e-3, batch_size=16, max_epochs=10, patience=3, seed=2
    )
    plan = make_ordering(Strategy("shuffle_once"), None, list(by_index), 10, seed=1)
    ckpt, stats, best_epoch = fit(
        params, config, plan, toy_data["train_enc"], toy_data["val_enc"],
        train_config,
        toy_data["src_vocab"].fingerprint(), toy_data["tgt_vocab"].fingerprint(),
    )
    assert len(stats) == 5  # stopped after epoch 5
    assert best_epoch == 2
    assert [s.val_perplexity for s in stats] == [10.0, 9.0, 9.5, 9.4, 9.6]


def test_fit_best_checkpoint_not_worse_than_any_epoch(toy_data):
    config, params, by_index = small_training_setup(toy_data)
    train_config = TrainConfig(
        learning_rate=1e-2, batch_size=8, max_epochs=4, patience=4, seed=9
    )
    plan = make_ordering(Strategy("shuffle_every_epoch"), None, list(by_index), 4, seed=2)
    ckpt, stats, best_epoch = fit(
        params, config, plan, toy_data["train_enc"], toy_data["val_enc"],
        train_config,
        toy_data["src_vocab"].fingerprint(), toy_data["tgt_vocab"].fingerprint(),
    )
    best_ppl = min(s.val_perplexity for s in stats)
    assert stats[best_epoch - 1].val_perplexity == best_ppl
    assert validation_perplexity(ckpt.params, config, toy_data["val_enc"]) == best_ppl


def test_fit_max_epochs_one(toy_data):
    config, params, by_index = small_training_setup(toy_data)
    train_config = TrainConfig(learning_rate=1e-3, batch_size=16, max_epochs=1,
                               patience=1, seed=0)
    plan = make_ordering(Strategy("shuffle_once"), None, list(by_index), 1, seed=0)
    _, stats, _ = fit(
        params, config, plan, toy_data["train_enc"], toy_data["val_enc"],
        train_config,
        toy_data["src_vocab"].fingerprint(), toy_data["tgt_vocab"].fingerprint(),
    )
    assert len(stats) == 1


def test_fit_requires_validation_pairs(toy_data):
    config, params, by_index = small_training_setup(toy_data)
    plan = make_ordering(Strategy("shuffle_once"), None, list(by_index), 1, seed=0)
    with pytest.raises(ConfigError):
        fit(
            params, config, plan, toy_data["train_enc"], [],
            TrainConfig(max_epochs=1), "a", "b",
        )


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------

def make_ckpt(seed=0, history=()):
    params = init_params(CONFIG, seed=seed)
    return ModelCheckpoint(
        config=CONFIG, params=params,
        src_vocab_fingerprint="aaa", tgt_vocab_fingerprint="bbb",
        history=history,
    )


def test_checkpoint_round_trip_preserves_forward_bits(tmp_path):
    from curricula.corpus import EncodedPair

    ckpt = make_ckpt(seed=3, history=({"epoch": 1, "train_loss": 2.5, "val_perplexity": 6.0},))
    save_checkpoint(ckpt, tmp_path / "m.ckpt")
    loaded = load_checkpoint(tmp_path / "m.ckpt")
    assert loaded.fingerprint == ckpt.fingerprint
    assert loaded.history == ckpt.history
    assert loaded.config == ckpt.config
    rng = np.random.default_rng(0)
    for _ in range(10):
        n_src = int(rng.integers(1, 6))
        n_tgt = int(rng.integers(1, 6))
        pair = EncodedPair(
            0,
            tuple(int(x) for x in rng.integers(4, 12, n_src)),
            (1,) + tuple(int(x) for x in rng.integers(4, 12, n_tgt)),
            tuple(int(x) for x in rng.integers(4, 12, n_tgt)) + (2,),
            "aaa", "bbb",
        )
        batch = make_batch([pair])
        a = forward_teacher_forced(ckpt.params, ckpt.config, batch)
        b = forward_teacher_forced(loaded.params, loaded.config, batch)
        assert a.mean_loss == b.mean_loss
        assert np.array_equal(a.log_probs, b.log_probs)


def test_checkpoint_truncated_file_rejected(tmp_path):
    ckpt = make_ckpt()
    save_checkpoint(ckpt, tmp_path / "m.ckpt")
    data = (tmp_path / "m.ckpt").read_bytes()
    for cut in (10, len(data) // 2, len(data) - 1):
        (tmp_path / "cut.ckpt").write_bytes(data[:cut])
        with pytest.raises(CheckpointCorruptError):
            load_checkpoint(tmp_path / "cut.ckpt")


def test_checkpoint_bad_magic_and_version(tmp_path):
    ckpt = make_ckpt()
    data = checkpoint_bytes(ckpt)
    (tmp_path / "bad.ckpt").write_bytes(b"NOPE" + data[4:])
    with pytest.raises(CheckpointFormatError):
        load_checkpoint(tmp_path / "bad.ckpt")
    import hashlib
    import struct

    payload = data[:-32]
    tampered = payload[:4] + struct.pack("<H", 999) + payload[6:]
    (tmp_path / "v999.ckpt").write_bytes(tampered + hashlib.sha256(tampered).digest())
    with pytest.raises(CheckpointFormatError) as err:
        load_checkpoint(tmp_path / "v999.ckpt")
    assert "999" in str(err.value) and "1" in str(err.value)


def test_checkpoint_bitflip_detected(tmp_path):
    ckpt = make_ckpt()
    data = bytearray(checkpoint_bytes(ckpt))
    data[len(data) // 2] ^= 0xFF
    (tmp_path / "flip.ckpt").write_bytes(bytes(data))
    with pytest.raises(CheckpointCorruptError):
        load_checkpoint(tmp_path / "flip.ckpt")


def test_fingerprint_tracks_parameters_not_history():
    a = make_ckpt(seed=0)
    b = make_ckpt(seed=0, history=({"epoch": 1, "train_loss": 1.0, "val_perplexity": 2.0},))
    c = make_ckpt(seed=1)
    assert a.fingerprint == b.fingerprint  # history is not identity
    assert a.fingerprint != c.fingerprint  # parameters are
    d = make_ckpt(seed=0)
    d.params["out_b"][0] = np.nextafter(d.params["out_b"][0], 1.0)  # one ulp
    d_ckpt = ModelCheckpoint(
        config=CONFIG, params=d.params,
        src_vocab_fingerprint="aaa", tgt_vocab_fingerprint="bbb",
    )
    assert d_ckpt.fingerprint != a.fingerprint


def test_checkpoint_save_is_atomic(tmp_path):
    ckpt = make_ckpt()
    target = tmp_path / "m.ckpt"
    save_checkpoint(ckpt, target)
    first = target.read_bytes()
    save_checkpoint(make_ckpt(seed=9), target)
    assert target.read_bytes() != first
    assert list(tmp_path.iterdir()) == [target]  # no temp litter
