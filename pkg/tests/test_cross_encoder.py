import math

import numpy as np
import pytest

from app.encoders.cross_encoder import (
    CrossEncoderConfig,
    PRESETS,
    CrossEncoderModel,
    CrossTrainConfig,
    expected_param_count,
    preset_config,
    train,
)
from app.encoders.layers import layer_norm_forward
from app.errors import ConfigError, DataError, SequenceError
from app.text_core.vocab import CLS, SEP, build_vocab

VOCAB_SIZE = 16


def _cfg(seed: int = 0, layers: int = 1, init_std: float = 0.5) -> CrossEncoderConfig:
    return CrossEncoderConfig(layers=layers, hidden=8, heads=2, ffn_dim=16, max_seq_len=10,
                              vocab_size=VOCAB_SIZE, seed=seed, init_std=init_std)


def _seq(rng: np.random.Generator, n: int):
    return (CLS,) + tuple(int(t) for t in rng.integers(4, VOCAB_SIZE, size=n - 1))


class TestForward:
    def test_probability_and_attention_rows(self):
        model = CrossEncoderModel(_cfg(layers=2))
        seq = (CLS, 5, 6, SEP, 7, SEP, 8, 9)
        p = model.forward(seq)
        assert 0.0 < p < 1.0
        maps = model.attention_maps(seq)
        assert len(maps) == 2
        for a in maps:
            assert a.shape == (2, len(seq), len(seq))
            np.testing.assert_allclose(a.sum(axis=-1), 1.0, atol=1e-6)

    def test_positions_matter(self):
        model = CrossEncoderModel(_cfg(seed=3))
        assert model.forward((CLS, 5, 6, 7)) != model.forward((CLS, 6, 5, 7))

    def test_zero_head_is_half(self):
        model = CrossEncoderModel(_cfg(), zero_head=True)
        assert model.forward((CLS, 5, 6)) == 0.5

    def test_sequence_checks(self):
        model = CrossEncoderModel(_cfg())
        with pytest.raises(SequenceError, match="CLS"):
            model.forward((5, 6))
        with pytest.raises(SequenceError):
            model.forward((CLS,) + (5,) * 10)


class TestLayerNorm:
    @pytest.mark.parametrize("seed", range(3))
    def test_unit_gain_output_is_standardized(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.normal(loc=3.0, scale=5.0, size=(4, 9, 16))
        y, _ = layer_norm_forward(x, np.ones(16), np.zeros(16))
        np.testing.assert_allclose(y.mean(axis=-1), 0.0, atol=1e-9)
        np.testing.assert_allclose(y.var(axis=-1), 1.0, atol=1e-4)

    def test_gain_and_bias_apply_after_normalizing(self):
        x = np.array([[1.0, 2.0, 3.0, 4.0]])
        y, _ = layer_norm_forward(x, np.full(4, 2.0), np.full(4, 0.5))
        np.testing.assert_allclose(y.mean(axis=-1), 0.5, atol=1e-9)
        np.testing.assert_allclose(y.var(axis=-1), 4.0, atol=1e-4)


class TestBatch:
    def test_batch_matches_forward(self):
        rng = np.random.default_rng(0)
        model = CrossEncoderModel(_cfg(seed=1, layers=2))
        seqs = [_seq(rng, int(n)) for n in rng.integers(2, 10, size=9)]
        batch = model.predict_batch(seqs, chunk_size=4)
        np.testing.assert_allclose(batch, [model.forward(s) for s in seqs], atol=1e-12)

    def test_shuffled_batch(self):
        rng = np.random.default_rng(1)
        model = CrossEncoderModel(_cfg(seed=2))
        seqs = [_seq(rng, int(n)) for n in rng.integers(2, 10, size=6)]
        perm = rng.permutation(len(seqs))
        base = np.array(model.predict_batch(seqs))
        shuffled = np.array(model.predict_batch([seqs[i] for i in perm]))
        np.testing.assert_allclose(shuffled, base[perm], atol=1e-12)

    def test_single_and_empty(self):
        model = CrossEncoderModel(_cfg())
        seq = (CLS, 5, SEP, 6)
        assert model.predict_batch([seq])[0] == pytest.approx(model.forward(seq), abs=1e-12)
        assert model.predict_batch([]) == []


class TestGradients:
    @pytest.mark.parametrize("seed", range(5))
    def test_analytic_matches_numeric(self, seed):
        rng = np.random.default_rng(seed)
        model = CrossEncoderModel(_cfg(seed=seed))
        pairs = [(_seq(rng, n), lbl) for n, lbl in ((4, 1), (7, 0), (5, 1))]
        assert model.grad_check(pairs, eps=1e-5) < 1e-3

    def test_two_layers(self):
        rng = np.random.default_rng(7)
        model = CrossEncoderModel(_cfg(seed=7, layers=2))
        pairs = [(_seq(rng, n), lbl) for n, lbl in ((6, 0), (3, 1))]
        assert model.grad_check(pairs, eps=1e-5) < 1e-3

    def test_micro_shapes(self):
        cfg = CrossEncoderConfig(vocab_size=12, max_seq_len=8, seed=4, init_std=0.5, **PRESETS["micro"])
        pairs = [((CLS, 4, SEP, 5, 6), 1), ((CLS, 7, 8, SEP, 9), 0)]
        assert CrossEncoderModel(cfg).grad_check(pairs, eps=1e-5) < 1e-3


class TestPresets:
    def test_param_counts(self):
        for name in ("tiny", "mini"):
            cfg = preset_config(name, vocab_size=100, max_seq_len=32)
            assert CrossEncoderModel(cfg).num_params == expected_param_count(cfg)

    def test_preset_shapes(self):
        assert (preset_config("tiny", 50).layers, preset_config("tiny", 50).hidden) == (2, 128)
        assert (preset_config("mini", 50).layers, preset_config("mini", 50).hidden) == (4, 256)
        assert CrossEncoderModel(preset_config("mini", 50)).preset == "mini"

    def test_unknown_preset(self):
        with pytest.raises(ConfigError):
            preset_config("huge", 50)


class TestTrain:
    def test_initial_loss_near_ln2(self):
        rng = np.random.default_rng(5)
        model = CrossEncoderModel(_cfg(init_std=0.02))
        pairs = [(_seq(rng, 6), i % 2) for i in range(40)]
        loss, _ = model.loss_and_grads(pairs)
        assert loss == pytest.approx(math.log(2), abs=0.02)

    def test_overfits_one_pair(self):
        model = CrossEncoderModel(_cfg(seed=6))
        result = train(model, [((CLS, 5, SEP, 6), 1)], CrossTrainConfig(epochs=60, lr=0.03, batch_size=1, seed=6))
        assert len(result.losses) == 60
        assert result.losses[-1] < 0.1
        assert result.losses[-1] < result.losses[0]

    def test_rejects_bad_labels(self):
        with pytest.raises(SequenceError):
            train(CrossEncoderModel(_cfg()), [((CLS, 5), 2)], CrossTrainConfig(epochs=1))

    @pytest.mark.slow
    def test_separable_toy_set(self):
        """Label = the keyphrase token also appears after the separator."""
        rng = np.random.default_rng(11)
        pairs = []
        for i in range(200):
            kp = int(rng.integers(4, VOCAB_SIZE))
            rest = [int(t) for t in rng.integers(4, VOCAB_SIZE, size=4) if t != kp]
            if i % 2 == 0:
                rest.insert(int(rng.integers(len(rest) + 1)), kp)
            pairs.append(((CLS, kp, SEP) + tuple(rest), int(kp in rest)))
        model = CrossEncoderModel(CrossEncoderConfig(layers=2, hidden=32, heads=2, ffn_dim=64, max_seq_len=10,
                                                     vocab_size=VOCAB_SIZE, seed=0))
        train(model, pairs, CrossTrainConfig(epochs=30, lr=3e-3, batch_size=16, seed=0))
        preds = np.array(model.predict_batch([s for s, _ in pairs])) >= 0.5
        acc = float(np.mean(preds == np.array([y for _, y in pairs], dtype=bool)))
        assert acc >= 0.98


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        vocab = build_vocab(["red nike shoes footwear"])
        model = CrossEncoderModel.from_preset("micro", vocab, max_seq_len=12, seed=2)
        path = tmp_path / "cross.npz"
        model.save(path)
        loaded = CrossEncoderModel.load(path, vocab)
        seq = (CLS, 4, SEP, 5, SEP, 6, 7)
        assert loaded.forward(seq) == model.forward(seq)
        assert loaded.model_version == model.model_version
        assert loaded.preset == "micro"

    def test_vocab_mismatch(self, tmp_path):
        model = CrossEncoderModel.from_preset("micro", build_vocab(["a b"]), max_seq_len=8)
        model.save(tmp_path / "c.npz")
        with pytest.raises(DataError):
            CrossEncoderModel.load(tmp_path / "c.npz", build_vocab(["c d"]))
