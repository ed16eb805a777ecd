import math

import numpy as np
import pytest

from app.encoders.bi_encoder import (
    BiEncoderModel,
    LabeledPair,
    PositivePair,
    TrainConfig,
    calibrate_threshold,
    contrastive_loss,
    train,
)
from app.encoders.params import numeric_gradients, relative_error
from app.errors import DataError, EmptyInputError, ObjectiveMismatchError, TrainingDivergedError
from app.text_core.vocab import build_vocab

VOCAB_SIZE = 24


def _random_batch(objective: str, seed: int, n: int = 6):
    rng = np.random.default_rng(seed)

    # disjoint item/keyphrase tokens keep every pair off the |u-v| and hinge kinks
    def seq(lo, hi):
        return tuple(int(t) for t in rng.integers(lo, hi, size=int(rng.integers(1, 5))))

    if objective == "irns":
        return [PositivePair(seq(4, 14), seq(14, VOCAB_SIZE)) for _ in range(n)]
    return [LabeledPair(seq(4, 14), seq(14, VOCAB_SIZE), label=int(i % 2)) for i in range(n)]


def _orthogonal_model(objective: str = "contrastive") -> BiEncoderModel:
    model = BiEncoderModel(8, dim=4, objective=objective)
    model.params["E"][:] = 0.0
    model.params["E"][4] = [1.0, 0.0, 0.0, 0.0]
    model.params["E"][5] = [0.0, 1.0, 0.0, 0.0]
    model.params["E"][6] = [-1.0, 0.0, 0.0, 0.0]
    return model


# -------------------------------------------------------------------------------------------------
# Encoding and scoring
# -------------------------------------------------------------------------------------------------

class TestEncode:
    def test_single_token_is_normalized_row(self):
        model = BiEncoderModel(VOCAB_SIZE, dim=8, seed=1)
        e = model.params["E"][7]
        np.testing.assert_allclose(model.encode((7,)), e / np.linalg.norm(e), atol=1e-12)

    def test_mean_invariance(self):
        model = BiEncoderModel(VOCAB_SIZE, dim=8, seed=1)
        np.testing.assert_allclose(model.encode((7, 7)), model.encode((7,)), atol=1e-12)

    def test_deterministic(self):
        model = BiEncoderModel(VOCAB_SIZE, dim=8, seed=1)
        np.testing.assert_array_equal(model.encode((4, 9, 11)), model.encode((4, 9, 11)))

    def test_empty_sequence(self):
        with pytest.raises(EmptyInputError, match="empty input"):
            BiEncoderModel(VOCAB_SIZE).encode(())

    def test_batch_matches_single(self):
        model = BiEncoderModel(VOCAB_SIZE, dim=8, seed=2)
        seqs = [(4, 5), (6,), (7, 8, 9)]
        batch = model.encode_batch(seqs)
        for row, s in zip(batch, seqs):
            np.testing.assert_allclose(row, model.encode(s), atol=1e-12)


class TestScore:
    def test_identical_sequences(self):
        model = BiEncoderModel(VOCAB_SIZE, dim=8, seed=3)
        assert model.score_pair((4, 5, 6), (4, 5, 6)) == pytest.approx(1.0, abs=1e-6)

    def test_orthogonal_is_midpoint(self):
        assert _orthogonal_model().score_pair((4,), (5,)) == pytest.approx(0.5, abs=1e-12)

    def test_opposite_is_zero(self):
        assert _orthogonal_model().score_pair((4,), (6,)) == pytest.approx(0.0, abs=1e-12)

    def test_softmax_head_probability(self):
        model = BiEncoderModel(VOCAB_SIZE, dim=8, objective="softmax", seed=4)
        u, v = model.encode((4, 5)), model.encode((9,))
        h = np.concatenate([u, v, np.abs(u - v)])
        logits = h @ model.params["W"] + model.params["b"]
        probs = np.exp(logits - logits.max())
        probs /= probs.sum()
        assert probs.sum() == pytest.approx(1.0)
        assert model.score_pair((4, 5), (9,)) == pytest.approx(probs[1], abs=1e-12)

    @pytest.mark.parametrize("objective", ["contrastive", "softmax", "irns"])
    def test_score_in_unit_interval(self, objective):
        rng = np.random.default_rng(8)
        model = BiEncoderModel(VOCAB_SIZE, dim=8, objective=objective, seed=5, init_scale=1.0)
        for _ in range(50):
            a = tuple(int(t) for t in rng.integers(4, VOCAB_SIZE, size=int(rng.integers(1, 6))))
            b = tuple(int(t) for t in rng.integers(4, VOCAB_SIZE, size=int(rng.integers(1, 6))))
            assert 0.0 <= model.score_pair(a, b) <= 1.0

    @pytest.mark.parametrize("objective", ["contrastive", "irns"])
    def test_cosine_score_is_symmetric(self, objective):
        rng = np.random.default_rng(9)
        model = BiEncoderModel(VOCAB_SIZE, dim=8, objective=objective, seed=6)
        for _ in range(20):
            a = tuple(int(t) for t in rng.integers(4, VOCAB_SIZE, size=3))
            b = tuple(int(t) for t in rng.integers(4, VOCAB_SIZE, size=2))
            assert model.score_pair(a, b) == pytest.approx(model.score_pair(b, a), abs=1e-12)


# -------------------------------------------------------------------------------------------------
# Objectives
# -------------------------------------------------------------------------------------------------

class TestObjectives:
    def test_contrastive_positive_identical_is_zero(self):
        u = np.array([[0.6, 0.8]])
        loss, _, _ = contrastive_loss(u, u.copy(), np.array([1.0]), margin=0.5)
        assert loss == 0.0

    def test_contrastive_negative_beyond_margin_is_zero(self):
        loss, gu, gv = contrastive_loss(np.array([[1.0, 0.0]]), np.array([[-1.0, 0.0]]), np.array([0.0]), margin=0.5)
        assert loss == 0.0
        assert not gu.any() and not gv.any()

    def test_irns_initial_loss_is_log_batch(self):
        B = 16
        model = BiEncoderModel(4 + 2 * B, dim=64, objective="irns", temperature=1.0, seed=5)
        batch = [PositivePair((4 + i,), (4 + B + i,)) for i in range(B)]
        loss, _ = model.loss_and_grads(batch)
        assert loss == pytest.approx(math.log(B), abs=0.15)

    def test_irns_rejects_labeled_pairs(self):
        model = BiEncoderModel(VOCAB_SIZE, objective="irns")
        with pytest.raises(ObjectiveMismatchError):
            model.loss_and_grads(_random_batch("contrastive", 0))

    def test_labeled_objectives_reject_positives(self):
        model = BiEncoderModel(VOCAB_SIZE, objective="softmax")
        with pytest.raises(ObjectiveMismatchError):
            model.loss_and_grads(_random_batch("irns", 0))


# -------------------------------------------------------------------------------------------------
# Gradient checks
# -------------------------------------------------------------------------------------------------

class TestGradients:
    @pytest.mark.parametrize("objective", ["contrastive", "softmax", "irns"])
    @pytest.mark.parametrize("seed", range(10))
    def test_analytic_matches_numeric(self, objective, seed):
        model = BiEncoderModel(VOCAB_SIZE, dim=8, objective=objective, seed=seed, temperature=0.5)
        assert model.grad_check(_random_batch(objective, seed + 100)) < 1e-4

    def test_scaled_gradient_is_flagged(self):
        g = np.random.default_rng(0).normal(size=(5, 3))
        assert relative_error(2.0 * g, g) == pytest.approx(1.0 / 3.0)

    def test_zero_loss_batch_has_flat_gradients(self):
        model = _orthogonal_model()
        batch = [LabeledPair((4,), (6,), label=0)]
        loss, grads = model.loss_and_grads(batch)
        numeric = numeric_gradients(model.params, lambda: model.loss_and_grads(batch)[0])
        assert loss == 0.0
        np.testing.assert_allclose(grads["E"], 0.0, atol=1e-12)
        np.testing.assert_allclose(numeric["E"], 0.0, atol=1e-8)


# -------------------------------------------------------------------------------------------------
# Training
# -------------------------------------------------------------------------------------------------

def _toy_labeled(n: int = 60):
    """Positive iff item and keyphrase share their first token."""
    rng = np.random.default_rng(9)
    out = []
    for i in range(n):
        t = int(rng.integers(4, VOCAB_SIZE))
        other = int(rng.integers(4, VOCAB_SIZE))
        if i % 2 == 0:
            out.append(LabeledPair((t, other), (t,), label=1))
        else:
            neg = 4 + (t - 4 + 1 + int(rng.integers(0, VOCAB_SIZE - 6))) % (VOCAB_SIZE - 4)
            out.append(LabeledPair((t, other), (neg,), label=0 if neg not in (t, other) else 1))
    return out


class TestTrain:
    def test_loss_trace_and_decrease(self):
        cfg = TrainConfig(objective="contrastive", epochs=20, lr=0.1, batch_size=8, dim=8, seed=0)
        model = BiEncoderModel(VOCAB_SIZE, dim=8, seed=0)
        result = train(model, _toy_labeled(), cfg)
        assert len(result.losses) == 20
        assert result.losses[-1] < result.losses[0]

    def test_deterministic(self):
        cfg = TrainConfig(objective="softmax", epochs=3, lr=0.1, batch_size=8, dim=8, seed=7)
        a = BiEncoderModel(VOCAB_SIZE, dim=8, objective="softmax", seed=7)
        b = BiEncoderModel(VOCAB_SIZE, dim=8, objective="softmax", seed=7)
        train(a, _toy_labeled(), cfg)
        train(b, _toy_labeled(), cfg)
        for name in a.params:
            np.testing.assert_array_equal(a.params[name], b.params[name])
        assert a.model_version == b.model_version

    def test_objective_mismatch(self):
        with pytest.raises(ObjectiveMismatchError):
            train(BiEncoderModel(VOCAB_SIZE, objective="irns"), _toy_labeled(), TrainConfig(objective="contrastive"))

    def test_divergence_reports_epoch(self):
        model = BiEncoderModel(VOCAB_SIZE, dim=8, seed=0)
        model.params["E"][:] = np.inf
        with np.errstate(all="ignore"):
            with pytest.raises(TrainingDivergedError, match="divergence") as err:
                train(model, _toy_labeled(8), TrainConfig(epochs=2, dim=8))
        assert err.value.epoch == 0

    def test_contrastive_on_separable_groups(self):
        # four groups of four tokens; a pair is positive iff both tokens share a group
        tokens = range(4, 20)
        data = [LabeledPair((a,), (b,), label=int((a - 4) // 4 == (b - 4) // 4)) for a in tokens for b in tokens]
        model = BiEncoderModel(20, dim=16, seed=1)
        cfg = TrainConfig(objective="contrastive", epochs=150, lr=0.2, batch_size=len(data), dim=16, seed=1)
        losses = train(model, data, cfg).losses
        for prev, cur in zip(losses[1:], losses[2:]):
            assert cur <= prev * 1.05

        scores = model.score_vectors(model.encode_batch([p.item_seq for p in data]),
                                     model.encode_batch([p.kp_seq for p in data]))
        labels = np.array([p.label for p in data])
        passed = scores >= calibrate_threshold(scores, labels)
        tp = int(np.sum(passed & (labels == 1)))
        f1 = 2 * tp / (2 * tp + int(np.sum(passed & (labels == 0))) + int(np.sum(~passed & (labels == 1))))
        assert f1 >= 0.95


class TestThreshold:
    def test_f1_best_cut(self):
        assert calibrate_threshold([0.9, 0.8, 0.3, 0.2], [1, 1, 0, 0]) == pytest.approx(0.8)

    def test_no_positives_falls_back(self):
        assert calibrate_threshold([0.9, 0.1], [0, 0]) == 0.5


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        vocab = build_vocab(["red shoes", "blue boots"])
        model = BiEncoderModel.from_config(vocab, TrainConfig(objective="softmax", dim=8, seed=3))
        model.threshold = 0.42
        path = tmp_path / "bi.npz"
        model.save(path)
        loaded = BiEncoderModel.load(path, vocab)
        assert loaded.model_version == model.model_version
        assert loaded.threshold == 0.42
        assert loaded.score_pair((4, 5), (6,)) == model.score_pair((4, 5), (6,))

    def test_vocab_mismatch(self, tmp_path):
        vocab = build_vocab(["red shoes"])
        model = BiEncoderModel.from_config(vocab, TrainConfig(dim=4))
        path = tmp_path / "bi.npz"
        model.save(path)
        with pytest.raises(DataError, match="different vocabulary"):
            BiEncoderModel.load(path, build_vocab(["other words"]))
