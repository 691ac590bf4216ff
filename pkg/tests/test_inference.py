import json
import math

import numpy as np
import pytest

from ecgcrypt.exceptions import ConfigError, DatasetError, ShapeMismatch, WeightsFormatError
from ecgcrypt.inference import (
    CLASS_LABELS, ModelShape, ModelWeights, TrainConfig, backward, crossentropy, forward, load_weights,
    make_template_dataset, numerical_gradient, predict_proba, save_weights, train,
)
from ecgcrypt.inference.model import DEFAULT_SHAPE, TENSORS, dropout_mask, one_hot, relative_error, softmax
from ecgcrypt.inference.train import evaluate, validate_dataset

from .common import SMALL_SHAPE_ARGS

SMALL = ModelShape(**SMALL_SHAPE_ARGS)


def random_weights(shape=SMALL, seed=0, scale=1.0):
    rng = np.random.default_rng(seed)
    return ModelWeights(shape, **{k: scale * rng.normal(size=v) for k, v in shape.tensor_shapes().items()})


class TestShapes:

    def test_default(self):
        assert DEFAULT_SHAPE.conv_len == 178
        assert DEFAULT_SHAPE.flat_len == 5696
        assert DEFAULT_SHAPE.tensor_shapes()['dense1_w'] == (100, 5696)
        assert DEFAULT_SHAPE.tensor_shapes()['conv_filters'] == (32, 3, 1)

    def test_rejects_bad_tensor(self):
        tensors = ModelWeights.zeros(SMALL).tensors()
        tensors['dense1_w'] = np.zeros((8, 71))
        with pytest.raises(ShapeMismatch, match='dense1_w'):
            ModelWeights(SMALL, **tensors)

    def test_rejects_non_finite(self):
        tensors = ModelWeights.zeros(SMALL).tensors()
        tensors['out_b'] = np.array([0.0, np.inf, 0.0, 0.0, 0.0])
        with pytest.raises(ShapeMismatch):
            ModelWeights(SMALL, **tensors)

    def test_input_length(self):
        with pytest.raises(ShapeMismatch):
            forward(np.zeros(179), ModelWeights.zeros())


class TestForward:

    def test_zero_weights(self):
        out = forward(np.random.default_rng(0).normal(size=180), ModelWeights.zeros())
        assert out.probs == pytest.approx([0.2] * 5, abs=1e-15)
        assert out.label in CLASS_LABELS

    def test_probabilities(self):
        rng = np.random.default_rng(1)
        for seed in range(50):
            weights = ModelWeights.glorot(rng=np.random.default_rng(seed))
            probs = forward(rng.normal(size=180), weights).probs
            assert probs.shape == (5,)
            assert abs(probs.sum() - 1.0) <= 1e-9
            assert np.all((probs > 0) & (probs < 1))

    @pytest.mark.slow
    def test_probabilities_many_draws(self):
        rng = np.random.default_rng(2)
        for _ in range(10 ** 3):
            weights = ModelWeights.glorot(rng=rng)
            assert abs(forward(rng.normal(size=180), weights).probs.sum() - 1.0) <= 1e-9

    def test_inference_deterministic(self):
        weights = ModelWeights.glorot(rng=np.random.default_rng(3))
        beat = np.random.default_rng(4).normal(size=180)
        assert np.array_equal(forward(beat, weights).probs, forward(beat, weights).probs)
        assert np.array_equal(forward(beat, weights).probs, predict_proba(beat, weights)[0])

    def test_training_dropout(self):
        weights = ModelWeights.glorot(rng=np.random.default_rng(5))
        beat = np.random.default_rng(6).normal(size=180)
        a = forward(beat, weights, training=True, dropout_mask_seed=1).probs
        b = forward(beat, weights, training=True, dropout_mask_seed=1).probs
        c = forward(beat, weights, training=True, dropout_mask_seed=2).probs
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_batch(self):
        weights = random_weights(scale=0.3)
        x = np.random.default_rng(7).normal(size=(6, 20))
        probs = predict_proba(x, weights)
        assert probs.shape == (6, 5)
        for i in range(6):
            assert np.allclose(probs[i], forward(x[i], weights).probs, atol=1e-15)

    def test_softmax_shift(self):
        logits = np.random.default_rng(8).normal(size=(4, 5))
        assert np.allclose(softmax(logits + 123.0), softmax(logits), atol=1e-12)

    def test_dropout_density(self):
        mask = dropout_mask((10 ** 4,), 0.5, np.random.default_rng(9))
        assert abs(np.mean(mask > 0) - 0.5) <= 0.05
        assert set(np.unique(mask)) == {0.0, 2.0}
        assert np.all(dropout_mask((3, 4), 0.0, None) == 1.0)


class TestLoss:

    def test_perfect(self):
        assert crossentropy(one_hot([2])[0], [0, 0, 1, 0, 0]) == 0.0

    def test_uniform(self):
        assert crossentropy(one_hot([0])[0], [0.2] * 5) == pytest.approx(math.log(5), abs=1e-12)
        assert crossentropy(one_hot([0])[0], [0.2] * 5) == pytest.approx(1.6094, abs=1e-4)

    def test_clamped(self):
        loss = crossentropy(one_hot([0])[0], [0, 0.5, 0.5, 0, 0])
        assert math.isfinite(loss)
        assert loss == pytest.approx(-math.log(1e-12))

    def test_batch_mean(self):
        y = one_hot([0, 1])
        p = np.array([[0.5, 0.5, 0, 0, 0], [0.25, 0.75, 0, 0, 0]])
        assert crossentropy(y, p) == pytest.approx((math.log(2) - math.log(0.75)) / 2)


class TestBackward:

    def test_gradient_check(self):
        worst = 0.0
        for seed in range(20):
            rng = np.random.default_rng(seed)
            weights = random_weights(seed=seed, scale=0.5)
            x = rng.normal(size=(3, SMALL.beat_len))
            y = one_hot(rng.integers(0, 5, 3))
            mask = dropout_mask((3, SMALL.conv_len, SMALL.n_filters), 0.5, rng) if seed % 2 else None
            _, analytic = backward(x, y, weights, mask)
            numeric, kinks = numerical_gradient(x, y, weights, mask)
            for name in TENSORS:
                assert analytic[name].shape == getattr(weights, name).shape
                err = relative_error(analytic[name], numeric[name])[~kinks[name]]
                worst = max(worst, float(err.max(initial=0.0)))
        assert worst <= 1e-4

    def test_perfect_prediction(self):
        weights = ModelWeights.zeros(SMALL)
        weights.out_b[...] = [800.0, 0.0, 0.0, 0.0, 0.0]
        x = np.random.default_rng(0).normal(size=(2, SMALL.beat_len))
        loss, grads = backward(x, one_hot([0, 0]), weights)
        assert loss == pytest.approx(0.0, abs=1e-12)
        assert np.all(np.abs(grads['out_b']) <= 1e-9)

    def test_saturated_sample(self):
        weights = random_weights(seed=5, scale=0.5)
        weights.out_b[...] = [800.0, 0.0, 0.0, 0.0, 0.0]
        x = np.random.default_rng(3).normal(size=(2, SMALL.beat_len))
        loss, grads = backward(x, one_hot([1, 3]), weights)
        assert loss == pytest.approx(-math.log(1e-12))
        numeric, _ = numerical_gradient(x, one_hot([1, 3]), weights)
        for name in TENSORS:
            assert np.all(grads[name] == 0.0)
            assert np.all(numeric[name] == 0.0)

    def test_saturated_row_ignored(self):
        weights = random_weights(seed=6, scale=0.5)
        weights.out_b[...] = [60.0, 0.0, 0.0, 0.0, 0.0]
        x = np.random.default_rng(4).normal(size=(2, SMALL.beat_len))
        p = predict_proba(x, weights)
        assert p[0, 2] < 1e-12 and p[1, 0] > 1e-12
        _, both = backward(x, one_hot([2, 0]), weights)
        _, live = backward(x[1:], one_hot([0]), weights)
        for name in TENSORS:
            assert np.allclose(both[name], live[name] / 2.0, rtol=1e-12, atol=1e-15)

    def test_duplicate_batch(self):
        weights = random_weights(seed=3, scale=0.5)
        x = np.random.default_rng(1).normal(size=(1, SMALL.beat_len))
        y = one_hot([4])
        _, once = backward(x, y, weights)
        _, twice = backward(np.vstack([x, x]), np.vstack([y, y]), weights)
        for name in TENSORS:
            assert np.allclose(once[name], twice[name], rtol=1e-12, atol=1e-15)

    def test_permutation(self):
        weights = random_weights(seed=4, scale=0.5)
        rng = np.random.default_rng(2)
        x = rng.normal(size=(5, SMALL.beat_len))
        y = one_hot(rng.integers(0, 5, 5))
        order = rng.permutation(5)
        loss_a, a = backward(x, y, weights)
        loss_b, b = backward(x[order], y[order], weights)
        assert loss_a == pytest.approx(loss_b, abs=1e-12)
        for name in TENSORS:
            assert np.allclose(a[name], b[name], atol=1e-12)

    def test_label_shape(self):
        with pytest.raises(ShapeMismatch):
            backward(np.zeros((2, 20)), one_hot([0]), ModelWeights.zeros(SMALL))


class TestDataset:

    def test_template_dataset(self):
        x, labels = make_template_dataset(n_per_class=40, seed=1)
        assert x.shape == (200, 180)
        assert np.bincount(labels).tolist() == [40] * 5
        assert np.allclose(x.mean(axis=1), 0.0, atol=1e-9)
        assert np.allclose(x.std(axis=1), 1.0, atol=1e-9)

    def test_seeded(self):
        a, _ = make_template_dataset(n_per_class=5, seed=3)
        b, _ = make_template_dataset(n_per_class=5, seed=3)
        assert np.array_equal(a, b)

    def test_validation(self):
        x, labels = make_template_dataset(n_per_class=2, seed=0)
        with pytest.raises(DatasetError):
            validate_dataset(x[:8], labels[:8], DEFAULT_SHAPE)
        with pytest.raises(DatasetError):
            validate_dataset(x[:, :100], labels, DEFAULT_SHAPE)
        with pytest.raises(DatasetError):
            validate_dataset(np.zeros((0, 180)), [], DEFAULT_SHAPE)
        with pytest.raises(DatasetError):
            validate_dataset(x, labels[:-1], DEFAULT_SHAPE)


class TestTrain:

    @pytest.mark.parametrize('kwargs', [dict(learning_rate=0), dict(beta1=1.0), dict(epsilon=-1), dict(epochs=-1),
                                        dict(batch_size=0), dict(dropout_rate=1.0)])
    def test_config_validation(self, kwargs):
        with pytest.raises(ConfigError):
            TrainConfig(**kwargs)

    def test_no_epochs(self):
        x, labels = make_template_dataset(n_per_class=2, seed=0)
        result = train(x, labels, TrainConfig(epochs=0, seed=11))
        assert result.weights == ModelWeights.glorot(rng=np.random.default_rng(11))
        assert len(result.loss_history) == 1

    def test_deterministic(self):
        x, labels = make_template_dataset(n_per_class=4, seed=0)
        config = TrainConfig(epochs=2, seed=5)
        assert train(x, labels, config).weights == train(x, labels, config).weights
        assert train(x, labels, config).weights != train(x, labels, TrainConfig(epochs=2, seed=6)).weights

    def test_desk_scale(self):
        x, labels = make_template_dataset(n_per_class=40, seed=7)
        result = train(x, labels, TrainConfig(epochs=20, seed=7))
        assert len(result.loss_history) == 21
        assert result.final_accuracy >= 0.95
        assert result.final_loss < result.loss_history[0]
        assert evaluate(x, labels, result.weights) == (result.final_loss, result.final_accuracy)

    @pytest.mark.slow
    def test_desk_scale_seeds(self):
        passed = 0
        for seed in range(5):
            x, labels = make_template_dataset(n_per_class=40, seed=seed)
            result = train(x, labels, TrainConfig(epochs=20, seed=seed))
            passed += result.final_accuracy >= 0.95 and result.final_loss < result.loss_history[0]
        assert passed >= 4


class TestStorage:

    def test_roundtrip(self, tmp_path):
        weights = random_weights(seed=1)
        path = tmp_path / 'weights.json'
        save_weights(weights, path)
        assert load_weights(path) == weights
        assert load_weights(path, SMALL) == weights
        assert [p.name for p in tmp_path.iterdir()] == ['weights.json']

    def test_roundtrip_full_model(self, tmp_path):
        weights = ModelWeights.glorot(rng=np.random.default_rng(0))
        save_weights(weights, tmp_path / 'w.json')
        assert load_weights(tmp_path / 'w.json', DEFAULT_SHAPE) == weights

    def test_wrong_model(self, tmp_path):
        save_weights(random_weights(), tmp_path / 'w.json')
        with pytest.raises(ShapeMismatch):
            load_weights(tmp_path / 'w.json', DEFAULT_SHAPE)

    def test_wrong_length(self, tmp_path):
        path = tmp_path / 'w.json'
        save_weights(random_weights(), path)
        doc = json.loads(path.read_text())
        doc['tensors']['dense1_w']['values'].pop()
        path.write_text(json.dumps(doc))
        with pytest.raises(ShapeMismatch, match='dense1_w'):
            load_weights(path)

    def test_truncated(self, tmp_path):
        path = tmp_path / 'w.json'
        save_weights(random_weights(), path)
        path.write_text(path.read_text()[:200])
        with pytest.raises(WeightsFormatError):
            load_weights(path)

    def test_non_finite(self, tmp_path):
        path = tmp_path / 'w.json'
        save_weights(random_weights(), path)
        doc = json.loads(path.read_text())
        doc['tensors']['out_b']['values'][0] = float('nan')
        path.write_text(json.dumps(doc))
        with pytest.raises(WeightsFormatError):
            load_weights(path)

    def test_missing(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_weights(tmp_path / 'nothing.json')

    def test_not_weights(self, tmp_path):
        path = tmp_path / 'w.json'
        path.write_text('{"format": "something-else"}')
        with pytest.raises(WeightsFormatError):
            load_weights(path)
