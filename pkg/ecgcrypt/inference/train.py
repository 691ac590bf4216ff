import logging
from dataclasses import dataclass, field

import numpy as np

from ecgcrypt.exceptions import ConfigError, DatasetError
from ecgcrypt.inference.model import (
    DEFAULT_DROPOUT, DEFAULT_SHAPE, TENSORS, ModelWeights, batch_gradients, crossentropy, one_hot,
    predict_proba,
)

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    """Adam hyperparameters (the optimizer's usual defaults) and the training schedule."""
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    epochs: int = 20
    batch_size: int = 16
    dropout_rate: float = DEFAULT_DROPOUT
    seed: int = 0

    def __post_init__(self):
        for name in ('learning_rate', 'beta1', 'beta2', 'epsilon'):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ConfigError("{} must be in (0, 1), got {}".format(name, value))
        # 0 disables dropout
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError("dropout_rate must be in [0, 1), got {}".format(self.dropout_rate))
        if self.epochs < 0:
            raise ConfigError("epochs must be nonnegative, got {}".format(self.epochs))
        if self.batch_size < 1:
            raise ConfigError("batch_size must be at least 1, got {}".format(self.batch_size))


@dataclass
class TrainResult:
    weights: ModelWeights
    # index 0 is the initialization, index k the state after epoch k
    loss_history: list = field(default_factory=list)
    accuracy_history: list = field(default_factory=list)

    @property
    def final_loss(self):
        return self.loss_history[-1]

    @property
    def final_accuracy(self):
        return self.accuracy_history[-1]


class Adam:
    """Adam with bias-corrected moment estimates, one slot per tensor."""

    def __init__(self, config):
        self.config = config
        self.t = 0
        self.m = {}
        self.v = {}

    def step(self, weights, grads):
        c = self.config
        self.t += 1
        for name in TENSORS:
            g = grads[name]
            m = self.m.get(name, np.zeros_like(g))
            v = self.v.get(name, np.zeros_like(g))
            m = c.beta1 * m + (1.0 - c.beta1) * g
            v = c.beta2 * v + (1.0 - c.beta2) * g * g
            self.m[name], self.v[name] = m, v
            m_hat = m / (1.0 - c.beta1 ** self.t)
            v_hat = v / (1.0 - c.beta2 ** self.t)
            getattr(weights, name)[...] -= c.learning_rate * m_hat / (np.sqrt(v_hat) + c.epsilon)


def evaluate(x, labels, weights):
    """Inference-mode mean loss and accuracy over a labelled set."""
    probs = predict_proba(x, weights)
    loss = crossentropy(one_hot(labels, weights.shape.n_classes), probs)
    return loss, float(np.mean(np.argmax(probs, axis=1) == np.asarray(labels)))


def validate_dataset(x, labels, shape):
    x = np.asarray(x, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise DatasetError("dataset must be a nonempty 2-D array of beats")
    if x.shape[1] != shape.beat_len:
        raise DatasetError("beats must hold {} samples, got {}".format(shape.beat_len, x.shape[1]))
    if labels.shape != (x.shape[0],):
        raise DatasetError("{} labels for {} beats".format(labels.size, x.shape[0]))
    if labels.min() < 0 or labels.max() >= shape.n_classes:
        raise DatasetError("labels must be in [0, {})".format(shape.n_classes))
    absent = sorted(set(range(shape.n_classes)) - set(labels.tolist()))
    if absent:
        raise DatasetError("classes without examples: {}".format(absent))
    if not np.all(np.isfinite(x)):
        raise DatasetError("dataset holds non-finite samples")
    return x, labels


def train(x, labels, config=None, shape=DEFAULT_SHAPE):
    """Train from a seeded Glorot initialization with Adam on minibatches.

    The same seed and data give bitwise-identical weights.
    """
    config = config or TrainConfig()
    x, labels = validate_dataset(x, labels, shape)
    rng = np.random.default_rng(config.seed)
    weights = ModelWeights.glorot(shape, rng)
    y = one_hot(labels, shape.n_classes)
    optimizer = Adam(config)

    loss, acc = evaluate(x, labels, weights)
    result = TrainResult(weights, [loss], [acc])
    LOGGER.info("epoch 0: loss %.4f accuracy %.3f", loss, acc)

    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(x))
        for start in range(0, len(x), config.batch_size):
            batch = order[start:start + config.batch_size]
            _, grads = batch_gradients(x[batch], y[batch], weights, training=config.dropout_rate > 0,
                                       rng=rng, rate=config.dropout_rate)
            optimizer.step(weights, grads)
        loss, acc = evaluate(x, labels, weights)
        result.loss_history.append(loss)
        result.accuracy_history.append(acc)
        LOGGER.info("epoch %d: loss %.4f accuracy %.3f", epoch, loss, acc)
    return result
