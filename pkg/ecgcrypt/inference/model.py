"""
The 1D CNN: conv(32 x 3, valid) -> ReLU -> dropout -> flatten -> dense(100) + ReLU
-> dense(5) + softmax, in float64 numpy.

Activations are laid out ``(batch, time, filter)`` and flattened row-major, so
``dense1_w`` column ``t * n_filters + f`` reads filter ``f`` at position ``t``.
Dropout is inverted (kept units scaled by ``1 / (1 - rate)``) and only applied
in training mode.
"""
from collections import namedtuple
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ecgcrypt.exceptions import ShapeMismatch

CLASS_LABELS = ('N', 'LBBB', 'RBBB', 'APC', 'VPC')
DEFAULT_DROPOUT = 0.5
PROB_FLOOR = 1e-12

ClassProbs = namedtuple('ClassProbs', ['probs', 'label'])


@dataclass(frozen=True)
class ModelShape:
    beat_len: int = 180
    n_filters: int = 32
    kernel: int = 3
    hidden: int = 100
    n_classes: int = 5

    def __post_init__(self):
        for name in ('beat_len', 'n_filters', 'kernel', 'hidden', 'n_classes'):
            if getattr(self, name) < 1:
                raise ShapeMismatch("{} must be positive".format(name))
        if self.kernel > self.beat_len:
            raise ShapeMismatch("kernel {} longer than input {}".format(self.kernel, self.beat_len))

    @property
    def conv_len(self):
        return self.beat_len - self.kernel + 1

    @property
    def flat_len(self):
        return self.conv_len * self.n_filters

    def tensor_shapes(self):
        return {
            'conv_filters': (self.n_filters, self.kernel, 1),
            'conv_bias': (self.n_filters,),
            'dense1_w': (self.hidden, self.flat_len),
            'dense1_b': (self.hidden,),
            'out_w': (self.n_classes, self.hidden),
            'out_b': (self.n_classes,),
        }


DEFAULT_SHAPE = ModelShape()
TENSORS = tuple(DEFAULT_SHAPE.tensor_shapes())


class ModelWeights:
    """All CNN parameters. Every tensor is validated against ``shape`` on construction."""

    def __init__(self, shape=DEFAULT_SHAPE, **tensors):
        self.shape = shape
        expected = shape.tensor_shapes()
        missing = set(expected) - set(tensors)
        if missing:
            raise ShapeMismatch("missing tensors: {}".format(', '.join(sorted(missing))))
        unknown = set(tensors) - set(expected)
        if unknown:
            raise ShapeMismatch("unknown tensors: {}".format(', '.join(sorted(unknown))))
        for name in TENSORS:
            value = np.asarray(tensors[name], dtype=np.float64)
            if value.shape != expected[name]:
                raise ShapeMismatch("{}: expected shape {}, got {}".format(name, expected[name], value.shape))
            if not np.all(np.isfinite(value)):
                raise ShapeMismatch("{}: non-finite value".format(name))
            setattr(self, name, value)

    @classmethod
    def zeros(cls, shape=DEFAULT_SHAPE):
        return cls(shape, **{k: np.zeros(v) for k, v in shape.tensor_shapes().items()})

    @classmethod
    def glorot(cls, shape=DEFAULT_SHAPE, rng=None):
        """Glorot-uniform kernels and zero biases."""
        rng = rng if rng is not None else np.random.default_rng()
        fans = {
            'conv_filters': (shape.kernel, shape.kernel * shape.n_filters),
            'dense1_w': (shape.flat_len, shape.hidden),
            'out_w': (shape.hidden, shape.n_classes),
        }
        tensors = {}
        for name, dims in shape.tensor_shapes().items():
            if name in fans:
                limit = np.sqrt(6.0 / sum(fans[name]))
                tensors[name] = rng.uniform(-limit, limit, size=dims)
            else:
                tensors[name] = np.zeros(dims)
        return cls(shape, **tensors)

    def tensors(self):
        return {name: getattr(self, name) for name in TENSORS}

    def copy(self):
        return ModelWeights(self.shape, **{k: v.copy() for k, v in self.tensors().items()})

    def __eq__(self, other):
        if not isinstance(other, ModelWeights):
            return NotImplemented
        return self.shape == other.shape and all(
            np.array_equal(getattr(self, name), getattr(other, name)) for name in TENSORS)

    def __repr__(self):
        return "ModelWeights({})".format(self.shape)


def relu(x):
    return np.maximum(x, 0.0)


def softmax(logits):
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def dropout_mask(shape, rate, rng):
    """Inverted-dropout mask: 0 for dropped units, ``1 / (1 - rate)`` for kept ones."""
    if rate <= 0.0:
        return np.ones(shape)
    keep = rng.random(shape) >= rate
    return keep / (1.0 - rate)


def _as_batch(x, shape):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[np.newaxis, :]
    if x.ndim != 2 or x.shape[1] != shape.beat_len:
        raise ShapeMismatch("expected input of length {}, got {}".format(shape.beat_len, x.shape))
    return x


def forward_pass(x, weights, mask=None):
    """Batched forward pass keeping every intermediate needed by :func:`backward`.

    ``mask`` is a ``(batch, conv_len, n_filters)`` dropout mask, or None.
    """
    x = _as_batch(x, weights.shape)
    windows = sliding_window_view(x, weights.shape.kernel, axis=1)  # (B, L, K)
    z1 = windows @ weights.conv_filters[:, :, 0].T + weights.conv_bias  # (B, L, F)
    a1 = relu(z1)
    d1 = a1 * mask if mask is not None else a1
    flat = d1.reshape(x.shape[0], -1)
    z2 = flat @ weights.dense1_w.T + weights.dense1_b
    a2 = relu(z2)
    z3 = a2 @ weights.out_w.T + weights.out_b
    return {
        'windows': windows, 'z1': z1, 'mask': mask, 'flat': flat,
        'z2': z2, 'a2': a2, 'logits': z3, 'probs': softmax(z3),
    }


def predict_proba(x, weights):
    """Inference-mode class probabilities, shape ``(batch, n_classes)``."""
    return forward_pass(x, weights)['probs']


def to_class_probs(probs):
    probs = np.asarray(probs, dtype=np.float64)
    return ClassProbs(probs, CLASS_LABELS[int(np.argmax(probs))])


def forward(beat, weights, training=False, dropout_mask_seed=None, rate=DEFAULT_DROPOUT):
    """Class probabilities of one beat.

    ``beat`` is a :class:`~ecgcrypt.beats.Beat` or a plain sequence of samples.
    """
    samples = getattr(beat, 'samples', beat)
    mask = None
    if training:
        rng = np.random.default_rng(dropout_mask_seed)
        mask = dropout_mask((1, weights.shape.conv_len, weights.shape.n_filters), rate, rng)
    return to_class_probs(forward_pass(samples, weights, mask)['probs'][0])


def one_hot(labels, n_classes=len(CLASS_LABELS)):
    labels = np.asarray(labels, dtype=np.int64)
    out = np.zeros((labels.size, n_classes))
    out[np.arange(labels.size), labels] = 1.0
    return out


def crossentropy(y_true, y_pred):
    """``-sum(y * log(p))`` with ``p`` clamped at 1e-12; batched inputs give the batch mean."""
    y = np.asarray(y_true, dtype=np.float64)
    p = np.asarray(getattr(y_pred, 'probs', y_pred), dtype=np.float64)
    losses = -np.sum(y * np.log(np.maximum(p, PROB_FLOOR)), axis=-1)
    return float(np.mean(losses))


def backward(x, y, weights, mask=None):
    """Mean crossentropy loss and its gradients over the batch.

    Returns
    -------
    loss : float
    grads : dict
      One array per tensor, same shapes as ``weights``.
    """
    cache = forward_pass(x, weights, mask)
    y = np.asarray(y, dtype=np.float64)
    if y.shape != cache['probs'].shape:
        raise ShapeMismatch("labels of shape {} for predictions of shape {}".format(y.shape, cache['probs'].shape))
    batch = y.shape[0]
    loss = crossentropy(y, cache['probs'])

    # clamped probabilities contribute a constant loss and no gradient
    probs = cache['probs']
    live = y * (probs > PROB_FLOOR)
    dz3 = (probs * live.sum(axis=1, keepdims=True) - live) / batch
    grads = {
        'out_w': dz3.T @ cache['a2'],
        'out_b': dz3.sum(axis=0),
    }
    dz2 = (dz3 @ weights.out_w) * (cache['z2'] > 0)
    grads['dense1_w'] = dz2.T @ cache['flat']
    grads['dense1_b'] = dz2.sum(axis=0)
    dd1 = (dz2 @ weights.dense1_w).reshape(cache['z1'].shape)
    da1 = dd1 * mask if mask is not None else dd1
    dz1 = da1 * (cache['z1'] > 0)
    grads['conv_filters'] = np.einsum('btf,btk->fk', dz1, cache['windows'])[:, :, np.newaxis]
    grads['conv_bias'] = dz1.sum(axis=(0, 1))
    return loss, grads


def batch_gradients(x, y, weights, training=True, rng=None, rate=DEFAULT_DROPOUT):
    """:func:`backward` with a fresh training-mode dropout mask drawn from ``rng``."""
    mask = None
    if training:
        rng = rng if rng is not None else np.random.default_rng()
        mask = dropout_mask((len(x), weights.shape.conv_len, weights.shape.n_filters), rate, rng)
    return backward(x, y, weights, mask)


def numerical_gradient(x, y, weights, mask=None, h=1e-5):
    """Central finite differences of the mean loss for every parameter.

    Returns
    -------
    grads : dict
    kinks : dict of bool arrays
      True where the ReLU on/off pattern differs between ``w + h`` and ``w - h``;
      the loss is not differentiable there and the estimate is meaningless.
    """
    y = np.asarray(y, dtype=np.float64)

    def evaluate():
        cache = forward_pass(x, weights, mask)
        return crossentropy(y, cache['probs']), np.concatenate([
            (cache['z1'] > 0).ravel(), (cache['z2'] > 0).ravel()])

    grads, kinks = {}, {}
    for name in TENSORS:
        tensor = getattr(weights, name)
        grad = np.zeros_like(tensor)
        kink = np.zeros(tensor.shape, dtype=bool)
        for idx in np.ndindex(tensor.shape):
            original = tensor[idx]
            tensor[idx] = original + h
            up, pattern_up = evaluate()
            tensor[idx] = original - h
            down, pattern_down = evaluate()
            tensor[idx] = original
            grad[idx] = (up - down) / (2.0 * h)
            kink[idx] = not np.array_equal(pattern_up, pattern_down)
        grads[name] = grad
        kinks[name] = kink
    return grads, kinks


def relative_error(analytic, numeric, floor=1e-6):
    """Elementwise ``|a - n| / max(|a| + |n|, floor)``."""
    a = np.asarray(analytic)
    n = np.asarray(numeric)
    return np.abs(a - n) / np.maximum(np.abs(a) + np.abs(n), floor)
