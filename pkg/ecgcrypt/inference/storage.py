"""
Weights files: a JSON document with the model shape and, per tensor, its shape and
flat row-major values. Floats are written with ``repr`` precision, so a
save/load round trip is bitwise exact.
"""
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from ecgcrypt.exceptions import ShapeMismatch, WeightsFormatError
from ecgcrypt.inference.model import TENSORS, ModelShape, ModelWeights

FORMAT = 'ecgcrypt-weights'
FORMAT_VERSION = 1


def weights_to_dict(weights):
    return {
        'format': FORMAT,
        'version': FORMAT_VERSION,
        'model': {
            'beat_len': weights.shape.beat_len,
            'n_filters': weights.shape.n_filters,
            'kernel': weights.shape.kernel,
            'hidden': weights.shape.hidden,
            'n_classes': weights.shape.n_classes,
        },
        'tensors': {
            name: {'shape': list(tensor.shape), 'values': tensor.ravel().tolist()}
            for name, tensor in weights.tensors().items()
        },
    }


def weights_from_dict(doc, shape=None):
    """Rebuild :class:`ModelWeights`, checking every declared shape.

    If ``shape`` is given the file must describe exactly that model.
    """
    if not isinstance(doc, dict) or doc.get('format') != FORMAT:
        raise WeightsFormatError("not an {} document".format(FORMAT))
    if doc.get('version') != FORMAT_VERSION:
        raise WeightsFormatError("unsupported weights version {!r}".format(doc.get('version')))
    try:
        declared = ModelShape(**doc['model'])
    except (KeyError, TypeError) as e:
        raise WeightsFormatError("invalid model description: {}".format(e))
    if shape is not None and declared != shape:
        raise ShapeMismatch("file describes {}, expected {}".format(declared, shape))

    expected = declared.tensor_shapes()
    tensors = {}
    for name in TENSORS:
        try:
            entry = doc['tensors'][name]
            dims = tuple(entry['shape'])
            values = np.array(entry['values'], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as e:
            raise WeightsFormatError("{}: malformed tensor entry ({})".format(name, e))
        if dims != expected[name]:
            raise ShapeMismatch("{}: declared shape {}, model needs {}".format(name, dims, expected[name]))
        if values.ndim != 1 or values.size != int(np.prod(dims)):
            raise ShapeMismatch("{}: {} values for shape {}".format(name, values.size, dims))
        if not np.all(np.isfinite(values)):
            raise WeightsFormatError("{}: non-finite value".format(name))
        tensors[name] = values.reshape(dims)
    return ModelWeights(declared, **tensors)


def save_weights(weights, path):
    """Write atomically: the target only ever holds a complete document."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=path.name, suffix='.tmp', dir=str(path.parent.resolve()))
    try:
        with os.fdopen(fd, 'w') as fp:
            json.dump(weights_to_dict(weights), fp, allow_nan=False)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def load_weights(path, shape=None):
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError("weights file not found: {}".format(path))
    try:
        with open(path) as fp:
            doc = json.load(fp)
    except ValueError as e:
        raise WeightsFormatError("cannot parse {}: {}".format(path, e))
    return weights_from_dict(doc, shape)
