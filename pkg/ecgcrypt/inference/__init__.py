"""
Beat classification with a small 1D convolutional network.

The network reads one 180-sample beat and returns probabilities for five
classes: Normal (N), Left and Right Bundle Branch Block (LBBB, RBBB), Atrial
and Ventricular Premature Contraction (APC, VPC). Everything runs in float64
numpy, training included, so analytical gradients can be checked against
finite differences.

Example
-------
Train on the synthetic template set and classify a beat::

  >>> from ecgcrypt.inference import make_template_dataset, train, forward
  >>> x, labels = make_template_dataset(n_per_class=40, seed=7)
  >>> result = train(x, labels)
  >>> forward(x[0], result.weights).label
  'N'

Weights are stored as JSON with :func:`save_weights` and :func:`load_weights`.
"""

from .model import (  # noqa: F401
    CLASS_LABELS, ClassProbs, ModelShape, ModelWeights, backward, batch_gradients, crossentropy, forward,
    numerical_gradient, predict_proba,
)
from .train import TrainConfig, TrainResult, train  # noqa: F401
from .dataset import make_template_dataset  # noqa: F401
from .storage import load_weights, save_weights  # noqa: F401
