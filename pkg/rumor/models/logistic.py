# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""Softmax regression with a bias term and cross-entropy loss.

Parameters are flattened as the C x p weight matrix (row-major) followed
by the C biases, so a gradient has a weight block then a bias block."""
import typing

import numpy as np
from scipy.special import log_softmax, softmax

from .. import error
from .. import struct

Datum = typing.Tuple[np.ndarray, int]


def split(
    theta: np.ndarray, inputs: int
) -> typing.Tuple[np.ndarray, np.ndarray]:
    """Separate flattened parameters into (weights, bias)."""
    classes, remainder = divmod(len(theta), inputs + 1)
    if remainder or not classes:
        raise error.RumorError(
            "{} parameters do not fit inputs of dimension {}".format(
                len(theta), inputs
            )
        )
    return theta[: classes * inputs].reshape(classes, inputs), theta[-classes:]


def _logits(theta: np.ndarray, datum: Datum) -> np.ndarray:
    x, label = np.asarray(datum[0], dtype=float), datum[1]
    theta = np.asarray(theta, dtype=float)
    if not (np.all(np.isfinite(theta)) and np.all(np.isfinite(x))):
        raise error.RumorError("Logistic gradient requires finite input")
    weights, bias = split(theta, len(x))
    if not 0 <= label < len(bias):
        raise error.RumorError(
            "Label {} outside classes 0..{}".format(label, len(bias) - 1)
        )
    return weights @ x + bias


def loss(theta: np.ndarray, datum: Datum) -> float:
    """Cross-entropy of the softmax prediction."""
    return -float(log_softmax(_logits(theta, datum))[datum[1]])


def logistic_gradient(
    theta: np.ndarray, datum: Datum, eta: float
) -> np.ndarray:
    """The eta-scaled step -eta * grad L for a single datum."""
    x = np.asarray(datum[0], dtype=float)
    residual = softmax(_logits(theta, datum))
    residual[datum[1]] -= 1.0
    return -eta * np.concatenate((np.outer(residual, x).ravel(), residual))


def logistic_model(
    inputs: np.ndarray, labels: typing.Sequence[int], classes: int
) -> struct.ModelSpec:
    """One datum per node: row v of inputs with label labels[v]."""
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    labels = tuple(int(y) for y in labels)
    if len(labels) != inputs.shape[0]:
        raise error.RumorError(
            "{} labels for {} inputs".format(len(labels), inputs.shape[0])
        )
    if not np.all(np.isfinite(inputs)):
        raise error.RumorError("Logistic inputs must be finite")
    if any(not 0 <= y < classes for y in labels):
        raise error.RumorError("Labels must lie in 0..{}".format(classes - 1))
    return struct.ModelSpec(
        variant="logistic-regression",
        classes=classes,
        inputs=inputs,
        labels=labels,
    )


def gradients(
    spec: struct.ModelSpec,
    theta: np.ndarray,
    eta: float,
    sigma: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Per-node gradient of each node's own datum; sigma is unused."""
    return np.stack(
        [
            logistic_gradient(theta[v], (spec.inputs[v], spec.labels[v]), eta)
            for v in range(theta.shape[0])
        ]
    )


def parameters(spec: struct.ModelSpec) -> int:
    return spec.classes * (spec.inputs.shape[1] + 1)


Logistic = struct.Model(
    name="logistic-regression", gradients=gradients, parameters=parameters
)
