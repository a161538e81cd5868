# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""Recovering inputs from softmax regression gradients and scoring them.

For a single datum the weight gradient is the outer product of the
residual p - y with x while the bias gradient is p - y itself, so any
row divided by its bias entry returns x.  The ratio cancels eta."""
import logging
import math
import typing

import numpy as np

from . import error
from . import struct
from .models import logistic

logger = logging.getLogger(__name__)

DIVISOR_THRESHOLD = 1e-8
SUCCESS_PSNR = 10.0
PSNR_CEILING = 100.0


def invert_logistic_gradient(
    g: np.ndarray, classes: int, *, threshold: float = DIVISOR_THRESHOLD
) -> struct.ReconstructedDatum:
    """Closed-form input and label behind an eta-scaled gradient."""
    g = np.asarray(g, dtype=float)
    if g.ndim != 1 or len(g) % classes or len(g) // classes < 2:
        raise error.RumorError(
            "Gradient of shape {} does not fit {} classes".format(
                g.shape, classes
            )
        )
    if not np.all(np.isfinite(g)):
        raise error.RumorError("uninformative gradient: non-finite entries")
    weights, bias = logistic.split(g, len(g) // classes - 1)
    c = int(np.argmax(np.abs(bias)))
    if abs(bias[c]) < threshold:
        raise error.RumorError(
            "uninformative gradient: bias entries below {}".format(threshold)
        )
    return struct.ReconstructedDatum(
        input=weights[c] / bias[c],
        label=int(np.argmax(bias)),
        confidence=float(abs(bias[c])),
    )


def reconstruct_inputs(
    estimate: struct.GradientEstimate,
    classes: int,
    *,
    threshold: float = DIVISOR_THRESHOLD
) -> typing.Dict[int, typing.Optional[struct.ReconstructedDatum]]:
    """Invert every estimated gradient, mapping failures to None."""
    result = {}
    for node, g in zip(estimate.nodes, estimate.values):
        try:
            result[node] = invert_logistic_gradient(
                np.asarray(g, dtype=float), classes, threshold=threshold
            )
        except error.RumorError as cause:
            logger.debug("reconstruct_inputs: node {}: {}".format(node, cause))
            result[node] = None
    return result


def _pair(a, b):
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape:
        raise error.RumorError(
            "Lengths differ ({} versus {})".format(len(a), len(b))
        )
    return a, b


def psnr(a: np.ndarray, b: np.ndarray, peak: float = 1.0) -> float:
    """Peak signal-to-noise ratio in decibels, infinite when a == b."""
    assert peak > 0, "Peak must be positive"
    a, b = _pair(a, b)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak ** 2 / mse)


def clipped(decibels: float, ceiling: float = PSNR_CEILING) -> float:
    """PSNR suitable for averaging in tables."""
    return min(decibels, ceiling)


def relative_square_distance(a: np.ndarray, b: np.ndarray) -> float:
    """||a - b||^2 / ||b||^2 against the nonzero truth b."""
    a, b = _pair(a, b)
    scale = float(np.dot(b, b))
    if scale == 0.0:
        raise error.RumorError("Relative distance to a zero vector")
    return float(np.dot(a - b, a - b)) / scale


def success_rate(
    psnrs: typing.Iterable[float], threshold: float = SUCCESS_PSNR
) -> float:
    """Fraction of reconstructions whose PSNR exceeds threshold.

    Exact reconstructions (infinite PSNR) always count."""
    values = list(psnrs)
    if not values:
        return 0.0
    hits = sum(1 for x in values if x > threshold or x == math.inf)
    return hits / len(values)
