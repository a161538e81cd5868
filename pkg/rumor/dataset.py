# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""Private data held by the nodes: synthetic images or loaded vectors."""
import csv
import logging
import typing

import numpy as np
import scipy.ndimage

from . import error

logger = logging.getLogger(__name__)

Dataset = typing.Tuple[np.ndarray, typing.Tuple[int, ...]]


def smooth_images(
    count: int, side: int, seed: int, *, smoothing: float = 1.0
) -> np.ndarray:
    """Smoothed uniform noise, one flattened side x side image per row.

    Each image is rescaled to span exactly [0, 1]."""
    if count < 0 or side < 1:
        raise error.RumorError(
            "Cannot draw {} images of side {}".format(count, side)
        )
    rng = np.random.default_rng(seed)
    fields = scipy.ndimage.gaussian_filter(
        rng.random((count, side, side)), sigma=(0, smoothing, smoothing)
    )
    low = fields.min(axis=(1, 2), keepdims=True)
    span = fields.max(axis=(1, 2), keepdims=True) - low
    span[span == 0] = 1.0
    return ((fields - low) / span).reshape(count, side * side)


def synthetic_dataset(
    count: int, side: int, classes: int, seed: int
) -> Dataset:
    """Smooth images paired with uniformly drawn labels."""
    seeds = np.random.SeedSequence(seed).spawn(2)
    inputs = smooth_images(count, side, seeds[0])
    labels = np.random.default_rng(seeds[1]).integers(classes, size=count)
    return inputs, tuple(int(y) for y in labels)


def load_vectors(path: str) -> Dataset:
    """Read rows of 'label, x_1, ..., x_p' ignoring blanks and '#' lines."""
    inputs, labels = [], []
    with open(path, newline="") as stream:
        for lineno, row in enumerate(csv.reader(stream), start=1):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                labels.append(int(row[0]))
                inputs.append([float(x) for x in row[1:]])
            except ValueError as cause:
                raise error.RumorError(
                    "{}:{}: malformed vector ({})".format(path, lineno, cause)
                ) from cause
            if len(inputs[-1]) != len(inputs[0]) or not inputs[-1]:
                raise error.RumorError(
                    "{}:{}: expected {} features".format(
                        path, lineno, len(inputs[0])
                    )
                )
    if not inputs:
        raise error.RumorError("{}: no vectors found".format(path))
    logger.info(
        "load_vectors: {} vectors of dimension {} from {}".format(
            len(inputs), len(inputs[0]), path
        )
    )
    return np.array(inputs), tuple(labels)
