# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""All known model definitions."""
import collections

from .. import error
from .. import struct
from .logistic import Logistic, logistic_gradient, logistic_model
from .synthetic import Synthetic, synthetic_model

AVAILABLE_MODELS = collections.OrderedDict(
    [(Synthetic.name, Synthetic), (Logistic.name, Logistic)]
)


def lookup(spec: struct.ModelSpec) -> struct.Model:
    """Find the Model implementing spec.variant."""
    try:
        return AVAILABLE_MODELS[spec.variant]
    except KeyError as cause:
        raise error.RumorError(
            "Unknown model {!r}; choose from {}".format(
                spec.variant, tuple(AVAILABLE_MODELS)
            )
        ) from cause
