# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""Constant gradients perturbed by centered Gaussian noise."""
import numpy as np

from .. import echelon
from .. import error
from .. import struct


def synthetic_model(constants: np.ndarray) -> struct.ModelSpec:
    """Model whose node v always steps by constants[v] plus noise.

    Constants are the eta-scaled gradients so eta is never applied again."""
    constants = np.atleast_2d(np.asarray(constants))
    if constants.dtype != object and not np.all(np.isfinite(constants)):
        raise error.RumorError("Synthetic gradients must be finite")
    return struct.ModelSpec(
        variant="synthetic-constant-gradient", constants=constants
    )


def gradients(
    spec: struct.ModelSpec,
    theta: np.ndarray,
    eta: float,
    sigma: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Draw g_v + N_v with N_v ~ Normal(0, sigma^2) per coordinate."""
    if theta.shape != spec.constants.shape:
        raise error.RumorError(
            "Parameters {} disagree with gradients {}".format(
                theta.shape, spec.constants.shape
            )
        )
    if theta.dtype == object:
        if sigma:
            raise error.RumorError("Exact runs cannot carry noise")
        return echelon.to_exact(spec.constants)
    if sigma > 0:
        return spec.constants + rng.normal(0.0, sigma, spec.constants.shape)
    return spec.constants.astype(float)


def parameters(spec: struct.ModelSpec) -> int:
    return spec.constants.shape[1]


Synthetic = struct.Model(
    name="synthetic-constant-gradient",
    gradients=gradients,
    parameters=parameters,
)
