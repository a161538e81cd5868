# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""Gossip averaging and decentralized gradient descent, plus what attackers
observe while participating in either protocol."""
import logging
import typing

import numpy as np

from . import echelon
from . import error
from . import graph
from . import models
from . import struct

logger = logging.getLogger(__name__)

# Horizon used to detect convergence when opening a D-GD attack window.
CONVERGENCE_TOLERANCE = 1e-6
CONVERGENCE_CAP = 200


def default_iterations(g: struct.Graph) -> int:
    """Attack horizon of roughly the graph diameter."""
    return graph.diameter(g) + 2


def _private_values(x: typing.Any, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, np.newaxis]
    if x.ndim != 2 or x.shape[0] != n:
        raise error.RumorError(
            "Private values of shape {} do not fit {} nodes".format(x.shape, n)
        )
    if not np.all(np.isfinite(x)):
        raise error.RumorError("Private values must be finite")
    return x


def run_gossip_averaging(
    w: struct.GossipMatrix, x: typing.Any, iterations: int
) -> struct.GossipTrace:
    """Iterate theta^{t+1} = W theta^t from theta^0 = x.

    Scalar values are promoted to a single column."""
    n = w.weights.shape[0]
    x = _private_values(x, n)
    if iterations < 0:
        raise error.RumorError("Iteration count must be non-negative")
    theta = np.empty((iterations + 1,) + x.shape)
    theta[0] = x
    for t in range(iterations):
        theta[t + 1] = w.weights @ theta[t]
    logger.debug(
        "run_gossip_averaging: n={} d={} T={}".format(
            n, x.shape[1], iterations
        )
    )
    return struct.GossipTrace(theta=theta)


def run_dgd(w: struct.GossipMatrix, cfg: struct.DgdConfig) -> struct.DgdTrace:
    """Alternate gradient steps with gossip steps from a shared start.

    In exact mode every quantity is a Fraction and only noise-free synthetic
    gradients are possible."""
    if not cfg.eta > 0:
        raise error.RumorError("Learning rate {} must be > 0".format(cfg.eta))
    if cfg.iterations < 1:
        raise error.RumorError("D-GD needs at least one iteration")
    if cfg.noise_sigma < 0:
        raise error.RumorError("Noise deviation must be non-negative")
    model = models.lookup(cfg.model)
    if cfg.exact and model is not models.Synthetic:
        raise error.RumorError("Exact D-GD supports synthetic gradients only")

    mixing = graph.mixing(w, cfg.exact)
    n = mixing.shape[0]
    theta0 = np.asarray(cfg.theta0)
    theta0 = echelon.to_exact(theta0) if cfg.exact else theta0.astype(float)
    if theta0.ndim != 1 or len(theta0) != model.parameters(cfg.model):
        raise error.RumorError(
            "Initial parameters of shape {} but model {} needs {}".format(
                theta0.shape, model.name, model.parameters(cfg.model)
            )
        )

    dtype = object if cfg.exact else float
    shape = (n, len(theta0))
    theta = np.empty((cfg.iterations + 1,) + shape, dtype=dtype)
    half_steps = np.empty((cfg.iterations,) + shape, dtype=dtype)
    gradients = np.empty((cfg.iterations,) + shape, dtype=dtype)
    theta[0] = np.tile(theta0, (n, 1))
    rng = np.random.default_rng(cfg.seed)
    for t in range(cfg.iterations):
        gradients[t] = model.gradients(
            cfg.model, theta[t], cfg.eta, cfg.noise_sigma, rng
        )
        half_steps[t] = theta[t] + gradients[t]
        theta[t + 1] = mixing @ half_steps[t]

    logger.info(
        "run_dgd: {} n={} d={} T={} eta={} sigma={}{}".format(
            model.name,
            n,
            len(theta0),
            cfg.iterations,
            cfg.eta,
            cfg.noise_sigma,
            " (exact)" if cfg.exact else "",
        )
    )
    return struct.DgdTrace(
        theta=theta, half_steps=half_steps, gradients=gradients
    )


def window_start(
    trace: struct.DgdTrace,
    *,
    tolerance: float = CONVERGENCE_TOLERANCE,
    cap: int = CONVERGENCE_CAP
) -> int:
    """First t with ||theta^{t+1} - theta^t|| < tolerance, capped."""
    theta = np.asarray(trace.theta, dtype=float)
    steps = theta.shape[0] - 1
    for t in range(min(steps, cap)):
        if np.linalg.norm(theta[t + 1] - theta[t]) < tolerance:
            return t
    return min(steps, cap)


def observe(
    trace: typing.Union[struct.GossipTrace, struct.DgdTrace],
    a: struct.AttackerSet,
    *,
    start: int = 0,
    iterations: typing.Optional[int] = None
) -> struct.Observation:
    """Stack what the attackers hold in knowledge-matrix row order.

    Averaging yields the attackers' own values then theta_v^t for
    t = 0..T-1 and v in N(A).  D-GD yields theta_v^{t+1/2} over the
    window [start, start + T) and retains the attackers' own half-steps."""
    if isinstance(trace, struct.DgdTrace):
        return _observe_dgd(trace, a, start, iterations)
    if start:
        raise error.RumorError("Averaging observations always start at 0")
    available = trace.theta.shape[0]
    if iterations is None:
        iterations = available - 1
    if not 0 <= iterations <= available:
        raise error.RumorError(
            "Horizon {} exceeds a trace of {} states".format(
                iterations, available
            )
        )

    rows, values = [], []
    for v in a.attackers:
        rows.append(struct.RowIndex("own", 0, v))
        values.append(trace.theta[0][v])
    for t in range(iterations):
        for v in a.neighbors:
            rows.append(struct.RowIndex("received", t, v))
            values.append(trace.theta[t][v])
    return struct.Observation(
        values=_stack(values, trace.theta), rows=tuple(rows)
    )


def _observe_dgd(trace, a, start, iterations):
    available = trace.half_steps.shape[0]
    if iterations is None:
        iterations = available - start
    if start < 0 or iterations < 1 or start + iterations > available:
        raise error.RumorError(
            "Window [{}, {}) outside the {} recorded half-steps".format(
                start, start + (iterations or 0), available
            )
        )
    rows, values = [], []
    for t in range(iterations):
        for v in a.neighbors:
            rows.append(struct.RowIndex("received", t, v))
            values.append(trace.half_steps[start + t][v])
    window = trace.half_steps[start : start + iterations]
    return struct.Observation(
        values=_stack(values, trace.theta),
        rows=tuple(rows),
        attacker_half_steps=window[:, list(a.attackers)],
        start=start,
    )


def _stack(values, like):
    if values:
        return np.stack(values)
    return np.empty((0, like.shape[-1]), dtype=like.dtype)
