# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""Gradient reconstruction attack against decentralized gradient descent.

Once the attackers subtract what they themselves injected, the
half-steps they receive are Y = K g + noise with K built from partial
sums of W_TT powers.  The constant gradient parts g then follow from
ordinary or generalized least squares."""
import logging
import typing

import numpy as np
import scipy.linalg

from . import echelon
from . import error
from . import graph
from . import protocol
from . import struct

logger = logging.getLogger(__name__)

METHODS = ("ols", "gls")
JITTER = 1e-10
CONDITION_LIMIT = 1e12


def _partitioned(
    w: struct.GossipMatrix, a: struct.AttackerSet
) -> struct.GossipMatrix:
    order = tuple(a.attackers) + tuple(a.targets)
    if w.blocks is None or tuple(w.order) != order:
        w = graph.partition_blocks(w, a)
    return w


def _target_blocks(w, a, exact):
    w = _partitioned(w, a)
    blocks = w.exact_blocks if exact else w.blocks
    if blocks is None:
        raise error.RumorError("Gossip matrix carries no exact weights")
    return blocks


def _neighbor_indices(a: struct.AttackerSet) -> typing.List[int]:
    position = {v: i for i, v in enumerate(a.targets)}
    return [position[v] for v in a.neighbors]


def build_knowledge_matrix_dgd(
    w: struct.GossipMatrix,
    a: struct.AttackerSet,
    iterations: int,
    *,
    exact: bool = False
) -> struct.KnowledgeMatrix:
    """Row (t, v) is (sum_{j<=t} W_TT^j)[v, :] over target columns.

    Partial sums are accumulated incrementally from the neighbor rows."""
    if iterations < 1:
        raise error.RumorError("Knowledge matrices need T >= 1")
    tt = _target_blocks(w, a, exact).tt
    eye = echelon.identity(len(a.targets), exact)
    power = eye[_neighbor_indices(a)]
    partial = power.copy()

    rows, blocks = [], []
    for t in range(iterations):
        rows.extend(struct.RowIndex("received", t, v) for v in a.neighbors)
        blocks.append(partial)
        if t + 1 < iterations:
            power = power @ tt
            partial = partial + power
    return struct.KnowledgeMatrix(
        matrix=np.vstack(blocks), rows=tuple(rows), columns=tuple(a.targets)
    )


def remove_attacker_contributions(
    y: struct.Observation,
    w: struct.GossipMatrix,
    a: struct.AttackerSet,
    theta0: typing.Any,
) -> struct.Observation:
    """Subtract the propagated initial state and attacker half-steps.

    B starts as the target parameters at the window start (a vector is
    broadcast to every target) and evolves as W_TT B + W_TA theta_A."""
    half_steps = y.attacker_half_steps
    if half_steps is None:
        raise error.RumorError("Observation lacks the attackers' half-steps")
    values = np.asarray(y.values)
    exact = values.dtype == object
    blocks = _target_blocks(w, a, exact)
    iterations, width = len(half_steps), len(a.neighbors)
    if values.shape[0] != iterations * width:
        raise error.RumorError(
            "{} observations but {} half-steps for {} neighbors".format(
                values.shape[0], iterations, width
            )
        )

    theta0 = np.asarray(theta0, dtype=values.dtype)
    if theta0.ndim == 1:
        theta0 = np.tile(theta0, (len(a.targets), 1))
    if theta0.shape != (len(a.targets), values.shape[1]):
        raise error.RumorError(
            "Initial target parameters of shape {}".format(theta0.shape)
        )

    index = _neighbor_indices(a)
    result = values.copy()
    b = theta0
    for t in range(iterations):
        result[t * width : (t + 1) * width] -= b[index]
        b = blocks.tt @ b + blocks.ta @ half_steps[t]
    return y._replace(values=result)


def build_covariance(
    w: struct.GossipMatrix,
    a: struct.AttackerSet,
    iterations: int,
    sigma: float,
) -> struct.CovarianceMatrix:
    """Covariance of the residual noise in the attacker-corrected view.

    Rows (t, v) and (t', v') share the noise injected at l <= min(t, t')
    giving sigma^2 sum_l W_TT^{t+t'-2l}[v, v']."""
    if sigma < 0:
        raise error.RumorError("Noise deviation must be non-negative")
    tt = _target_blocks(w, a, False).tt
    index = np.ix_(_neighbor_indices(a), _neighbor_indices(a))
    powers = [np.eye(len(a.targets))]
    for _ in range(max(0, 2 * iterations - 2)):
        powers.append(powers[-1] @ tt)
    powers = [p[index] for p in powers]

    width = len(a.neighbors)
    m = iterations * width
    matrix = np.zeros((m, m))
    for t in range(iterations):
        rows = slice(t * width, (t + 1) * width)
        for u in range(t, iterations):
            cols = slice(u * width, (u + 1) * width)
            block = sum(powers[t + u - 2 * l] for l in range(t + 1))
            matrix[rows, cols] = block
            matrix[cols, rows] = block.T
    matrix = sigma ** 2 * 0.5 * (matrix + matrix.T)
    return struct.CovarianceMatrix(matrix=matrix, sigma=sigma)


def identifiable_targets(
    k: struct.KnowledgeMatrix, mode: str = "float"
) -> typing.FrozenSet[int]:
    """Targets whose gradient is pinned down by K.

    Exact mode grows an integer row space rather than reducing over
    fractions, whose denominators grow with every power of W_TT."""
    if echelon.check_mode(mode):
        space, _ = echelon.extend_space(
            echelon.row_space(len(k.columns), True),
            echelon.to_integer(k.matrix),
        )
        return frozenset(k.columns[c] for c in echelon.unit_members(space))
    dec = echelon.rref(k, mode, transform=False)
    return echelon.classify_reconstructible(dec)


def _float_system(k, y_hat):
    matrix = np.asarray(k.matrix, dtype=float)
    values = y_hat.values if isinstance(y_hat, struct.Observation) else y_hat
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, np.newaxis]
    if values.shape[0] != matrix.shape[0]:
        raise error.RumorError(
            "{} observations for a {}-row knowledge matrix".format(
                values.shape[0], matrix.shape[0]
            )
        )
    return matrix, values


def _least_squares(kw, yw, identifiable, columns, covariance):
    """Solve min ||kw g - yw|| by QR when identifiable, else min-norm."""
    if len(identifiable) == len(columns):
        q, r = scipy.linalg.qr(kw, mode="economic")
        estimate = scipy.linalg.solve_triangular(r, q.T @ yw)
        if not covariance:
            return estimate, None
        inverse = scipy.linalg.solve_triangular(r, np.eye(r.shape[0]))
        return estimate, inverse @ inverse.T
    estimate = scipy.linalg.lstsq(kw, yw)[0]
    unknown = [i for i, v in enumerate(columns) if v not in identifiable]
    estimate[unknown] = np.nan
    if not covariance:
        return estimate, None
    return estimate, scipy.linalg.pinv(kw.T @ kw)


def ols_solve(
    k: struct.KnowledgeMatrix,
    y_hat: typing.Union[struct.Observation, np.ndarray],
    *,
    identifiable: typing.Optional[typing.FrozenSet[int]] = None
) -> struct.GradientEstimate:
    """Ordinary least squares, one column per model coordinate.

    Rows for targets outside identifiable come back as NaN."""
    matrix, values = _float_system(k, y_hat)
    if identifiable is None:
        identifiable = identifiable_targets(k)
    estimate, _ = _least_squares(
        matrix, values, identifiable, k.columns, covariance=False
    )
    return struct.GradientEstimate(
        nodes=tuple(k.columns),
        values=estimate,
        method="ols",
        covariance=None,
        identifiable=frozenset(identifiable),
    )


def cholesky_factor(matrix: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor, jittering the diagonal when near-singular.

    Near-singular means the factorization fails or the squared ratio of
    the extreme diagonal entries of the factor, a lower bound on the
    condition number, exceeds CONDITION_LIMIT."""
    try:
        factor = scipy.linalg.cholesky(matrix, lower=True)
        diagonal = np.abs(np.diag(factor))
        if diagonal.min() > 0.0 and (
            diagonal.max() / diagonal.min()
        ) ** 2 <= CONDITION_LIMIT:
            return factor
    except np.linalg.LinAlgError:
        pass
    jitter = JITTER * np.trace(matrix) / matrix.shape[0]
    logger.debug("cholesky_factor: adding diagonal jitter {}".format(jitter))
    try:
        return scipy.linalg.cholesky(
            matrix + jitter * np.eye(matrix.shape[0]), lower=True
        )
    except np.linalg.LinAlgError as cause:
        raise error.RumorError(
            "Covariance is not positive definite"
        ) from cause


def gls_solve(
    k: struct.KnowledgeMatrix,
    y_hat: typing.Union[struct.Observation, np.ndarray],
    covariance: struct.CovarianceMatrix,
    *,
    identifiable: typing.Optional[typing.FrozenSet[int]] = None
) -> struct.GradientEstimate:
    """Generalized least squares after whitening by the Cholesky factor.

    A vanishing covariance (sigma = 0) reduces to ordinary least squares."""
    matrix, values = _float_system(k, y_hat)
    sigma = np.asarray(covariance.matrix, dtype=float)
    if sigma.shape != (matrix.shape[0],) * 2:
        raise error.RumorError(
            "Covariance {} for {} observations".format(
                sigma.shape, matrix.shape[0]
            )
        )
    if identifiable is None:
        identifiable = identifiable_targets(k)
    if not np.any(sigma):
        logger.warning("gls_solve: zero covariance so solving by OLS")
        return ols_solve(k, values, identifiable=identifiable)

    factor = cholesky_factor(sigma)
    whitened = scipy.linalg.solve_triangular(factor, matrix, lower=True)
    rhs = scipy.linalg.solve_triangular(factor, values, lower=True)
    estimate, estimator = _least_squares(
        whitened, rhs, identifiable, k.columns, covariance=True
    )
    return struct.GradientEstimate(
        nodes=tuple(k.columns),
        values=estimate,
        method="gls",
        covariance=estimator,
        identifiable=frozenset(identifiable),
    )


def _exact_solve(k, y_hat):
    """Solve K g = Y over the rationals, which requires sigma = 0."""
    matrix = echelon.to_exact(k.matrix)
    values = echelon.to_exact(y_hat.values)
    n = matrix.shape[1]
    dec = echelon.rref(np.hstack((matrix, values)), "exact", transform=False)
    estimate = np.full((n, values.shape[1]), np.nan, dtype=object)
    identifiable = set()
    for i, column in enumerate(dec.pivots):
        if column >= n:
            raise error.RumorError("Observations are inconsistent with K")
        if np.count_nonzero(dec.reduced[i, :n] != 0) == 1:
            estimate[column] = dec.reduced[i, n:]
            identifiable.add(k.columns[column])
    return struct.GradientEstimate(
        nodes=tuple(k.columns),
        values=estimate,
        method="exact",
        covariance=None,
        identifiable=frozenset(identifiable),
    )


def attack_dgd_pipeline(
    trace: struct.DgdTrace,
    w: struct.GossipMatrix,
    a: struct.AttackerSet,
    *,
    start: typing.Union[int, str] = "auto",
    iterations: typing.Optional[int] = None,
    method: str = "ols",
    sigma: typing.Optional[float] = None,
    exact: bool = False
) -> struct.GradientEstimate:
    """Observe, remove attacker contributions, build K, then solve.

    With start="auto" the window opens once the trace has converged.
    Before the first iteration every node holds the shared theta^0;
    later starts approximate the targets by the attackers' mean.  Exact
    runs solve K g = Y over the rationals rather than by least squares."""
    if method not in METHODS:
        raise error.RumorError(
            "Unknown method {!r}; choose from {}".format(method, METHODS)
        )
    if not a.attackers:
        raise error.RumorError("At least one attacker is required")
    if start == "auto":
        start = protocol.window_start(trace)
    available = len(trace.half_steps) - start
    if available < 1:
        raise error.RumorError(
            "Window start {} leaves no recorded half-steps".format(start)
        )
    if iterations is None:
        iterations = min(
            protocol.default_iterations(graph.support(w)), available
        )
    w = _partitioned(w, a)

    observed = protocol.observe(trace, a, start=start, iterations=iterations)
    own = trace.theta[start][list(a.attackers)]
    theta0 = own[0] if start == 0 else sum(own) / len(own)
    y_hat = remove_attacker_contributions(observed, w, a, theta0)
    logger.info(
        "attack_dgd_pipeline: {} over [{}, {}) by {}".format(
            a.attackers, start, start + iterations,
            "exact" if exact else method,
        )
    )
    if exact:
        k = build_knowledge_matrix_dgd(w, a, iterations, exact=True)
        return _exact_solve(k, y_hat)

    k = build_knowledge_matrix_dgd(w, a, iterations)
    mode = "float" if w.exact is None else "exact"
    identifiable = identifiable_targets(
        build_knowledge_matrix_dgd(w, a, iterations, exact=mode == "exact"),
        mode,
    )
    if method == "ols":
        return ols_solve(k, y_hat, identifiable=identifiable)
    if sigma is None:
        raise error.RumorError("GLS requires the noise deviation sigma")
    return gls_solve(
        k,
        y_hat,
        build_covariance(w, a, iterations, sigma),
        identifiable=identifiable,
    )


def sensitivity(
    w: struct.GossipMatrix, a: struct.AttackerSet, iterations: int
) -> typing.Dict[int, float]:
    """How much each target's float estimate amplifies relative errors.

    For target v this is ||K||_2 times the norm of row v of the
    pseudo-inverse of K, so estimates carry errors of about machine
    precision times the figure.  Unidentifiable targets map to inf."""
    w = _partitioned(w, a)
    exact = w.exact is not None
    identifiable = identifiable_targets(
        build_knowledge_matrix_dgd(w, a, iterations, exact=exact),
        "exact" if exact else "float",
    )
    k = build_knowledge_matrix_dgd(w, a, iterations)
    matrix = np.asarray(k.matrix, dtype=float)
    if len(identifiable) == matrix.shape[1]:
        r = scipy.linalg.qr(matrix, mode="economic")[1]
        inverse = scipy.linalg.solve_triangular(r, np.eye(r.shape[0]))
    else:
        inverse = scipy.linalg.pinv(matrix)
    amplification = scipy.linalg.norm(matrix, 2) * np.linalg.norm(
        inverse, axis=1
    )
    return {
        v: float(amplification[i]) if v in identifiable else np.inf
        for i, v in enumerate(k.columns)
    }
