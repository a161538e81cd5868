# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""Reconstruction attack against gossip averaging.

Attackers know W so every message they receive is a known linear
combination of the private values.  Stacking those combinations gives
the knowledge matrix K whose RREF reveals which values leak."""
import logging
import typing

import numpy as np

from . import echelon
from . import error
from . import graph
from . import struct

logger = logging.getLogger(__name__)


def build_knowledge_matrix_avg(
    w: struct.GossipMatrix,
    a: struct.AttackerSet,
    iterations: int,
    *,
    exact: bool = False
) -> struct.KnowledgeMatrix:
    """Rows e_a for each attacker then W^t[v, :] for t < T and v in N(A).

    Powers come from repeated multiplication of the neighbor rows."""
    if iterations < 1:
        raise error.RumorError("Knowledge matrices need T >= 1")
    mixing = graph.mixing(w, exact)
    n = mixing.shape[0]
    eye = echelon.identity(n, exact)

    rows = [struct.RowIndex("own", 0, v) for v in a.attackers]
    blocks = [eye[list(a.attackers)]]
    current = eye[list(a.neighbors)]
    for t in range(iterations):
        rows.extend(struct.RowIndex("received", t, v) for v in a.neighbors)
        blocks.append(current)
        if t + 1 < iterations:
            current = current @ mixing
    matrix = np.vstack(blocks)
    logger.debug(
        "build_knowledge_matrix_avg: {} rows over {} nodes".format(
            matrix.shape[0], n
        )
    )
    return struct.KnowledgeMatrix(
        matrix=matrix, rows=tuple(rows), columns=tuple(range(n))
    )


def reconstruct_values(
    dec: struct.RrefDecomposition,
    y: typing.Union[struct.Observation, np.ndarray],
    truth: typing.Optional[np.ndarray] = None,
) -> struct.ReconstructionReport:
    """Read reconstructible values off U X = L Y.

    Rows of U that are not one-hot come back verbatim as relations."""
    values = y.values if isinstance(y, struct.Observation) else y
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, np.newaxis]
    if dec.transform is None:
        raise error.RumorError("Decomposition was computed without L")
    if values.shape[0] != dec.transform.shape[1]:
        raise error.RumorError(
            "{} observations for a {}-row knowledge matrix".format(
                values.shape[0], dec.transform.shape[1]
            )
        )
    ly = np.asarray(dec.transform @ values, dtype=float)

    reconstructible = echelon.classify_reconstructible(dec)
    recovered, relations = {}, []
    for i, column in enumerate(dec.pivots):
        node = dec.columns[column]
        if node in reconstructible:
            recovered[node] = ly[i]
        else:
            relations.append(
                struct.Relation(
                    coefficients=np.asarray(dec.reduced[i], dtype=float),
                    value=ly[i],
                )
            )

    errors = {}
    if truth is not None:
        truth = np.asarray(truth, dtype=float).reshape(len(truth), -1)
        errors = {
            v: float(np.max(np.abs(x - truth[v])))
            for v, x in recovered.items()
        }
    leaked = frozenset()
    if not dec.exact:
        leaked = echelon.numerically_leaked(dec) - reconstructible
    return struct.ReconstructionReport(
        reconstructible=reconstructible,
        values=recovered,
        relations=tuple(relations),
        leaked=leaked,
        errors=errors,
    )


def _propagator(w: struct.GossipMatrix, exact: bool) -> np.ndarray:
    if exact:
        return echelon.to_integer(graph.mixing(w, True), per_row=False)
    return w.weights


def audit_static(
    w: struct.GossipMatrix,
    a: struct.AttackerSet,
    iterations: int,
    mode: str = "float",
    *,
    history: bool = True
) -> struct.Audit:
    """Which values leak after T iterations, decided without any data.

    K_T is never stacked.  The rows received at step t + 1 add nothing
    beyond the images under W of the directions that were new at step t,
    so only those are propagated and kept in a growing row space.  Once a
    step adds nothing the space is final for every larger T, which also
    fixes the saturation horizon.  Exact mode works on integer multiples
    of W; float mode keeps orthonormal bases."""
    if iterations < 1:
        raise error.RumorError("Knowledge matrices need T >= 1")
    exact = echelon.check_mode(mode)
    n = w.weights.shape[0]
    propagator = _propagator(w, exact)
    eye = np.eye(n, dtype=int).astype(object) if exact else np.eye(n)

    received = echelon.row_space(n, exact)
    known, _ = echelon.extend_space(
        echelon.row_space(n, exact), eye[list(a.attackers)]
    )
    block = eye[list(a.neighbors)]
    ranks, sets, settled = [], [], False
    for _ in range(iterations):
        received, fresh = echelon.extend_space(received, block)
        known, _ = echelon.extend_space(known, fresh)
        ranks.append(len(known.rows))
        if history:
            sets.append(echelon.unit_members(known))
        if not len(fresh) or ranks[-1] == n:
            settled = True
            break
        block = fresh @ propagator

    reconstructible = echelon.unit_members(known)
    saturation = None
    if settled:
        saturation = 1 + ranks.index(ranks[-1])
    steps = len(ranks)
    if history:
        sets.extend([reconstructible] * (iterations - steps))
        ranks.extend([ranks[-1]] * (iterations - steps))

    leaked = frozenset()
    if not exact:
        leaked = (
            echelon.unit_members(known, echelon.LEAK_TOLERANCE)
            - reconstructible
        )
    logger.info(
        "audit_static: {} reconstruct {} of {} nodes at T={}".format(
            a.attackers, len(reconstructible), n, iterations
        )
    )
    return struct.Audit(
        reconstructible=reconstructible,
        ranks=tuple(ranks) if history else (),
        history=tuple(sets),
        leaked=leaked,
        saturation=saturation,
    )


def leakage_map(
    w: struct.GossipMatrix, iterations: int, mode: str = "float"
) -> typing.Dict[int, int]:
    """For every node, how many others it reconstructs attacking alone."""
    g = graph.support(w)
    result = {}
    for v in range(g.n):
        audit = audit_static(
            w, graph.attacker_set(g, [v]), iterations, mode, history=False
        )
        result[v] = len(audit.reconstructible - {v})
    return result
