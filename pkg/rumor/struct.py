# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""Type definitions, generally of the struct-like variety."""
import collections
import typing

import numpy as np

# Undirected graph over nodes 0..n-1 with edges as sorted (u, v) pairs, u < v.
# Labels map dense ids back to names (Florentine) or file ids (edge lists).
Graph = collections.namedtuple(
    "Graph", ("n", "edges", "labels", "positions"), defaults=(None, None)
)

# Four blocks of a gossip matrix after attacker-first relabeling.
Blocks = collections.namedtuple("Blocks", ("aa", "at", "ta", "tt"))

# Dense mixing weights plus, when the scheme allows, the exact rationals.
# Partitioning fills order (attackers first), blocks, and exact_blocks.
GossipMatrix = collections.namedtuple(
    "GossipMatrix",
    ("weights", "exact", "scheme", "order", "blocks", "exact_blocks"),
    defaults=(None, None, None, None),
)

AttackerSet = collections.namedtuple(
    "AttackerSet", ("attackers", "neighbors", "targets")
)

GossipTrace = collections.namedtuple("GossipTrace", ("theta",))

# Gradients are the eta-scaled quantity g = -eta * grad so constants for the
# synthetic model are given in that same scaled form.
ModelSpec = collections.namedtuple(
    "ModelSpec",
    ("variant", "classes", "inputs", "labels", "constants"),
    defaults=(None, None, None, None),
)

DgdConfig = collections.namedtuple(
    "DgdConfig",
    ("eta", "iterations", "theta0", "model", "noise_sigma", "seed", "exact"),
    defaults=(0.0, None, False),
)

DgdTrace = collections.namedtuple(
    "DgdTrace", ("theta", "half_steps", "gradients")
)

# Kind is "own" (an attacker's private input) or "received".
# Iteration t is relative to the start of the attack window.
RowIndex = collections.namedtuple("RowIndex", ("kind", "t", "node"))

Observation = collections.namedtuple(
    "Observation",
    ("values", "rows", "attacker_half_steps", "start"),
    defaults=(None, 0),
)

KnowledgeMatrix = collections.namedtuple(
    "KnowledgeMatrix", ("matrix", "rows", "columns")
)

RrefDecomposition = collections.namedtuple(
    "RrefDecomposition",
    (
        "reduced",
        "transform",
        "pivots",
        "rank",
        "tolerance",
        "exact",
        "columns",
    ),
)

# Growing basis of a row space.  Exact rows are primitive integer vectors,
# fully reduced, with one pivot column each; float rows are orthonormal.
RowSpace = collections.namedtuple("RowSpace", ("rows", "pivots", "exact"))

Relation = collections.namedtuple("Relation", ("coefficients", "value"))

ReconstructionReport = collections.namedtuple(
    "ReconstructionReport",
    ("reconstructible", "values", "relations", "leaked", "errors"),
)

# Per-horizon history holds the reconstructible set after each iteration.
# Saturation is the horizon from which the row space of K stops growing,
# or None when it was still growing at the audited horizon.
Audit = collections.namedtuple(
    "Audit",
    ("reconstructible", "ranks", "history", "leaked", "saturation"),
    defaults=(None,),
)

CovarianceMatrix = collections.namedtuple(
    "CovarianceMatrix", ("matrix", "sigma")
)

GradientEstimate = collections.namedtuple(
    "GradientEstimate",
    ("nodes", "values", "method", "covariance", "identifiable"),
)

ReconstructedDatum = collections.namedtuple(
    "ReconstructedDatum", ("input", "label", "confidence")
)

CentralityProfile = collections.namedtuple(
    "CentralityProfile", ("degree", "eigenvector", "betweenness", "partial")
)

Correlation = collections.namedtuple(
    "Correlation", ("coefficient", "degenerate")
)

# Per-graph coefficients summarized over the non-degenerate graphs.
Aggregate = collections.namedtuple("Aggregate", ("mean", "std", "count"))

# Model variants are named dispatch tables over (spec, theta, eta, sigma, rng)
# producing one eta-scaled gradient row per node.
Model = collections.namedtuple("Model", ("name", "gradients", "parameters"))

ResultRecord = collections.namedtuple(
    "ResultRecord",
    (
        "experiment",
        "config_hash",
        "seed",
        "columns",
        "rows",
        "elapsed",
        "graph",
        "coloring",
    ),
    defaults=(0.0, None, None),
)


def brief(o: typing.Any, *, omitted: typing.Set[str] = {"exact"}) -> str:
    """A __str__(...) variant suppressing empty fields within namedtuples.

    Arrays are summarized by their shape rather than printed in full."""
    if isinstance(o, np.ndarray):
        return "array{}".format(o.shape)
    fields = getattr(o, "_fields", None)
    if fields is None:
        return str(o)

    keyvalues = []
    for field, value in zip(fields, o):
        if field in omitted or value is None:
            continue
        if not isinstance(value, np.ndarray) and not value:
            continue
        keyvalues.append("{}={}".format(field, brief(value)))
    return "({})".format(", ".join(keyvalues))
