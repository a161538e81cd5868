# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""Centralities, rank correlations, and attacker-target relationships
measured against how much of a graph leaks."""
import collections
import logging
import math
import typing

import networkx as nx
import numpy as np
import scipy.linalg
import scipy.stats

from . import averaging
from . import error
from . import graph
from . import struct

logger = logging.getLogger(__name__)

MEASURES = ("degree", "eigenvector", "betweenness")
RELATIONSHIPS = ("shortest-path", "communicability")
POLICIES = ("fixed", "ego")
COMMUNICABILITY_CAP = 2000


def _vector(scores: typing.Mapping[int, float], n: int) -> np.ndarray:
    return np.array([scores.get(v, 0.0) for v in range(n)], dtype=float)


def centralities(g: struct.Graph) -> struct.CentralityProfile:
    """Degree, eigenvector, and betweenness centrality for every node.

    Eigenvector centrality of a disconnected graph is computed on the
    largest component, zero elsewhere, and flagged as partial."""
    h = graph.to_networkx(g)
    partial = False
    component = h
    if g.n and not nx.is_connected(h):
        partial = True
        component = h.subgraph(max(nx.connected_components(h), key=len))
        logger.warning(
            "centralities: disconnected graph so eigenvector centrality "
            "covers only {} of {} nodes".format(
                component.number_of_nodes(), g.n
            )
        )
    eigenvector = nx.eigenvector_centrality(
        component, max_iter=10000, tol=1e-10
    )
    betweenness = nx.betweenness_centrality(h, normalized=True)
    return struct.CentralityProfile(
        degree=_vector(nx.degree_centrality(h), g.n),
        eigenvector=_vector(eigenvector, g.n),
        betweenness=_vector(betweenness, g.n),
        partial=partial,
    )


def _correlation(method, xs, ys, minimum):
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise error.RumorError(
            "Scores of shapes {} and {} differ".format(xs.shape, ys.shape)
        )
    if len(xs) < minimum:
        raise error.RumorError(
            "Need {} or more scores, not {}".format(minimum, len(xs))
        )
    if np.ptp(xs) == 0 or np.ptp(ys) == 0:
        logger.warning("correlation: constant scores are degenerate")
        return struct.Correlation(coefficient=math.nan, degenerate=True)
    coefficient = float(method(xs, ys)[0])
    return struct.Correlation(coefficient=coefficient, degenerate=False)


def spearman(xs: typing.Sequence[float], ys: typing.Sequence[float]):
    """Spearman rank correlation using mid-ranks for ties."""
    return _correlation(scipy.stats.spearmanr, xs, ys, minimum=3)


def kendall(xs: typing.Sequence[float], ys: typing.Sequence[float]):
    """Kendall tau-b."""
    return _correlation(scipy.stats.kendalltau, xs, ys, minimum=2)


def shortest_path_lengths(g: struct.Graph, source: int) -> np.ndarray:
    """Hop counts from source by BFS with infinity when unreachable."""
    lengths = nx.single_source_shortest_path_length(
        graph.to_networkx(g), source
    )
    return np.array(
        [lengths.get(v, math.inf) for v in range(g.n)], dtype=float
    )


def communicability(
    g: struct.Graph, cap: int = COMMUNICABILITY_CAP
) -> np.ndarray:
    """exp(A) for adjacency A."""
    if g.n > cap:
        raise error.RumorError(
            "Communicability is dense; {} nodes exceed {}".format(g.n, cap)
        )
    return scipy.linalg.expm(graph.adjacency(g))


def _horizon(g, iterations):
    return g.n if iterations is None else iterations


def correlate_centrality_vs_leakage(
    graphs: typing.Iterable[struct.Graph],
    iterations: typing.Optional[int] = None,
    *,
    policy: str = "fixed",
    mode: str = "float"
) -> typing.Dict[str, struct.Correlation]:
    """Spearman of each attacker centrality against the fraction leaked.

    The fixed policy always attacks from node 0 and the ego policy lets
    every node attack in turn.  The horizon defaults to n per graph."""
    if policy not in POLICIES:
        raise error.RumorError(
            "Unknown policy {!r}; choose from {}".format(policy, POLICIES)
        )
    scores = collections.defaultdict(list)
    fractions = []
    for g in graphs:
        w = graph.build_gossip_matrix(g)
        profile = centralities(g)
        attackers = [0] if policy == "fixed" else range(g.n)
        for attacker in attackers:
            audit = averaging.audit_static(
                w,
                graph.attacker_set(g, [attacker]),
                _horizon(g, iterations),
                mode,
                history=False,
            )
            fractions.append(len(audit.reconstructible) / g.n)
            for measure in MEASURES:
                scores[measure].append(getattr(profile, measure)[attacker])
    logger.info(
        "correlate_centrality_vs_leakage: {} samples".format(len(fractions))
    )
    return {
        measure: spearman(scores[measure], fractions) for measure in MEASURES
    }


def _aggregate(coefficients):
    values = [c.coefficient for c in coefficients if not c.degenerate]
    if not values:
        return struct.Aggregate(mean=math.nan, std=math.nan, count=0)
    return struct.Aggregate(
        mean=float(np.mean(values)),
        std=float(np.std(values)),
        count=len(values),
    )


def correlate_relationship_vs_leakage(
    graphs: typing.Iterable[struct.Graph],
    iterations: typing.Optional[int] = None,
    *,
    attacker: int = 0,
    mode: str = "float"
) -> typing.Dict[str, struct.Aggregate]:
    """Kendall of attacker-target relationships against leakage.

    Per graph, each target contributes its shortest-path distance and its
    communicability with the attacker against a 0/1 reconstructed
    indicator.  Coefficients are averaged over non-degenerate graphs."""
    per_graph = collections.defaultdict(list)
    for g in graphs:
        a = graph.attacker_set(g, [attacker])
        audit = averaging.audit_static(
            graph.build_gossip_matrix(g),
            a,
            _horizon(g, iterations),
            mode,
            history=False,
        )
        indicator = [float(v in audit.reconstructible) for v in a.targets]
        distances = shortest_path_lengths(g, attacker)[list(a.targets)]
        reachable = np.isfinite(distances)
        if np.count_nonzero(reachable) >= 2:
            per_graph["shortest-path"].append(
                kendall(
                    distances[reachable], np.asarray(indicator)[reachable]
                )
            )
        relation = communicability(g)[attacker, list(a.targets)]
        if len(a.targets) >= 2:
            per_graph["communicability"].append(kendall(relation, indicator))
    return {
        measure: _aggregate(per_graph[measure]) for measure in RELATIONSHIPS
    }
