# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""Graphs, their generators, and the gossip matrices defined upon them."""
import logging
import random
import typing
from fractions import Fraction

import networkx as nx
import numpy as np

from . import error
from . import struct

logger = logging.getLogger(__name__)

# Marriage ties between Florentine families (the 15-node variant).
FLORENTINE_FAMILIES = (
    ("Acciaiuoli", "Medici"),
    ("Castellani", "Peruzzi"),
    ("Castellani", "Strozzi"),
    ("Castellani", "Barbadori"),
    ("Medici", "Barbadori"),
    ("Medici", "Ridolfi"),
    ("Medici", "Tornabuoni"),
    ("Medici", "Albizzi"),
    ("Medici", "Salviati"),
    ("Salviati", "Pazzi"),
    ("Peruzzi", "Strozzi"),
    ("Peruzzi", "Bischeri"),
    ("Strozzi", "Ridolfi"),
    ("Strozzi", "Bischeri"),
    ("Ridolfi", "Tornabuoni"),
    ("Tornabuoni", "Guadagni"),
    ("Albizzi", "Ginori"),
    ("Albizzi", "Guadagni"),
    ("Bischeri", "Guadagni"),
    ("Guadagni", "Lamberteschi"),
)

SCHEMES = ("metropolis", "max-degree")


def new_graph(
    n: int,
    edges: typing.Iterable[typing.Tuple[int, int]],
    labels: typing.Optional[typing.Sequence[str]] = None,
    positions: typing.Optional[np.ndarray] = None,
) -> struct.Graph:
    """Establish a graph, canonicalizing edges and dropping self-loops."""
    assert n >= 0, "Node count must be non-negative"
    canonical = set()
    for u, v in edges:
        u, v = int(u), int(v)
        if not (0 <= u < n and 0 <= v < n):
            raise error.RumorError(
                "Edge ({}, {}) outside nodes 0..{}".format(u, v, n - 1)
            )
        if u != v:
            canonical.add((min(u, v), max(u, v)))
    return struct.Graph(
        n=n,
        edges=frozenset(canonical),
        labels=None if labels is None else tuple(labels),
        positions=positions,
    )


def to_networkx(g: struct.Graph) -> nx.Graph:
    """Convert into a networkx.Graph over nodes 0..n-1."""
    result = nx.Graph()
    result.add_nodes_from(range(g.n))
    result.add_edges_from(sorted(g.edges))
    return result


def from_networkx(
    h: nx.Graph, labels: typing.Optional[typing.Sequence[str]] = None
) -> struct.Graph:
    """Convert from a networkx.Graph whose nodes are 0..n-1."""
    return new_graph(h.number_of_nodes(), h.edges(), labels=labels)


def neighbors(g: struct.Graph, node: int) -> typing.FrozenSet[int]:
    """Nodes adjacent to node."""
    return frozenset(v for e in g.edges if node in e for v in e if v != node)


def degrees(g: struct.Graph) -> np.ndarray:
    """Per-node degree as an integer vector."""
    result = np.zeros(g.n, dtype=int)
    for u, v in g.edges:
        result[u] += 1
        result[v] += 1
    return result


def adjacency(g: struct.Graph) -> np.ndarray:
    """Dense, symmetric 0/1 adjacency matrix."""
    result = np.zeros((g.n, g.n))
    for u, v in g.edges:
        result[u, v] = result[v, u] = 1.0
    return result


def is_connected(g: struct.Graph) -> bool:
    """Is every node reachable from every other?"""
    return g.n > 0 and nx.is_connected(to_networkx(g))


def diameter(g: struct.Graph) -> int:
    """Diameter, taken over the largest component when disconnected."""
    h = to_networkx(g)
    if g.n == 0:
        return 0
    if not nx.is_connected(h):
        h = h.subgraph(max(nx.connected_components(h), key=len))
    return nx.diameter(h)


def gen_erdos_renyi(
    n: int,
    p: float,
    seed: int,
    require_connected: bool = False,
    *,
    _attempts: int = 1000
) -> struct.Graph:
    """Draw each unordered pair independently with probability p.

    When connectivity is required, redraw up to _attempts times."""
    if n < 1:
        raise error.RumorError(
            "At least one node required (got {})".format(n)
        )
    if not 0.0 <= p <= 1.0:
        raise error.RumorError("Edge probability {} not in [0, 1]".format(p))
    randomness = random.Random(seed)
    for attempt in range(_attempts):
        g = from_networkx(nx.gnp_random_graph(n, p, seed=randomness))
        if not require_connected or is_connected(g):
            logger.debug(
                "gen_erdos_renyi: n={} p={} after {} draw(s)".format(
                    n, p, attempt + 1
                )
            )
            return g
    raise error.RumorError(
        "could not draw connected graph (n={}, p={}) in {} attempts".format(
            n, p, _attempts
        )
    )


def gen_line(n: int) -> struct.Graph:
    """Path graph with edges {i, i+1}."""
    if n < 2:
        raise error.RumorError("Line graphs need 2 or more nodes")
    return new_graph(n, ((i, i + 1) for i in range(n - 1)))


def gen_random_geometric(n: int, radius: float, seed: int) -> struct.Graph:
    """Uniform points in the unit square joined when within radius.

    Node positions are retained so distances may be re-derived."""
    if radius < 0:
        raise error.RumorError(
            "Radius {} must be non-negative".format(radius)
        )
    h = nx.random_geometric_graph(n, radius, seed=random.Random(seed))
    positions = np.array([h.nodes[v]["pos"] for v in range(n)]).reshape(n, 2)
    g = from_networkx(h)
    return g._replace(positions=positions)


def gen_florentine() -> struct.Graph:
    """Florentine families marriage graph with family names as labels."""
    names = []
    for pair in FLORENTINE_FAMILIES:
        for name in pair:
            if name not in names:
                names.append(name)
    index = {name: i for i, name in enumerate(names)}
    return new_graph(
        len(names),
        ((index[u], index[v]) for u, v in FLORENTINE_FAMILIES),
        labels=names,
    )


def load_edge_list(path: str) -> struct.Graph:
    """Load whitespace-separated integer pairs, one edge per line.

    Text after '#' is ignored.  Arbitrary ids become 0..n-1 in increasing
    order and the original ids are retained as labels."""
    pairs = []
    with open(path) as stream:
        for lineno, line in enumerate(stream, start=1):
            tokens = line.split("#", 1)[0].split()
            if not tokens:
                continue
            try:
                if len(tokens) != 2:
                    raise ValueError("expected 2 fields")
                pairs.append((int(tokens[0]), int(tokens[1])))
            except ValueError as cause:
                raise error.RumorError(
                    "{}:{}: malformed edge {!r} ({})".format(
                        path, lineno, line.rstrip(), cause
                    )
                ) from cause
    if not pairs:
        raise error.RumorError("{}: no edges found".format(path))

    ids = sorted({i for pair in pairs for i in pair})
    dense = {original: i for i, original in enumerate(ids)}
    logger.info(
        "load_edge_list: {} nodes, {} lines from {}".format(
            len(ids), len(pairs), path
        )
    )
    return new_graph(
        len(ids),
        ((dense[u], dense[v]) for u, v in pairs),
        labels=[str(i) for i in ids],
    )


def save_edge_list(g: struct.Graph, path: str) -> None:
    """Write edges using labels when they are integers, else dense ids."""
    names = _labels(g)
    with open(path, "w") as stream:
        stream.write("# {} nodes, {} edges\n".format(g.n, len(g.edges)))
        for u, v in sorted(g.edges):
            stream.write("{} {}\n".format(names[u], names[v]))


def _labels(g: struct.Graph) -> typing.Sequence[str]:
    if g.labels is not None and all(x.lstrip("-").isdigit() for x in g.labels):
        return g.labels
    return [str(i) for i in range(g.n)]


def to_dot(
    g: struct.Graph,
    colors: typing.Optional[typing.Mapping[int, str]] = None,
    *,
    name: str = "G"
) -> str:
    """Render as an undirected DOT graph, optionally filling node colors."""
    lines = ["graph {} {{".format(name)]
    lines.append("  node [style=filled, fillcolor=white];")
    for v in range(g.n):
        attributes = []
        if g.labels is not None:
            attributes.append('label="{}"'.format(g.labels[v]))
        if colors and v in colors:
            attributes.append('fillcolor="{}"'.format(colors[v]))
        suffix = " [{}]".format(", ".join(attributes)) if attributes else ""
        lines.append("  {}{};".format(v, suffix))
    for u, v in sorted(g.edges):
        lines.append("  {} -- {};".format(u, v))
    lines.append("}")
    return "\n".join(lines) + "\n"


def build_gossip_matrix(
    g: struct.Graph, scheme: str = "metropolis"
) -> struct.GossipMatrix:
    """Symmetric, doubly stochastic mixing weights supported on g.

    Metropolis-Hastings puts 1/(1 + max(deg u, deg v)) on every edge while
    max-degree puts 1/(d_max + 1).  Diagonals absorb the remainder.  Both
    schemes are rational so the exact matrix is built alongside."""
    if scheme not in SCHEMES:
        raise error.RumorError(
            "Unknown scheme {!r}; choose from {}".format(scheme, SCHEMES)
        )
    degree = degrees(g)
    d_max = int(degree.max()) if g.n else 0
    exact = np.full((g.n, g.n), Fraction(0), dtype=object)
    for u, v in g.edges:
        if scheme == "metropolis":
            weight = Fraction(1, 1 + int(max(degree[u], degree[v])))
        else:
            weight = Fraction(1, 1 + d_max)
        exact[u, v] = exact[v, u] = weight
    for u in range(g.n):
        exact[u, u] = 1 - sum(exact[u])

    weights = exact.astype(float)
    np.fill_diagonal(weights, 0.0)
    np.fill_diagonal(weights, 1.0 - weights.sum(axis=1))
    return struct.GossipMatrix(weights=weights, exact=exact, scheme=scheme)


def support(w: struct.GossipMatrix) -> struct.Graph:
    """Graph whose edges are the off-diagonal nonzeros of w."""
    n = w.weights.shape[0]
    rows, cols = np.nonzero(w.weights)
    return new_graph(n, ((u, v) for u, v in zip(rows, cols) if u < v))


def attacker_set(
    g: typing.Union[struct.Graph, struct.GossipMatrix],
    attackers: typing.Iterable[int],
) -> struct.AttackerSet:
    """Attackers in the given order plus their neighbors N(A) and targets."""
    if isinstance(g, struct.GossipMatrix):
        g = support(g)
    attackers = tuple(int(a) for a in attackers)
    if len(set(attackers)) != len(attackers):
        raise error.RumorError("Repeated attacker in {}".format(attackers))
    for a in attackers:
        if not 0 <= a < g.n:
            raise error.RumorError(
                "Attacker {} outside nodes 0..{}".format(a, g.n - 1)
            )
    members = set(attackers)
    adjacent = set()
    for u, v in g.edges:
        if u in members:
            adjacent.add(v)
        if v in members:
            adjacent.add(u)
    return struct.AttackerSet(
        attackers=attackers,
        neighbors=tuple(sorted(adjacent - members)),
        targets=tuple(v for v in range(g.n) if v not in members),
    )


def partition_blocks(
    w: struct.GossipMatrix, a: struct.AttackerSet
) -> struct.GossipMatrix:
    """Relabel attackers first then split W into (AA, AT, TA, TT) blocks.

    The permutation is kept in order so reports use the original ids."""
    n = w.weights.shape[0]
    for v in a.attackers:
        if not 0 <= v < n:
            raise error.RumorError(
                "Attacker {} outside nodes 0..{}".format(v, n - 1)
            )
    order = tuple(a.attackers) + tuple(a.targets)
    assert len(order) == n, "Attackers and targets must cover all nodes"
    k = len(a.attackers)

    def split(matrix):
        permuted = matrix[np.ix_(order, order)]
        return struct.Blocks(
            aa=permuted[:k, :k],
            at=permuted[:k, k:],
            ta=permuted[k:, :k],
            tt=permuted[k:, k:],
        )

    return w._replace(
        order=order,
        blocks=split(w.weights),
        exact_blocks=None if w.exact is None else split(w.exact),
    )


def reassemble(w: struct.GossipMatrix) -> np.ndarray:
    """Undo partition_blocks(...), recovering W in the original labeling."""
    if w.blocks is None:
        raise error.RumorError("Gossip matrix has not been partitioned")
    b = w.blocks
    permuted = np.block([[b.aa, b.at], [b.ta, b.tt]])
    inverse = np.argsort(w.order)
    return permuted[np.ix_(inverse, inverse)]


def mixing(w: struct.GossipMatrix, exact: bool = False) -> np.ndarray:
    """Weights as floats or, when exact, as the underlying rationals."""
    if not exact:
        return w.weights
    if w.exact is None:
        raise error.RumorError("Gossip matrix carries no exact weights")
    return w.exact
