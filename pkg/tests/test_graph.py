# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""Testing of graphs, generators, and gossip matrices."""
from fractions import Fraction

import numpy as np
import pytest

import rumor.error
import rumor.graph


@pytest.fixture(name="florentine")
def _florentine():
    return rumor.graph.gen_florentine()


def test_new_graph_canonical():
    g = rumor.graph.new_graph(3, [(1, 0), (0, 1), (2, 2), (2, 1)])
    assert frozenset({(0, 1), (1, 2)}) == g.edges
    with pytest.raises(rumor.error.RumorError):
        rumor.graph.new_graph(2, [(0, 2)])


def test_florentine(florentine):
    assert 15 == florentine.n
    assert 20 == len(florentine.edges)
    medici = florentine.labels.index("Medici")
    degree = rumor.graph.degrees(florentine)
    assert 6 == degree[medici]
    assert degree[medici] == degree.max()
    assert rumor.graph.is_connected(florentine)


def test_line():
    g = rumor.graph.gen_line(31)
    assert 30 == len(g.edges)
    assert 30 == rumor.graph.diameter(g)
    assert frozenset({0, 2}) == rumor.graph.neighbors(g, 1)
    with pytest.raises(rumor.error.RumorError):
        rumor.graph.gen_line(1)


def test_erdos_renyi_seeded():
    a = rumor.graph.gen_erdos_renyi(30, 0.2, seed=7)
    b = rumor.graph.gen_erdos_renyi(30, 0.2, seed=7)
    assert a == b
    complete = rumor.graph.gen_erdos_renyi(6, 1.0, seed=1)
    assert 15 == len(complete.edges)


def test_erdos_renyi_connected():
    g = rumor.graph.gen_erdos_renyi(20, 0.3, seed=3, require_connected=True)
    assert rumor.graph.is_connected(g)
    with pytest.raises(rumor.error.RumorError, match="connected"):
        rumor.graph.gen_erdos_renyi(5, 0.0, 1, True, _attempts=3)
    with pytest.raises(rumor.error.RumorError):
        rumor.graph.gen_erdos_renyi(5, 1.5, 1)


def test_random_geometric():
    g = rumor.graph.gen_random_geometric(50, 0.2, seed=11)
    assert (50, 2) == g.positions.shape
    for u, v in g.edges:
        assert np.linalg.norm(g.positions[u] - g.positions[v]) <= 0.2
    with pytest.raises(rumor.error.RumorError):
        rumor.graph.gen_random_geometric(5, -0.1, seed=1)


def test_metropolis_complete():
    g = rumor.graph.gen_erdos_renyi(3, 1.0, seed=0)
    w = rumor.graph.build_gossip_matrix(g)
    assert np.allclose(np.full((3, 3), 1 / 3), w.weights)
    assert np.all(w.exact == Fraction(1, 3))


def test_metropolis_doubly_stochastic(florentine):
    w = rumor.graph.build_gossip_matrix(florentine)
    assert np.allclose(w.weights, w.weights.T)
    assert np.allclose(1.0, w.weights.sum(axis=0))
    assert np.allclose(1.0, w.weights.sum(axis=1))
    assert all(sum(row) == 1 for row in w.exact)
    assert np.allclose(w.exact.astype(float), w.weights, rtol=0, atol=1e-15)
    # Support matches the graph exactly
    assert florentine.edges == rumor.graph.support(w).edges


def test_max_degree():
    g = rumor.graph.gen_line(4)
    w = rumor.graph.build_gossip_matrix(g, scheme="max-degree")
    assert Fraction(1, 3) == w.exact[0, 1]
    assert Fraction(2, 3) == w.exact[0, 0]
    assert Fraction(1, 3) == w.exact[1, 1]
    with pytest.raises(rumor.error.RumorError):
        rumor.graph.build_gossip_matrix(g, scheme="uniform")


def test_attacker_set():
    g = rumor.graph.gen_line(5)
    a = rumor.graph.attacker_set(g, [2])
    assert (2,) == a.attackers
    assert (1, 3) == a.neighbors
    assert (0, 1, 3, 4) == a.targets
    both = rumor.graph.attacker_set(g, [1, 2])
    assert (0, 3) == both.neighbors
    with pytest.raises(rumor.error.RumorError):
        rumor.graph.attacker_set(g, [5])
    with pytest.raises(rumor.error.RumorError):
        rumor.graph.attacker_set(g, [1, 1])


def test_partition_reassemble(florentine):
    w = rumor.graph.build_gossip_matrix(florentine)
    a = rumor.graph.attacker_set(florentine, [4, 1])
    p = rumor.graph.partition_blocks(w, a)
    assert (4, 1) == p.order[:2]
    assert (2, 2) == p.blocks.aa.shape
    assert (13, 13) == p.blocks.tt.shape
    assert w.weights[4, 1] == p.blocks.aa[0, 1]
    assert p.exact_blocks.ta[0, 0] == w.exact[a.targets[0], 4]
    assert np.array_equal(w.weights, rumor.graph.reassemble(p))


def test_edge_list_roundtrip(tmp_path):
    path = tmp_path / "social.edges"
    path.write_text("# a comment\n10 20\n20 30  # trailing\n\n30 10\n")
    g = rumor.graph.load_edge_list(str(path))
    assert 3 == g.n
    assert ("10", "20", "30") == g.labels
    assert frozenset({(0, 1), (1, 2), (0, 2)}) == g.edges

    again = tmp_path / "again.edges"
    rumor.graph.save_edge_list(g, str(again))
    assert g == rumor.graph.load_edge_list(str(again))


def test_edge_list_malformed(tmp_path):
    path = tmp_path / "bad.edges"
    path.write_text("1 2\n3 four\n")
    with pytest.raises(rumor.error.RumorError, match=":2:"):
        rumor.graph.load_edge_list(str(path))
    path.write_text("1 2 3\n")
    with pytest.raises(rumor.error.RumorError, match=":1:"):
        rumor.graph.load_edge_list(str(path))
    path.write_text("# nothing\n")
    with pytest.raises(rumor.error.RumorError):
        rumor.graph.load_edge_list(str(path))


def test_to_dot(florentine):
    dot = rumor.graph.to_dot(florentine, {1: "red"})
    assert dot.startswith("graph G {")
    assert dot.rstrip().endswith("}")
    assert 20 == dot.count(" -- ")
    assert 'label="Medici", fillcolor="red"' in dot
