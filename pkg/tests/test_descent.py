# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""Testing of the gradient reconstruction attack on D-GD."""
from fractions import Fraction

import numpy as np
import pytest
import scipy.linalg

import rumor.descent
import rumor.error
import rumor.graph
import rumor.models
import rumor.protocol
import rumor.struct


@pytest.fixture(name="er")
def _er():
    g = rumor.graph.gen_erdos_renyi(20, 0.3, seed=2, require_connected=True)
    return g, rumor.graph.build_gossip_matrix(g)


@pytest.fixture(name="rng")
def _rng():
    return np.random.default_rng(99)


def _run(w, constants, iterations, **kwargs):
    cfg = rumor.struct.DgdConfig(
        eta=1.0,
        iterations=iterations,
        theta0=np.zeros(np.shape(constants)[1]),
        model=rumor.models.synthetic_model(constants),
        **kwargs
    )
    return rumor.protocol.run_dgd(w, cfg)


def _knowledge(matrix):
    matrix = np.asarray(matrix, dtype=float)
    return rumor.struct.KnowledgeMatrix(
        matrix=matrix, rows=None, columns=tuple(range(matrix.shape[1]))
    )


def test_knowledge_rows():
    g = rumor.graph.gen_line(5)
    w = rumor.graph.build_gossip_matrix(g)
    a = rumor.graph.attacker_set(g, [0])
    k = rumor.descent.build_knowledge_matrix_dgd(w, a, 3)
    assert (1, 2, 3, 4) == k.columns
    assert (3, 4) == k.matrix.shape
    assert np.array_equal([1.0, 0.0, 0.0, 0.0], k.matrix[0])
    tt = rumor.graph.partition_blocks(w, a).blocks.tt
    assert np.allclose((np.eye(4) + tt)[0], k.matrix[1])
    assert np.allclose((np.eye(4) + tt + tt @ tt)[0], k.matrix[2])
    exact = rumor.descent.build_knowledge_matrix_dgd(w, a, 3, exact=True)
    assert Fraction(4, 3) == exact.matrix[1, 0]
    with pytest.raises(rumor.error.RumorError):
        rumor.descent.build_knowledge_matrix_dgd(w, a, 0)


def test_removal_leaves_linear_system(er, rng):
    g, w = er
    constants = rng.normal(size=(20, 2))
    trace = _run(w, constants, 8)
    a = rumor.graph.attacker_set(g, [0, 7])
    observed = rumor.protocol.observe(trace, a, iterations=5)
    y_hat = rumor.descent.remove_attacker_contributions(
        observed, w, a, np.zeros(2)
    )
    k = rumor.descent.build_knowledge_matrix_dgd(w, a, 5)
    truth = constants[list(a.targets)]
    assert np.abs(k.matrix @ truth - y_hat.values).max() <= 1e-10


def test_removal_from_later_window(er, rng):
    g, w = er
    constants = rng.normal(size=(20, 3))
    trace = _run(w, constants, 10)
    a = rumor.graph.attacker_set(g, [4])
    observed = rumor.protocol.observe(trace, a, start=3, iterations=4)
    # With the true target parameters at the window start nothing remains
    # beyond the gradients themselves
    y_hat = rumor.descent.remove_attacker_contributions(
        observed, w, a, trace.theta[3][list(a.targets)]
    )
    k = rumor.descent.build_knowledge_matrix_dgd(w, a, 4)
    truth = constants[list(a.targets)]
    assert np.abs(k.matrix @ truth - y_hat.values).max() <= 1e-10


def test_removal_rejects(er):
    g, w = er
    a = rumor.graph.attacker_set(g, [0])
    averaging = rumor.protocol.run_gossip_averaging(w, np.zeros(20), 3)
    observed = rumor.protocol.observe(averaging, a)
    with pytest.raises(rumor.error.RumorError, match="half-steps"):
        rumor.descent.remove_attacker_contributions(
            observed, w, a, np.zeros(1)
        )
    trace = _run(w, np.zeros((20, 2)), 3)
    observed = rumor.protocol.observe(trace, a)
    with pytest.raises(rumor.error.RumorError):
        rumor.descent.remove_attacker_contributions(
            observed, w, a, np.zeros((3, 2))
        )


def test_covariance_small_cases(er):
    g, w = er
    a = rumor.graph.attacker_set(g, [0])
    width = len(a.neighbors)
    single = rumor.descent.build_covariance(w, a, 1, 0.5)
    assert np.allclose(0.25 * np.eye(width), single.matrix)
    silent = rumor.descent.build_covariance(w, a, 4, 0.0)
    assert not np.any(silent.matrix)
    with pytest.raises(rumor.error.RumorError):
        rumor.descent.build_covariance(w, a, 4, -1.0)


def test_covariance_positive_semidefinite(er):
    g, w = er
    a = rumor.graph.attacker_set(g, [2, 3])
    cov = rumor.descent.build_covariance(w, a, 6, 1.0).matrix
    assert np.array_equal(cov, cov.T)
    assert np.linalg.eigvalsh(cov).min() >= -1e-10


def test_covariance_monte_carlo():
    # Independent model coordinates act as independent noise draws
    g = rumor.graph.gen_line(5)
    w = rumor.graph.build_gossip_matrix(g)
    a = rumor.graph.attacker_set(g, [0])
    draws = 50000
    trace = _run(w, np.zeros((5, draws)), 4, noise_sigma=1.0, seed=3)
    observed = rumor.protocol.observe(trace, a, iterations=4)
    y_hat = rumor.descent.remove_attacker_contributions(
        observed, w, a, np.zeros(draws)
    )
    empirical = y_hat.values @ y_hat.values.T / draws
    expected = rumor.descent.build_covariance(w, a, 4, 1.0).matrix
    assert np.abs(empirical - expected).max() <= 0.1
    # Gaussian sample covariances have variance (s_ii s_jj + s_ij^2) / N
    variances = np.outer(np.diag(expected), np.diag(expected))
    se = np.sqrt((variances + expected ** 2) / draws)
    assert np.all(np.abs(empirical - expected) <= 5 * se)


def test_ols_matches_pseudoinverse(rng):
    k = rng.normal(size=(20, 5))
    y = rng.normal(size=(20, 2))
    estimate = rumor.descent.ols_solve(_knowledge(k), y)
    assert "ols" == estimate.method
    assert frozenset(range(5)) == estimate.identifiable
    assert np.allclose(np.linalg.pinv(k) @ y, estimate.values)


def test_ols_unidentifiable():
    k = np.array([[1.0, 1.0, 0.0], [2.0, 2.0, 0.0], [0.0, 0.0, 1.0]])
    y = k @ np.array([1.0, 2.0, 3.0])
    estimate = rumor.descent.ols_solve(_knowledge(k), y)
    assert frozenset({2}) == estimate.identifiable
    assert np.all(np.isnan(estimate.values[:2]))
    assert estimate.values[2, 0] == pytest.approx(3.0)


def test_gls_isotropic_equals_ols(rng):
    k = _knowledge(rng.normal(size=(12, 4)))
    y = rng.normal(size=(12, 1))
    cov = rumor.struct.CovarianceMatrix(matrix=2.0 * np.eye(12), sigma=1.0)
    gls = rumor.descent.gls_solve(k, y, cov)
    ols = rumor.descent.ols_solve(k, y)
    assert "gls" == gls.method
    assert np.allclose(ols.values, gls.values)


def test_gls_weighted(rng):
    k = rng.normal(size=(10, 3))
    y = rng.normal(size=(10, 2))
    variances = rng.uniform(0.1, 4.0, size=10)
    cov = rumor.struct.CovarianceMatrix(matrix=np.diag(variances), sigma=1.0)
    estimate = rumor.descent.gls_solve(_knowledge(k), y, cov)
    precision = k.T @ np.diag(1 / variances) @ k
    expected = np.linalg.solve(precision, k.T @ (y / variances[:, None]))
    assert np.allclose(expected, estimate.values)
    assert np.allclose(np.linalg.inv(precision), estimate.covariance)


def test_gls_degenerate_covariance(rng):
    k = _knowledge(rng.normal(size=(6, 2)))
    y = rng.normal(size=6)
    zero = rumor.struct.CovarianceMatrix(matrix=np.zeros((6, 6)), sigma=0.0)
    assert "ols" == rumor.descent.gls_solve(k, y, zero).method
    wrong = rumor.struct.CovarianceMatrix(matrix=np.eye(5), sigma=1.0)
    with pytest.raises(rumor.error.RumorError):
        rumor.descent.gls_solve(k, y, wrong)


def test_pipeline_noise_free(er, rng):
    g, w = er
    constants = rng.normal(size=(20, 3))
    trace = _run(w, constants, 30)
    a = rumor.graph.attacker_set(g, [0])
    estimate = rumor.descent.attack_dgd_pipeline(trace, w, a, start=0)
    assert a.targets == estimate.nodes
    assert set(a.neighbors) <= estimate.identifiable
    for i, v in enumerate(estimate.nodes):
        if v in estimate.identifiable:
            assert np.allclose(constants[v], estimate.values[i], atol=1e-6)


def test_pipeline_line():
    g = rumor.graph.gen_line(11)
    w = rumor.graph.build_gossip_matrix(g)
    constants = np.linspace(-1.0, 1.0, 22).reshape(11, 2)
    trace = _run(w, constants, 12)
    a = rumor.graph.attacker_set(g, [0])
    estimate = rumor.descent.attack_dgd_pipeline(
        trace, w, a, start=0, iterations=12
    )
    assert frozenset(range(1, 11)) == estimate.identifiable
    for i, v in enumerate(estimate.nodes[:4]):
        assert np.allclose(constants[v], estimate.values[i], atol=1e-6)


def test_pipeline_exact():
    g = rumor.graph.gen_line(5)
    w = rumor.graph.build_gossip_matrix(g)
    constants = np.array(
        [[Fraction(k, 7)] for k in range(5)], dtype=object
    )
    cfg = rumor.struct.DgdConfig(
        eta=1.0,
        iterations=4,
        theta0=np.zeros(1),
        model=rumor.models.synthetic_model(constants),
        exact=True,
    )
    trace = rumor.protocol.run_dgd(w, cfg)
    a = rumor.graph.attacker_set(g, [0])
    estimate = rumor.descent.attack_dgd_pipeline(
        trace, w, a, start=0, iterations=4, exact=True
    )
    assert "exact" == estimate.method
    assert frozenset({1, 2, 3, 4}) == estimate.identifiable
    for i, v in enumerate(estimate.nodes):
        assert constants[v, 0] == estimate.values[i, 0]


def test_pipeline_rejects(er):
    g, w = er
    trace = _run(w, np.ones((20, 1)), 6)
    a = rumor.graph.attacker_set(g, [0])
    with pytest.raises(rumor.error.RumorError, match="sigma"):
        rumor.descent.attack_dgd_pipeline(trace, w, a, start=0, method="gls")
    with pytest.raises(rumor.error.RumorError):
        rumor.descent.attack_dgd_pipeline(trace, w, a, start=0, method="map")
    # Gradients never vanish so the trace never converges
    with pytest.raises(rumor.error.RumorError, match="no recorded"):
        rumor.descent.attack_dgd_pipeline(trace, w, a)


def test_cholesky_factor():
    matrix = np.array([[4.0, 2.0], [2.0, 3.0]])
    factor = rumor.descent.cholesky_factor(matrix)
    assert np.array_equal(scipy.linalg.cholesky(matrix, lower=True), factor)
    # Factorizable yet far too ill-conditioned to whiten with
    nearly = np.diag([1.0, 1e-14])
    factor = rumor.descent.cholesky_factor(nearly)
    jitter = rumor.descent.JITTER * np.trace(nearly) / 2
    assert factor[1, 1] == pytest.approx(np.sqrt(1e-14 + jitter))
    assert np.allclose(nearly + jitter * np.eye(2), factor @ factor.T)
    with pytest.raises(rumor.error.RumorError):
        rumor.descent.cholesky_factor(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_gls_unbiased_monte_carlo():
    # Every column repeats one of 20 coordinates with fresh noise
    g = rumor.graph.gen_erdos_renyi(10, 0.4, seed=1, require_connected=True)
    w = rumor.graph.build_gossip_matrix(g)
    a = rumor.graph.attacker_set(g, [0, 1])
    trials, width, sigma = 200, 20, 0.1
    truth = np.random.default_rng(8).normal(size=(10, width))
    trace = _run(
        w, np.tile(truth, (1, trials)), 6, noise_sigma=sigma, seed=12
    )
    estimate = rumor.descent.attack_dgd_pipeline(
        trace, w, a, start=0, iterations=6, method="gls", sigma=sigma
    )
    rows = [i for i, v in enumerate(a.targets) if v in estimate.identifiable]
    assert rows
    values = estimate.values[rows].reshape(len(rows), trials, width)
    expected = truth[[a.targets[i] for i in rows]]
    predicted = np.diag(estimate.covariance)[rows][:, np.newaxis]
    se = np.sqrt(predicted / trials)
    within = np.abs(values.mean(axis=1) - expected) <= 3 * se
    assert within.mean() >= 0.95
    ratio = values.var(axis=1, ddof=1) / predicted
    assert 0.5 <= ratio.min() and ratio.max() <= 2.0


def test_pipeline_long_line():
    g = rumor.graph.gen_line(31)
    w = rumor.graph.build_gossip_matrix(g)
    a = rumor.graph.attacker_set(g, [0])
    constants = np.random.default_rng(31).normal(size=(31, 2))
    trace = _run(w, constants, 33)
    estimate = rumor.descent.attack_dgd_pipeline(
        trace, w, a, start=0, iterations=33
    )
    assert frozenset(range(1, 31)) == estimate.identifiable
    # Node v sits at distance v from the attacker
    errors = {
        v: np.linalg.norm(estimate.values[i] - constants[v])
        / np.linalg.norm(constants[v])
        for i, v in enumerate(estimate.nodes)
    }
    assert max(errors[v] for v in range(1, 21)) <= 1e-3
    assert errors[25] > errors[10]
    amplification = rumor.descent.sensitivity(w, a, 33)
    assert amplification[1] < amplification[10] < amplification[20]
    assert amplification[20] < amplification[25]


def test_pipeline_long_line_exact():
    g = rumor.graph.gen_line(31)
    w = rumor.graph.build_gossip_matrix(g)
    constants = np.array(
        [[Fraction(v % 7 - 3, 5)] for v in range(31)], dtype=object
    )
    cfg = rumor.struct.DgdConfig(
        eta=1.0,
        iterations=33,
        theta0=np.zeros(1),
        model=rumor.models.synthetic_model(constants),
        exact=True,
    )
    trace = rumor.protocol.run_dgd(w, cfg)
    a = rumor.graph.attacker_set(g, [0])
    estimate = rumor.descent.attack_dgd_pipeline(
        trace, w, a, start=0, iterations=33, exact=True
    )
    assert frozenset(range(1, 31)) == estimate.identifiable
    for i, v in enumerate(estimate.nodes):
        assert constants[v, 0] == estimate.values[i, 0]


def test_sensitivity_unidentifiable():
    star = rumor.graph.new_graph(4, ((0, 1), (0, 2), (0, 3)))
    w = rumor.graph.build_gossip_matrix(star)
    a = rumor.graph.attacker_set(star, [1])
    amplification = rumor.descent.sensitivity(w, a, 4)
    assert np.isfinite(amplification[0])
    assert np.isinf(amplification[2]) and np.isinf(amplification[3])


def test_identifiable_modes_agree(er):
    g, w = er
    a = rumor.graph.attacker_set(g, [3])
    exact = rumor.descent.build_knowledge_matrix_dgd(w, a, 5, exact=True)
    floating = rumor.descent.build_knowledge_matrix_dgd(w, a, 5)
    identifiable = rumor.descent.identifiable_targets(exact, "exact")
    assert set(a.neighbors) <= identifiable
    assert rumor.descent.identifiable_targets(floating) == identifiable
