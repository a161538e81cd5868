# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""Testing of gradient inversion and image quality scores."""
import math

import numpy as np
import pytest

import rumor.error
import rumor.inversion
import rumor.models
import rumor.struct


@pytest.fixture(name="rng")
def _rng():
    return np.random.default_rng(42)


def test_roundtrip(rng):
    for _ in range(50):
        classes = int(rng.integers(2, 11))
        x = rng.random(16)
        label = int(rng.integers(classes))
        theta = rng.normal(scale=0.1, size=classes * 17)
        g = rumor.models.logistic_gradient(theta, (x, label), eta=1e-3)
        datum = rumor.inversion.invert_logistic_gradient(g, classes)
        assert np.allclose(x, datum.input, rtol=1e-9, atol=1e-12)
        assert label == datum.label
        assert datum.confidence > 0


def test_scale_invariance(rng):
    x, theta = rng.random(4), np.zeros(3 * 5)
    small = rumor.models.logistic_gradient(theta, (x, 1), eta=1e-5)
    large = rumor.models.logistic_gradient(theta, (x, 1), eta=1.0)
    a = rumor.inversion.invert_logistic_gradient(small, 3)
    b = rumor.inversion.invert_logistic_gradient(large, 3)
    assert np.allclose(a.input, b.input)
    assert a.label == b.label


def test_uninformative():
    with pytest.raises(rumor.error.RumorError, match="uninformative"):
        rumor.inversion.invert_logistic_gradient(np.zeros(10), 2)
    g = np.ones(10)
    g[3] = np.nan
    with pytest.raises(rumor.error.RumorError, match="uninformative"):
        rumor.inversion.invert_logistic_gradient(g, 2)
    with pytest.raises(rumor.error.RumorError):
        rumor.inversion.invert_logistic_gradient(np.ones(7), 2)


def test_reconstruct_inputs(rng):
    x = rng.random(3)
    g = rumor.models.logistic_gradient(np.zeros(8), (x, 0), eta=0.1)
    estimate = rumor.struct.GradientEstimate(
        nodes=(2, 5),
        values=np.vstack((g, np.full(8, np.nan))),
        method="ols",
        covariance=None,
        identifiable=frozenset({2}),
    )
    result = rumor.inversion.reconstruct_inputs(estimate, 2)
    assert np.allclose(x, result[2].input)
    assert result[5] is None


def test_psnr():
    a = np.zeros(100)
    b = np.full(100, 0.1)
    assert 20.0 == pytest.approx(rumor.inversion.psnr(a, b))
    assert math.inf == rumor.inversion.psnr(b, b)
    assert 100.0 == rumor.inversion.clipped(math.inf)
    assert 20.0 == rumor.inversion.clipped(20.0)
    with pytest.raises(rumor.error.RumorError):
        rumor.inversion.psnr(a, b[:5])


def test_relative_square_distance():
    b = np.array([3.0, 4.0])
    assert 0.0 == rumor.inversion.relative_square_distance(b, b)
    assert 1.0 == rumor.inversion.relative_square_distance(np.zeros(2), b)
    assert 4.0 == rumor.inversion.relative_square_distance(-b, b)
    with pytest.raises(rumor.error.RumorError):
        rumor.inversion.relative_square_distance(b, np.zeros(2))


def test_success_rate():
    assert 0.5 == rumor.inversion.success_rate([5.0, 12.0, math.inf, 10.0])
    assert 0.0 == rumor.inversion.success_rate([])
    assert 1.0 == rumor.inversion.success_rate([math.inf])
