# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""Testing of private data generation and loading."""
import numpy as np
import pytest

import rumor.dataset
import rumor.error


def test_smooth_images():
    images = rumor.dataset.smooth_images(5, 8, seed=3)
    assert (5, 64) == images.shape
    assert np.allclose(0.0, images.min(axis=1))
    assert np.allclose(1.0, images.max(axis=1))
    again = rumor.dataset.smooth_images(5, 8, seed=3)
    assert np.array_equal(images, again)
    with pytest.raises(rumor.error.RumorError):
        rumor.dataset.smooth_images(2, 0, seed=3)


def test_smoothing_correlates_neighbors():
    images = rumor.dataset.smooth_images(50, 16, seed=1, smoothing=2.0)
    grid = images.reshape(50, 16, 16)
    left, right = grid[:, :, :-1].ravel(), grid[:, :, 1:].ravel()
    assert np.corrcoef(left, right)[0, 1] > 0.8


def test_synthetic_dataset():
    inputs, labels = rumor.dataset.synthetic_dataset(30, 4, 3, seed=11)
    assert (30, 16) == inputs.shape
    assert 30 == len(labels)
    assert set(labels) <= {0, 1, 2}
    assert all(isinstance(y, int) for y in labels)
    assert labels == rumor.dataset.synthetic_dataset(30, 4, 3, seed=11)[1]


def test_load_vectors(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("# label, features\n1,0.5,0.25\n\n0,1,2\n")
    inputs, labels = rumor.dataset.load_vectors(str(path))
    assert (1, 0) == labels
    assert np.array_equal([[0.5, 0.25], [1.0, 2.0]], inputs)


def test_load_vectors_malformed(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("1,0.5,0.25\n0,x,2\n")
    with pytest.raises(rumor.error.RumorError, match=":2:"):
        rumor.dataset.load_vectors(str(path))
    path.write_text("1,0.5,0.25\n0,1\n")
    with pytest.raises(rumor.error.RumorError, match=":2:"):
        rumor.dataset.load_vectors(str(path))
    path.write_text("# empty\n")
    with pytest.raises(rumor.error.RumorError):
        rumor.dataset.load_vectors(str(path))
