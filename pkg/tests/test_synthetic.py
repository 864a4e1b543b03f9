"""Bundled synthetic datasets."""

import numpy as np
import pytest

from contdpp.errors import ConfigError
from contdpp.numerics import RngStream
from contdpp.synthetic import (
    make_synthetic,
    poor_sep,
    rare_mode,
    two_gaussian_mixture,
    well_sep,
)


class TestTwoGaussianMixture:
    def test_component_statistics(self):
        values, labels = two_gaussian_mixture(20000, 8.0, RngStream(1))
        assert set(np.unique(labels)) == {0, 1}
        assert np.mean(labels) == pytest.approx(0.5, abs=0.02)
        left, right = values[labels == 0], values[labels == 1]
        assert left.mean() == pytest.approx(-4.0, abs=0.05)
        assert right.mean() == pytest.approx(4.0, abs=0.05)
        assert left.std() == pytest.approx(1.0, rel=0.05)

    def test_weight_and_scale(self):
        values, labels = two_gaussian_mixture(
            20000, 4.0, RngStream(2), weight=0.8, scale=0.5
        )
        assert np.mean(labels == 0) == pytest.approx(0.8, abs=0.02)
        assert values[labels == 1].std() == pytest.approx(0.5, rel=0.05)

    def test_determinism(self):
        a = two_gaussian_mixture(50, 1.0, RngStream(3))
        b = two_gaussian_mixture(50, 1.0, RngStream(3))
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])

    def test_validation(self):
        with pytest.raises(ConfigError):
            two_gaussian_mixture(0, 1.0, RngStream(0))


class TestNamedDatasets:
    def test_poor_sep_centers_one_sigma_apart(self):
        values, labels = poor_sep(20000, RngStream(4))
        gap = values[labels == 1].mean() - values[labels == 0].mean()
        assert gap == pytest.approx(1.0, abs=0.05)

    def test_well_sep_centers_six_sigmas_apart(self):
        values, labels = well_sep(20000, RngStream(5))
        gap = values[labels == 1].mean() - values[labels == 0].mean()
        assert gap == pytest.approx(6.0, abs=0.05)


class TestRareMode:
    def test_shapes_and_modes(self):
        points, labels = rare_mode(5000, RngStream(6))
        assert points.shape == (5000, 10)
        assert np.mean(labels) == pytest.approx(0.02, abs=0.01)
        dominant = points[labels == 0]
        rare = points[labels == 1]
        assert np.allclose(dominant.mean(axis=0), 0.0, atol=0.1)
        assert rare[:, 0].mean() == pytest.approx(6.0, abs=0.3)
        assert np.allclose(rare.mean(axis=0)[1:], 0.0, atol=0.3)
        assert rare.std(axis=0).mean() == pytest.approx(0.5, rel=0.2)

    def test_rare_mode_always_present(self):
        # even tiny draws include at least one rare point
        for seed in range(20):
            _, labels = rare_mode(5, RngStream(seed))
            assert labels.sum() >= 1

    def test_validation(self):
        with pytest.raises(ConfigError):
            rare_mode(1, RngStream(0))


class TestDispatch:
    def test_names(self):
        for name in ("poor-sep", "well-sep", "rare-mode"):
            data, labels = make_synthetic(name, 10, RngStream(7))
            assert len(data) == len(labels) == 10

    def test_unknown_name(self):
        with pytest.raises(ConfigError):
            make_synthetic("other", 10, RngStream(0))
