"""Bundled synthetic data generators for the evaluation harness.

Everything the CLI experiments need can be generated here so that no
external datasets are required: two-component 1-d mixtures with poor or
good separation, and a 10-d set with a dominant mode plus a rare mode
for the coverage benchmark.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .numerics import RngStream


def two_gaussian_mixture(n, separation, rng: RngStream, weight=0.5, scale=1.0):
    """n draws from weight * N(-separation/2, scale^2) + (1 - weight) * N(+...).

    Returns (values, labels) with labels 0/1 for the left/right component.
    """
    if n < 1:
        raise ConfigError("n must be >= 1")
    labels = (np.atleast_1d(rng.uniform(size=n)) > weight).astype(int)
    centers = np.where(labels == 0, -0.5 * separation, 0.5 * separation)
    values = centers + scale * np.atleast_1d(rng.normal(size=n))
    return values, labels


def poor_sep(n, rng: RngStream):
    """Two heavily overlapping unit-variance components, centers one sigma apart."""
    return two_gaussian_mixture(n, separation=1.0, rng=rng)


def well_sep(n, rng: RngStream):
    """Two well-separated components, centers six sigmas apart."""
    return two_gaussian_mixture(n, separation=6.0, rng=rng)


def rare_mode(n, rng: RngStream, d=10, rare_fraction=0.02, offset=6.0):
    """Dominant standard-normal mode plus a small displaced rare mode in R^d.

    Returns (points, labels) with label 1 marking the rare mode; at least
    one rare point is always included so coverage of the rare mode is a
    meaningful target.
    """
    if n < 2:
        raise ConfigError("n must be >= 2")
    labels = (np.atleast_1d(rng.uniform(size=n)) < rare_fraction).astype(int)
    if labels.sum() == 0:
        labels[0] = 1
    points = np.atleast_2d(rng.normal(size=(n, d)))
    shift = np.zeros(d)
    shift[0] = offset
    points = points * np.where(labels[:, None] == 1, 0.5, 1.0)
    points = points + labels[:, None] * shift
    return points, labels


def make_synthetic(name, n, rng: RngStream):
    if name == "poor-sep":
        return poor_sep(n, rng)
    if name == "well-sep":
        return well_sep(n, rng)
    if name == "rare-mode":
        return rare_mode(n, rng)
    raise ConfigError(f"unknown synthetic dataset {name!r}")
