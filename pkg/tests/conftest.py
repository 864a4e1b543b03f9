"""Shared fixtures and helpers for the test suite."""

import numpy as np
import pytest

from contdpp.kernels import KernelSpec, QualitySpec, SimilaritySpec
from contdpp.numerics import RngStream


@pytest.fixture
def rng():
    return RngStream(12345)


def gaussian_kernel(d=1, rho2=1.0, sigma2=0.5, center=None, box=None):
    """Isotropic gaussian/gaussian kernel, the workhorse configuration."""
    center = np.zeros(d) if center is None else np.asarray(center, dtype=float)
    return KernelSpec(
        quality=QualitySpec(kind="gaussian", center=center, cov=np.full(d, rho2)),
        similarity=SimilaritySpec(cov=np.full(d, sigma2)),
        dim=d,
        box=box,
    )


def random_gaussian_kernel(rng, d, boxed=False):
    """Random anisotropic diagonal gaussian/gaussian kernel."""
    center = rng.normal(size=d) * 0.5
    rho2 = np.exp(rng.normal(size=d) * 0.4)
    sigma2 = np.exp(rng.normal(size=d) * 0.4)
    box = None
    if boxed:
        lo = center - 2.0 - rng.uniform(size=d)
        hi = center + 2.0 + rng.uniform(size=d)
        box = (lo, hi)
    return KernelSpec(
        quality=QualitySpec(kind="gaussian", center=center, cov=rho2),
        similarity=SimilaritySpec(cov=sigma2),
        dim=d,
        box=box,
    )
