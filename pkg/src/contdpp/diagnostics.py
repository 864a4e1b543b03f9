"""Chain mixing diagnostics and the coverage-rate metric.

average_movement and ess_alpha quantify how quickly a k-DPP Gibbs chain
moves; coverage_rate measures how well a candidate point set covers a
reference set within a Euclidean epsilon-neighborhood.
"""

from __future__ import annotations

import csv

import numpy as np
from scipy.spatial.distance import cdist

from .errors import ConfigError, NumericError
from .numerics import RngStream


def _chain_array(chain):
    arr = np.asarray(chain, dtype=float)
    if arr.ndim == 2:  # (T, k) scalar coordinates
        arr = arr[:, :, None]
    if arr.ndim != 3:
        raise ConfigError("chain must have shape (T, k) or (T, k, d)")
    return arr


def average_movement(chain, match_sorted=False):
    """Mean squared per-point displacement between consecutive cycles.

    m = (1/(T-1)) (1/k) sum_t sum_i ||x_i^{t+1} - x_i^t||^2.  Points are
    matched by slot index; ``match_sorted`` instead matches by sort order
    per cycle (d = 1 only), the convention for i.i.d. baselines without
    persistent point identities.
    """
    arr = _chain_array(chain)
    n_cycles, k, d = arr.shape
    if n_cycles < 2:
        raise ConfigError("need at least two cycles")
    if match_sorted:
        if d != 1:
            raise ConfigError("sort-order matching is defined for d = 1 only")
        arr = np.sort(arr, axis=1)
    moves = np.sum((arr[1:] - arr[:-1]) ** 2, axis=2)
    return float(moves.sum() / ((n_cycles - 1) * k))


def _mean_autocorrelations(arr, max_lag):
    """Lag-s autocorrelations averaged over points (biased 1/T estimator)."""
    n_cycles, k, d = arr.shape
    series = arr.reshape(n_cycles, k * d)
    centered = series - series.mean(axis=0)
    var = np.mean(centered**2, axis=0)
    if np.all(var == 0):
        raise NumericError("zero-variance chain; autocorrelation undefined")
    keep = var > 0
    centered = centered[:, keep]
    var = var[keep]
    rho = np.empty(max_lag + 1)
    rho[0] = 1.0
    for s in range(1, max_lag + 1):
        cov = np.sum(centered[s:] * centered[:-s], axis=0) / n_cycles
        rho[s] = np.mean(cov / var)
    return rho


def ess_alpha(chain, truncation="displayed"):
    """Effective-sample-size factor alpha = 1 / (1 + 2 sum_s rho_s).

    ``truncation`` selects where the autocorrelation sum stops:
    "displayed" uses delta = the smallest positive integer with
    rho_{2 delta} + rho_{2 delta + 1} > 0 and sums s = 1 .. 2 delta + 1;
    "geyer" uses the conventional initial-positive-sequence rule, summing
    while consecutive even/odd pairs stay positive.
    """
    arr = _chain_array(chain)
    n_cycles = arr.shape[0]
    if n_cycles < 10:
        raise ConfigError("need at least 10 cycles")
    max_lag = n_cycles - 2
    rho = _mean_autocorrelations(arr, max_lag)
    if truncation == "displayed":
        delta = None
        for cand in range(1, (max_lag - 1) // 2 + 1):
            if rho[2 * cand] + rho[2 * cand + 1] > 0:
                delta = cand
                break
        upper = 2 * delta + 1 if delta is not None else 1
        total = rho[1 : upper + 1].sum()
    elif truncation == "geyer":
        total = rho[1]
        for start in range(2, max_lag, 2):
            pair = rho[start] + rho[start + 1]
            if pair <= 0:
                break
            total += pair
    else:
        raise ConfigError(f"unknown truncation {truncation!r}")
    alpha = 1.0 / (1.0 + 2.0 * total)
    return float(np.clip(alpha, np.finfo(float).tiny, 1.0))


def coverage_rate(reference, candidates, eps):
    """Fraction of reference points with a candidate within distance eps."""
    reference = np.atleast_2d(np.asarray(reference, dtype=float))
    candidates = np.atleast_2d(np.asarray(candidates, dtype=float))
    if len(reference) == 0 or len(candidates) == 0:
        raise ConfigError("reference and candidate sets must be nonempty")
    if reference.shape[1] != candidates.shape[1]:
        raise ConfigError("dimension mismatch")
    if eps <= 0:
        raise ConfigError("eps must be positive")
    nearest = cdist(reference, candidates).min(axis=1)
    return float(np.mean(nearest <= eps))


def coverage_curve(reference, candidates, epsilons):
    return np.array([coverage_rate(reference, candidates, e) for e in epsilons])


def coverage_experiment(reference, dpp_sample, rng: RngStream, epsilons=None):
    """Coverage curves of a DPP sample vs. a variance-matched i.i.d. sample.

    The baseline draws the same number of points from a Gaussian with the
    DPP sample's empirical mean and covariance (diagonally loaded when
    singular).  Returns (epsilons, dpp curve, iid curve).
    """
    reference = np.atleast_2d(np.asarray(reference, dtype=float))
    dpp_sample = np.atleast_2d(np.asarray(dpp_sample, dtype=float))
    if len(dpp_sample) == 0:
        raise ConfigError("dpp sample is empty")
    mean = dpp_sample.mean(axis=0)
    cov = np.cov(dpp_sample.T, bias=False)
    cov = np.atleast_2d(cov) + 1e-8 * np.eye(dpp_sample.shape[1])
    iid = np.atleast_2d(rng.multivariate_normal(mean, cov, size=len(dpp_sample)))
    if epsilons is None:
        span = cdist(reference, np.vstack([dpp_sample, iid])).min(axis=1).max()
        epsilons = np.linspace(span / 50.0, 1.5 * span, 50)
    epsilons = np.asarray(epsilons, dtype=float)
    return (
        epsilons,
        coverage_curve(reference, dpp_sample, epsilons),
        coverage_curve(reference, iid, epsilons),
    )


def coverage_epsilon(reference, candidates, level):
    """Exact smallest eps with coverage_rate(reference, candidates, eps) >= level.

    This is the level-quantile of the nearest-candidate distances: sorting
    those distances, the ceil(level * N)-th smallest is the first eps at
    which the required fraction of reference points is covered.
    """
    reference = np.atleast_2d(np.asarray(reference, dtype=float))
    candidates = np.atleast_2d(np.asarray(candidates, dtype=float))
    if len(reference) == 0 or len(candidates) == 0:
        raise ConfigError("reference and candidate sets must be nonempty")
    if not 0.0 < level <= 1.0:
        raise ConfigError("level must be in (0, 1]")
    nearest = np.sort(cdist(reference, candidates).min(axis=1))
    idx = int(np.ceil(level * len(nearest))) - 1
    return float(nearest[idx])


def eps_to_coverage(epsilons, curve, level):
    """Smallest epsilon on the grid reaching the requested coverage level."""
    reached = np.nonzero(np.asarray(curve) >= level)[0]
    if len(reached) == 0:
        return float("inf")
    return float(np.asarray(epsilons)[reached[0]])


def write_coverage_csv(path, epsilons, curve_dpp, curve_iid):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["epsilon", "coverage_dpp", "coverage_iid"])
        for eps, a, b in zip(epsilons, curve_dpp, curve_iid):
            writer.writerow([repr(float(eps)), repr(float(a)), repr(float(b))])
