"""Gibbs sampler for continuous k-DPPs via Schur-complement conditionals.

One Gibbs step resamples a single point x_k given the other k-1 points
from the density

    p(x | rest) proportional to L(x, x) - sum_{ij} M_ij L(x_i, x) L(x_j, x),

with M the inverse kernel matrix of the rest.  For Gaussian quality and
Gaussian similarity (diagonal covariances), and for uniform quality on a
box, the conditional is a signed Gaussian mixture with closed-form CDF.
"""

from __future__ import annotations

import csv
import json
import multiprocessing
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError
from .gaussians import GaussianTermSet
from .kernels import KernelSpec, kernel_matrix
from .numerics import RngStream

_JITTER = 1e-10
# Residual threshold for the inverse check; |L L^-1 - I| grows like
# machine epsilon times the condition number, so 1e-4 flags conditioning
# around 1e12.
_RESID_LIMIT = 1e-4


def _diag_params(kernel: KernelSpec):
    """Per-axis (a, delta, sigma) for the closed-form conditional.

    q^2(x) = prod exp{-(x_l - a_l)^2 / delta_l^2} (delta inf for uniform
    quality) and k(x, y) = prod exp{-(x_l - y_l)^2 / (2 sigma_l^2)}.
    """
    d = kernel.dim
    sim = kernel.similarity
    if sim.kind != "gaussian":
        raise ConfigError("closed-form Gibbs conditionals need a gaussian similarity")
    if sim.cov.ndim != 1:
        if not np.allclose(sim.cov, np.diag(np.diagonal(sim.cov))):
            raise ConfigError("closed-form Gibbs conditionals need a diagonal similarity covariance")
        sigma = np.sqrt(np.diagonal(sim.cov))
    else:
        sigma = np.sqrt(sim.cov)
    quality = kernel.quality
    if quality.kind == "uniform":
        return np.zeros(d), np.full(d, np.inf), sigma
    cov = quality.cov
    if cov.ndim != 1:
        if not np.allclose(cov, np.diag(np.diagonal(cov))):
            raise ConfigError("closed-form Gibbs conditionals need a diagonal quality covariance")
        cov = np.diagonal(cov)
    return quality.center, np.sqrt(cov), sigma


def _checked_inv(l_rest):
    """Symmetrized inverse with a residual check, jittered when
    conditioning is bad.

    The input is symmetric, so the exact inverse is too; symmetrizing
    keeps the signed pair coefficients downstream exactly symmetric,
    which their cancellation structure relies on.
    """
    try:
        m = np.linalg.inv(l_rest)
        resid = np.abs(l_rest @ m - np.eye(len(l_rest))).max()
    except np.linalg.LinAlgError:
        resid = np.inf
    if not np.isfinite(resid) or resid > _RESID_LIMIT:
        m = np.linalg.inv(l_rest + _JITTER * np.eye(len(l_rest)))
    return 0.5 * (m + m.T)


def inverse_rest(kernel: KernelSpec, others):
    """Inverse of the kernel matrix on the conditioning points, jittered
    when the conditioning is around 1e12 or worse."""
    return _checked_inv(kernel_matrix(kernel, others))


def conditional_terms(kernel: KernelSpec, others, m_inv=None):
    """Signed Gaussian mixture of the Schur full conditional."""
    others = np.atleast_2d(np.asarray(others, dtype=float))
    n, d = others.shape
    a, delta, sigma = _diag_params(kernel)
    lo = kernel.lo
    hi = kernel.hi
    qo = np.atleast_1d(kernel.quality(others))
    if n == 0:
        return GaussianTermSet(
            coef=np.ones(1), mean=a[None, :], scale=delta[None, :], lo=lo, hi=hi
        )
    if m_inv is None:
        m_inv = inverse_rest(kernel, others)
    mbar = 0.5 * (others[:, None, :] + others[None, :, :])  # (n, n, d)
    gap2 = (others[:, None, :] - others[None, :, :]) ** 2
    log_cross = -np.sum(gap2 / (4.0 * sigma**2), axis=-1)
    if np.all(np.isinf(delta)):
        mean = mbar
        scale = np.broadcast_to(sigma, (n, n, d)).copy()
        log_const = np.zeros((n, n))
    else:
        prec = 1.0 / delta**2 + 1.0 / sigma**2
        mean = (a / delta**2 + mbar / sigma**2) / prec
        scale = np.broadcast_to(1.0 / np.sqrt(prec), (n, n, d)).copy()
        log_const = -np.sum(
            a**2 / delta**2 + mbar**2 / sigma**2 - mean**2 * prec, axis=-1
        )
    pair_coef = -(m_inv * qo[:, None] * qo[None, :]) * np.exp(log_cross + log_const)
    coef = np.concatenate([[1.0], pair_coef.ravel()])
    means = np.vstack([a[None, :], mean.reshape(n * n, d)])
    scales = np.vstack([delta[None, :], scale.reshape(n * n, d)])
    return GaussianTermSet(coef=coef, mean=means, scale=scales, lo=lo, hi=hi)


@dataclass
class GibbsKdppState:
    """Current point set of a k-DPP Gibbs chain."""

    kernel: KernelSpec
    points: np.ndarray  # (k, d)
    sweep: int = 0

    @property
    def k(self):
        return len(self.points)


def full_conditional_cdf(state: GibbsKdppState, index, axis, prefix, t,
                         normalized=True):
    """Closed-form CDF of p(x_index | rest) along one axis."""
    others = np.delete(state.points, index, axis=0)
    terms = conditional_terms(state.kernel, others)
    return terms.cdf_given(axis, prefix, t, normalized=normalized)


def _pair_stats(p1, p2, a, delta, sig2, uniform_q):
    """Pair means and exp(log_cross + log_const) factors, broadcast."""
    mbar = 0.5 * (p1 + p2)
    gap2 = (p1 - p2) ** 2
    log_cross = -np.sum(gap2 / (4.0 * sig2), axis=-1)
    if uniform_q:
        return mbar, np.exp(log_cross)
    prec = 1.0 / delta**2 + 1.0 / sig2
    mean = (a / delta**2 + mbar / sig2) / prec
    log_const = -np.sum(
        a**2 / delta**2 + mbar**2 / sig2 - mean**2 * prec, axis=-1
    )
    return mean, np.exp(log_cross + log_const)


# Scan bookkeeping reused across sweeps: for each left-out index, the
# selection of the remaining points, their (row, col) grid into the full
# kernel matrix and the flat upper-triangle pair positions.  Depends only
# on the point count.
_SCAN_CACHE = {}


def _scan_plan(k):
    if k not in _SCAN_CACHE:
        n = k - 1
        iu0, iu1 = np.triu_indices(n)
        pair_mult = np.where(iu0 == iu1, -1.0, -2.0)
        plan = []
        idx_all = np.arange(k)
        for index in range(k):
            sel = idx_all[idx_all != index]
            grid = np.ix_(sel, sel)
            rows = sel[iu0] * k + sel[iu1]
            plan.append((grid, rows))
        _SCAN_CACHE[k] = (iu0, iu1, pair_mult, plan)
    return _SCAN_CACHE[k]


def gibbs_sweep(state: GibbsKdppState, rng: RngStream):
    """One systematic-scan cycle: resample each point given the others.

    Matches ``conditional_terms`` draw for draw but keeps the pairwise
    means, cross factors and kernel rows cached across the scan, updating
    only the row and column of the point just moved.  The (i, j) and
    (j, i) pair terms are identical, so only the upper triangle is
    materialized, with off-diagonal coefficients doubled.
    """
    points = state.points.copy()
    kernel = state.kernel
    k = len(points)
    if k == 1:
        terms = conditional_terms(kernel, points[:0])
        points[0] = terms.sample(rng)
        return replace(state, points=points, sweep=state.sweep + 1)
    a, delta, sigma = _diag_params(kernel)
    sig2 = sigma**2
    uniform_q = bool(np.all(np.isinf(delta)))
    n = k - 1
    d = kernel.dim
    iu0, iu1, pair_mult, plan = _scan_plan(k)
    n_pairs = len(iu0)
    pair_scale = sigma if uniform_q else 1.0 / np.sqrt(1.0 / delta**2 + 1.0 / sig2)
    scales = np.vstack([delta[None, :], np.broadcast_to(pair_scale, (n_pairs, d))])
    mean_full, cross_full = _pair_stats(
        points[:, None, :], points[None, :, :], a, delta, sig2, uniform_q
    )
    mean_flat = mean_full.reshape(k * k, d)
    cross_flat = cross_full.reshape(k * k)
    l_full = kernel_matrix(kernel, points)
    qo_full = np.atleast_1d(np.asarray(kernel.quality(points), dtype=float))
    terms = GaussianTermSet(coef=np.ones(1 + n_pairs),
                            mean=np.tile(a, (1 + n_pairs, 1)),
                            scale=scales, lo=kernel.lo, hi=kernel.hi)
    for index in range(k):
        grid, rows = plan[index]
        m_inv = _checked_inv(l_full[grid])
        coef = m_inv[iu0, iu1] * pair_mult * cross_flat[rows]
        if not uniform_q:
            qo = qo_full[grid[0][:, 0]]
            coef = coef * (qo[iu0] * qo[iu1])
        terms.coef[0] = 1.0
        terms.coef[1:] = coef
        terms.mean[1:] = mean_flat[rows]
        terms._full_cache.clear()
        terms._lo_cache.clear()
        x = terms.sample(rng)
        points[index] = x
        row_mean, row_cross = _pair_stats(x, points, a, delta, sig2, uniform_q)
        mean_full[index] = row_mean
        mean_full[:, index] = row_mean
        cross_full[index] = row_cross
        cross_full[:, index] = row_cross
        qo_full[index] = kernel.quality(x)
        l_row = qo_full[index] * qo_full * np.exp(
            -np.sum((points - x) ** 2 / (2.0 * sig2), axis=-1)
        )
        l_full[index] = l_row
        l_full[:, index] = l_row
    return replace(state, points=points, sweep=state.sweep + 1)


def initial_points(kernel: KernelSpec, k, rng: RngStream):
    """k i.i.d. draws from the density proportional to q^2."""
    d = kernel.dim
    if kernel.quality.kind == "uniform":
        lo, hi = kernel.box
        return np.atleast_2d(rng.uniform(lo, hi, size=(k, d)))
    center, cov = kernel.quality.center, kernel.quality.cov
    half = cov / 2.0 if cov.ndim == 1 else 0.5 * cov
    if kernel.box is None:
        return np.atleast_2d(rng.multivariate_normal(center, half, size=k))
    lo, hi = kernel.box
    out = np.empty((0, d))
    for _ in range(1000):
        draw = np.atleast_2d(rng.multivariate_normal(center, half, size=k))
        keep = np.all((draw >= lo) & (draw <= hi), axis=1)
        out = np.vstack([out, draw[keep]])
        if len(out) >= k:
            return out[:k]
    raise ConfigError("box captures too little quality mass for initialization")


def run_gibbs_kdpp(kernel: KernelSpec, k, n_cycles, burn_in, thin, rng: RngStream):
    """Chain of point sets after burn-in and thinning; (T, k, d) array.

    The scan order is fixed, so slot i of consecutive states tracks the
    trajectory of one point (needed by the movement diagnostic).
    """
    if k < 1 or n_cycles < 0 or burn_in < 0 or thin < 1:
        raise ConfigError("k >= 1, n_cycles/burn_in >= 0 and thin >= 1 required")
    state = GibbsKdppState(kernel=kernel, points=initial_points(kernel, k, rng))
    kept = []
    for cycle in range(1, n_cycles + 1):
        state = gibbs_sweep(state, rng)
        if cycle > burn_in and (cycle - burn_in) % thin == 0:
            kept.append(state.points.copy())
    d = kernel.dim
    return np.array(kept).reshape(len(kept), k, d)


def _chain_worker(args):
    kernel, k, n_cycles, burn_in, thin, seed, stream_id = args
    return run_gibbs_kdpp(kernel, k, n_cycles, burn_in, thin,
                          RngStream(seed, stream_id))


def run_chains(kernel, k, n_chains, n_cycles, burn_in, thin, seed, processes=1):
    """Independent chains on split RNG streams, optionally in parallel."""
    jobs = [
        (kernel, k, n_cycles, burn_in, thin, seed, chain)
        for chain in range(n_chains)
    ]
    if processes <= 1:
        return [_chain_worker(job) for job in jobs]
    with multiprocessing.Pool(processes) as pool:
        return pool.map(_chain_worker, jobs)


def write_chain(path, chain, dim, sidecar=None):
    """CSV with columns (cycle, point_index, x1..xd) plus a JSON sidecar."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["cycle", "point_index"] + [f"x{l + 1}" for l in range(dim)])
        for cycle, points in enumerate(chain):
            for idx, point in enumerate(np.atleast_2d(points)):
                writer.writerow([cycle, idx] + [repr(float(c)) for c in point])
    if sidecar is not None:
        with open(str(path) + ".json", "w") as fh:
            json.dump(sidecar, fh, indent=2)
            fh.write("\n")
