"""Bayesian Gaussian mixtures with i.i.d. or repulsive (k-DPP) mean priors.

The generative model uses Dirichlet weights, inverse-gamma variances and
normal component means; under the repulsive prior the means follow a
K-DPP with quality q(mu) = N(mu0, 2 sigma0^2) and Gaussian similarity, so
q^2 matches the i.i.d. normal prior and the Gibbs mean update becomes a
tilted single-point DPP conditional with a closed-form CDF.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ConfigError, DomainError
from .gaussians import GaussianTermSet
from .numerics import RngStream


@dataclass(frozen=True)
class MixtureModelSpec:
    n_components: int = 6
    alpha: float = 1.0 / 3.0
    a_sigma: float = 2.0
    b_sigma: float = 1.0
    mu0: float = 0.0
    sigma0sq: float = 1.0
    prior_kind: str = "iid"
    gamma0sq: float = 1.0

    def __post_init__(self):
        if self.prior_kind not in ("iid", "dpp"):
            raise ConfigError(f"unknown prior kind {self.prior_kind!r}")
        for name in ("alpha", "a_sigma", "b_sigma", "sigma0sq", "gamma0sq"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.n_components < 1:
            raise ConfigError("n_components must be >= 1")


@dataclass
class MixtureState:
    weights: np.ndarray  # (K,)
    means: np.ndarray  # (K,)
    variances: np.ndarray  # (K,)
    labels: np.ndarray  # (N,) integer assignments
    iteration: int = 0


def _mean_quality(spec: MixtureModelSpec, mu):
    """q(mu) = N(mu0, 2 sigma0^2) density, used by the repulsive prior."""
    var = 2.0 * spec.sigma0sq
    return np.exp(-0.5 * (np.asarray(mu) - spec.mu0) ** 2 / var) / np.sqrt(
        2.0 * np.pi * var
    )


def _mean_kernel_matrix(spec: MixtureModelSpec, means):
    q = _mean_quality(spec, means)
    gap2 = (means[:, None] - means[None, :]) ** 2
    return q[:, None] * np.exp(-0.5 * gap2 / spec.gamma0sq) * q[None, :]


def dpp_mean_conditional_terms(spec: MixtureModelSpec, other_means, mu_hat, var_hat):
    """Tilted 1-DPP conditional for one mean as a signed Gaussian mixture.

    The base factor exp{-(mu - mu_hat)^2 / (2 var_hat)} collects q^2 times
    the likelihood of the assigned observations; the correction subtracts
    the Schur term over the other component means.
    """
    other_means = np.asarray(other_means, dtype=float)
    n = len(other_means)
    base_scale = np.sqrt(2.0 * var_hat)
    if n == 0:
        return GaussianTermSet(coef=np.ones(1), mean=[[mu_hat]], scale=[[base_scale]])
    l_rest = _mean_kernel_matrix(spec, other_means)
    if np.linalg.cond(l_rest) > 1e12:
        l_rest = l_rest + 1e-10 * np.eye(n)
    m_inv = np.linalg.inv(l_rest)
    q = _mean_quality(spec, other_means)
    mbar = 0.5 * (other_means[:, None] + other_means[None, :])
    gap2 = (other_means[:, None] - other_means[None, :]) ** 2
    log_cross = -gap2 / (4.0 * spec.gamma0sq)
    # combine the pair factor exp{-(mu - mbar)^2 / gamma0^2} with the base
    pair_scale2 = spec.gamma0sq  # (scale of exp{-(x-m)^2/s^2})^2
    prec = 1.0 / base_scale**2 + 1.0 / pair_scale2
    mean = (mu_hat / base_scale**2 + mbar / pair_scale2) / prec
    log_const = -(
        mu_hat**2 / base_scale**2 + mbar**2 / pair_scale2 - mean**2 * prec
    )
    coef_pairs = -(m_inv * q[:, None] * q[None, :]) * np.exp(log_cross + log_const)
    coefs = np.concatenate([[1.0], coef_pairs.ravel()])
    means = np.concatenate([[mu_hat], mean.ravel()])[:, None]
    scales = np.concatenate([[base_scale], np.full(n * n, 1.0 / np.sqrt(prec))])[:, None]
    return GaussianTermSet(coef=coefs, mean=means, scale=scales)


def _posterior_mean_params(spec, data, labels, variances, component):
    assigned = data[labels == component]
    prec = 1.0 / spec.sigma0sq + len(assigned) / variances[component]
    var_hat = 1.0 / prec
    mu_hat = var_hat * (spec.mu0 / spec.sigma0sq + assigned.sum() / variances[component])
    return mu_hat, var_hat


def gibbs_step_mog(state: MixtureState, data, spec: MixtureModelSpec,
                   rng: RngStream):
    """One full Gibbs scan over assignments, weights, variances and means."""
    data = np.asarray(data, dtype=float)
    n_comp = spec.n_components
    # assignments
    log_w = (
        np.log(state.weights)[None, :]
        - 0.5 * np.log(state.variances)[None, :]
        - 0.5 * (data[:, None] - state.means[None, :]) ** 2 / state.variances[None, :]
    )
    log_w -= log_w.max(axis=1, keepdims=True)
    probs = np.exp(log_w)
    probs /= probs.sum(axis=1, keepdims=True)
    u = np.atleast_1d(rng.uniform(size=len(data)))
    labels = (probs.cumsum(axis=1) < u[:, None]).sum(axis=1)
    labels = np.minimum(labels, n_comp - 1)
    counts = np.bincount(labels, minlength=n_comp)
    # weights
    weights = rng.dirichlet(spec.alpha + counts)
    # variances
    ssq = np.zeros(n_comp)
    for comp in range(n_comp):
        resid = data[labels == comp] - state.means[comp]
        ssq[comp] = np.sum(resid**2)
    shape = spec.a_sigma + counts / 2.0
    rate = spec.b_sigma + 0.5 * ssq
    variances = 1.0 / rng.gamma(shape, 1.0 / rate)
    # means
    means = state.means.copy()
    for comp in range(n_comp):
        mu_hat, var_hat = _posterior_mean_params(spec, data, labels, variances, comp)
        if spec.prior_kind == "iid":
            means[comp] = rng.normal(mu_hat, np.sqrt(var_hat))
        else:
            others = np.delete(means, comp)
            terms = dpp_mean_conditional_terms(spec, others, mu_hat, var_hat)
            means[comp] = terms.sample(rng)[0]
    return MixtureState(
        weights=weights, means=means, variances=variances, labels=labels,
        iteration=state.iteration + 1,
    )


def _permute_labels(state: MixtureState, rng: RngStream):
    perm = rng.permutation(len(state.weights))
    inverse = np.argsort(perm)
    return replace(
        state,
        weights=state.weights[perm],
        means=state.means[perm],
        variances=state.variances[perm],
        labels=inverse[state.labels],
    )


def initial_state(data, spec: MixtureModelSpec, rng: RngStream):
    n_comp = spec.n_components
    weights = rng.dirichlet(np.full(n_comp, spec.alpha))
    means = rng.normal(spec.mu0, np.sqrt(spec.sigma0sq), size=n_comp)
    variances = 1.0 / rng.gamma(spec.a_sigma, 1.0 / spec.b_sigma, size=n_comp)
    labels = np.atleast_1d(rng.uniform(size=len(data)) * n_comp).astype(int)
    return MixtureState(weights=weights, means=np.atleast_1d(means),
                        variances=np.atleast_1d(variances), labels=labels)


def run_mog(data, spec: MixtureModelSpec, n_iter, burn_in, thin, rng: RngStream):
    """Gibbs chain after burn-in/thinning, labels permuted each iteration."""
    data = np.asarray(data, dtype=float)
    if data.ndim != 1:
        raise ConfigError("mixture data must be one-dimensional")
    if n_iter < burn_in:
        raise ConfigError("n_iter must be >= burn_in")
    if thin < 1:
        raise ConfigError("thin must be >= 1")
    state = initial_state(data, spec, rng)
    chain = []
    for it in range(1, n_iter + 1):
        state = gibbs_step_mog(state, data, spec, rng)
        state = _permute_labels(state, rng)
        if it > burn_in and (it - burn_in) % thin == 0:
            chain.append(replace(state, labels=state.labels.copy()))
    return chain


@dataclass(frozen=True)
class MixtureMetrics:
    membership_entropy: float
    clustering_error: float | None
    heldout_loglik: float | None


def _responsibilities(state: MixtureState, data):
    log_w = (
        np.log(state.weights)[None, :]
        - 0.5 * np.log(state.variances)[None, :]
        - 0.5 * (data[:, None] - state.means[None, :]) ** 2 / state.variances[None, :]
    )
    log_w -= log_w.max(axis=1, keepdims=True)
    r = np.exp(log_w)
    r /= r.sum(axis=1, keepdims=True)
    return r


def _matched_error(labels, true_labels, n_comp):
    n_true = int(true_labels.max()) + 1
    cost = np.zeros((n_comp, max(n_true, n_comp)))
    for comp in range(n_comp):
        for t in range(n_true):
            cost[comp, t] = -np.sum((labels == comp) & (true_labels == t))
    rows, cols = linear_sum_assignment(cost)
    matched = -cost[rows, cols].sum()
    return 1.0 - matched / len(labels)


def mixture_density(state: MixtureState, points):
    points = np.asarray(points, dtype=float)
    comp = (
        state.weights[None, :]
        / np.sqrt(2.0 * np.pi * state.variances)[None, :]
        * np.exp(-0.5 * (points[:, None] - state.means[None, :]) ** 2
                 / state.variances[None, :])
    )
    return comp.sum(axis=1)


def compute_metrics(chain, data, true_labels=None, heldout=None):
    """Posterior-mean membership entropy, matched clustering error and
    held-out log-likelihood under the posterior-mean density."""
    if not chain:
        raise ConfigError("empty chain")
    data = np.asarray(data, dtype=float)
    entropies = []
    errors = []
    for state in chain:
        r = _responsibilities(state, data)
        with np.errstate(divide="ignore", invalid="ignore"):
            ent = -np.where(r > 0, r * np.log(r), 0.0).sum(axis=1)
        entropies.append(ent.mean())
        if true_labels is not None:
            errors.append(_matched_error(state.labels, np.asarray(true_labels),
                                         len(state.weights)))
    heldout_ll = None
    if heldout is not None:
        heldout = np.asarray(heldout, dtype=float)
        dens = np.mean([mixture_density(state, heldout) for state in chain], axis=0)
        if np.any(dens <= 0):
            raise DomainError("posterior-mean density vanished at a held-out point")
        heldout_ll = float(np.sum(np.log(dens)))
    return MixtureMetrics(
        membership_entropy=float(np.mean(entropies)),
        clustering_error=float(np.mean(errors)) if errors else None,
        heldout_loglik=heldout_ll,
    )


def standardize(data):
    """Center and scale to unit variance; returns (standardized, mean, scale)."""
    data = np.asarray(data, dtype=float)
    mean = float(data.mean())
    scale = float(data.std())
    if scale == 0:
        raise DomainError("data has zero variance")
    return (data - mean) / scale, mean, scale


def write_mixture_chain(path, chain, metrics=None, sidecar=None):
    """Posterior-draw CSV (iter, k, pi_k, mu_k, sigma2_k) plus metrics JSON."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["iter", "k", "pi_k", "mu_k", "sigma2_k"])
        for it, state in enumerate(chain):
            for comp in range(len(state.weights)):
                writer.writerow([
                    it, comp, repr(float(state.weights[comp])),
                    repr(float(state.means[comp])),
                    repr(float(state.variances[comp])),
                ])
    extras = {}
    if metrics is not None:
        extras["metrics"] = {
            "membership_entropy": metrics.membership_entropy,
            "clustering_error": metrics.clustering_error,
            "heldout_loglik": metrics.heldout_loglik,
        }
    if sidecar is not None:
        extras.update(sidecar)
    if extras:
        with open(str(path) + ".json", "w") as fh:
            json.dump(extras, fh, indent=2)
            fh.write("\n")
