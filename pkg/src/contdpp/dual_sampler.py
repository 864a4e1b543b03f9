"""Dual sampler for low-rank continuous DPPs and k-DPPs.

Phase 1 selects eigenvectors of the dual matrix C (independent Bernoulli
draws for the DPP, an elementary-symmetric-polynomial recursion for the
k-DPP).  Phase 2 samples points sequentially from the mixture density
f(x) = (1/|V|) sum_v |v* B(x)|^2, shrinking the subspace V by one
dimension per point and re-orthonormalizing under the C-inner product.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericError, RankDeficiencyError
from .feature_maps import (
    DualRepresentation,
    build_nystrom,
    build_rff,
    dual_representation,
    map_to_dict,
    phase2_terms,
)
from .numerics import RngStream, gram_schmidt_c

_RESCALE_LIMIT = 1e300


@dataclass(frozen=True)
class ESPTable:
    """Elementary symmetric polynomials e[k][n] over eigenvalue prefixes.

    Entries are stored with a per-column log scale so the linear-scale
    recursion cannot overflow for pathological eigenvalues.
    """

    eigenvalues: np.ndarray
    scaled: np.ndarray  # (K+1, D+1)
    log_scale: np.ndarray  # (D+1,)

    def value(self, k, n):
        return self.scaled[k, n] * np.exp(self.log_scale[n])

    def log_value(self, k, n):
        if self.scaled[k, n] == 0.0:
            return -np.inf
        return np.log(self.scaled[k, n]) + self.log_scale[n]

    def select_prob(self, k, n):
        """lambda_n * e[k-1][n-1] / e[k][n], the k-DPP inclusion probability."""
        denom = self.scaled[k, n]
        if denom == 0.0:
            raise NumericError(f"e[{k}][{n}] vanished in the selection recursion")
        ratio = self.scaled[k - 1, n - 1] / denom
        return self.eigenvalues[n - 1] * ratio * np.exp(
            self.log_scale[n - 1] - self.log_scale[n]
        )


def esp_table(eigenvalues, k_max):
    eigenvalues = np.asarray(eigenvalues, dtype=float)
    if np.any(eigenvalues < 0):
        raise ConfigError("eigenvalues must be nonnegative")
    if k_max < 0:
        raise ConfigError("k must be nonnegative")
    n_eig = len(eigenvalues)
    scaled = np.zeros((k_max + 1, n_eig + 1))
    log_scale = np.zeros(n_eig + 1)
    scaled[0, 0] = 1.0
    for n in range(1, n_eig + 1):
        col = scaled[:, n - 1].copy()
        new = col.copy()
        new[1:] += eigenvalues[n - 1] * col[:-1]
        ls = log_scale[n - 1]
        peak = new.max()
        if peak > _RESCALE_LIMIT:
            new /= peak
            ls += np.log(peak)
        scaled[:, n] = new
        log_scale[n] = ls
    table = ESPTable(eigenvalues=eigenvalues, scaled=scaled, log_scale=log_scale)
    if k_max > 0 and table.scaled[k_max, n_eig] == 0.0:
        raise RankDeficiencyError(
            f"fewer than {k_max} nonzero eigenvalues; e_{k_max} = 0"
        )
    return table


def _c_normalize(vectors, c):
    out = []
    for v in vectors:
        norm2 = (v.conj() @ (c @ v)).real
        if norm2 <= 0:
            raise NumericError("selected eigenvector has nonpositive C-norm")
        out.append(v / np.sqrt(norm2))
    return np.array(out)


def phase1_dpp(dual: DualRepresentation, rng: RngStream):
    """Bernoulli(lambda / (lambda + 1)) eigenvector selection; may be empty."""
    lam = dual.eigenvalues
    u = np.atleast_1d(rng.uniform(size=len(lam)))
    keep = u < lam / (lam + 1.0)
    if not np.any(keep):
        return np.empty((0, dual.rank), dtype=complex)
    return _c_normalize(dual.eigenvectors.T[keep], dual.C)


def phase1_kdpp(dual: DualRepresentation, k, rng: RngStream, table=None):
    """Exactly k eigenvectors with k-DPP marginals from the ESP recursion."""
    lam = dual.eigenvalues
    if table is None:
        table = esp_table(lam, k)
    chosen = []
    remaining = k
    for n in range(len(lam), 0, -1):
        if remaining == 0:
            break
        if remaining > n:
            raise RankDeficiencyError("insufficient eigenvalues for k-DPP selection")
        if float(rng.uniform()) < table.select_prob(remaining, n):
            chosen.append(n - 1)
            remaining -= 1
    if remaining != 0:
        raise NumericError("k-DPP selection terminated early")
    return _c_normalize(dual.eigenvectors.T[chosen], dual.C)


def phase2_sample(dual: DualRepresentation, vectors, rng: RngStream):
    """Sample |V| points sequentially; V must be C-orthonormal."""
    dmap = dual.map
    frame = dmap.frame
    v = np.atleast_2d(np.asarray(vectors, dtype=complex))
    points = []
    while len(v):
        terms = phase2_terms(dmap, v)
        y = terms.sample(rng)
        x = frame @ y
        points.append(x)
        if len(v) == 1:
            break
        bx = dmap.eval_B(x)
        proj = v.conj() @ bx
        pivot = int(np.argmax(np.abs(proj)))
        if np.abs(proj[pivot]) < 1e-12:
            raise NumericError(
                "all eigenvectors orthogonal to B at a sampled point; "
                "the density evaluation is inconsistent"
            )
        alpha = np.conj(proj / proj[pivot])
        rest = np.delete(np.arange(len(v)), pivot)
        reduced = v[rest] - alpha[rest, None] * v[pivot]
        v = np.array(gram_schmidt_c(list(reduced), dual.C))
    return np.array(points)


def build_map(kernel, method, rank, rng: RngStream):
    if method == "rff":
        return build_rff(kernel, rank, rng)
    if method == "nystrom":
        return build_nystrom(kernel, rank, rng)
    raise ConfigError(f"unknown method {method!r}; expected 'rff' or 'nystrom'")


def sample_dpp_from_dual(dual: DualRepresentation, rng: RngStream):
    v = phase1_dpp(dual, rng)
    if len(v) == 0:
        return np.empty((0, dual.map.kernel.dim))
    return phase2_sample(dual, v, rng)


def sample_kdpp_from_dual(dual: DualRepresentation, k, rng: RngStream, table=None):
    v = phase1_kdpp(dual, k, rng, table=table)
    return phase2_sample(dual, v, rng)


def sample_dpp(kernel, method, rank, rng: RngStream):
    """End to end: build map, dual matrix, eigendecompose, phase 1, phase 2."""
    dual = dual_representation(build_map(kernel, method, rank, rng))
    return sample_dpp_from_dual(dual, rng)


def sample_kdpp(kernel, method, rank, k, rng: RngStream):
    dual = dual_representation(build_map(kernel, method, rank, rng))
    return sample_kdpp_from_dual(dual, k, rng)


# --- CSV / JSON output -------------------------------------------------------

def write_sample_sets(path, sets, dim, sidecar=None):
    """CSV with columns (set_id, point_index, x1..xd) plus a JSON sidecar."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["set_id", "point_index"] + [f"x{l + 1}" for l in range(dim)])
        for set_id, points in enumerate(sets):
            for idx, point in enumerate(np.atleast_2d(points)):
                writer.writerow([set_id, idx] + [repr(float(c)) for c in point])
    if sidecar is not None:
        with open(str(path) + ".json", "w") as fh:
            json.dump(sidecar, fh, indent=2)
            fh.write("\n")


def sampling_sidecar(dmap, method, rank, k, seed):
    return {
        "map": map_to_dict(dmap),
        "method": method,
        "rank": int(rank),
        "k": None if k is None else int(k),
        "seed": int(seed),
    }
