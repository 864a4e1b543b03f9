"""Low-rank kernel representations L~(x, y) = B(x)* B(y).

Two constructions are provided: random Fourier features for
translation-invariant similarities and the Nystrom method for arbitrary
kernels.  For Gaussian quality both admit a closed-form dual matrix
C = int B(x) B(x)* dx and closed-form sampling CDFs, expressed as
signed Gaussian mixtures (see gaussians.GaussianTermSet).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .errors import ConfigError, NumericError
from .gaussians import GaussianTermSet, gauss_osc_anti, gauss_poly_anti
from .kernels import KernelSpec, kernel_from_dict, kernel_matrix, kernel_to_dict
from .numerics import RngStream, erf_real, hermitian_eig

_SQRT_PI = np.sqrt(np.pi)


def _dense_cov(cov, d):
    cov = np.asarray(cov, dtype=float)
    return np.diag(cov) if cov.ndim == 1 else cov


def _require_gaussian_quality(kernel, what):
    if kernel.quality.kind != "gaussian":
        raise ConfigError(f"{what} requires a gaussian quality function")


def _sample_frequencies(kernel: KernelSpec, n, rng: RngStream):
    """Frequencies from the spectral density of the similarity kernel."""
    sim = kernel.similarity
    d = kernel.dim
    if sim.kind == "gaussian":
        if sim.cov.ndim == 1:
            return rng.normal(0.0, np.sqrt(1.0 / sim.cov), size=(n, d))
        return rng.multivariate_normal(np.zeros(d), np.linalg.inv(sim.cov), size=n)
    if sim.kind == "laplacian":
        return rng.cauchy(0.0, 1.0 / sim.bandwidth, size=(n, d))
    if sim.kind == "cauchy":
        return rng.laplace(0.0, 1.0 / sim.bandwidth, size=(n, d))
    raise ConfigError(
        f"similarity kind {sim.kind!r} is not translation invariant and "
        "cannot be represented with random Fourier features"
    )


@dataclass
class RffMap:
    """Fourier feature map B_j(x) = q(x) exp(i w_j . x) / sqrt(D)."""

    kernel: KernelSpec
    frequencies: np.ndarray  # (D, d)

    def __post_init__(self):
        self.frequencies = np.atleast_2d(np.asarray(self.frequencies, dtype=float))
        rot, delta, a_rot = self.kernel.quality.rotation()
        if self.kernel.box is not None and not np.allclose(rot, np.eye(len(delta))):
            raise ConfigError("box domains require a diagonal quality covariance")
        self.frame = rot          # x = frame @ y, y the sampling coordinates
        self.delta = delta        # q^2 axis scales in the frame
        self.a_rot = a_rot        # q^2 axis centers in the frame
        self.freq_rot = self.frequencies @ rot

    @property
    def rank(self):
        return self.frequencies.shape[0]

    def eval_B(self, x):
        x = np.asarray(x, dtype=float)
        q = self.kernel.quality(x)
        phase = np.exp(1j * x @ self.frequencies.T)
        return np.asarray(q)[..., None] * phase / np.sqrt(self.rank)


@dataclass
class NystromMap:
    """Landmark map B_j(x) = sum_k W_jk L(z_k, x) with W = L_Z^{-1/2}."""

    kernel: KernelSpec
    landmarks: np.ndarray  # (D, d)
    W: np.ndarray  # (D, D) symmetric
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.landmarks = np.atleast_2d(np.asarray(self.landmarks, dtype=float))
        self.W = np.asarray(self.W, dtype=float)

    @property
    def rank(self):
        return self.landmarks.shape[0]

    def eval_B(self, x):
        x = np.asarray(x, dtype=float)
        pts = np.atleast_2d(x)
        qx = np.atleast_1d(self.kernel.quality(pts))
        qz = self.kernel.quality(self.landmarks)
        k = self.kernel.similarity(pts[:, None, :], self.landmarks[None, :, :])
        lzx = qx[:, None] * k * qz[None, :]  # (N, D) of L(x_i, z_j)
        b = lzx @ self.W.T
        return b[0] if x.ndim == 1 else b

    @property
    def frame(self):
        if self.kernel.similarity.kind == "gaussian":
            return self._gauss_pair_params()[0]
        return np.eye(self.kernel.dim)

    def _gauss_pair_params(self):
        """Per-landmark-pair Gaussian parameters of L(z_m, x) L(x, z_n).

        The product is coef_mn * prod_l exp{-((y_l - c_l)/theta_l)^2} with
        y = T^T x; returns (T, theta, c_rot (D,D,d), coef (D,D)).
        """
        if "pair" in self._cache:
            return self._cache["pair"]
        kernel = self.kernel
        d = kernel.dim
        z = self.landmarks
        si = np.linalg.inv(_dense_cov(kernel.similarity.cov, d))
        if kernel.quality.kind == "gaussian":
            gi = np.linalg.inv(_dense_cov(kernel.quality.cov, d))
            a = kernel.quality.center
        else:
            gi = np.zeros((d, d))
            a = np.zeros(d)
        p = gi + si
        if kernel.box is not None and not np.allclose(p, np.diag(np.diagonal(p))):
            raise ConfigError("box domains require diagonal quality and similarity covariances")
        if np.allclose(p, np.diag(np.diagonal(p))):
            t_rot, p_eig = np.eye(d), np.diagonal(p).copy()
        else:
            p_eig, t_rot = np.linalg.eigh(p)
        theta = 1.0 / np.sqrt(p_eig)
        zbar = 0.5 * (z[:, None, :] + z[None, :, :])
        b = zbar @ si.T + gi @ a
        c = b @ np.linalg.inv(p).T
        quad_c = np.einsum("ijl,lm,ijm->ij", c, p, c)
        z_si_z = np.einsum("il,lm,im->i", z, si, z)
        const = a @ gi @ a + 0.5 * (z_si_z[:, None] + z_si_z[None, :])
        qz = np.atleast_1d(kernel.quality(z))
        coef = qz[:, None] * qz[None, :] * np.exp(quad_c - const)
        self._cache["pair"] = (t_rot, theta, c @ t_rot, coef)
        return self._cache["pair"]

    def _poly_params(self):
        """Monomial coefficients of L(z_m, x) L(x, z_n) for dot-product kernels.

        d = 1 only.  The product equals q^2(x) * sum_t H_t[m, n] x^t with
        H_t = sum_{r+s=t} u_{m r} u_{n s}, u_{m r} = C(p, r) off^{p-r} z_m^r.
        """
        if "poly" in self._cache:
            return self._cache["poly"]
        kernel = self.kernel
        if kernel.dim != 1:
            raise ConfigError("dot-product similarities support d = 1 only")
        sim = kernel.similarity
        deg = 1 if sim.kind == "linear" else sim.degree
        off = 0.0 if sim.kind == "linear" else sim.offset
        z = self.landmarks[:, 0]
        qz = np.atleast_1d(kernel.quality(self.landmarks))
        u = np.stack(
            [comb(deg, r) * off ** (deg - r) * z**r for r in range(deg + 1)], axis=1
        )
        uq = qz[:, None] * u  # (D, p+1), quality folded in
        self._cache["poly"] = (deg, uq)
        return self._cache["poly"]


def build_rff(kernel: KernelSpec, rank, rng: RngStream):
    _require_gaussian_quality(kernel, "the Fourier feature map")
    if rank < 1:
        raise ConfigError("rank must be >= 1")
    return RffMap(kernel, _sample_frequencies(kernel, rank, rng))


def _sample_landmarks(kernel: KernelSpec, n, rng: RngStream):
    if kernel.quality.kind == "uniform":
        lo, hi = kernel.box
        return rng.uniform(lo, hi, size=(n, kernel.dim))
    center, cov = kernel.quality.center, kernel.quality.cov
    if kernel.box is None:
        return rng.multivariate_normal(center, cov, size=n)
    lo, hi = kernel.box
    out = np.empty((0, kernel.dim))
    for _ in range(1000):
        draw = np.atleast_2d(rng.multivariate_normal(center, cov, size=n))
        keep = np.all((draw >= lo) & (draw <= hi), axis=1)
        out = np.vstack([out, draw[keep]])
        if len(out) >= n:
            return out[:n]
    raise NumericError("landmark rejection sampling: box captures too little quality mass")


def build_nystrom(kernel: KernelSpec, rank, rng: RngStream):
    if rank < 1:
        raise ConfigError("rank must be >= 1")
    landmarks = _sample_landmarks(kernel, rank, rng)
    lz = kernel_matrix(kernel, landmarks)
    vals, vecs = hermitian_eig(lz)
    vals = vals.real
    vecs = vecs.real
    if vals[0] <= 0:
        raise NumericError("landmark kernel matrix is numerically rank 0")
    cut = 1e-10 * vals[0]
    inv_sqrt = np.where(vals > cut, 1.0 / np.sqrt(np.maximum(vals, cut)), 0.0)
    w = (vecs * inv_sqrt) @ vecs.T
    return NystromMap(kernel, landmarks, w)


def _box_rot(kernel: KernelSpec):
    if kernel.box is None:
        d = kernel.dim
        return np.full(d, -np.inf), np.full(d, np.inf)
    return kernel.box


def _axis_gauss_mass(m, s, lo, hi):
    """int_lo^hi exp{-((y - m)/s)^2} dy, broadcast over m."""
    e_hi = 1.0 if np.isinf(hi) else erf_real((hi - m) / s)
    e_lo = -1.0 if np.isinf(lo) else erf_real((lo - m) / s)
    return 0.5 * _SQRT_PI * s * (e_hi - e_lo)


def dual_matrix(dmap):
    """Dual kernel matrix C_jk = int B_j(x) conj(B_k(x)) dx in closed form."""
    kernel = dmap.kernel
    lo, hi = _box_rot(kernel)
    if isinstance(dmap, RffMap):
        rank = dmap.rank
        dw = dmap.freq_rot[:, None, :] - dmap.freq_rot[None, :, :]  # (D, D, d)
        c = np.ones((rank, rank), dtype=complex)
        for axis in range(kernel.dim):
            m, s, w = dmap.a_rot[axis], dmap.delta[axis], dw[:, :, axis]
            if np.isinf(lo[axis]) and np.isinf(hi[axis]):
                c *= _SQRT_PI * s * np.exp(-0.25 * s * s * w * w + 1j * m * w)
            else:
                c *= gauss_osc_anti(m, s, w, hi[axis]) - gauss_osc_anti(m, s, w, lo[axis])
        return c / rank
    if not isinstance(dmap, NystromMap):
        raise ConfigError(f"unsupported map type {type(dmap).__name__}")
    sim = kernel.similarity
    if sim.kind == "gaussian":
        _, theta, c_rot, coef = dmap._gauss_pair_params()
        abar = coef.copy()
        for axis in range(kernel.dim):
            abar *= _axis_gauss_mass(c_rot[:, :, axis], theta[axis], lo[axis], hi[axis])
        c = dmap.W @ abar @ dmap.W
        # W is a pseudo-inverse square root with large entries, so the
        # sandwich loses exact symmetry; restore it before eigendecomposition.
        return 0.5 * (c + c.T)
    if sim.kind in ("linear", "polynomial"):
        _require_gaussian_quality(kernel, "the closed-form dual matrix")
        deg, uq = dmap._poly_params()
        _, delta, a_rot = kernel.quality.rotation()
        ints = [
            gauss_poly_anti(t, a_rot[0], delta[0], hi[0])
            - gauss_poly_anti(t, a_rot[0], delta[0], lo[0])
            for t in range(2 * deg + 1)
        ]
        hankel = np.array([[ints[r + s] for s in range(deg + 1)] for r in range(deg + 1)])
        abar = uq @ hankel @ uq.T
        c = dmap.W @ abar @ dmap.W
        return 0.5 * (c + c.T)
    raise ConfigError(
        f"no closed-form dual matrix for similarity kind {sim.kind!r}"
    )


def eval_B(dmap, x):
    return dmap.eval_B(x)


def eval_L_tilde(dmap, x, y):
    """Approximated kernel value B(x)* B(y)."""
    bx = np.atleast_2d(dmap.eval_B(x))
    by = np.atleast_2d(dmap.eval_B(y))
    out = np.sum(bx.conj() * by, axis=-1)
    return out[0] if np.asarray(x).ndim == 1 else out


def ltilde_matrix(dmap, points):
    b = dmap.eval_B(np.atleast_2d(np.asarray(points, dtype=float)))
    return b.conj() @ b.T


@dataclass
class DualRepresentation:
    """A feature map with its dual matrix eigendecomposed."""

    map: RffMap | NystromMap
    C: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def rank(self):
        return self.map.rank


def dual_representation(dmap):
    c = dual_matrix(dmap)
    vals, vecs = hermitian_eig(c)
    vals = vals.real
    if vals[0] <= 0:
        raise NumericError("dual matrix is numerically rank 0")
    if vals[-1] < -1e-6 * vals[0]:
        raise NumericError("dual matrix has a significantly negative eigenvalue")
    vals = np.maximum(vals, 0.0)
    return DualRepresentation(map=dmap, C=c, eigenvalues=vals, eigenvectors=vecs)


def _mixing_matrix(vectors):
    v = np.atleast_2d(np.asarray(vectors))
    if v.shape[0] == 0:
        raise ConfigError("eigenvector set is empty")
    return v.conj().T @ v / v.shape[0]


def phase2_terms(dmap, vectors):
    """The density f(x) = (1/|V|) sum_v |v* B(x)|^2 as a Gaussian term set.

    The term set lives in the map's sampling frame: y = frame^T x.  For
    diagonal covariances the frame is the identity and y = x.
    """
    kernel = dmap.kernel
    s = _mixing_matrix(vectors)
    lo, hi = _box_rot(kernel)
    # The (j, l) and (l, j) terms are exact complex conjugates (S is
    # Hermitian and the pair factors conjugate entrywise), so only the
    # upper triangle is materialized with off-diagonal coefficients
    # doubled; every real-part evaluation downstream is unchanged.
    if isinstance(dmap, RffMap):
        rank = dmap.rank
        iu, ju = np.triu_indices(rank)
        mult = np.where(iu == ju, 1.0, 2.0)
        dw = dmap.freq_rot[iu] - dmap.freq_rot[ju]
        d = kernel.dim
        n_pairs = len(iu)
        return GaussianTermSet(
            coef=s[iu, ju] / rank * mult,
            mean=np.broadcast_to(dmap.a_rot, (n_pairs, d)).copy(),
            scale=np.broadcast_to(dmap.delta, (n_pairs, d)).copy(),
            freq=dw,
            lo=lo,
            hi=hi,
        )
    if not isinstance(dmap, NystromMap):
        raise ConfigError(f"unsupported map type {type(dmap).__name__}")
    g = dmap.W @ s @ dmap.W
    sim = kernel.similarity
    if sim.kind == "gaussian":
        _, theta, c_rot, coef = dmap._gauss_pair_params()
        rank, d = dmap.rank, kernel.dim
        iu, ju = np.triu_indices(rank)
        mult = np.where(iu == ju, 1.0, 2.0)
        return GaussianTermSet(
            coef=np.real(g[iu, ju]) * coef[iu, ju] * mult,
            mean=c_rot[iu, ju],
            scale=np.broadcast_to(theta, (len(iu), d)).copy(),
            lo=lo,
            hi=hi,
        )
    if sim.kind in ("linear", "polynomial"):
        _require_gaussian_quality(kernel, "the closed-form sampling density")
        deg, uq = dmap._poly_params()
        _, delta, a_rot = kernel.quality.rotation()
        h = uq.T @ g.real @ uq  # (p+1, p+1); H_rs weights x^{r+s}
        coefs = np.array([
            sum(h[r, t - r] for r in range(max(0, t - deg), min(deg, t) + 1))
            for t in range(2 * deg + 1)
        ])
        n_terms = 2 * deg + 1
        return GaussianTermSet(
            coef=coefs,
            mean=np.full((n_terms, 1), a_rot[0]),
            scale=np.full((n_terms, 1), delta[0]),
            degree=np.arange(n_terms)[:, None],
            lo=lo,
            hi=hi,
        )
    raise ConfigError(f"no closed-form sampling density for {sim.kind!r} similarity")


def phase2_cdf(dmap, vectors, axis, prefix, t, normalized=True):
    """CDF of f along one frame axis, earlier axes fixed, later integrated."""
    terms = phase2_terms(dmap, vectors)
    return terms.cdf_given(axis, prefix, t, normalized=normalized)


# --- JSON serialization ------------------------------------------------------

def map_to_dict(dmap):
    if isinstance(dmap, RffMap):
        return {
            "type": "rff",
            "kernel": kernel_to_dict(dmap.kernel),
            "frequencies": dmap.frequencies.tolist(),
        }
    if isinstance(dmap, NystromMap):
        return {
            "type": "nystrom",
            "kernel": kernel_to_dict(dmap.kernel),
            "landmarks": dmap.landmarks.tolist(),
            "W": dmap.W.tolist(),
        }
    raise ConfigError(f"unsupported map type {type(dmap).__name__}")


def map_from_dict(data):
    kernel = kernel_from_dict(data["kernel"])
    if data["type"] == "rff":
        return RffMap(kernel, np.asarray(data["frequencies"]))
    if data["type"] == "nystrom":
        return NystromMap(kernel, np.asarray(data["landmarks"]), np.asarray(data["W"]))
    raise ConfigError(f"unknown map type {data['type']!r}")


def map_to_json(dmap):
    return json.dumps(map_to_dict(dmap), indent=2)


def map_from_json(text):
    return map_from_dict(json.loads(text))
