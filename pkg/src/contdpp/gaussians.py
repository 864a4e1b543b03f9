"""Signed mixtures of axis-factorized Gaussian terms.

Every closed-form density in this package (Fourier-feature projections,
landmark projections, Schur-complement full conditionals, tilted mixture
location conditionals) is a signed combination of terms

    coef * prod_l  x_l^p_l * exp{-((x_l - m_l)/s_l)^2 + i w_l x_l}

restricted to R^d or an axis-aligned box.  This module evaluates such
combinations, integrates them axis by axis in closed form, and samples
from them by sequential conditioning with inverse-CDF draws.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from .errors import BracketError, ConfigError, NumericError
from .numerics import erf_real, invert_monotone_cdf, scaled_erf_product

_SQRT_PI = np.sqrt(np.pi)


def _hermite_lower_integrals(q_max, u):
    """I_q(u) = int_{-inf}^{u} t^q exp(-t^2) dt for q = 0..q_max."""
    u = np.asarray(u, dtype=float)
    e = np.where(np.isinf(u), 0.0, np.exp(-np.where(np.isinf(u), 0.0, u) ** 2))
    uf = np.where(np.isinf(u), 0.0, u)
    out = [0.5 * _SQRT_PI * (1.0 + erf_real(u))]
    if q_max >= 1:
        out.append(-0.5 * e)
    for q in range(2, q_max + 1):
        out.append(-0.5 * uf ** (q - 1) * e + 0.5 * (q - 1) * out[q - 2])
    return out


def gauss_poly_anti(p, m, s, t):
    """int_{-inf}^{t} tau^p exp(-((tau - m)/s)^2) dtau, elementwise.

    ``p`` is a scalar nonnegative integer; the rest broadcast.
    """
    m = np.asarray(m, dtype=float)
    s = np.asarray(s, dtype=float)
    u = (t - m) / s
    ints = _hermite_lower_integrals(p, u)
    total = np.zeros(np.broadcast(m, s, u).shape, dtype=float)
    for q in range(p + 1):
        total = total + comb(p, q) * m ** (p - q) * s**q * ints[q]
    return s * total


def gauss_osc_anti(m, s, w, t):
    """int_{-inf}^{t} exp(-((tau - m)/s)^2 + i w tau) dtau, elementwise."""
    m = np.asarray(m, dtype=float)
    s = np.asarray(s, dtype=float)
    w = np.asarray(w, dtype=float)
    beta = 0.5 * w * s
    u = (t - m) / s
    core = np.exp(-beta * beta) + scaled_erf_product(u, beta)
    return 0.5 * _SQRT_PI * s * np.exp(1j * w * m) * core


@dataclass
class GaussianTermSet:
    """Signed, axis-factorized Gaussian mixture on a box or on R^d.

    coef:   (T,) real or complex weights (signs allowed).
    mean:   (T, d) per-axis centers.
    scale:  (T, d) per-axis scales of exp{-((x-m)/s)^2}; np.inf marks a
            constant factor along that axis (requires a finite box there).
    freq:   (T, d) oscillation frequencies, or None for none.
    degree: (T, d) monomial degrees x_l^p, or None; incompatible with a
            nonzero frequency on the same axis.
    lo/hi:  (d,) box limits, +-inf for unbounded axes.
    """

    coef: np.ndarray
    mean: np.ndarray
    scale: np.ndarray
    freq: np.ndarray | None = None
    degree: np.ndarray | None = None
    lo: np.ndarray | None = None
    hi: np.ndarray | None = None
    _full_cache: dict = field(default_factory=dict, repr=False)
    _lo_cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.coef = np.atleast_1d(np.asarray(self.coef))
        self.mean = np.atleast_2d(np.asarray(self.mean, dtype=float))
        self.scale = np.atleast_2d(np.asarray(self.scale, dtype=float))
        d = self.mean.shape[1]
        if self.freq is not None:
            self.freq = np.atleast_2d(np.asarray(self.freq, dtype=float))
            if not np.any(self.freq):
                self.freq = None
        if self.degree is not None:
            self.degree = np.atleast_2d(np.asarray(self.degree, dtype=int))
            if not np.any(self.degree):
                self.degree = None
        if self.freq is not None and self.degree is not None:
            if np.any((self.freq != 0) & (self.degree > 0)):
                raise ConfigError("monomial factors cannot carry a frequency")
        self.lo = np.full(d, -np.inf) if self.lo is None else np.asarray(self.lo, float)
        self.hi = np.full(d, np.inf) if self.hi is None else np.asarray(self.hi, float)
        if np.any(np.isinf(self.scale) & ~(np.isfinite(self.lo) & np.isfinite(self.hi))):
            raise ConfigError("constant axis factors need a finite box")

    @property
    def dim(self):
        return self.mean.shape[1]

    def _axis_freq(self, axis):
        return None if self.freq is None else self.freq[:, axis]

    def _axis_degree(self, axis):
        return None if self.degree is None else self.degree[:, axis]

    def axis_point(self, axis, x):
        """Per-term factor values at coordinate x along one axis."""
        m = self.mean[:, axis]
        s = self.scale[:, axis]
        const = np.isinf(s)
        u2 = np.where(const, 0.0, ((x - m) / np.where(const, 1.0, s)) ** 2)
        vals = np.exp(-u2)
        w = self._axis_freq(axis)
        if w is not None:
            vals = vals * np.exp(1j * w * x)
        p = self._axis_degree(axis)
        if p is not None:
            vals = vals * float(x) ** p
        return vals

    def _axis_anti_raw(self, axis, t):
        """Per-term int_{-inf}^{t} of the axis factor (lower limit -inf)."""
        m = self.mean[:, axis]
        s = self.scale[:, axis]
        w = self._axis_freq(axis)
        p = self._axis_degree(axis)
        const = np.isinf(s)
        s_safe = np.where(const, 1.0, s)
        if w is None and p is None:
            out = 0.5 * _SQRT_PI * s_safe * (1.0 + erf_real((t - m) / s_safe))
        elif p is None:
            out = gauss_osc_anti(m, s_safe, w, t)
            # purely oscillatory pieces (constant axis) handled below
        else:
            out = np.zeros(len(m), dtype=float)
            for deg in np.unique(p):
                mask = p == deg
                out[mask] = gauss_poly_anti(int(deg), m[mask], s_safe[mask], t)
            if w is not None and np.any(w[p == 0] != 0):
                mask = (p == 0) & (w != 0)
                out = out.astype(complex)
                out[mask] = gauss_osc_anti(m[mask], s_safe[mask], w[mask], t)
        if np.any(const):
            out = np.asarray(out, dtype=complex if w is not None else float)
            if w is None:
                out[const] = t
            else:
                wc = w[const]
                with np.errstate(divide="ignore", invalid="ignore"):
                    osc = np.where(wc != 0, np.exp(1j * wc * t) / (1j * wc + (wc == 0)), t)
                out[const] = osc
        return out

    def axis_anti(self, axis, t):
        """Per-term integral of the axis factor over [lo_axis, t]."""
        if axis not in self._lo_cache:
            lo = self.lo[axis]
            self._lo_cache[axis] = (
                0.0 if np.isinf(lo) else self._axis_anti_raw(axis, lo)
            )
        return self._axis_anti_raw(axis, t) - self._lo_cache[axis]

    def axis_full(self, axis):
        if axis not in self._full_cache:
            self._full_cache[axis] = self.axis_anti(axis, self.hi[axis])
        return self._full_cache[axis]

    def density(self, x):
        """Signed density value at a point (real part)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        vals = self.coef.copy().astype(complex)
        for axis in range(self.dim):
            vals = vals * self.axis_point(axis, x[axis])
        return float(np.sum(vals).real)

    def total_integral(self):
        vals = self.coef.astype(complex)
        for axis in range(self.dim):
            vals = vals * self.axis_full(axis)
        return float(np.sum(vals).real)

    def _suffix_products(self):
        d = self.dim
        suffix = [np.ones(len(self.coef)) for _ in range(d)]
        for axis in range(d - 2, -1, -1):
            suffix[axis] = suffix[axis + 1] * self.axis_full(axis + 1)
        return suffix

    def cdf_given(self, axis, prefix, t, normalized=True):
        """CDF along one axis: earlier axes fixed, later axes integrated out.

        ``prefix`` holds the fixed coordinates of axes 0..axis-1.
        """
        weights = self.coef.astype(complex)
        for l, xv in enumerate(prefix):
            weights = weights * self.axis_point(l, xv)
        for l in range(axis + 1, self.dim):
            weights = weights * self.axis_full(l)
        num = np.sum(weights * self.axis_anti(axis, t)).real
        if not normalized:
            return num
        norm = np.sum(weights * self.axis_full(axis)).real
        if norm <= 0:
            raise NumericError(f"nonpositive conditional mass {norm:.3e}")
        return num / norm

    def _axis_bracket(self, axis):
        if np.isfinite(self.lo[axis]) and np.isfinite(self.hi[axis]):
            return self.lo[axis], self.hi[axis]
        s = self.scale[:, axis]
        m = self.mean[:, axis]
        finite = np.isfinite(s)
        if not np.any(finite):
            raise ConfigError("cannot bracket an axis with only constant factors")
        lo = np.min(m[finite] - 14.0 * s[finite])
        hi = np.max(m[finite] + 14.0 * s[finite])
        return lo, hi

    def _axis_anti_scalar(self, axis, w):
        """Weighted antiderivative along one axis as a fast scalar closure.

        Only valid for real weights on a term set without frequencies or
        monomial factors; collapses the per-term sum into one dot product
        so repeated evaluations during CDF inversion stay cheap.
        """
        m = self.mean[:, axis]
        s = self.scale[:, axis]
        const = np.isinf(s)
        lo = self.lo[axis]
        if np.any(const):
            wf, mf, sf = w[~const], m[~const], s[~const]
            cc = float(w[const].sum())
        else:
            wf, mf, sf = w, m, s
            cc = 0.0
        c1 = 0.5 * _SQRT_PI * sf * wf
        inv_s = 1.0 / sf
        if np.isfinite(lo):
            base = float(c1 @ erf_real((lo - mf) * inv_s))
            lo_ref = lo
        else:
            base = -float(c1.sum())
            lo_ref = 0.0

        def anti(t):
            val = float(c1 @ erf_real((t - mf) * inv_s)) - base
            if cc != 0.0:
                val += cc * (t - lo_ref)
            return val

        def anti_vec(ts):
            vals = c1 @ erf_real((ts[None, :] - mf[:, None]) * inv_s[:, None])
            vals = vals - base
            if cc != 0.0:
                vals = vals + cc * (ts - lo_ref)
            return vals

        return anti, anti_vec

    def sample(self, rng, density_check=True):
        """Draw one point by sequential conditioning + inverse CDF."""
        d = self.dim
        x = np.empty(d)
        suffix = self._suffix_products()
        plain = self.freq is None and self.degree is None
        weights = np.asarray(self.coef) + 0.0
        for axis in range(d):
            w = weights * suffix[axis]
            anti_vec = None
            if plain and not np.iscomplexobj(w):
                anti, anti_vec = self._axis_anti_scalar(axis, w)
                norm = anti(self.hi[axis])
            else:
                anti = lambda t: np.sum(w * self.axis_anti(axis, t)).real
                norm = float(np.sum(w * self.axis_full(axis)).real)
            if not norm > 0:
                raise NumericError(f"nonpositive conditional mass {norm:.3e}")
            lo_b, hi_b = self._axis_bracket(axis)
            span = hi_b - lo_b
            # Expand until essentially all conditional mass is inside.
            for _ in range(60):
                if anti(hi_b) >= norm * (1.0 - 1e-12):
                    break
                hi_b += span
            for _ in range(60):
                if anti(lo_b) <= norm * 1e-12:
                    break
                lo_b -= span
            cdf = lambda t: anti(t) / norm
            grid = vals = None
            if anti_vec is not None:
                # Localize the quantile with one batched evaluation, then
                # invert inside the bracketing grid cell.  Falls back to
                # the full bracket if rounding noise in the batched values
                # perturbs the cell boundaries.
                grid = np.linspace(lo_b, hi_b, 17)
                vals = anti_vec(grid[1:-1])
            for _ in range(64):
                u = float(rng.uniform())
                try:
                    if grid is not None:
                        j = int(np.searchsorted(vals, u * norm))
                        try:
                            x[axis] = invert_monotone_cdf(
                                cdf, u, grid[j], grid[j + 1], tol=1e-10
                            )
                        except BracketError:
                            x[axis] = invert_monotone_cdf(
                                cdf, u, lo_b, hi_b, tol=1e-10
                            )
                    else:
                        x[axis] = invert_monotone_cdf(
                            cdf, u, lo_b, hi_b, tol=1e-10
                        )
                    break
                except BracketError:
                    # cancellation in signed mixtures leaves the evaluated
                    # CDF with a tail noise floor; quantiles inside that
                    # band have no resolvable root, so redraw (perturbing
                    # the law by at most the noise-floor mass)
                    continue
            else:
                raise NumericError(
                    "conditional CDF too noisy to invert on this axis"
                )
            weights = weights * self.axis_point(axis, x[axis])
        if density_check:
            dens = np.sum(weights).real
            floor = -1e-8 * max(np.abs(self.coef).max(), 1.0)
            if dens < floor:
                raise NumericError(f"negative density {dens:.3e} at sampled point")
        return x


def combine_axis_gaussians(means, scales):
    """Product of exp{-((x-m_i)/s_i)^2} factors as one Gaussian factor.

    Returns (mean, scale, log_const) with the product equal to
    exp(log_const) * exp{-((x-mean)/scale)^2}.  Infinite scales (constant
    factors) are ignored.
    """
    means = np.asarray(means, dtype=float)
    scales = np.asarray(scales, dtype=float)
    prec = np.where(np.isinf(scales), 0.0, 1.0 / scales**2)
    p = prec.sum()
    if p == 0:
        return 0.0, np.inf, 0.0
    ms = np.where(np.isinf(scales), 0.0, means)
    m = np.sum(prec * ms) / p
    log_const = -(np.sum(prec * ms**2) - p * m * m)
    return m, 1.0 / np.sqrt(p), log_const
