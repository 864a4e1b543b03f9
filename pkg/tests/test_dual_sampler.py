"""Two-phase dual sampler: ESP recursion, phase-1 statistics, phase-2 law."""

from itertools import combinations

import numpy as np
import pytest
from scipy.stats import chisquare, kstest

from contdpp.dual_sampler import (
    esp_table,
    phase1_dpp,
    phase1_kdpp,
    phase2_sample,
    sample_kdpp,
    sample_kdpp_from_dual,
)
from contdpp.errors import ConfigError, RankDeficiencyError
from contdpp.exact_reference import discrete_grid_oracle
from contdpp.feature_maps import build_nystrom, build_rff, dual_representation
from contdpp.kernels import KernelSpec, QualitySpec, SimilaritySpec
from contdpp.numerics import RngStream

from conftest import gaussian_kernel


def brute_esp(eigenvalues, k):
    return sum(
        np.prod([eigenvalues[i] for i in subset])
        for subset in combinations(range(len(eigenvalues)), k)
    )


class TestEspTable:
    @pytest.mark.parametrize("n_eig", [1, 4, 8, 12])
    def test_matches_brute_force(self, n_eig, rng):
        lam = np.exp(rng.normal(size=n_eig))
        table = esp_table(lam, n_eig)
        for k in range(n_eig + 1):
            ref = brute_esp(lam, k)
            assert table.value(k, n_eig) == pytest.approx(ref, rel=1e-12)

    def test_prefix_columns(self, rng):
        lam = np.exp(rng.normal(size=6))
        table = esp_table(lam, 3)
        for n in range(1, 7):
            for k in range(4):
                if k <= n:
                    assert table.value(k, n) == pytest.approx(
                        brute_esp(lam[:n], k), rel=1e-12
                    )

    def test_extreme_eigenvalues_no_overflow(self):
        lam = np.full(400, 1e20)
        table = esp_table(lam, 5)
        # log e_5 = log(C(400, 5)) + 5 log(1e20)
        from math import comb, log

        ref = log(comb(400, 5)) + 5 * log(1e20)
        assert table.log_value(5, 400) == pytest.approx(ref, rel=1e-12)

    def test_select_prob_is_marginal(self, rng):
        # P(top index selected) = lam_n e_{k-1}(lam_1..n-1) / e_k(lam_1..n)
        lam = np.exp(rng.normal(size=5))
        table = esp_table(lam, 2)
        ref = lam[4] * brute_esp(lam[:4], 1) / brute_esp(lam, 2)
        assert table.select_prob(2, 5) == pytest.approx(ref, rel=1e-12)

    def test_errors(self):
        with pytest.raises(ConfigError):
            esp_table(np.array([-1.0]), 1)
        with pytest.raises(RankDeficiencyError):
            esp_table(np.array([1.0, 0.0]), 2)


class TestPhase1:
    def test_dpp_set_size_mean(self, rng):
        kernel = gaussian_kernel(d=1, sigma2=0.5)
        dual = dual_representation(build_rff(kernel, 12, rng))
        lam = dual.eigenvalues
        p = lam / (1.0 + lam)
        expected = p.sum()
        var = np.sum(p * (1 - p))
        n_trials = 4000
        sizes = [len(phase1_dpp(dual, rng)) for _ in range(n_trials)]
        z = (np.mean(sizes) - expected) / np.sqrt(var / n_trials)
        assert abs(z) < 3.0

    def test_kdpp_subset_frequencies_chisquare(self, rng):
        # D = 5, k = 2: subset probabilities proportional to products of
        # the selected eigenvalues
        kernel = gaussian_kernel(d=1, sigma2=0.5)
        dual = dual_representation(build_rff(kernel, 5, rng))
        lam = dual.eigenvalues
        subsets = list(combinations(range(5), 2))
        probs = np.array([lam[i] * lam[j] for i, j in subsets])
        probs /= probs.sum()
        # identify which eigenvectors were selected by matching directions
        n_trials = 20000
        counts = {s: 0 for s in subsets}
        basis = dual.eigenvectors
        for _ in range(n_trials):
            v = phase1_kdpp(dual, 2, rng)
            overlap = np.abs(v @ basis.conj())  # (2, 5)
            chosen = tuple(sorted(int(np.argmax(row)) for row in overlap))
            counts[chosen] += 1
        observed = np.array([counts[s] for s in subsets])
        stat = chisquare(observed, probs * n_trials)
        assert stat.pvalue > 0.01

    def test_kdpp_returns_exactly_k(self, rng):
        kernel = gaussian_kernel(d=1, sigma2=0.5)
        dual = dual_representation(build_rff(kernel, 8, rng))
        for k in (1, 3, 8):
            assert len(phase1_kdpp(dual, k, rng)) == k

    def test_kdpp_k_too_large(self, rng):
        kernel = gaussian_kernel(d=1, sigma2=0.5)
        dual = dual_representation(build_rff(kernel, 3, rng))
        with pytest.raises((RankDeficiencyError, ConfigError)):
            phase1_kdpp(dual, 4, rng)

    def test_c_orthonormality_of_selection(self, rng):
        kernel = gaussian_kernel(d=1, sigma2=0.4)
        dual = dual_representation(build_nystrom(kernel, 8, rng))
        v = phase1_kdpp(dual, 3, rng)
        gram = v.conj() @ dual.C @ v.T
        assert np.allclose(gram, np.eye(3), atol=1e-8)


class TestPhase2:
    @pytest.mark.parametrize("method", ["rff", "nystrom"])
    def test_single_vector_ks(self, method, rng):
        kernel = gaussian_kernel(d=1, sigma2=0.5)
        build = build_rff if method == "rff" else build_nystrom
        dual = dual_representation(build(kernel, 6, rng))
        v = phase1_kdpp(dual, 1, rng)
        from contdpp.feature_maps import phase2_terms

        terms = phase2_terms(dual.map, v)
        draws = np.array([
            phase2_sample(dual, v, rng)[0, 0] for _ in range(1500)
        ])
        total = terms.total_integral()
        cdf = lambda ts: np.array([
            terms.cdf_given(0, [], float(t)) for t in np.atleast_1d(ts)
        ])
        assert total == pytest.approx(1.0, rel=1e-8)
        assert kstest(draws, cdf).pvalue > 0.01

    def test_set_size_equals_vector_count(self, rng):
        kernel = gaussian_kernel(d=2, sigma2=0.5)
        dual = dual_representation(build_rff(kernel, 10, rng))
        for k in (1, 2, 4):
            pts = sample_kdpp_from_dual(dual, k, rng)
            assert pts.shape == (k, 2)

    def test_determinism(self):
        kernel = gaussian_kernel(d=1, sigma2=0.5)
        a = sample_kdpp(kernel, "rff", 8, 3, RngStream(5))
        b = sample_kdpp(kernel, "rff", 8, 3, RngStream(5))
        assert np.array_equal(a, b)


class TestAgainstGridOracle:
    def test_binned_tv_rank2_k2(self, rng):
        """Rank-2 kernel, k = 2 on [0, 1]: binned sampler law vs. enumeration."""
        kernel = KernelSpec(
            quality=QualitySpec(kind="uniform"),
            similarity=SimilaritySpec(cov=np.array([0.05])),
            dim=1,
            box=(np.array([0.0]), np.array([1.0])),
        )
        dmap = build_nystrom(kernel, 2, rng)
        dual = dual_representation(dmap)
        bins = 20
        subsets, probs = discrete_grid_oracle(dmap, ([0.0], [1.0]), bins, 2)
        emp = np.zeros(len(subsets))
        lookup = {tuple(s): i for i, s in enumerate(map(tuple, subsets))}
        n_draws = 6000
        for _ in range(n_draws):
            pts = sample_kdpp_from_dual(dual, 2, rng)
            cells = tuple(sorted(
                min(bins - 1, int(p[0] * bins)) for p in pts
            ))
            if cells[0] == cells[1]:
                continue  # same-cell pairs carry oracle probability ~0
            emp[lookup[cells]] += 1
        emp /= emp.sum()
        tv = 0.5 * np.abs(emp - probs).sum()
        assert tv < 0.05
