"""
tests/unit/test_tail_estimation.py

Hill estimation on exact Pareto draws, the tail acceptance rule, weighted
KS comparisons and moment stability probes.
"""
from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parent.parent.parent
sys.path.insert(0, str(ROOT))

from domain.errors import InsufficientSamplesError
from domain.models.estimates import FAIL, INCONCLUSIVE, PASS
from domain.services.rng_streams import SeededStream
from domain.services.stats_checks import (
    effective_sample_size,
    ks_passed,
    ks_two_sample,
    moment_stability_probe,
    per_type_ks,
    weighted_ks_2samp,
)
from domain.services.tail_estimation import hill_estimate, pareto_samples, tail_exponent, tail_verify

N = 50_000
ONE_FRAC = (0.01,)


def _pareto(alpha: float, seed: int, n: int = N) -> np.ndarray:
    return pareto_samples(alpha, n, np.random.default_rng(seed))


class TestHill:
    @pytest.mark.parametrize("alpha", [1.5, 3.0])
    def test_recovers_pareto_index(self, alpha):
        est = hill_estimate(_pareto(alpha, 1), 0.01, n_boot=200, rng=np.random.default_rng(2))
        assert est.k == 500
        assert est.ci_lo < est.ci_hi
        assert abs(est.estimate - alpha) / alpha < 0.15

    def test_too_few_exceedances(self):
        with pytest.raises(InsufficientSamplesError):
            hill_estimate(_pareto(2.0, 1, n=500), 0.01)

    def test_minimum_sample_size(self):
        with pytest.raises(InsufficientSamplesError):
            tail_exponent(_pareto(2.0, 1, n=999), min_samples=1000)

    def test_report_carries_rank_slope(self):
        report = tail_exponent(_pareto(2.0, 3), k_fracs=ONE_FRAC, n_boot=100, rng=SeededStream(4), min_samples=N)
        assert report.n == N
        assert abs(report.rank_slope - 2.0) / 2.0 < 0.25


class TestTailVerify:
    def test_pass(self):
        check = tail_verify(_pareto(1.5, 5), 1.5, rng=SeededStream(5), min_samples=N, k_fracs=ONE_FRAC)
        assert check.verdict == PASS

    def test_heavier_than_expected_fails(self):
        check = tail_verify(_pareto(1.5, 6), 3.0, rng=SeededStream(6), min_samples=N, k_fracs=ONE_FRAC)
        assert check.verdict == FAIL
        assert "expected" in check.reason

    def test_lighter_than_expected_is_inconclusive(self):
        check = tail_verify(_pareto(3.0, 7), 1.5, rng=SeededStream(7), min_samples=N, k_fracs=ONE_FRAC)
        assert check.verdict == INCONCLUSIVE


class TestMomentProbe:
    def test_infinite_moment_blows_up(self):
        probe = moment_stability_probe(_pareto(1.2, 8), [3.0])[0]
        assert probe["blowup"]

    def test_finite_moment_is_stable(self):
        probe = moment_stability_probe(_pareto(3.0, 9), [0.5])[0]
        assert not probe["blowup"]
        assert probe["sizes"][-1] == N


class TestKolmogorovSmirnov:
    def test_same_law(self):
        gen = np.random.default_rng(10)
        res = ks_two_sample(gen.normal(size=2000), gen.normal(size=2000))
        assert res.pvalue > 0.001

    def test_too_small_is_skipped(self):
        assert ks_two_sample(np.ones(5), np.ones(50)).skipped

    def test_weights_shift_the_law(self):
        gen = np.random.default_rng(11)
        a = gen.normal(size=4000)
        # tilting N(0,1) by e^{x − 1/2} gives N(1,1)
        tilted = weighted_ks_2samp(a, gen.normal(loc=1.0, size=4000), np.exp(a - 0.5), None)
        plain = weighted_ks_2samp(a, gen.normal(loc=1.0, size=4000))
        assert tilted.pvalue > 0.001
        assert plain.pvalue < 1e-6

    def test_effective_sample_size(self):
        assert effective_sample_size(np.ones(40)) == pytest.approx(40.0)
        assert effective_sample_size(np.array([1.0, 0.0, 0.0])) == pytest.approx(1.0)

    def test_per_type_split(self):
        gen = np.random.default_rng(12)
        values = gen.normal(size=600)
        types = gen.integers(0, 2, size=600)
        results = per_type_ks(values, types, gen.normal(size=600), gen.integers(0, 2, size=600), 3)
        assert set(results) == {0, 1, 2}
        assert results[2].skipped
        assert ks_passed(results, 0.001)
