"""
tests/unit/test_lamperti.py

Lamperti transform, exponential functionals and the entrance law on
fixtures with explicit answers.
"""
from __future__ import annotations

import math
import sys
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

ROOT = Path(__file__).resolve().parent.parent.parent
sys.path.insert(0, str(ROOT))

from config.fixtures import binary_split, dufresne, m2, m2_upward, pure_drift_down, pure_drift_up
from domain.errors import (
    DivergentFunctionalError,
    MomentNotFiniteError,
    NonPositiveMeanError,
    PathHorizonError,
    PreconditionError,
)
from domain.models.map_spec import LevyComponent, MapSpec
from domain.models.paths import CEMETERY, TAIL_BOUND_HEURISTIC, TAIL_BOUND_MEAN
from domain.services.cumulants import admissible_roots, spine_spec
from domain.services.lamperti import (
    entrance_law_sample,
    exp_functional_moment,
    exp_functional_samples,
    functional_plan,
    functional_remainder_mean,
    lamperti_transform,
    limit_measure_samples,
    sample_exp_functional,
    scaling_check,
    simulate_ssmp,
    weighted_functional_weights,
)
from domain.services.map_simulation import sample_map_path
from domain.services.rng_streams import SeededStream
from domain.services.stats_checks import ks_passed


class TestLampertiTransform:
    def test_pure_drift_closed_form(self):
        # ξ(s) = s, α = 1: X(t) = x0 + t
        path = simulate_ssmp(pure_drift_up(), 1.0, 0, 1.0, 3.0, SeededStream(1))
        assert path.query(1.0)[0] == pytest.approx(2.0, rel=1e-12)
        assert path.query(2.0)[0] == pytest.approx(3.0, rel=1e-12)
        assert path.query(0.0) == (1.0, 0)

    def test_scaling_of_the_start(self):
        path = simulate_ssmp(pure_drift_up(), 2.0, 0, 1.0, 3.0, SeededStream(1))
        assert path.query(1.0)[0] == pytest.approx(3.0, rel=1e-12)

    def test_window_is_enforced(self):
        path = lamperti_transform(sample_map_path(pure_drift_up(), 0, 1.0, SeededStream(1)), 1.0, 1.0)
        assert path.observed_until == pytest.approx(math.e - 1.0)
        assert not path.covers(2.0)
        with pytest.raises(PathHorizonError):
            path.query(2.0)

    def test_non_positive_start_refused(self):
        with pytest.raises(PreconditionError):
            lamperti_transform(sample_map_path(pure_drift_up(), 0, 1.0, SeededStream(1)), 0.0, 1.0)

    def test_infinite_horizon_needs_floor(self):
        with pytest.raises(PreconditionError):
            simulate_ssmp(pure_drift_down(), 1.0, 0, 1.0, float("inf"), SeededStream(1))

    def test_floor_stops_the_path(self):
        path = simulate_ssmp(pure_drift_down(), 1.0, 0, 1.0, float("inf"), SeededStream(1), floor=0.1)
        assert path.stop_reason == "floor"
        assert path.end_size < 0.1

    def test_killed_process_reaches_cemetery(self):
        spec = MapSpec(1, np.zeros((1, 1)), (LevyComponent(kill_rate=5.0),), name="killed")
        path = simulate_ssmp(spec, 1.0, 0, 1.0, 1e6, SeededStream(4))
        assert path.stop_reason == "killed"
        assert path.query(path.lifetime) is CEMETERY


class TestExponentialFunctional:
    def test_pure_drift_down_is_one(self):
        sample = sample_exp_functional(pure_drift_down(), 0, 1.0, 1e-8, SeededStream(1))
        assert sample.value == pytest.approx(1.0, abs=1e-12)

    def test_divergent_functional_refused(self):
        with pytest.raises(DivergentFunctionalError):
            functional_plan(pure_drift_up(), 1.0)

    def test_bound_kind_follows_chi(self):
        assert functional_plan(dufresne(), 2.0).bound_kind == TAIL_BOUND_MEAN
        # χ(4) = −8 + 16/2 = 0: the tail mean is infinite
        plan = functional_plan(dufresne(), 4.0)
        assert plan.bound_kind == TAIL_BOUND_HEURISTIC
        assert not plan.exact_remainder
        sample = sample_exp_functional(dufresne(), 0, 4.0, 1e-4, SeededStream(8), plan=plan)
        assert sample.bound_kind == TAIL_BOUND_HEURISTIC
        assert sample.to_dict()["bound_kind"] == TAIL_BOUND_HEURISTIC
        assert sample_exp_functional(dufresne(), 0, 2.0, 1e-6, SeededStream(8)).bound_kind == TAIL_BOUND_MEAN

    def test_dufresne_law(self):
        # ∫ e^{2(B_s − 2s)} ds = 1/(2Z) with Z ~ Gamma(2)
        samples = exp_functional_samples(dufresne(), 0, 2.0, 600, SeededStream(21))
        z = 1.0 / (2.0 * np.array([s.value for s in samples]))
        assert stats.kstest(z, stats.gamma(2.0).cdf).pvalue > 0.001

    def test_dufresne_fractional_moment(self):
        est = exp_functional_moment(dufresne(), 0, 2.0, 0.5, 1500, SeededStream(22))
        expected = math.sqrt(math.pi) / (2.0 * math.sqrt(2.0))
        assert abs(est.estimate - expected) < 4.0 * est.se + 0.01 * expected

    def test_moment_at_cramer_number_refused(self):
        with pytest.raises(MomentNotFiniteError):
            exp_functional_moment(dufresne(), 0, 2.0, 2.0, 10, SeededStream(1))

    def test_remainder_mean_closed_forms(self):
        np.testing.assert_allclose(functional_remainder_mean(pure_drift_down(), 1.0), [1.0])
        # E[1/(2Z)] = 1/2 for Z ~ Gamma(2)
        np.testing.assert_allclose(functional_remainder_mean(dufresne(), 2.0), [0.5])
        with pytest.raises(MomentNotFiniteError):
            functional_remainder_mean(pure_drift_up(), 1.0)

    def test_weighted_functional_exponent(self):
        weights, exponent = weighted_functional_weights(dufresne(), 2.0)
        np.testing.assert_array_equal(weights, np.ones(1))
        assert exponent == pytest.approx(2.0, abs=1e-9)

    def test_weighted_functional_needs_positive_alpha(self):
        with pytest.raises(PreconditionError):
            weighted_functional_weights(dufresne(), -1.0)


class TestEntranceLaw:
    def test_pure_drift_entrance_is_a_point_mass(self):
        # from 0 with ξ(s) = s and α = 1 the process is X(t) = t
        sample = entrance_law_sample(pure_drift_up(), 1.0, 1.5, 20, SeededStream(3))
        np.testing.assert_allclose(sample.values, 1.5, rtol=1e-9)
        np.testing.assert_allclose(sample.weights, 1.0, rtol=1e-9)
        assert sample.total_mass().estimate == pytest.approx(1.0, rel=1e-9)

    def test_downward_drift_refused(self):
        with pytest.raises(NonPositiveMeanError):
            entrance_law_sample(pure_drift_down(), 1.0, 1.0, 10, SeededStream(1))

    def test_non_positive_alpha_refused(self):
        with pytest.raises(PreconditionError):
            entrance_law_sample(pure_drift_up(), -1.0, 1.0, 10, SeededStream(1))

    def test_entrance_mass_on_two_type_spec(self):
        sample = entrance_law_sample(m2_upward(), 0.5, 1.0, 2000, SeededStream(41))
        mass = sample.total_mass()
        assert abs(mass.estimate - 1.0) < 4.0 * mass.se
        assert set(np.unique(sample.types)) <= {0, 1}
        assert np.all(sample.values > 0)


class TestSelfSimilarity:
    def test_pure_drift_arms_coincide(self):
        # X(t) = x + t at α = 1, so cX(t/c) = cx + t exactly
        cmp = scaling_check(pure_drift_up(), 1.0, 2.0, 1.0, 1.0, 20, SeededStream(5))
        np.testing.assert_allclose(cmp.sizes_a, 3.0, rtol=1e-12)
        np.testing.assert_allclose(cmp.sizes_b, 3.0, rtol=1e-12)
        assert cmp.dead_a == cmp.dead_b == 0

    def test_m2_scaled_law_matches(self):
        cmp = scaling_check(m2(), 1.0, 2.0, -0.5, 1.0, 400, SeededStream(6))
        assert ks_passed(cmp.ks, 0.01), {j: r.to_dict() for j, r in cmp.ks.items()}
        assert cmp.sizes_a.size + cmp.dead_a == 400

    def test_non_positive_factor_refused(self):
        with pytest.raises(PreconditionError):
            scaling_check(m2(), 1.0, 0.0, -0.5, 1.0, 10, SeededStream(1))


class TestLimitMeasure:
    def test_binary_spine_limit_has_unit_mass(self):
        spine = spine_spec(binary_split(), admissible_roots(binary_split()).lower)
        sample = limit_measure_samples(spine, -0.5, 2000, SeededStream(42))
        mass = sample.total_mass()
        assert abs(mass.estimate - 1.0) < 4.0 * mass.se
        assert np.all(sample.values > 0)
        np.testing.assert_array_equal(sample.types, 0)

    def test_positive_alpha_refused(self):
        spine = spine_spec(binary_split(), admissible_roots(binary_split()).lower)
        with pytest.raises(PreconditionError):
            limit_measure_samples(spine, 0.5, 10, SeededStream(1))
