"""
tests/unit/test_cumulants.py

Cumulant matrix, admissible pairs, the spine exponent and the genealogical
mean matrix on fixtures with closed forms.

Usage:
    pytest tests/unit/test_cumulants.py -v
"""
from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parent.parent.parent
sys.path.insert(0, str(ROOT))

from config.fixtures import binary_split, drifted_split, m2
from domain.errors import NoRootError, PreconditionError
from domain.services.cumulants import (
    admissible_roots,
    assumption_a_structural,
    assumption_h_analytic,
    chi_negative_below,
    cumulant_matrix,
    find_admissible,
    genealogical_lambda,
    genealogical_mean_matrix,
    kappa,
    lambda_convexity,
    mu_ii,
    multitype_cumulant,
    pi_measure,
    spine_exponent,
    spine_spec,
    stopped_martingale_samples,
)
from domain.services.map_spectral import chi, validate_spec
from domain.services.rng_streams import SeededStream, mean_se
from domain.services.spine import spine_wald_relation


def _drifted_kappa(q: float) -> float:
    return 0.1 * q + 2.0 ** (1.0 - q) - 1.0


class TestKappa:
    @pytest.mark.parametrize("q", [0.25, 0.5, 1.0, 2.0, 5.0])
    def test_binary_split_closed_form(self, q):
        assert kappa(binary_split(), 0, q) == pytest.approx(2.0 ** (1.0 - q) - 1.0, abs=1e-14)

    @pytest.mark.parametrize("q", [0.5, 2.0, 8.0])
    def test_drifted_split_closed_form(self, q):
        assert kappa(drifted_split(), 0, q) == pytest.approx(_drifted_kappa(q), abs=1e-14)

    def test_single_type_cumulant_is_kappa(self):
        for q in (0.5, 1.0, 3.0):
            assert multitype_cumulant(binary_split(), 0, q, [1.0]) == pytest.approx(kappa(binary_split(), 0, q), abs=1e-14)

    def test_multitype_cumulant_vanishes_at_admissible_pair(self):
        pair = admissible_roots(m2()).lower
        for i in range(2):
            assert abs(multitype_cumulant(m2(), i, pair.omega, pair.v)) < 1e-9

    def test_pi_measure_collects_transition_atoms(self):
        pi = pi_measure(m2())
        # the (0→1) transition releases a type-0 child through its −0.2 atom
        sources = {a.source for a in pi.at(0, 0)}
        assert sources == {"levy", "transition"}
        transition = [a for a in pi.at(0, 0) if a.source == "transition"][0]
        assert transition.weight == pytest.approx(0.5)
        assert transition.parent_type_after == 1

    def test_cumulant_matrix_is_metzler(self):
        a = cumulant_matrix(m2(), 1.5)
        assert a[0, 1] > 0 and a[1, 0] > 0


class TestAdmissible:
    def test_binary_split_single_exact_root(self):
        roots = admissible_roots(binary_split())
        assert not roots.two_roots
        assert roots.lower.omega == 1.0
        np.testing.assert_array_equal(roots.lower.v, np.ones(1))
        assert roots.lower.residual == 0.0

    def test_drifted_split_two_roots(self):
        roots = admissible_roots(drifted_split())
        assert roots.two_roots
        assert 1.0 < roots.lower.omega < 1.5
        assert 9.0 < roots.upper.omega < 11.0
        for pair in (roots.lower, roots.upper):
            assert abs(_drifted_kappa(pair.omega)) < 1e-9

    def test_which_selects_one_pair(self):
        lower = find_admissible(drifted_split(), which="lower")
        upper = find_admissible(drifted_split(), which="upper")
        assert len(lower) == len(upper) == 1
        assert lower[0].omega < upper[0].omega

    def test_m2_pairs_have_small_residual(self):
        roots = admissible_roots(m2())
        for pair in (roots.lower, roots.upper):
            if pair is None:
                continue
            assert pair.residual < 1e-9
            assert pair.v[0] == 1.0
            assert np.all(pair.v > 0)

    def test_no_root_in_narrow_bracket(self):
        with pytest.raises(NoRootError):
            find_admissible(drifted_split(), search=(2.0, 4.0))

    def test_lambda_convex(self):
        assert lambda_convexity(m2(), np.geomspace(0.1, 8.0, 25)) > -1e-8

    def test_structural_irreducibility(self):
        assert assumption_a_structural(m2())
        assert assumption_a_structural(binary_split())


class TestGenealogical:
    def test_binary_split_mean_matrix(self):
        # a unit cell leaves two halves, so m(1) = 1
        np.testing.assert_allclose(genealogical_mean_matrix(binary_split(), 1.0), [[1.0]], rtol=1e-12)

    def test_binary_split_mean_is_one_at_root(self):
        assert genealogical_lambda(binary_split(), 1.0) == pytest.approx(0.0, abs=1e-12)

    def test_shares_zeros_with_cumulant(self):
        roots = admissible_roots(drifted_split())
        for pair in (roots.lower, roots.upper):
            assert abs(genealogical_lambda(drifted_split(), pair.omega)) < 1e-8

    def test_binary_split_assumption_h(self):
        # m(q) = 1/(2^q − 1), so m′(1) = −2 log 2
        pair = admissible_roots(binary_split()).lower
        assert assumption_h_analytic(binary_split(), pair)[0] == pytest.approx(-2.0 * np.log(2.0), abs=1e-6)

    def test_m2_mean_matrix_is_non_negative(self):
        pair = admissible_roots(m2()).lower
        m = genealogical_mean_matrix(m2(), pair.omega)
        assert np.all(m >= 0)
        np.testing.assert_allclose(m @ pair.v, pair.v, rtol=1e-7)

    def test_refuses_non_negative_diagonal(self):
        # ψ(q) + q_ii = 0.1q + 2^{-q} − 1 is positive for large q
        with pytest.raises(PreconditionError):
            genealogical_lambda(drifted_split(), 30.0)

    def test_mu_ii_below_one_at_roots(self):
        roots = admissible_roots(m2())
        for i in range(2):
            assert mu_ii(m2(), i, roots.lower.omega) < 1.0


class TestSpine:
    @pytest.mark.parametrize("fixture", [binary_split, drifted_split, m2])
    def test_spine_is_conservative(self, fixture):
        spec = fixture()
        roots = admissible_roots(spec)
        for pair in (roots.lower, roots.upper):
            if pair is None:
                continue
            assert abs(spine_exponent(spec, pair).chi(0.0)) < 1e-8

    def test_spine_drift_signs(self):
        roots = admissible_roots(drifted_split())
        assert spine_exponent(drifted_split(), roots.lower).chi_derivative() < 0
        assert spine_exponent(drifted_split(), roots.upper).chi_derivative() > 0

    def test_explicit_spine_spec_matches_exponent(self):
        spec = m2()
        pair = admissible_roots(spec).lower
        explicit = spine_spec(spec, pair)
        validate_spec(explicit)
        exponent = spine_exponent(spec, pair)
        for q in (-0.5, 0.0, 0.5, 1.0):
            assert chi(explicit, q) == pytest.approx(exponent.chi(q), abs=1e-9)

    def test_two_exponent_identity(self):
        spec = drifted_split()
        roots = admissible_roots(spec)
        gap = roots.upper.omega - roots.lower.omega
        assert abs(spine_exponent(spec, roots.lower).chi(gap)) < 1e-8

    def test_tilted_lower_spine_is_upper_spine(self):
        spec = m2()
        roots = admissible_roots(spec)
        if not roots.two_roots:
            pytest.skip("m2 has a single admissible root")
        assert spine_wald_relation(spec, roots.lower, roots.upper, (-0.5, 0.0, 0.5)) < 1e-8

    def test_chi_negative_below_upper_root(self):
        roots = admissible_roots(drifted_split())
        assert chi_negative_below(drifted_split(), roots.upper.omega) < 0


class TestStoppedMartingale:
    def test_single_type_refused(self):
        pair = admissible_roots(binary_split()).lower
        with pytest.raises(PreconditionError):
            stopped_martingale_samples(binary_split(), pair, 0, 10, SeededStream(1))

    def test_mean_matches_eigenvector(self):
        spec = m2()
        pair = admissible_roots(spec).lower
        for i in range(2):
            samples = stopped_martingale_samples(spec, pair, i, 2000, SeededStream(11))
            mean, se = mean_se(samples)
            assert abs(mean - pair.v[i]) < 4.0 * se
