"""
tests/unit/test_map_spectral.py

Matrix exponent, Perron-Frobenius data and the derived specs (dual,
reflected, tilted) on shipped fixtures and random valid specs.

Usage:
    pytest tests/unit/test_map_spectral.py -v
"""
from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parent.parent.parent
sys.path.insert(0, str(ROOT))

from config.fixtures import dufresne, m2, pure_drift_down, random_spec
from domain.errors import InvalidSpecError, NoRootError
from domain.models.map_spec import LevyComponent, MapSpec, TransitionJump, atoms_from_triples
from domain.services.linalg import closed_form_leading_eigenvalue
from domain.services.map_spectral import (
    chi,
    chi_derivative,
    cramer_number,
    dual_spec,
    duality_residual,
    matrix_exponent,
    reflect_spec,
    second_divided_differences,
    spectral_data,
    stationary_distribution,
    tilt_residual,
    tilt_spec,
    validate_spec,
)

Z_GRID = (-1.0, -0.5, 0.0, 0.5, 1.0)


def _random_specs():
    gen = np.random.default_rng(7)
    return [random_spec(2 + k % 2, gen, name=f"random{k}") for k in range(3)]


class TestMatrixExponent:
    def test_m2_entries_at_zero(self):
        f = matrix_exponent(m2(), 0.0)
        np.testing.assert_allclose(f, m2().q_matrix, atol=1e-15)

    def test_single_type_is_laplace_exponent(self):
        spec = dufresne()
        for z in Z_GRID:
            assert matrix_exponent(spec, z)[0, 0] == pytest.approx(-2.0 * z + 0.5 * z * z, abs=1e-15)

    def test_transition_laplace_transform_enters_off_diagonal(self):
        spec = m2()
        z = 0.5
        expected = 1.0 * (0.5 * np.exp(-0.2 * z) + 0.5 * np.exp(0.1 * z))
        assert matrix_exponent(spec, z)[0, 1] == pytest.approx(expected, rel=1e-14)


class TestSpectralData:
    @pytest.mark.parametrize("spec", [m2()] + _random_specs(), ids=lambda s: s.name)
    def test_eigen_residual(self, spec):
        for z in Z_GRID:
            sd = spectral_data(spec, z)
            scale = max(float(np.max(np.abs(sd.f_matrix))), 1.0)
            assert sd.residual() < 1e-10 * scale
            assert sd.w[0] == 1.0
            assert np.all(sd.w > 0)

    def test_chi_zero_for_conservative(self):
        assert abs(chi(m2(), 0.0)) < 1e-12

    @pytest.mark.parametrize("spec", [m2()] + _random_specs(), ids=lambda s: s.name)
    def test_chi_convex(self, spec):
        grid = np.linspace(-1.0, 3.0, 20)
        values = [chi(spec, z) for z in grid]
        assert np.min(second_divided_differences(values, grid)) > -1e-8

    def test_closed_form_agrees(self):
        for z in Z_GRID:
            sd = spectral_data(m2(), z)
            lam, w = closed_form_leading_eigenvalue(sd.f_matrix)
            assert lam == pytest.approx(sd.chi, abs=1e-9)
            np.testing.assert_allclose(w, sd.w, atol=1e-9)

    def test_chi_derivative_is_mean_drift(self):
        assert chi_derivative(dufresne()) == pytest.approx(-2.0, abs=1e-8)
        assert chi_derivative(pure_drift_down()) == pytest.approx(-1.0, abs=1e-8)

    def test_stationary_distribution_m2(self):
        np.testing.assert_allclose(stationary_distribution(m2()), [2.0 / 3.0, 1.0 / 3.0], atol=1e-12)


class TestDerivedSpecs:
    @pytest.mark.parametrize("spec", [m2()] + _random_specs(), ids=lambda s: s.name)
    def test_duality(self, spec):
        assert max(duality_residual(spec, z) for z in Z_GRID) < 1e-12

    def test_dual_of_dual_is_original(self):
        spec = m2()
        twice = dual_spec(dual_spec(spec))
        for z in Z_GRID:
            np.testing.assert_allclose(matrix_exponent(twice, z), matrix_exponent(spec, z), atol=1e-9)

    def test_reflection_negates_argument(self):
        spec = m2()
        flipped = reflect_spec(spec)
        for z in Z_GRID:
            assert chi(flipped, z) == pytest.approx(chi(spec, -z), abs=1e-12)

    @pytest.mark.parametrize("spec", [m2()] + _random_specs(), ids=lambda s: s.name)
    def test_tilt(self, spec):
        gaps = [tilt_residual(spec, g, z) for g in (0.5, 1.0) for z in (-0.5, 0.5, 1.0)]
        assert max(gaps) < 1e-9

    def test_tilted_brownian_drift(self):
        # tilting −2z + z²/2 by γ = 1 shifts the drift by σ²γ
        tilted = tilt_spec(dufresne(), 1.0)
        validate_spec(tilted)
        assert tilted.is_conservative
        assert tilted.levy[0].drift == pytest.approx(-1.0)
        assert chi(tilted, 2.0) == pytest.approx(0.0, abs=1e-12)


class TestCramerNumber:
    def test_dufresne_root(self):
        # ψ(z) = −2z + z²/2 vanishes at z = 4
        assert cramer_number(dufresne()) == pytest.approx(4.0, abs=1e-9)

    def test_bracket_without_sign_change(self):
        with pytest.raises(NoRootError):
            cramer_number(dufresne(), bracket=(0.5, 1.0))

    def test_upward_drift_has_no_root(self):
        with pytest.raises(NoRootError):
            cramer_number(reflect_spec(pure_drift_down()))


class TestValidation:
    def test_shipped_fixture_is_valid(self):
        validate_spec(m2())

    def test_rows_of_q_must_sum_to_zero(self):
        spec = MapSpec(
            n_types=2,
            q_matrix=np.array([[-1.0, 0.5], [1.0, -1.0]]),
            levy=(LevyComponent(), LevyComponent()),
        )
        with pytest.raises(InvalidSpecError):
            validate_spec(spec)

    def test_transition_probabilities_must_sum_to_one(self):
        spec = MapSpec(
            n_types=2,
            q_matrix=np.array([[-1.0, 1.0], [1.0, -1.0]]),
            levy=(LevyComponent(), LevyComponent()),
            trans={(0, 1): TransitionJump(atoms=atoms_from_triples([(-0.1, 0.4, 0)]))},
        )
        with pytest.raises(InvalidSpecError):
            validate_spec(spec)
