"""
tests/unit/test_linalg_roots.py

Perron-Frobenius solver and convex root bracketing.
"""
from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parent.parent.parent
sys.path.insert(0, str(ROOT))

from config.settings import ADMISSIBLE_SCAN_GRID
from domain.errors import NoRootError, NonConvergenceError, TooManyRootsError
from domain.services.linalg import closed_form_leading_eigenvalue, expm, is_metzler, leading_eigenvalue, left_perron_vector
from domain.services.root_finding import bracketed_root, convex_roots, scan_sign_changes


class TestLeadingEigenvalue:
    def test_intensity_matrix_has_zero_root(self):
        q = np.array([[-1.0, 1.0], [2.0, -2.0]])
        lam, w = leading_eigenvalue(q)
        assert lam == pytest.approx(0.0, abs=1e-12)
        np.testing.assert_allclose(w, [1.0, 1.0], atol=1e-10)

    def test_scalar(self):
        lam, w = leading_eigenvalue(np.array([[-3.5]]))
        assert lam == -3.5
        np.testing.assert_array_equal(w, np.ones(1))

    def test_three_types_against_closed_form(self):
        m = np.array([[-2.0, 0.5, 0.3], [0.2, -1.0, 0.7], [0.4, 0.1, -0.5]])
        lam, w = leading_eigenvalue(m)
        lam_cf, w_cf = closed_form_leading_eigenvalue(m)
        assert lam == pytest.approx(lam_cf, abs=1e-10)
        np.testing.assert_allclose(w, w_cf, atol=1e-8)

    def test_negative_off_diagonal_rejected(self):
        m = np.array([[0.0, -1.0], [1.0, 0.0]])
        assert not is_metzler(m)
        with pytest.raises(NonConvergenceError):
            leading_eigenvalue(m)

    def test_general_solver_for_non_metzler(self):
        m = np.array([[2.0, -1.0], [0.0, 1.0]])
        lam, _ = leading_eigenvalue(m, is_ml=False)
        assert lam == pytest.approx(2.0)

    def test_left_vector_is_stationary(self):
        q = np.array([[-1.0, 1.0], [2.0, -2.0]])
        np.testing.assert_allclose(left_perron_vector(q), [2.0 / 3.0, 1.0 / 3.0], atol=1e-10)

    def test_expm_of_zero(self):
        np.testing.assert_array_equal(expm(np.zeros((2, 2))), np.eye(2))


class TestRoots:
    @staticmethod
    def parabola(q):
        return (q - 1.3) * (q - 4.7)

    def test_two_roots(self):
        roots = convex_roots(self.parabola, 1.0 / 16.0, 32.0, ADMISSIBLE_SCAN_GRID)
        np.testing.assert_allclose(roots, [1.3, 4.7], atol=1e-10)

    def test_exact_grid_roots_are_kept(self):
        roots = convex_roots(lambda q: (q - 1.0) * (q - 4.0), 1.0 / 16.0, 32.0, ADMISSIBLE_SCAN_GRID)
        assert roots == [1.0, 4.0]

    def test_no_root(self):
        with pytest.raises(NoRootError):
            convex_roots(lambda q: q * q + 1.0, 1.0 / 16.0, 32.0, ADMISSIBLE_SCAN_GRID)

    def test_more_than_two_roots_rejected(self):
        with pytest.raises(TooManyRootsError):
            convex_roots(lambda q: np.sin(q), 1.0 / 16.0, 32.0, ADMISSIBLE_SCAN_GRID + (3.0, 6.0, 9.0, 12.0))

    def test_scan_reports_brackets_and_exact_points(self):
        brackets, exact = scan_sign_changes(lambda q: q - 2.0, [1.0, 2.0, 3.0])
        assert brackets == []
        assert exact == [2.0]
        brackets, exact = scan_sign_changes(lambda q: q - 2.5, [1.0, 2.0, 3.0])
        assert brackets == [(2.0, 3.0)]
        assert exact == []

    def test_bracketed_root_requires_sign_change(self):
        with pytest.raises(NoRootError):
            bracketed_root(lambda q: q + 1.0, 0.0, 1.0)
