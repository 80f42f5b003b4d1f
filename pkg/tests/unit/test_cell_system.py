"""
tests/unit/test_cell_system.py

Breadth-first cell simulation, the truncation ledger and the genealogical
and temporal martingales.
"""
from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parent.parent.parent
sys.path.insert(0, str(ROOT))

from config.fixtures import binary_split, drifted_split, m2
from domain.errors import PreconditionError
from domain.models.cells import LEDGER_CUT, LEDGER_DISCARDED, SimControls
from domain.services.cell_system import (
    empirical_measure,
    genealogical_martingale,
    generation_profile,
    genealogical_trace,
    lp_moment_trace,
    martingale_limit_samples,
    simulate_tree,
    snapshot,
    temporal_martingale,
    temporal_martingale_trace,
)
from domain.services.cumulants import admissible_roots
from domain.services.rng_streams import SeededStream

ONE = np.ones(1)


@pytest.fixture(scope="module")
def binary_trees():
    controls = SimControls(max_generation=4, min_size=1e-2)
    return [simulate_tree(binary_split(), 1.0, 0, 0.5, controls, SeededStream(100).spawn(k)) for k in range(5)]


class TestControls:
    @pytest.mark.parametrize(
        "kwargs", [{"max_generation": -1}, {"min_size": 0.0}, {"horizon": 0.0}, {"horizon": -2.0}]
    )
    def test_invalid_values(self, kwargs):
        with pytest.raises(ValueError):
            SimControls(**kwargs)

    def test_dict_round_trip(self):
        controls = SimControls(max_generation=3, min_size=0.05, horizon=2.0)
        assert SimControls.from_dict(controls.to_dict()) == controls


class TestBinarySplitTree:
    def test_mass_is_conserved_through_the_ledger(self, binary_trees):
        # no drift: every split conserves size, so ℳ(n) plus the ledger is exactly x
        for tree in binary_trees:
            for n in range(tree.controls.max_generation):
                total = genealogical_martingale(tree, 1.0, ONE, n) + tree.ledger.remainder(1.0, ONE, n + 1)
                assert total == pytest.approx(1.0, rel=1e-9)

    def test_limit_samples_keep_the_mass(self):
        controls = SimControls(max_generation=4, min_size=1e-2)
        limit = martingale_limit_samples(binary_split(), 1.0, 0, 0.5, 1.0, ONE, controls, 5, SeededStream(9))
        assert limit.generation == 3
        np.testing.assert_allclose(limit.values + limit.remainders, 1.0, rtol=1e-9)

    def test_generation_profile(self, binary_trees):
        for tree in binary_trees:
            profile = generation_profile(tree)
            assert profile[0] == 1
            assert sum(profile.values()) == len(tree.cells)
            assert list(profile) == list(range(len(profile)))

    def test_generation_bound(self, binary_trees):
        for tree in binary_trees:
            assert tree.max_generation_present() <= tree.controls.max_generation

    def test_martingale_beyond_last_generation_refused(self, binary_trees):
        tree = binary_trees[0]
        with pytest.raises(PreconditionError):
            genealogical_martingale(tree, 1.0, ONE, tree.controls.max_generation)

    def test_children_ordered_by_size(self, binary_trees):
        for tree in binary_trees:
            for label in tree.cells:
                sizes = [c.initial_size for c in tree.children(label)]
                assert sizes == sorted(sizes, reverse=True)

    def test_ledger_kinds(self, binary_trees):
        kinds = {e.kind for tree in binary_trees for e in tree.ledger}
        assert kinds <= {LEDGER_CUT, LEDGER_DISCARDED}
        assert LEDGER_CUT in kinds

    def test_same_stream_same_tree(self):
        controls = SimControls(max_generation=3, min_size=1e-2)
        a = simulate_tree(binary_split(), 1.0, 0, 0.5, controls, SeededStream(8))
        b = simulate_tree(binary_split(), 1.0, 0, 0.5, controls, SeededStream(8))
        assert sorted(a.cells) == sorted(b.cells)
        assert [a.cells[k].initial_size for k in sorted(a.cells)] == [b.cells[k].initial_size for k in sorted(b.cells)]


class TestSnapshots:
    def test_snapshot_at_zero_is_the_eve_cell(self):
        controls = SimControls(max_generation=3, min_size=1e-2, horizon=2.0)
        tree = simulate_tree(m2(), 2.0, 1, 0.5, controls, SeededStream(3))
        snap = snapshot(tree, 0.0)
        assert len(snap.particles) == 1
        assert snap.particles[0].size == 2.0
        assert snap.particles[0].type == 1
        v = np.array([1.0, 0.5])
        assert temporal_martingale(snap, 1.5, v) == pytest.approx(0.5 * 2.0 ** 1.5)

    def test_snapshot_beyond_horizon_refused(self):
        controls = SimControls(max_generation=2, min_size=1e-2, horizon=1.0)
        tree = simulate_tree(m2(), 1.0, 0, 0.5, controls, SeededStream(3))
        with pytest.raises(PreconditionError):
            snapshot(tree, 1.5)

    def test_snapshot_sorted_by_size(self):
        controls = SimControls(max_generation=5, min_size=1e-3, horizon=2.0)
        tree = simulate_tree(binary_split(), 1.0, 0, -0.5, controls, SeededStream(4))
        sizes = snapshot(tree, 1.5).sizes()
        assert np.all(np.diff(sizes) <= 0)

    def test_empirical_measure_of_one(self):
        controls = SimControls(max_generation=5, min_size=1e-3, horizon=2.0)
        tree = simulate_tree(binary_split(), 1.0, 0, -0.5, controls, SeededStream(4))
        snap = snapshot(tree, 1.5)
        mass = empirical_measure(snap, -0.5, 1.0, ONE, lambda x, j: np.ones_like(x))
        assert mass == pytest.approx(temporal_martingale(snap, 1.0, ONE))


class TestGenealogicalMartingale:
    def test_corrected_mean_is_v(self):
        spec = m2()
        pair = admissible_roots(spec).lower
        controls = SimControls(max_generation=3, min_size=0.05)
        for i in range(2):
            values, remainders = genealogical_trace(spec, 1.0, i, 0.5, pair.omega, pair.v, controls, 400, SeededStream(31).spawn(i))
            corrected = values + remainders
            for n in range(controls.max_generation):
                col = corrected[:, n]
                se = col.std(ddof=1) / np.sqrt(col.size)
                assert abs(col.mean() - pair.v[i]) < 4.0 * se + 1e-12

    def test_trace_needs_a_generation(self):
        with pytest.raises(PreconditionError):
            genealogical_trace(binary_split(), 1.0, 0, 0.5, 1.0, ONE, SimControls(max_generation=0), 2, SeededStream(1))

    def test_m2_constancy_with_horizon_cuts(self):
        # cells cut at the horizon go to the ledger, which keeps the corrected mean at v_i
        spec = m2()
        pair = admissible_roots(spec).lower
        controls = SimControls(max_generation=4, min_size=1e-2, horizon=2.0)
        for i in range(2):
            values, remainders = genealogical_trace(spec, 1.0, i, -0.5, pair.omega, pair.v, controls, 400, SeededStream(33).spawn(i))
            corrected = values + remainders
            for n in range(controls.max_generation):
                col = corrected[:, n]
                se = col.std(ddof=1) / np.sqrt(col.size)
                assert abs(col.mean() - pair.v[i]) < 4.0 * se + 1e-12, (i, n, col.mean(), se)

    def test_upper_martingale_degenerates(self):
        # halving with drift 0.1: ω₊ ≈ 10, so a generation of pieces carries almost no ω₊-mass
        spec = drifted_split()
        roots = admissible_roots(spec)
        controls = SimControls(max_generation=3, min_size=1e-2)
        medians = {}
        for label, pair in (("lower", roots.lower), ("upper", roots.upper)):
            values, remainders = genealogical_trace(spec, 1.0, 0, 0.5, pair.omega, pair.v, controls, 100, SeededStream(34).spawn(label))
            medians[label] = np.median((values + remainders) / pair.v[0], axis=0)
        assert np.all(medians["upper"] < 0.1)
        assert medians["upper"][-1] <= medians["upper"][0]
        assert medians["lower"][-1] > 0.1


class TestTemporalMartingale:
    CONTROLS = SimControls(max_generation=8, min_size=1e-3, horizon=1.0)
    TIMES = (0.25, 0.5, 1.0)

    def test_minus_martingale_does_not_grow(self):
        pair = admissible_roots(m2()).lower
        trace = temporal_martingale_trace(m2(), 1.0, 0, -0.5, pair, self.TIMES, self.CONTROLS, 200, SeededStream(35))
        means, ses = trace.means(), trace.ses()
        target = pair.v[0]
        assert means[0] <= target + 4.0 * ses[0]
        for k in range(len(means) - 1):
            assert means[k + 1] <= means[k] + 4.0 * np.hypot(ses[k], ses[k + 1])
        assert np.all((trace.unresolved_frac >= 0) & (trace.unresolved_frac <= 1))
        assert [row["t"] for row in trace.to_rows()] == list(self.TIMES)

    def test_lp_moment_stays_bounded(self):
        roots = admissible_roots(m2())
        p = min(2.0, 1.0 + 0.5 * (roots.upper.omega / roots.lower.omega - 1.0))
        trace = lp_moment_trace(m2(), 1.0, 0, -0.5, roots.lower, p, self.TIMES, self.CONTROLS, 200, SeededStream(36))
        means = trace.means()
        assert trace.moment_order == pytest.approx(p)
        assert np.all(means > 0)
        assert float(np.max(means) / means[0]) <= 2.0
        assert all(row["p"] == pytest.approx(p) for row in trace.to_rows())

    def test_times_beyond_horizon_refused(self):
        pair = admissible_roots(m2()).lower
        with pytest.raises(PreconditionError):
            temporal_martingale_trace(m2(), 1.0, 0, -0.5, pair, (0.5, 2.0), self.CONTROLS, 2, SeededStream(1))
