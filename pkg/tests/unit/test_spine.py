"""
tests/unit/test_spine.py

Tagged leaves, the spine MAP and the many-to-one comparison.
"""
from __future__ import annotations

import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parent.parent.parent
sys.path.insert(0, str(ROOT))

from config.fixtures import binary_split, m2
from domain.errors import InsufficientSamplesError
from domain.models.cells import SimControls, TaggedSpine
from domain.services.cell_system import simulate_tree
from domain.services.cumulants import admissible_roots, spine_spec
from domain.services.rng_streams import SeededStream
from domain.services.spine import (
    SpineEquivalence,
    TaggedArmRow,
    direct_spine,
    generation_histogram,
    hanging_pieces,
    rebuild_check,
    sample_tagged_leaf,
    spine_equivalence_test,
)
from domain.services.stats_checks import ks_passed

ONE = np.ones(1)


@pytest.fixture(scope="module")
def binary_pair():
    return admissible_roots(binary_split()).lower


class TestTaggedLeaf:
    def test_weight_is_one_when_mass_is_conserved(self):
        controls = SimControls(max_generation=4, min_size=1e-2)
        for k in range(4):
            tree = simulate_tree(binary_split(), 1.0, 0, 0.5, controls, SeededStream(50).spawn(k))
            spine = sample_tagged_leaf(tree, 1.0, ONE, np.random.default_rng(k))
            assert spine.weight == pytest.approx(1.0, rel=1e-9)
            assert spine.leaf_prefix[0] == ()
            assert np.all(np.diff(spine.generation_times) >= 0)
            if not spine.flagged:
                assert len(spine.leaf_prefix) == controls.max_generation + 1

    def test_flagged_spine_has_no_pieces(self):
        controls = SimControls(max_generation=2, min_size=1e-2)
        tree = simulate_tree(binary_split(), 1.0, 0, 0.5, controls, SeededStream(5))
        flagged = TaggedSpine(leaf_prefix=((),), generation_times=np.zeros(1), weight=1.0, flagged=True)
        assert hanging_pieces(tree, flagged) == []
        assert flagged.state_at(0.5) is None

    def test_generation_histogram_is_normalized(self):
        controls = SimControls(max_generation=4, min_size=1e-3, horizon=2.0)
        spines = []
        for k in range(20):
            tree = simulate_tree(binary_split(), 1.0, 0, -0.5, controls, SeededStream(60).spawn(k))
            spines.append(sample_tagged_leaf(tree, 1.0, ONE, np.random.default_rng(k), n=3))
        hist = generation_histogram(spines, 0.5)
        if hist:
            assert math.fsum(hist.values()) == pytest.approx(1.0)
            assert all(g >= 0 for g in hist)


class TestDirectSpine:
    def test_binary_spine_halves(self, binary_pair):
        # at ω = 1 the spine keeps a half at rate 1/2 from each split term
        path = direct_spine(binary_split(), binary_pair, 1.0, 0, -0.5, 3.0, SeededStream(2))
        size, _ = path.query(2.5)
        k = -math.log2(size)
        assert k == pytest.approx(round(k), abs=1e-9)

    def test_spine_spec_rate(self, binary_pair):
        spine = spine_spec(binary_split(), binary_pair)
        assert spine.levy[0].total_rate == pytest.approx(1.0)
        assert spine.is_conservative


class TestEquivalence:
    def test_too_few_replicas(self, binary_pair):
        with pytest.raises(InsufficientSamplesError):
            spine_equivalence_test(
                binary_split(), binary_pair, 1.0, 0, -0.5, 1.0, 5, SeededStream(1), SimControls(max_generation=3)
            )

    def test_many_to_one(self, binary_pair):
        controls = SimControls(max_generation=8, min_size=1e-4, horizon=1.0)
        result = spine_equivalence_test(
            binary_split(), binary_pair, 1.0, 0, -0.5, 1.0, 150, SeededStream(77), controls, min_reps=100
        )
        for check in result.many_to_one:
            gap = abs(check.tree_side.estimate - check.spine_side.estimate)
            assert gap <= 4.0 * np.hypot(check.tree_side.se, check.spine_side.se) + 1e-9, check.to_dict()
        assert result.flagged_weight_fraction() < 0.05

    def test_rebuild_needs_pieces(self, binary_pair):
        with pytest.raises(InsufficientSamplesError):
            rebuild_check(binary_split(), -0.5, SimControls(), [], SeededStream(1), min_pieces=1)

    def test_m2_tagged_leaf_matches_spine_map(self):
        pair = admissible_roots(m2()).lower
        controls = SimControls(max_generation=8, min_size=1e-4, horizon=1.0)
        result = spine_equivalence_test(m2(), pair, 1.0, 0, -0.5, 1.0, 200, SeededStream(91), controls, min_reps=100)
        for check in result.many_to_one:
            assert abs(check.z_score) <= 3.0, check.to_dict()
        assert ks_passed(result.ks, 0.01), {j: r.to_dict() for j, r in result.ks.items()}
        assert result.unresolved_weight_fraction() < 0.05


def _row(weight: float, resolved: bool, flagged: bool = False) -> TaggedArmRow:
    return TaggedArmRow(
        weight=weight, flagged=flagged, resolved=resolved, alive=resolved,
        log_size=0.0 if resolved else math.nan, type=0 if resolved else -1,
        generation=1 if resolved else None, many_to_one={},
    )


class TestWeightFractions:
    def _result(self, rows):
        empty = np.zeros(0)
        return SpineEquivalence(1.0, rows, empty, empty.astype(int), empty.astype(bool), {}, [])

    def test_unresolved_weight_is_reported_apart_from_flagged(self):
        rows = [_row(2.0, True), _row(1.0, False), _row(1.0, True, flagged=True)]
        result = self._result(rows)
        assert result.unresolved_weight_fraction() == pytest.approx(0.25)
        assert result.flagged_weight_fraction() == pytest.approx(0.25)
        tagged = [r for r in result.rows() if r["arm"] == "tagged"]
        assert [r["resolved"] for r in tagged] == [True, False, True]
        assert [r["flagged"] for r in tagged] == [False, False, True]

    def test_no_weight_counts_as_fully_unresolved(self):
        result = self._result([_row(0.0, True)])
        assert result.unresolved_weight_fraction() == 1.0


class TestRebuild:
    CONTROLS = SimControls(max_generation=6, min_size=1e-3, horizon=1.5)

    def _pieces(self, spec, pair, alpha, reps, seed):
        pieces = []
        for k in range(reps):
            tree = simulate_tree(spec, 1.0, 0, alpha, self.CONTROLS, SeededStream(seed).spawn(k))
            spine = sample_tagged_leaf(tree, pair.omega, pair.v, np.random.default_rng(seed + k))
            pieces.extend(hanging_pieces(tree, spine))
        return pieces

    def test_binary_offspring_are_dyadic(self, binary_pair):
        pieces = self._pieces(binary_split(), binary_pair, -0.5, 20, 300)
        assert pieces
        for piece in pieces:
            assert len(piece.offspring) == len(piece.offspring_types)
            for s in piece.offspring:
                k = -math.log2(s)
                assert k >= 1.0 - 1e-9
                assert k == pytest.approx(round(k), abs=1e-9)

    def test_binary_pieces_match_fresh_cells(self, binary_pair):
        pieces = self._pieces(binary_split(), binary_pair, -0.5, 60, 310)
        report = rebuild_check(binary_split(), -0.5, self.CONTROLS, pieces, SeededStream(311), min_pieces=50)
        assert report.n_pieces == len(pieces)
        assert report.n_offspring > 0 and report.n_fresh_offspring > 0
        assert ks_passed(report.ks, 0.01), report.to_dict()

    def test_distorted_offspring_are_rejected(self, binary_pair):
        pieces = self._pieces(binary_split(), binary_pair, -0.5, 60, 310)
        distorted = [replace(p, offspring=tuple(1.5 * s for s in p.offspring)) for p in pieces]
        report = rebuild_check(binary_split(), -0.5, self.CONTROLS, distorted, SeededStream(311), min_pieces=50)
        assert not ks_passed(report.ks, 0.01), report.to_dict()

    def test_m2_pieces_match_fresh_cells(self):
        pair = admissible_roots(m2()).lower
        pieces = self._pieces(m2(), pair, -0.5, 80, 320)
        report = rebuild_check(m2(), -0.5, self.CONTROLS, pieces, SeededStream(321), min_pieces=50)
        assert sum(report.type_counts.values()) == report.n_offspring
        assert ks_passed(report.ks, 0.01), report.to_dict()
