"""
tests/unit/test_rng_streams.py

Keyed random streams, replica ordering and order-insensitive reductions.
"""
from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parent.parent.parent
sys.path.insert(0, str(ROOT))

from domain.services.rng_streams import SeededStream, as_stream, mean_se, run_replicas, tag, weighted_mean_se


def _first_draw(stream: SeededStream) -> float:
    return float(stream.generator().random())


def _reversed_map(task, items):
    items = list(items)
    out = [task(s) for s in reversed(items)]
    return list(reversed(out))


class TestSeededStream:
    def test_same_keys_same_numbers(self):
        a = SeededStream(7).spawn("tails", 3).generator().random(5)
        b = SeededStream(7).spawn("tails", 3).generator().random(5)
        np.testing.assert_array_equal(a, b)

    def test_keys_separate_streams(self):
        base = SeededStream(7)
        draws = {_first_draw(base.spawn(k)) for k in range(20)}
        assert len(draws) == 20
        assert _first_draw(SeededStream(8).spawn(0)) != _first_draw(base.spawn(0))

    def test_spawn_is_associative(self):
        assert SeededStream(1).spawn(2).spawn(3) == SeededStream(1).spawn(2, 3)

    def test_suite_tags_are_fixed(self):
        assert tag("spectral") == 1
        assert tag("entrance") == 9
        assert tag("wald") == tag("wald")
        assert tag("wald") != tag("laplace")

    def test_tie_breaker_is_deterministic(self):
        s = SeededStream(3, (1, 2))
        assert s.tie_breaker(4) == SeededStream(3, (1, 2)).tie_breaker(4)
        assert s.tie_breaker(4) != s.tie_breaker(5)

    def test_as_stream(self):
        s = SeededStream(5)
        assert as_stream(s) is s
        assert as_stream(5) == s


class TestReplicas:
    def test_results_in_replica_order(self):
        stream = SeededStream(11)
        plain = run_replicas(_first_draw, 16, stream)
        assert plain == [_first_draw(stream.spawn(k)) for k in range(16)]

    def test_execution_order_does_not_matter(self):
        stream = SeededStream(11)
        assert run_replicas(_first_draw, 16, stream, _reversed_map) == run_replicas(_first_draw, 16, stream)


class TestMeanSe:
    def test_known_values(self):
        mean, se = mean_se([1.0, 2.0, 3.0, 4.0])
        assert mean == 2.5
        assert se == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2.0)

    def test_order_insensitive(self):
        values = np.random.default_rng(0).standard_cauchy(1000)
        assert mean_se(values) == mean_se(values[::-1])

    def test_degenerate_sizes(self):
        assert all(np.isnan(mean_se([])))
        assert mean_se([2.0]) == (2.0, float("inf"))

    def test_weighted(self):
        mean, _ = weighted_mean_se(np.array([1.0, 3.0]), np.array([2.0, 0.0]))
        assert mean == 1.0
