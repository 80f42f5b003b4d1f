"""
Shipped MAP, smoothing and affine fixtures.

Config files refer to them as "fixture:<name>". Types are 0-based.
"""

import math

import numpy as np

from domain.models.cascade import AffineAtom, AffineSpec, OffspringAtom, SmoothingSpec
from domain.models.map_spec import LevyComponent, MapSpec, TransitionJump, atoms_from_triples
from domain.services.map_spectral import reflect_spec

LOG2 = math.log(2.0)
LOG3 = math.log(3.0)


def m2() -> MapSpec:
    """Two-type reference fixture with Brownian part, two split sizes and transition jumps."""
    return MapSpec(
        n_types=2,
        q_matrix=np.array([[-1.0, 1.0], [2.0, -2.0]]),
        levy=(
            LevyComponent(drift=0.07, gauss_var=0.02, atoms=atoms_from_triples([(-LOG2, 0.8, 0), (-LOG3, 0.3, 1)])),
            LevyComponent(drift=0.12, gauss_var=0.0, atoms=atoms_from_triples([(-LOG2, 1.0, 1)])),
        ),
        trans={
            (0, 1): TransitionJump(atoms=atoms_from_triples([(-0.2, 0.5, 0), (0.1, 0.5, 1)])),
            (1, 0): TransitionJump.zero(type_mark=0),
        },
        name="m2",
    )


def m2_upward() -> MapSpec:
    return reflect_spec(m2()).with_name("m2-upward")


def _single_type(name: str, drift: float = 0.0, gauss_var: float = 0.0, atoms=()) -> MapSpec:
    return MapSpec(
        n_types=1,
        q_matrix=np.zeros((1, 1)),
        levy=(LevyComponent(drift=drift, gauss_var=gauss_var, atoms=atoms_from_triples(atoms)),),
        name=name,
    )


def binary_split() -> MapSpec:
    """Conservative halving at rate 1: a single admissible root ω = 1."""
    return _single_type("binary-split", atoms=[(-LOG2, 1.0, 0)])


def drifted_split() -> MapSpec:
    """Halving at rate 1 plus drift 0.1: two roots around the minimum at q ≈ 3.79."""
    return _single_type("drifted-split", drift=0.1, atoms=[(-LOG2, 1.0, 0)])


def dufresne() -> MapSpec:
    """ξ = B − 2s; ∫e^{2ξ} has mean 1/2."""
    return _single_type("dufresne", drift=-2.0, gauss_var=1.0)


def pure_drift_up() -> MapSpec:
    return _single_type("pure-drift-up", drift=1.0)


def pure_drift_down() -> MapSpec:
    return _single_type("pure-drift-down", drift=-1.0)


def kesten_affine() -> AffineSpec:
    """A uniform on {1/2, √1.75}, B ≡ 1: E[A²] = 1, so the tail exponent is 2."""
    law = (AffineAtom(0.5, 0.5, 1.0), AffineAtom(0.5, math.sqrt(1.75), 1.0))
    return AffineSpec(n_types=1, laws=(law,), v=np.ones(1), name="kesten-affine")


def binary_smoothing() -> SmoothingSpec:
    """Deterministic halving: R = R_1/2 + R_2/2, exponent 1, fixed point ≡ 1."""
    law = (OffspringAtom(1.0, (0, 0), (0.5, 0.5)),)
    return SmoothingSpec(n_types=1, laws=(law,), v=np.ones(1), name="binary-smoothing")


def random_spec(n_types: int, gen: np.random.Generator, name: str = "random") -> MapSpec:
    """A valid spec with a dense irreducible Q, a Brownian part and two atoms per type."""
    q = gen.uniform(0.2, 2.0, size=(n_types, n_types))
    np.fill_diagonal(q, 0.0)
    np.fill_diagonal(q, -q.sum(axis=1))
    levy = []
    for _ in range(n_types):
        sizes = -gen.uniform(0.1, 1.5, size=2)
        rates = gen.uniform(0.1, 1.0, size=2)
        marks = gen.integers(0, n_types, size=2)
        levy.append(
            LevyComponent(
                drift=float(gen.uniform(-0.2, 0.3)),
                gauss_var=float(gen.uniform(0.0, 0.1)),
                atoms=atoms_from_triples(zip(sizes, rates, marks)),
            )
        )
    trans = {}
    for i in range(n_types):
        for j in range(n_types):
            if i != j:
                trans[(i, j)] = TransitionJump(
                    atoms=atoms_from_triples([(float(gen.uniform(-0.5, 0.5)), 1.0, int(gen.integers(0, n_types)))])
                )
    return MapSpec(n_types, q, tuple(levy), trans, name=name)


MAP_FIXTURES = {
    "m2": m2,
    "m2-upward": m2_upward,
    "binary-split": binary_split,
    "drifted-split": drifted_split,
    "dufresne": dufresne,
    "pure-drift-up": pure_drift_up,
    "pure-drift-down": pure_drift_down,
}

AFFINE_FIXTURES = {
    "kesten-affine": kesten_affine,
}

SMOOTHING_FIXTURES = {
    "binary-smoothing": binary_smoothing,
}

FIXTURE_PREFIX = "fixture:"


def fixture_names() -> list[str]:
    return sorted(MAP_FIXTURES)
