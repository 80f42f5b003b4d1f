"""
domain/services/spine.py

The spine of a growth-fragmentation, built two ways:

  tagged: simulate trees under 𝒫, weight each by (ℳ(n) + ledger)/(v_i x^ω),
          and tag a generation-(n+1) leaf proportionally to v_J X(0)^ω;
  direct: simulate the spine MAP (matrix exponent F̂) through the Lamperti
          transform.

Both arms, the many-to-one identity and the law of the pieces hanging off
the spine are compared here.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import partial
from typing import Optional, Sequence

import numpy as np

from domain.errors import InsufficientSamplesError
from domain.models.cells import CellTree, SimControls, TaggedSpine
from domain.models.estimates import Estimate
from domain.models.map_spec import MapSpec
from domain.models.paths import CEMETERY, SsmpPath
from domain.models.spectral import AdmissiblePair
from domain.services.cell_system import simulate_tree, snapshot
from domain.services.cumulants import spine_spec
from domain.services.lamperti import simulate_ssmp
from domain.services.map_spectral import matrix_exponent, tilt_spec
from domain.services.rng_streams import Mapper, SeededStream, mean_se, run_replicas
from domain.services.stats_checks import KsResult, per_type_ks

logger = logging.getLogger(__name__)

POWER_EXPONENT = 0.1


def sample_tagged_leaf(
    tree: CellTree,
    omega: float,
    v: Sequence[float],
    rng: np.random.Generator,
    n: Optional[int] = None,
) -> TaggedSpine:
    """
    Tag ℒ(n+1) among generation-(n+1) cells and ledger entries of generation
    ≤ n+1, proportionally to v_J X(0)^ω. A ledger pick is flagged unless it
    was set aside at or after the horizon; either way the spine is known up to the
    time of the entry.
    """
    v = np.asarray(v, dtype=float)
    n = tree.controls.max_generation - 1 if n is None else int(n)
    cells = tree.generation(n + 1)
    ledger = [e for e in tree.ledger if e.generation <= n + 1]
    weights = np.array(
        [float(v[c.birth_type]) * c.initial_size ** omega for c in cells]
        + [float(v[e.type]) * e.size ** omega for e in ledger]
    )
    total = math.fsum(weights.tolist())
    norm = float(v[tree.root_type]) * tree.root_size ** omega
    if total <= 0:
        return TaggedSpine(leaf_prefix=((),), generation_times=np.zeros(1), weight=0.0, flagged=True)
    k = int(rng.choice(weights.size, p=weights / total))
    if k >= len(cells):
        entry = ledger[k - len(cells)]
        prefix = tuple(entry.parent[:m] for m in range(len(entry.parent) + 1))
        records = tuple(tree.cells[lab] for lab in prefix)
        times = np.array([c.birth_time for c in records] + [entry.time])
        at_horizon = entry.time >= tree.controls.horizon
        return TaggedSpine(leaf_prefix=prefix, generation_times=times, weight=total / norm, flagged=not at_horizon, cells=records)
    leaf = cells[k].label
    prefix = tuple(leaf[:m] for m in range(len(leaf) + 1))
    records = tuple(tree.cells[lab] for lab in prefix)
    times = np.array([c.birth_time for c in records])
    return TaggedSpine(leaf_prefix=prefix, generation_times=times, weight=total / norm, flagged=False, cells=records)


def direct_spine(
    spec: MapSpec,
    pair: AdmissiblePair,
    x: float,
    i: int,
    alpha: float,
    horizon: float,
    rng,
    spine: Optional[MapSpec] = None,
) -> SsmpPath:
    """(𝒳̂, Ĵ) on [0, horizon] from the spine MAP."""
    spine = spine or spine_spec(spec, pair)
    return simulate_ssmp(spine, x, i, alpha, horizon, rng)


def generation_histogram(spines: Sequence[TaggedSpine], t: float) -> dict[int, float]:
    """Weighted empirical law of n_t over resolved spines."""
    acc: dict[int, float] = {}
    for s in spines:
        g = s.generation_at(t)
        if g is not None:
            acc[g] = acc.get(g, 0.0) + s.weight
    total = math.fsum(acc.values())
    return {g: w / total for g, w in sorted(acc.items())} if total > 0 else {}


# ── Hanging pieces ────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class HangingPiece:
    """
    A piece released by the spine: root size and type, remaining horizon,
    and its first-generation offspring as sizes relative to the root size,
    with their types. Offspring are read off negative jumps of the piece's
    path, so the floor and the horizon censor them the same way on the
    fresh side.
    """
    size: float
    type: int
    remaining: float
    offspring: tuple[float, ...]
    offspring_types: tuple[int, ...]
    weight: float
    kind: str


def _offspring(path: SsmpPath, size: float, after: float = -1.0, until: float = math.inf) -> tuple[tuple[float, ...], tuple[int, ...]]:
    rec = path.jump_records()
    mask = (rec["delta"] < 0) & (rec["time"] > after) & (rec["time"] < until)
    return tuple((-rec["delta"][mask] / size).tolist()), tuple(int(j) for j in rec["type_mark"][mask])


def hanging_pieces(tree: CellTree, spine: TaggedSpine) -> list[HangingPiece]:
    """Siblings released before the spine moved on, and the parent remainder left behind at each move."""
    if spine.flagged:
        return []
    horizon = tree.controls.horizon
    out: list[HangingPiece] = []
    for k in range(len(spine.cells) - 1):
        parent, child = spine.cells[k], spine.cells[k + 1]
        for sib in tree.children(parent.label):
            if sib.label == child.label or sib.birth_time >= child.birth_time:
                continue
            sizes, types = _offspring(sib.path, sib.initial_size, until=horizon - sib.birth_time)
            out.append(HangingPiece(sib.initial_size, sib.birth_type, horizon - sib.birth_time, sizes, types, spine.weight, "sibling"))
        rel = child.birth_time - parent.birth_time
        size = float(child.parent_size_after)
        if size < tree.controls.min_size:
            continue
        sizes, types = _offspring(parent.path, size, after=rel, until=horizon - parent.birth_time)
        out.append(HangingPiece(size, int(child.parent_type_after), horizon - child.birth_time, sizes, types, spine.weight, "remainder"))
    return out


def _fresh_offspring(spec: MapSpec, alpha: float, floor: float, piece: HangingPiece, stream: SeededStream):
    path = simulate_ssmp(spec, piece.size, piece.type, alpha, piece.remaining, stream, floor=floor)
    return _offspring(path, piece.size, until=piece.remaining)


@dataclass
class RebuildReport:
    ks: dict[int, KsResult]
    n_pieces: int
    n_offspring: int
    n_fresh_offspring: int
    type_counts: dict[int, int]

    def to_dict(self) -> dict:
        return {
            "n_pieces": self.n_pieces,
            "n_offspring": self.n_offspring,
            "n_fresh_offspring": self.n_fresh_offspring,
            "type_counts": {str(k): v for k, v in sorted(self.type_counts.items())},
            "ks": {str(k): r.to_dict() for k, r in sorted(self.ks.items())},
        }


def _pool(offspring: Sequence[tuple[tuple[float, ...], tuple[int, ...]]], weights: Sequence[float]):
    values = np.array([s for sizes, _ in offspring for s in sizes], dtype=float)
    types = np.array([j for _, typ in offspring for j in typ], dtype=int)
    w = np.array([wt for (sizes, _), wt in zip(offspring, weights) for _ in sizes], dtype=float)
    return values, types, w


def rebuild_check(
    spec: MapSpec,
    alpha: float,
    controls: SimControls,
    pieces: Sequence[HangingPiece],
    rng: SeededStream,
    mapper: Optional[Mapper] = None,
    min_pieces: int = 50,
) -> RebuildReport:
    """
    Pooled first-generation offspring sizes of the hanging pieces, relative
    to the piece size, against those of fresh cells started from the same
    (size, type, remaining horizon). Compared per offspring type.
    """
    if len(pieces) < min_pieces:
        raise InsufficientSamplesError(f"rebuild check needs >= {min_pieces} hanging pieces, got {len(pieces)}")
    fresh = run_replicas(_FreshTask(spec, float(alpha), controls.min_size, tuple(pieces)), len(pieces), rng.spawn("rebuild"), mapper)
    weights = [p.weight for p in pieces]
    values_a, types_a, w_a = _pool([(p.offspring, p.offspring_types) for p in pieces], weights)
    values_b, types_b, w_b = _pool(fresh, weights)
    ks = per_type_ks(values_a, types_a, values_b, types_b, spec.n_types, w_a, w_b)
    counts = {int(j): int(np.sum(types_a == j)) for j in range(spec.n_types)}
    logger.debug("rebuild_check: %d pieces, %d/%d offspring", len(pieces), values_a.size, values_b.size)
    return RebuildReport(ks=ks, n_pieces=len(pieces), n_offspring=int(values_a.size), n_fresh_offspring=int(values_b.size), type_counts=counts)


@dataclass(frozen=True)
class _FreshTask:
    spec: MapSpec
    alpha: float
    floor: float
    pieces: tuple[HangingPiece, ...]

    def __call__(self, stream: SeededStream):
        idx = stream.keys[-1]
        return _fresh_offspring(self.spec, self.alpha, self.floor, self.pieces[idx], stream)


# ── Spine equivalence ─────────────────────────────────────────────────────────

def _test_values(sizes: np.ndarray, types: np.ndarray, n_types: int) -> dict[str, np.ndarray]:
    out = {"one": np.ones(sizes.size), "power": sizes ** POWER_EXPONENT}
    for j in range(n_types):
        out[f"type{j}"] = (types == j).astype(float)
    return out


@dataclass
class TaggedArmRow:
    weight: float
    flagged: bool
    resolved: bool
    alive: bool
    log_size: float
    type: int
    generation: Optional[int]
    many_to_one: dict[str, float]
    pieces: list[HangingPiece] = field(default_factory=list)


def _tagged_arm(spec, x, i, alpha, omega, v, controls, t, stream: SeededStream) -> TaggedArmRow:
    tree = simulate_tree(spec, x, i, alpha, controls, stream)
    norm = float(v[i]) * x ** omega
    snap = snapshot(tree, t)
    sizes, types = snap.sizes(), snap.types()
    base = v[types] * sizes ** omega / norm if sizes.size else np.zeros(0)
    m2o = {name: math.fsum((base * f).tolist()) for name, f in _test_values(sizes, types, spec.n_types).items()}
    spine = sample_tagged_leaf(tree, omega, v, stream.spawn("tag").generator())
    state = spine.state_at(t)
    resolved = state is not None
    alive = resolved and state is not CEMETERY
    log_size, typ = (math.log(state[0]), int(state[1])) if alive else (math.nan, -1)
    return TaggedArmRow(
        weight=spine.weight,
        flagged=spine.flagged,
        resolved=resolved,
        alive=alive,
        log_size=log_size,
        type=typ,
        generation=spine.generation_at(t),
        many_to_one=m2o,
        pieces=hanging_pieces(tree, spine),
    )


def _direct_arm(spine: MapSpec, x, i, alpha, t, stream: SeededStream) -> tuple[bool, float, int]:
    path = simulate_ssmp(spine, x, i, alpha, t, stream)
    state = path.query(t) if t > 0 else (x, i)
    if state is CEMETERY:
        return False, math.nan, -1
    return True, math.log(state[0]), int(state[1])


@dataclass
class ManyToOneCheck:
    name: str
    tree_side: Estimate
    spine_side: Estimate

    @property
    def z_score(self) -> float:
        se = math.hypot(self.tree_side.se, self.spine_side.se)
        diff = self.tree_side.estimate - self.spine_side.estimate
        return diff / se if se > 0 else (0.0 if diff == 0 else math.inf)

    def to_dict(self) -> dict:
        return {"f": self.name, "trees": self.tree_side.to_dict(), "spine": self.spine_side.to_dict(), "z": self.z_score}


@dataclass
class SpineEquivalence:
    t: float
    tagged: list[TaggedArmRow]
    direct_log: np.ndarray
    direct_types: np.ndarray
    direct_alive: np.ndarray
    ks: dict[int, KsResult]
    many_to_one: list[ManyToOneCheck]

    def _weight_fraction(self, predicate) -> float:
        total = math.fsum(r.weight for r in self.tagged)
        lost = math.fsum(r.weight for r in self.tagged if predicate(r))
        return lost / total if total > 0 else 1.0

    def flagged_weight_fraction(self) -> float:
        """Tagged weight on ledger picks other than horizon cuts."""
        return self._weight_fraction(lambda r: r.flagged)

    def unresolved_weight_fraction(self) -> float:
        """
        Tagged weight whose state at t is unknown. The KS arm drops it
        without renormalising, so it bounds the mass missing from that arm.
        """
        return self._weight_fraction(lambda r: not r.resolved)

    def generation_histogram(self) -> dict[int, float]:
        """Weighted law of the tagged spine's generation at t."""
        acc: dict[int, float] = {}
        for r in self.tagged:
            if r.generation is not None:
                acc[r.generation] = acc.get(r.generation, 0.0) + r.weight
        total = math.fsum(acc.values())
        return {g: w / total for g, w in sorted(acc.items())} if total > 0 else {}

    def pieces(self) -> list[HangingPiece]:
        return [p for r in self.tagged for p in r.pieces]

    def rows(self) -> list[dict]:
        out = [
            {"t": self.t, "log_value": r.log_size, "type": r.type, "arm": "tagged", "weight": r.weight, "flagged": r.flagged, "resolved": r.resolved}
            for r in self.tagged
        ]
        out += [
            {"t": self.t, "log_value": float(lv), "type": int(ty), "arm": "direct", "weight": 1.0, "flagged": False, "resolved": True}
            for lv, ty in zip(self.direct_log, self.direct_types)
        ]
        return out


def spine_equivalence_test(
    spec: MapSpec,
    pair: AdmissiblePair,
    x: float,
    i: int,
    alpha: float,
    t: float,
    reps: int,
    rng: SeededStream,
    controls: SimControls,
    mapper: Optional[Mapper] = None,
    min_reps: int = 100,
) -> SpineEquivalence:
    """
    Arm A: log 𝒳̂(t) of tagged leaves, weighted by the tree weights. Arm B:
    log X̂(t) from the spine MAP. KS per terminal type plus many-to-one
    moments for f ∈ {1, 1_{type=j}, x^0.1}.
    """
    if reps < min_reps:
        raise InsufficientSamplesError(f"spine equivalence needs >= {min_reps} replicas per arm, got {reps}")
    v = np.asarray(pair.v, dtype=float)
    omega = float(pair.omega)
    spine = spine_spec(spec, pair)
    tagged = run_replicas(
        partial(_tagged_arm, spec, float(x), int(i), float(alpha), omega, v, controls, float(t)), reps, rng.spawn("tagged"), mapper
    )
    direct = run_replicas(partial(_direct_arm, spine, float(x), int(i), float(alpha), float(t)), reps, rng.spawn("direct"), mapper)

    alive_b = np.array([d[0] for d in direct], dtype=bool)
    log_b = np.array([d[1] for d in direct])[alive_b]
    types_b = np.array([d[2] for d in direct], dtype=int)[alive_b]

    used = [r for r in tagged if r.alive]
    log_a = np.array([r.log_size for r in used])
    types_a = np.array([r.type for r in used], dtype=int)
    w_a = np.array([r.weight for r in used])
    ks = per_type_ks(log_a, types_a, log_b, types_b, spec.n_types, w_a, None)

    direct_sizes = np.exp(log_b)
    direct_f = _test_values(direct_sizes, types_b, spec.n_types)
    checks = []
    for name in direct_f:
        lhs = np.array([r.many_to_one[name] for r in tagged])
        rhs = np.zeros(len(direct))
        rhs[alive_b] = direct_f[name]
        checks.append(ManyToOneCheck(name, Estimate(*mean_se(lhs), n=lhs.size), Estimate(*mean_se(rhs), n=rhs.size)))

    result = SpineEquivalence(float(t), tagged, log_b, types_b, alive_b, ks, checks)
    logger.debug(
        "spine_equivalence_test: flagged weight %.4f, unresolved weight %.4f",
        result.flagged_weight_fraction(),
        result.unresolved_weight_fraction(),
    )
    return result


# ── Relation between the two spines ──────────────────────────────────────────

def spine_wald_relation(
    spec: MapSpec,
    pair_minus: AdmissiblePair,
    pair_plus: AdmissiblePair,
    grid: Sequence[float],
) -> float:
    """
    max over z of |F_tilt(z) − F̂₊(z)| where F_tilt is the ω₋-spine MAP
    tilted at ω₊ − ω₋.
    """
    tilted = tilt_spec(spine_spec(spec, pair_minus), pair_plus.omega - pair_minus.omega)
    plus = spine_spec(spec, pair_plus)
    return float(max(np.max(np.abs(matrix_exponent(tilted, z) - matrix_exponent(plus, z))) for z in grid))
