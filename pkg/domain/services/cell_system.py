"""
domain/services/cell_system.py

Growth-fragmentation cell system on the Ulam tree.

Every negative jump ΔX of a cell releases a child of size |ΔX| and type the
jump's mark. Children are labelled (u,1), (u,2), … by descending initial
size, ties broken by birth time and then by a seeded hash.

Truncation
──────────
A child born below `min_size`, beyond `max_generation` or after the horizon
is not simulated; a cell stopped before its death (below `min_size` or at
the horizon) is "cut". Both go into the TruncationLedger, so that
E[ℳ(n)] + E[ledger up to generation n+1] = v_i x^ω.
"""
from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass
from functools import partial
from typing import Callable, Optional, Sequence

import numpy as np

from domain.errors import PreconditionError
from domain.models.cells import (
    LEDGER_CUT,
    LEDGER_DISCARDED,
    CellRecord,
    CellTree,
    LedgerEntry,
    Particle,
    SimControls,
    Snapshot,
)
from domain.models.estimates import Estimate
from domain.models.map_spec import MapSpec
from domain.models.paths import CEMETERY
from domain.models.spectral import AdmissiblePair
from domain.services.lamperti import simulate_ssmp
from domain.services.rng_streams import Mapper, SeededStream, mean_se, run_replicas

logger = logging.getLogger(__name__)

TestFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]


def _cell_stream(stream: SeededStream, label: tuple[int, ...]) -> SeededStream:
    return stream.spawn("cell", len(label), *label)


def simulate_tree(
    spec: MapSpec,
    x: float,
    i: int,
    alpha: float,
    controls: SimControls,
    rng: SeededStream,
) -> CellTree:
    """Breadth-first simulation of the truncated cell system from (x, i)."""
    tree = CellTree(root_size=float(x), root_type=int(i), alpha=float(alpha), controls=controls)
    pending = deque([((), None, 0.0, float(x), int(i), None, None, None)])
    while pending:
        label, parent, birth, size, typ, before, after, parent_type = pending.popleft()
        stream = _cell_stream(rng, label)
        path = simulate_ssmp(spec, size, typ, alpha, controls.horizon - birth, stream, floor=controls.min_size)
        cell = CellRecord(
            label=label,
            parent=parent,
            birth_time=birth,
            initial_size=size,
            birth_type=typ,
            path=path,
            parent_size_before=before,
            parent_size_after=after,
            parent_type_after=parent_type,
        )
        tree.cells[label] = cell
        g = cell.generation

        if path.stop_reason != "killed":
            tree.ledger.add(
                LedgerEntry(g + 1, path.end_size, path.end_type, LEDGER_CUT, label, birth + path.observed_until)
            )

        rec = path.jump_records()
        neg = np.flatnonzero(rec["delta"] < 0)
        kept = []
        for k in neg:
            child_size = float(-rec["delta"][k])
            child_time = birth + float(rec["time"][k])
            child_type = int(rec["type_mark"][k])
            if child_size < controls.min_size or g + 1 > controls.max_generation or child_time >= controls.horizon:
                tree.ledger.add(LedgerEntry(g + 1, child_size, child_type, LEDGER_DISCARDED, label, child_time))
                continue
            size_before = float(rec["size_before"][k])
            kept.append(
                (
                    -child_size,
                    child_time,
                    stream.tie_breaker(int(k)),
                    child_size,
                    child_type,
                    size_before,
                    size_before - child_size,
                    int(rec["type_after"][k]),
                )
            )
        kept.sort(key=lambda row: row[:3])
        for rank, row in enumerate(kept, start=1):
            _, child_time, _, child_size, child_type, size_before, size_after, type_after = row
            pending.append((label + (rank,), label, child_time, child_size, child_type, size_before, size_after, type_after))

    logger.debug("simulate_tree: %s, profile=%s", tree, tree.generation_profile())
    return tree


# ── Martingales and snapshots ─────────────────────────────────────────────────

def genealogical_martingale(tree: CellTree, omega: float, v: Sequence[float], n: int) -> float:
    """ℳ(n) = Σ_{|u|=n+1} v_{𝒥_u(0)} 𝒳_u(0)^ω over simulated cells."""
    if n >= tree.controls.max_generation:
        raise PreconditionError(f"ℳ({n}) needs generation {n + 1} ≤ max_generation={tree.controls.max_generation}")
    v = np.asarray(v, dtype=float)
    return math.fsum(float(v[c.birth_type]) * c.initial_size ** omega for c in tree.generation(n + 1))


def snapshot(tree: CellTree, t: float) -> Snapshot:
    if t > tree.controls.horizon:
        raise PreconditionError(f"snapshot time {t} beyond horizon {tree.controls.horizon}")
    particles = []
    unresolved = 0
    for cell in tree.cells.values():
        if cell.birth_time > t:
            continue
        state = cell.state_at(t)
        if state is CEMETERY:
            continue
        if state is None:
            unresolved += 1
            continue
        size, typ = state
        particles.append(Particle(size=size, type=typ, generation=cell.generation, label=cell.label))
    particles.sort(key=lambda p: (-p.size, p.generation, p.label))
    return Snapshot(t=float(t), particles=particles, unresolved=unresolved)


def temporal_martingale(snap: Snapshot, omega: float, v: Sequence[float]) -> float:
    v = np.asarray(v, dtype=float)
    return math.fsum(float(v[p.type]) * p.size ** omega for p in snap.particles)


def empirical_measure(
    snap: Snapshot,
    alpha: float,
    omega_minus: float,
    v_minus: Sequence[float],
    f: TestFunction,
) -> float:
    """⟨ρ_t, f⟩ = Σ v⁻_J X^{ω₋} f(t^{-1/α}X, J)."""
    if not snap.particles:
        return 0.0
    v = np.asarray(v_minus, dtype=float)
    sizes, types = snap.sizes(), snap.types()
    scaled = sizes * snap.t ** (-1.0 / alpha) if snap.t > 0 else sizes
    values = v[types] * sizes ** omega_minus * np.asarray(f(scaled, types), dtype=float)
    return math.fsum(values.tolist())


# ── Replica estimators ────────────────────────────────────────────────────────

@dataclass
class LimitSamples:
    """Terminal genealogical martingale values and their truncation remainders."""
    generation: int
    values: np.ndarray
    remainders: np.ndarray

    def corrected(self) -> np.ndarray:
        return self.values + self.remainders

    def to_rows(self) -> list[dict]:
        return [
            {"replica": k, "generation": self.generation, "value": float(a), "remainder": float(b)}
            for k, (a, b) in enumerate(zip(self.values, self.remainders))
        ]


def _generation_values(spec, x, i, alpha, omega, v, controls, stream) -> tuple[np.ndarray, np.ndarray]:
    tree = simulate_tree(spec, x, i, alpha, controls, stream)
    values = np.array([genealogical_martingale(tree, omega, v, n) for n in range(controls.max_generation)])
    remainders = np.array([tree.ledger.remainder(omega, v, n + 1) for n in range(controls.max_generation)])
    return values, remainders


def genealogical_trace(
    spec: MapSpec,
    x: float,
    i: int,
    alpha: float,
    omega: float,
    v: Sequence[float],
    controls: SimControls,
    reps: int,
    rng: SeededStream,
    mapper: Optional[Mapper] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """(reps × max_generation) arrays of ℳ(n) and of the ledger remainder up to n+1."""
    if controls.max_generation < 1:
        raise PreconditionError("max_generation must be ≥ 1 for genealogical martingales")
    task = partial(_generation_values, spec, float(x), int(i), float(alpha), float(omega), np.asarray(v, dtype=float), controls)
    rows = run_replicas(task, reps, rng.spawn("genealogical"), mapper)
    return np.array([r[0] for r in rows]), np.array([r[1] for r in rows])


def martingale_limit_samples(
    spec: MapSpec,
    x: float,
    i: int,
    alpha: float,
    omega: float,
    v: Sequence[float],
    controls: SimControls,
    reps: int,
    rng: SeededStream,
    mapper: Optional[Mapper] = None,
) -> LimitSamples:
    """ℳ(n_max) with n_max = max_generation − 1 per tree, plus the ledger remainder."""
    values, remainders = genealogical_trace(spec, x, i, alpha, omega, v, controls, reps, rng.spawn("limit"), mapper)
    n = controls.max_generation - 1
    return LimitSamples(generation=n, values=values[:, n], remainders=remainders[:, n])


def _temporal_values(spec, x, i, alpha, omega, v, times, controls, stream) -> tuple[np.ndarray, np.ndarray]:
    tree = simulate_tree(spec, x, i, alpha, controls, stream)
    values, unresolved = [], []
    for t in times:
        snap = snapshot(tree, t)
        values.append(temporal_martingale(snap, omega, v))
        unresolved.append(snap.unresolved)
    return np.array(values), np.array(unresolved)


@dataclass
class MartingaleTrace:
    times: np.ndarray
    estimates: list[Estimate]
    unresolved_frac: np.ndarray
    moment_order: float = 1.0

    def means(self) -> np.ndarray:
        return np.array([e.estimate for e in self.estimates])

    def ses(self) -> np.ndarray:
        return np.array([e.se for e in self.estimates])

    def loglog_slope(self) -> float:
        """Least-squares slope of log mean against log t."""
        t, m = self.times, self.means()
        ok = (t > 0) & (m > 0)
        slope, _ = np.polyfit(np.log(t[ok]), np.log(m[ok]), 1)
        return float(slope)

    def to_rows(self) -> list[dict]:
        return [
            {"t": float(t), "p": self.moment_order, "mean": e.estimate, "se": e.se, "n": e.n, "unresolved_frac": float(u)}
            for t, e, u in zip(self.times, self.estimates, self.unresolved_frac)
        ]


def _trace_samples(spec, x, i, alpha, pair, times, controls, reps, rng, mapper) -> tuple[np.ndarray, np.ndarray]:
    times = np.asarray(times, dtype=float)
    if np.any(times > controls.horizon):
        raise PreconditionError("trace times must not exceed the simulation horizon")
    task = partial(
        _temporal_values, spec, float(x), int(i), float(alpha), float(pair.omega), np.asarray(pair.v, dtype=float), times, controls
    )
    rows = run_replicas(task, reps, rng, mapper)
    return np.array([r[0] for r in rows]), np.array([r[1] for r in rows])


def temporal_martingale_trace(
    spec: MapSpec,
    x: float,
    i: int,
    alpha: float,
    pair: AdmissiblePair,
    times: Sequence[float],
    controls: SimControls,
    reps: int,
    rng: SeededStream,
    mapper: Optional[Mapper] = None,
) -> MartingaleTrace:
    """Mean ± SE of ℳ_t on a time grid."""
    values, unresolved = _trace_samples(spec, x, i, alpha, pair, times, controls, reps, rng.spawn("temporal"), mapper)
    estimates = [Estimate(*mean_se(values[:, k]), n=values.shape[0]) for k in range(values.shape[1])]
    return MartingaleTrace(np.asarray(times, dtype=float), estimates, np.mean(unresolved > 0, axis=0))


def lp_moment_trace(
    spec: MapSpec,
    x: float,
    i: int,
    alpha: float,
    pair: AdmissiblePair,
    p: float,
    times: Sequence[float],
    controls: SimControls,
    reps: int,
    rng: SeededStream,
    mapper: Optional[Mapper] = None,
) -> MartingaleTrace:
    """Mean ± SE of (ℳ_t)^p on a time grid."""
    values, unresolved = _trace_samples(spec, x, i, alpha, pair, times, controls, reps, rng.spawn("lp", str(p)), mapper)
    powered = values ** p
    estimates = [Estimate(*mean_se(powered[:, k]), n=powered.shape[0]) for k in range(powered.shape[1])]
    return MartingaleTrace(np.asarray(times, dtype=float), estimates, np.mean(unresolved > 0, axis=0), moment_order=float(p))


def _h_statistic(spec, i, alpha, omega, v, controls, stream) -> float:
    tree = simulate_tree(spec, 1.0, i, alpha, controls, stream)
    terms = [float(v[c.birth_type]) * c.initial_size ** omega * math.log(c.initial_size) for c in tree.generation(1)]
    terms += [
        float(v[e.type]) * e.size ** omega * math.log(e.size)
        for e in tree.ledger
        if e.generation == 1 and e.kind == LEDGER_DISCARDED
    ]
    return math.fsum(terms) / float(v[i])


def assumption_h_check(
    spec: MapSpec,
    pair: AdmissiblePair,
    alpha: float,
    controls: SimControls,
    reps: int,
    rng: SeededStream,
    mapper: Optional[Mapper] = None,
) -> dict[int, Estimate]:
    """
    Per type i, E_i[Σ_{|u|=1} v_{𝒥_u} 𝒳_u^ω log 𝒳_u] / v_i from a unit Eve
    cell, discarded children included. Cut remainders carry no log-size
    information and are left out.
    """
    first = SimControls(max_generation=1, min_size=controls.min_size, horizon=controls.horizon)
    v = np.asarray(pair.v, dtype=float)
    out: dict[int, Estimate] = {}
    for i in range(spec.n_types):
        task = partial(_h_statistic, spec, i, float(alpha), float(pair.omega), v, first)
        vals = run_replicas(task, reps, rng.spawn("assumption-h", i), mapper)
        out[i] = Estimate(*mean_se(vals), n=len(vals))
    return out


def generation_profile(tree: CellTree) -> dict[int, int]:
    return tree.generation_profile()
