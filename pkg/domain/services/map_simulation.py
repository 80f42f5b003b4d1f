"""
domain/services/map_simulation.py

Exact piecewise simulation of finite-type MAPs and the Monte Carlo checks
built on it (Laplace matrix, Wald martingale, time reversal).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import partial
from typing import Optional, Sequence

import numpy as np

from domain.errors import PathHorizonError, PreconditionError
from domain.models.map_spec import MapSpec
from domain.models.paths import (
    KIND_LEVY,
    KIND_NONE,
    KIND_TRANSITION,
    MapPath,
    interleave_values,
)
from domain.services.linalg import expm
from domain.services.map_spectral import dual_spec, matrix_exponent, spectral_data, stationary_distribution
from domain.services.rng_streams import Mapper, SeededStream, mean_se, run_replicas

logger = logging.getLogger(__name__)


def _generator(rng) -> np.random.Generator:
    if isinstance(rng, SeededStream):
        return rng.generator()
    return rng


def sample_map_path(
    spec: MapSpec,
    start_type: int,
    horizon: float,
    rng,
    start_value: float = 0.0,
    gauss_grid: Optional[float] = None,
) -> MapPath:
    """
    Exact simulation of (ξ, Θ) on [0, horizon].

    Holding times are Exp(−q_ii); inside a holding interval the compound
    Poisson atoms are placed uniformly, and Gaussian increments are drawn
    between consecutive knots. With `gauss_grid = h` the Gaussian part of a
    type with σ² > 0 also gets knots every h units of time.
    """
    if not horizon > 0 or not np.isfinite(horizon):
        raise PathHorizonError(f"horizon must be positive and finite, got {horizon}")
    gen = _generator(rng)
    n = spec.n_types
    q = spec.q_matrix

    times = [np.zeros(1)]
    jumps = [np.zeros(1)]
    marks = [np.full(1, -1, dtype=int)]
    kinds = [np.zeros(1, dtype=int)]
    types = [np.full(1, int(start_type), dtype=int)]
    drift_parts: list[np.ndarray] = []
    gauss_parts: list[np.ndarray] = []

    t = 0.0
    i = int(start_type)
    killed_at: Optional[float] = None
    while True:
        comp = spec.levy[i]
        rho = -q[i, i]
        hold = gen.exponential(1.0 / rho) if rho > 0 else np.inf
        kill_t = t + gen.exponential(1.0 / comp.kill_rate) if comp.kill_rate > 0 else np.inf
        end = min(t + hold, horizon, kill_t)
        span = end - t

        rate = comp.total_rate
        n_atoms = int(gen.poisson(rate * span)) if rate > 0 else 0
        atom_times = np.sort(t + span * gen.random(n_atoms))
        if n_atoms:
            idx = gen.choice(len(comp.atoms), size=n_atoms, p=comp.weights() / rate)
            atom_sizes = comp.sizes()[idx]
            atom_marks = comp.marks()[idx]
        else:
            atom_sizes = np.zeros(0)
            atom_marks = np.zeros(0, dtype=int)

        if gauss_grid and comp.gauss_var > 0:
            grid = np.arange(t + gauss_grid, end, gauss_grid)
            grid = grid[grid < end]
        else:
            grid = np.zeros(0)

        ev_times = np.concatenate([atom_times, grid])
        ev_sizes = np.concatenate([atom_sizes, np.zeros(len(grid))])
        ev_marks = np.concatenate([atom_marks, np.full(len(grid), -1, dtype=int)])
        ev_kinds = np.concatenate([np.full(n_atoms, KIND_LEVY, dtype=int), np.full(len(grid), KIND_NONE, dtype=int)])
        order = np.argsort(ev_times, kind="stable")
        ev_times, ev_sizes, ev_marks, ev_kinds = ev_times[order], ev_sizes[order], ev_marks[order], ev_kinds[order]

        is_transition = t + hold < min(horizon, kill_t)
        killed_now = kill_t < min(t + hold, horizon)
        if is_transition:
            probs = q[i].copy()
            probs[i] = 0.0
            j = int(gen.choice(n, p=probs / rho))
            jump = spec.transition(i, j)
            k = int(gen.choice(len(jump.atoms), p=jump.probs())) if jump.atoms else 0
            end_size = float(jump.sizes()[k]) if jump.atoms else 0.0
            end_mark = int(jump.marks()[k]) if jump.atoms else j
            end_kind = KIND_TRANSITION
            next_type = j
        else:
            end_size, end_mark, end_kind, next_type = 0.0, -1, KIND_NONE, i

        knot_t = np.concatenate([ev_times, [end]])
        durations = np.diff(np.concatenate([[t], knot_t]))
        drift_parts.append(comp.drift * durations)
        if comp.gauss_var > 0:
            gauss_parts.append(np.sqrt(comp.gauss_var * durations) * gen.standard_normal(len(durations)))
        else:
            gauss_parts.append(np.zeros(len(durations)))

        times.append(knot_t)
        jumps.append(np.concatenate([ev_sizes, [end_size]]))
        marks.append(np.concatenate([ev_marks, [end_mark]]))
        kinds.append(np.concatenate([ev_kinds, [end_kind]]))
        types.append(np.concatenate([np.full(len(ev_times), i, dtype=int), [next_type]]))

        t = end
        i = next_type
        if killed_now:
            killed_at = end
            break
        if end >= horizon:
            break

    knot_jumps = np.concatenate(jumps)
    drift_inc = np.concatenate(drift_parts)
    gauss_inc = np.concatenate(gauss_parts)
    left, right = interleave_values(float(start_value), drift_inc + gauss_inc, knot_jumps[1:])
    return MapPath(
        knot_times=np.concatenate(times),
        left_values=left,
        right_values=right,
        types=np.concatenate(types),
        knot_jumps=knot_jumps,
        knot_marks=np.concatenate(marks),
        knot_kinds=np.concatenate(kinds),
        drift_inc=drift_inc,
        gauss_inc=gauss_inc,
        horizon=float(end if killed_at is not None else horizon),
        killed_at=killed_at,
    )


def state_at(path: MapPath, t: float) -> Optional[tuple[float, int]]:
    """(ξ(t), Θ(t)) or None once the path is killed."""
    if path.killed and t >= path.killed_at:
        return None
    return path.value_at(t)


# ── Laplace matrix ────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class LaplaceEstimate:
    z: float
    t: float
    mean: np.ndarray
    se: np.ndarray
    exact: np.ndarray
    reps: int

    def z_scores(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            scores = np.abs(self.mean - self.exact) / self.se
        return np.where(self.se > 0, scores, np.where(np.isclose(self.mean, self.exact, atol=1e-12), 0.0, np.inf))

    def within(self, multiplier: float = 3.0) -> bool:
        return bool(np.all(self.z_scores() <= multiplier))

    def to_dict(self) -> dict:
        return {
            "z": self.z,
            "t": self.t,
            "reps": self.reps,
            "mean": self.mean.tolist(),
            "se": self.se.tolist(),
            "exact": self.exact.tolist(),
        }


def _endpoint(spec: MapSpec, start_type: int, t: float, stream: SeededStream) -> tuple[float, int, bool]:
    path = sample_map_path(spec, start_type, t, stream)
    if path.killed:
        return 0.0, -1, True
    return path.end_value, path.end_type, False


def empirical_laplace_matrix(
    spec: MapSpec,
    z: float,
    t: float,
    reps: int,
    rng: SeededStream,
    mapper: Optional[Mapper] = None,
) -> LaplaceEstimate:
    """
    Monte Carlo estimate of E_{0,i}[e^{zξ(t)} 1{Θ(t)=j}] with per-entry
    standard errors, next to the oracle expm(F(z)·t).
    """
    n = spec.n_types
    mean = np.zeros((n, n))
    se = np.zeros((n, n))
    for i in range(n):
        results = run_replicas(partial(_endpoint, spec, i, t), reps, rng.spawn("laplace", i), mapper)
        values = np.array([r[0] for r in results])
        end_types = np.array([r[1] for r in results])
        alive = ~np.array([r[2] for r in results])
        for j in range(n):
            contrib = np.where(alive & (end_types == j), np.exp(z * values), 0.0)
            mean[i, j], se[i, j] = mean_se(contrib)
    exact = expm(matrix_exponent(spec, z) * t)
    logger.debug("empirical_laplace_matrix z=%g t=%g reps=%d max|diff|=%.3e", z, t, reps, np.max(np.abs(mean - exact)))
    return LaplaceEstimate(z=z, t=t, mean=mean, se=se, exact=exact, reps=reps)


# ── Stationary increments and Wald martingale ────────────────────────────────

def _stationary_increment(spec: MapSpec, pi: np.ndarray, t: float, stream: SeededStream) -> float:
    gen = stream.generator()
    i = int(gen.choice(spec.n_types, p=pi))
    path = sample_map_path(spec, i, t, gen)
    return path.end_value


def stationary_increment_samples(
    spec: MapSpec, t: float, reps: int, rng: SeededStream, mapper: Optional[Mapper] = None
) -> np.ndarray:
    """Samples of ξ(t) with Θ(0) ~ π (conservative specs); mean ≈ χ′(0)·t."""
    if not spec.is_conservative:
        raise PreconditionError("stationary increments require a conservative spec")
    pi = stationary_distribution(spec)
    return np.array(run_replicas(partial(_stationary_increment, spec, pi, t), reps, rng.spawn("stationary"), mapper))


def _wald_values(
    spec: MapSpec, gamma: float, chi_g: float, w: np.ndarray, start_type: int, times: tuple[float, ...], stream: SeededStream
) -> list[float]:
    path = sample_map_path(spec, start_type, max(times), stream)
    out = []
    for t in times:
        st = state_at(path, t)
        if st is None:
            out.append(0.0)
            continue
        value, j = st
        out.append(float(w[j] / w[start_type] * np.exp(gamma * value - t * chi_g)))
    return out


def wald_martingale_samples(
    spec: MapSpec,
    gamma: float,
    times: Sequence[float],
    reps: int,
    rng: SeededStream,
    start_type: int = 0,
    mapper: Optional[Mapper] = None,
) -> dict[float, np.ndarray]:
    """Samples of (w_{Θ(t)}(γ)/w_{Θ(0)}(γ))·e^{γξ(t) − tχ(γ)} for each t."""
    sd = spectral_data(spec, gamma)
    times = tuple(float(t) for t in times)
    task = partial(_wald_values, spec, float(gamma), sd.chi, sd.w, int(start_type), times)
    rows = np.array(run_replicas(task, reps, rng.spawn("wald", start_type), mapper))
    return {t: rows[:, k] for k, t in enumerate(times)}


# ── Time reversal ────────────────────────────────────────────────────────────

def reverse_path(path: MapPath) -> MapPath:
    """
    (ξ((T−s)−) − ξ(T), Θ((T−s)−)) for s ∈ [0, T]. Under a stationary start
    this has the law of the dual MAP.
    """
    if path.killed:
        raise PreconditionError("cannot reverse a killed path")
    big_t = path.end_time
    k = path.n_segments
    times = big_t - path.knot_times[::-1]
    times[0] = 0.0
    jumps = np.zeros(k + 1)
    marks = np.full(k + 1, -1, dtype=int)
    kinds = np.zeros(k + 1, dtype=int)
    if k > 1:
        jumps[1:k] = -path.knot_jumps[k - 1:0:-1]
        marks[1:k] = path.knot_marks[k - 1:0:-1]
        kinds[1:k] = path.knot_kinds[k - 1:0:-1]
    types = np.empty(k + 1, dtype=int)
    types[:k] = path.types[k - 1::-1] if k > 0 else path.types[:0]
    types[k] = path.types[0]
    drift_inc = -path.drift_inc[::-1]
    gauss_inc = -path.gauss_inc[::-1]
    left, right = interleave_values(0.0, drift_inc + gauss_inc, jumps[1:])
    return MapPath(
        knot_times=times,
        left_values=left,
        right_values=right,
        types=types,
        knot_jumps=jumps,
        knot_marks=marks,
        knot_kinds=kinds,
        drift_inc=drift_inc,
        gauss_inc=gauss_inc,
        horizon=big_t,
        killed_at=None,
    )


def _reversed_endpoint(spec: MapSpec, pi: np.ndarray, t: float, stream: SeededStream) -> tuple[int, float, int]:
    gen = stream.generator()
    i = int(gen.choice(spec.n_types, p=pi))
    rev = reverse_path(sample_map_path(spec, i, t, gen))
    return rev.start_type, rev.end_value, rev.end_type


def reversed_laplace_matrix(
    spec: MapSpec, z: float, t: float, reps: int, rng: SeededStream, mapper: Optional[Mapper] = None
) -> LaplaceEstimate:
    """Laplace matrix of reversed stationary paths against expm(F♮(z)·t)."""
    if not spec.is_conservative:
        raise PreconditionError("time reversal check requires a conservative spec")
    n = spec.n_types
    pi = stationary_distribution(spec)
    results = run_replicas(partial(_reversed_endpoint, spec, pi, t), reps, rng.spawn("reversal"), mapper)
    starts = np.array([r[0] for r in results])
    values = np.array([r[1] for r in results])
    ends = np.array([r[2] for r in results])
    mean = np.zeros((n, n))
    se = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            contrib = np.where((starts == i) & (ends == j), np.exp(z * values), 0.0) / pi[i]
            mean[i, j], se[i, j] = mean_se(contrib)
    exact = expm(matrix_exponent(dual_spec(spec), z) * t)
    return LaplaceEstimate(z=z, t=t, mean=mean, se=se, exact=exact, reps=reps)
