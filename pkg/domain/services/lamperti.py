"""
domain/services/lamperti.py

Lamperti-type transform between MAPs and self-similar Markov processes with
types, exponential functionals of MAPs, and entrance laws from 0.

Clock
─────
On a knot segment ξ is linear from r to l over a duration d, so
∫ e^{αξ} = d·e^{αr}·expm1(α(l−r))/(α(l−r)) and the inverse is explicit.
Gaussian parts are linear only after refinement on a grid of step
h = (GAUSS_CLOCK_TOL/(σ|α|))².
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import partial
from typing import Optional

import numpy as np

from config.settings import FUNCTIONAL_REL_TOL, GAUSS_CLOCK_TOL, MAX_PATH_CHUNKS, PATH_CHUNK_LENGTH
from domain.errors import (
    DivergentFunctionalError,
    MomentNotFiniteError,
    NonPositiveMeanError,
    PreconditionError,
)
from domain.models.estimates import Estimate
from domain.models.map_spec import MapSpec
from domain.models.paths import (
    CEMETERY,
    TAIL_BOUND_EXACT,
    TAIL_BOUND_HEURISTIC,
    TAIL_BOUND_MEAN,
    ExpFunctionalSample,
    MapPath,
    SsmpPath,
    concatenate_paths,
    truncate_path,
)
from domain.services.linalg import leading_eigenvalue
from domain.services.map_simulation import _generator, sample_map_path
from domain.services.map_spectral import (
    chi,
    chi_derivative,
    cramer_number,
    dual_spec,
    matrix_exponent,
    reflect_spec,
    spectral_data,
    stationary_distribution,
)
from domain.services.rng_streams import Mapper, SeededStream, mean_se, run_replicas
from domain.services.stats_checks import KsResult, per_type_ks

logger = logging.getLogger(__name__)


# ── Clock ─────────────────────────────────────────────────────────────────────

def clock_increments(path: MapPath, alpha: float) -> np.ndarray:
    """∫ e^{αξ} over each knot segment of `path`."""
    if path.n_segments == 0:
        return np.zeros(0)
    dur = np.diff(path.knot_times)
    r = path.right_values[:-1]
    y = alpha * (path.left_values[1:] - r)
    small = np.abs(y) < 1e-10
    safe_y = np.where(small, 1.0, y)
    factor = np.where(small, 1.0 + 0.5 * y, np.expm1(safe_y) / safe_y)
    return dur * np.exp(alpha * r) * factor


def lamperti_transform(path: MapPath, x0: float, alpha: float, stop_reason: str = "horizon") -> SsmpPath:
    """X(t) = x0·exp(ξ(φ(t·x0^{-α}))) with the clock tabulated at the knots."""
    if not x0 > 0:
        raise PreconditionError(f"x0 must be positive, got {x0}")
    clock = np.concatenate([[0.0], np.cumsum(clock_increments(path, alpha))])
    return SsmpPath(base=path, x0=float(x0), alpha=float(alpha), clock=clock, stop_reason=stop_reason)


def gauss_grid_step(spec: MapSpec, alpha: float, tol: float = GAUSS_CLOCK_TOL) -> Optional[float]:
    sigma = math.sqrt(max(c.gauss_var for c in spec.levy))
    if sigma == 0.0 or alpha == 0.0:
        return None
    return (tol / (sigma * abs(alpha))) ** 2


def simulate_ssmp(
    spec: MapSpec,
    x0: float,
    start_type: int,
    alpha: float,
    real_horizon: float,
    rng,
    floor: Optional[float] = None,
    gauss_grid: Optional[float] | str = "auto",
    chunk: float = PATH_CHUNK_LENGTH,
    max_chunks: int = MAX_PATH_CHUNKS,
) -> SsmpPath:
    """
    Simulate (X, J) from (x0, start_type) in internal-time chunks until the
    real-time window [0, real_horizon] is covered, the process is killed, or
    X falls below `floor` at a knot (stop_reason "floor").
    """
    gen = _generator(rng)
    if gauss_grid == "auto":
        gauss_grid = gauss_grid_step(spec, alpha)
    if not np.isfinite(real_horizon) and floor is None and spec.is_conservative:
        raise PreconditionError("an infinite horizon needs a floor or killing")
    target = real_horizon / (x0 ** alpha)
    log_floor = math.log(floor / x0) if floor is not None else -math.inf

    chunks: list[MapPath] = []
    clock_total = 0.0
    xi, j = 0.0, int(start_type)
    reason = "horizon"
    for _ in range(int(max_chunks)):
        path = sample_map_path(spec, j, chunk, gen, start_value=xi, gauss_grid=gauss_grid)
        cum = clock_total + np.concatenate([[0.0], np.cumsum(clock_increments(path, alpha))])
        below = np.flatnonzero(path.right_values[1:] < log_floor)
        over = np.flatnonzero(cum[1:] > target)
        cands = []
        if below.size:
            cands.append((int(below[0]) + 1, "floor"))
        if over.size:
            cands.append((int(over[0]) + 1, "horizon"))
        if path.killed and (not cands or min(cands)[0] >= path.n_segments):
            chunks.append(path)
            reason = "killed"
            break
        if cands:
            k, reason = min(cands)
            chunks.append(truncate_path(path, k))
            break
        chunks.append(path)
        clock_total = float(cum[-1])
        xi, j = path.end_value, path.end_type
    else:
        logger.warning("simulate_ssmp: %d chunks exhausted before the stopping rule fired", max_chunks)
        reason = "exhausted"
    full = concatenate_paths(chunks)
    return lamperti_transform(full, x0, alpha, stop_reason=reason)


# ── Scaling property ─────────────────────────────────────────────────────────

@dataclass
class ScalingComparison:
    sizes_a: np.ndarray
    types_a: np.ndarray
    sizes_b: np.ndarray
    types_b: np.ndarray
    dead_a: int
    dead_b: int
    ks: dict[int, KsResult] = field(default_factory=dict)


def _state_after(spec, x, i, alpha, t, stream: SeededStream):
    path = simulate_ssmp(spec, x, i, alpha, t, stream)
    st = path.query(t) if path.covers(t) else None
    if st is None or st is CEMETERY:
        return None
    return st


def scaling_check(
    spec: MapSpec,
    x: float,
    c: float,
    alpha: float,
    t: float,
    reps: int,
    rng: SeededStream,
    start_type: int = 0,
    mapper: Optional[Mapper] = None,
) -> ScalingComparison:
    """Samples of cX(c^{-α}t) under P_{x,i} and of X(t) under P_{cx,i}, compared per type."""
    if not c > 0:
        raise PreconditionError(f"scale factor must be positive, got {c}")
    arm_a = run_replicas(partial(_state_after, spec, x, start_type, alpha, c ** (-alpha) * t), reps, rng.spawn("scale-a"), mapper)
    arm_b = run_replicas(partial(_state_after, spec, c * x, start_type, alpha, t), reps, rng.spawn("scale-b"), mapper)
    live_a = [s for s in arm_a if s is not None]
    live_b = [s for s in arm_b if s is not None]
    sizes_a = np.array([c * s[0] for s in live_a])
    types_a = np.array([s[1] for s in live_a], dtype=int)
    sizes_b = np.array([s[0] for s in live_b])
    types_b = np.array([s[1] for s in live_b], dtype=int)
    ks = per_type_ks(np.log(sizes_a), types_a, np.log(sizes_b), types_b, spec.n_types)
    return ScalingComparison(sizes_a, types_a, sizes_b, types_b, reps - len(live_a), reps - len(live_b), ks)


# ── Exponential functionals ──────────────────────────────────────────────────

@dataclass(frozen=True)
class FunctionalPlan:
    """
    Precomputed stopping data for ∫_0^∞ u_{Θ(s)} e^{αξ(s)} ds.

    remainder    : exact conditional mean (−F(α))^{-1}u of the tail, per
                   current type, when χ(α) < 0; zeros otherwise
    bound_factor : tail bound per current type, to be multiplied by e^{αξ(T)}
    bound_kind   : "conditional-mean" when χ(α) < 0; otherwise "heuristic",
                   a scale from a fractional moment that bounds nothing
    """
    alpha: float
    weights: np.ndarray
    remainder: np.ndarray
    bound_factor: np.ndarray
    grid: Optional[float]
    exact_remainder: bool
    bound_kind: str = TAIL_BOUND_MEAN


def functional_remainder_mean(spec: MapSpec, alpha: float, weights: Optional[np.ndarray] = None) -> np.ndarray:
    """
    E_j[∫_0^∞ u_{Θ(s)} e^{αξ(s)} ds] = ((−F(α))^{-1}u)_j for each start type j.
    Finite iff χ(α) < 0.
    """
    u = np.ones(spec.n_types) if weights is None else np.asarray(weights, dtype=float)
    f = matrix_exponent(spec, alpha)
    chi_a, _ = leading_eigenvalue(f)
    if not chi_a < 0:
        raise MomentNotFiniteError(f"moment not guaranteed finite: χ(α) = {chi_a:.4g} ≥ 0")
    return np.linalg.solve(-f, u)


def functional_plan(spec: MapSpec, alpha: float, weights: Optional[np.ndarray] = None) -> FunctionalPlan:
    u = np.ones(spec.n_types) if weights is None else np.asarray(weights, dtype=float)
    if spec.is_conservative:
        drift = alpha * chi_derivative(spec)
        if drift >= 0:
            raise DivergentFunctionalError(
                f"infinite exponential functional: α·χ′(0) = {drift:.4g} ≥ 0 and no killing"
            )
    f = matrix_exponent(spec, alpha)
    chi_a, w = leading_eigenvalue(f)
    grid = gauss_grid_step(spec, alpha)
    if chi_a < 0:
        remainder = functional_remainder_mean(spec, alpha, u)
        bound = float(np.max(u)) * w / (float(np.min(w)) * (-chi_a))
        return FunctionalPlan(alpha, u, remainder, bound, grid, True, TAIL_BOUND_MEAN)

    # Heavy tail: mean of the remainder is infinite. Use a fractional order g
    # with χ(αg) < 0 and no remainder correction.
    g = 0.5
    while chi(spec, alpha * g) >= 0:
        g *= 0.5
        if g < 1e-6:
            raise DivergentFunctionalError("no fractional order with χ(αγ) < 0")
    sd = spectral_data(spec, alpha * g)
    const = (1.0 / (1.0 - math.exp(sd.chi))) ** (1.0 / g)
    bound = float(np.max(u)) * (sd.w / float(np.min(sd.w))) ** (1.0 / g) * const
    logger.warning("functional_plan: χ(α)=%.4g ≥ 0, tail bound is heuristic (order γ*=%.4g)", chi_a, g)
    return FunctionalPlan(alpha, u, np.zeros(spec.n_types), bound, grid, False, TAIL_BOUND_HEURISTIC)


def sample_exp_functional(
    spec: MapSpec,
    start_type: int,
    alpha: float,
    eps_tail: float,
    rng,
    plan: Optional[FunctionalPlan] = None,
    weighted: bool = False,
    chunk: float = PATH_CHUNK_LENGTH,
    max_chunks: int = MAX_PATH_CHUNKS,
) -> ExpFunctionalSample:
    """
    One draw of I(αξ) (or of the type-weighted functional when the plan
    carries weights), simulated until the tail bound is below
    eps_tail·current value.
    """
    if not eps_tail > 0:
        raise PreconditionError("eps_tail must be positive")
    plan = plan or functional_plan(spec, alpha)
    gen = _generator(rng)
    u = plan.weights
    parts: list[float] = []
    elapsed = 0.0
    xi, j = 0.0, int(start_type)
    level = 1.0
    for _ in range(int(max_chunks)):
        path = sample_map_path(spec, j, chunk, gen, start_value=xi, gauss_grid=plan.grid)
        incs = clock_increments(path, alpha) * u[path.types[:-1]]
        parts.append(math.fsum(incs.tolist()))
        elapsed += path.end_time
        if path.killed:
            value = math.fsum(parts)
            return ExpFunctionalSample(value / u[start_type], elapsed, 0.0, weighted, int(start_type), bound_kind=TAIL_BOUND_EXACT)
        xi, j = path.end_value, path.end_type
        level = math.exp(alpha * xi)
        current = math.fsum(parts) + level * plan.remainder[j]
        if level * plan.bound_factor[j] < eps_tail * current:
            break
    else:
        logger.warning("sample_exp_functional: chunk limit reached at T=%.3g", elapsed)
    value = math.fsum(parts) + level * plan.remainder[j]
    tail_bound = level * plan.bound_factor[j]
    return ExpFunctionalSample(
        value=value / u[start_type],
        truncation_time=elapsed,
        tail_bound=tail_bound / u[start_type],
        weighted=weighted,
        start_type=int(start_type),
        bound_kind=plan.bound_kind,
    )


def _functional_task(spec, start_type, alpha, eps_tail, plan, weighted, stream: SeededStream) -> ExpFunctionalSample:
    return sample_exp_functional(spec, start_type, alpha, eps_tail, stream, plan=plan, weighted=weighted)


def weighted_functional_weights(spec: MapSpec, alpha: float) -> tuple[np.ndarray, float]:
    """w(Υ) and the tail exponent Υ/α of the weighted functional of αξ (α > 0)."""
    if not alpha > 0:
        raise PreconditionError("the weighted functional is defined here for α > 0")
    upsilon = cramer_number(spec)
    return spectral_data(spec, upsilon).w, upsilon / alpha


def exp_functional_samples(
    spec: MapSpec,
    start_type: int,
    alpha: float,
    reps: int,
    rng: SeededStream,
    weighted: bool = False,
    eps_tail: float = FUNCTIONAL_REL_TOL,
    mapper: Optional[Mapper] = None,
) -> list[ExpFunctionalSample]:
    weights = weighted_functional_weights(spec, alpha)[0] if weighted else None
    plan = functional_plan(spec, alpha, weights)
    task = partial(_functional_task, spec, int(start_type), float(alpha), float(eps_tail), plan, weighted)
    return run_replicas(task, reps, rng.spawn("functional", start_type, int(weighted)), mapper)


def exp_functional_moment(
    spec: MapSpec,
    start_type: int,
    alpha: float,
    gamma: float,
    reps: int,
    rng: SeededStream,
    mapper: Optional[Mapper] = None,
) -> Estimate:
    """E[I(αξ)^γ]; refused unless χ(αγ) < 0."""
    chi_ag = chi(spec, alpha * gamma)
    if not chi_ag < 0:
        raise MomentNotFiniteError(f"moment not guaranteed finite: χ(αγ) = {chi_ag:.4g} ≥ 0 at γ={gamma}")
    samples = exp_functional_samples(spec, start_type, alpha, reps, rng, mapper=mapper)
    values = np.array([s.value for s in samples]) ** gamma
    mean, se = mean_se(values)
    return Estimate(estimate=mean, se=se, n=len(samples))


# ── Entrance law ─────────────────────────────────────────────────────────────

@dataclass
class EntranceSample:
    """
    Importance-weighted draws of η_t: values (t/I)^{1/α}, start types under
    the dual, raw weights 1/(αm·I). The mean of the weights estimates the
    total mass, which is 1.
    """
    t: float
    values: np.ndarray
    types: np.ndarray
    weights: np.ndarray
    functionals: np.ndarray

    def total_mass(self) -> Estimate:
        mean, se = mean_se(self.weights)
        return Estimate(mean, se, int(self.weights.size))

    def integrate(self, f) -> Estimate:
        """η_t f for a function f(values, types) -> array."""
        mean, se = mean_se(self.weights * np.asarray(f(self.values, self.types), dtype=float))
        return Estimate(mean, se, int(self.weights.size))


def _dual_functional(dual: MapSpec, pi: np.ndarray, alpha: float, eps_tail: float, plan: FunctionalPlan, stream: SeededStream):
    gen = stream.generator()
    i = int(gen.choice(dual.n_types, p=pi))
    sample = sample_exp_functional(dual, i, alpha, eps_tail, gen, plan=plan)
    return i, sample.value


def entrance_law_sample(
    spec: MapSpec,
    alpha: float,
    t: float,
    reps: int,
    rng: SeededStream,
    eps_tail: float = FUNCTIONAL_REL_TOL,
    mapper: Optional[Mapper] = None,
) -> EntranceSample:
    """Weighted samples of (y, i) ~ η_t, the entrance law of X from 0."""
    if not alpha > 0:
        raise PreconditionError(f"entrance law requires α > 0, got {alpha}")
    m = chi_derivative(spec)
    if not m > 0:
        raise NonPositiveMeanError(f"entrance law requires m = χ′(0) > 0, got {m:.4g}")
    dual = dual_spec(spec)
    pi = stationary_distribution(spec)
    plan = functional_plan(dual, alpha)
    rows = run_replicas(partial(_dual_functional, dual, pi, float(alpha), float(eps_tail), plan), reps, rng.spawn("entrance"), mapper)
    types = np.array([r[0] for r in rows], dtype=int)
    functionals = np.array([r[1] for r in rows], dtype=float)
    values = (t / functionals) ** (1.0 / alpha)
    weights = 1.0 / (alpha * m * functionals)
    logger.debug("entrance_law_sample: m=%.6g, mean weight=%.6g", m, float(np.mean(weights)))
    return EntranceSample(t=float(t), values=values, types=types, weights=weights, functionals=functionals)


def limit_measure_samples(
    spine: MapSpec,
    alpha: float,
    reps: int,
    rng: SeededStream,
    eps_tail: float = FUNCTIONAL_REL_TOL,
    mapper: Optional[Mapper] = None,
) -> EntranceSample:
    """
    Weighted samples of ρ, the limit law of (t^{-1/α}X̂(t), Ĵ(t)) for α < 0.
    1/X̂ is self-similar with index −α > 0 and drifts upward, so ρ is the
    image under y ↦ 1/y of its entrance law at time 1.
    """
    if not alpha < 0:
        raise PreconditionError(f"limit measure requires α < 0, got {alpha}")
    entrance = entrance_law_sample(reflect_spec(spine), -alpha, 1.0, reps, rng.spawn("limit-measure"), eps_tail, mapper)
    return EntranceSample(
        t=1.0,
        values=1.0 / entrance.values,
        types=entrance.types,
        weights=entrance.weights,
        functionals=entrance.functionals,
    )
