"""
domain/services/renewal.py

Multitype smoothing transform and random affine equation:

    R^{(i)} = Σ_k (v_{J_k}/v_i) C_k R_k^{(J_k)}        (smoothing)
    R^{(i)} = (v_J/v_i) A R^{(J)} + B                 (affine)

Weight matrices and their tail exponent, offspring laws bridged from cell
trees, fixed points by population dynamics and by the truncated series.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import partial
from typing import Optional

import numpy as np

from config.settings import (
    ADMISSIBLE_SCAN_GRID,
    AFFINE_REL_TOL,
    MAX_AFFINE_TERMS,
    POP_MIN_ITERATIONS,
    POP_QUANTILE_REL_TOL,
    ROOT_TOL,
    SE_MULTIPLIER,
)
from domain.errors import ContractionError, InsufficientSamplesError, PreconditionError, TruncationBoundError
from domain.models.cascade import AffineSpec, OffspringAtom, SmoothingSpec
from domain.models.cells import SimControls
from domain.models.map_spec import MapSpec
from domain.models.spectral import AdmissiblePair
from domain.services.cell_system import simulate_tree
from domain.services.linalg import leading_eigenvalue, left_perron_vector
from domain.services.rng_streams import Mapper, SeededStream, mean_se, run_replicas
from domain.services.root_finding import convex_roots
from domain.services.stats_checks import moment_stability_probe

logger = logging.getLogger(__name__)


# ── Smoothing transform ───────────────────────────────────────────────────────

@dataclass(frozen=True)
class WeightMatrix:
    """m(q) with entrywise Monte Carlo SE (zeros for exact atomic laws)."""
    q: float
    matrix: np.ndarray
    se: np.ndarray

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "matrix": [[float(x) for x in row] for row in self.matrix],
            "se": [[float(x) for x in row] for row in self.se],
        }


def _atom_row(atom: OffspringAtom, q: float, n: int) -> np.ndarray:
    row = np.zeros(n)
    for j, c in zip(atom.child_types, atom.child_weights):
        if c > 0:
            row[j] += c ** q
    return row


def weight_matrix(spec: SmoothingSpec, q: float) -> WeightMatrix:
    """m_ij(q) = E_i[Σ_k C_k^q 1{J_k = j}]."""
    n = spec.n_types
    m = np.zeros((n, n))
    se = np.zeros((n, n))
    for i, law in enumerate(spec.laws):
        rows = np.array([_atom_row(a, q, n) for a in law])
        probs = np.array([a.prob for a in law])
        m[i] = probs @ rows
        if spec.empirical and len(law) > 1:
            se[i] = rows.std(axis=0, ddof=1) / math.sqrt(len(law))
    return WeightMatrix(float(q), m, se)


def smoothing_lambda(spec: SmoothingSpec, q: float) -> float:
    """log ρ(m(q))."""
    rho, _ = leading_eigenvalue(weight_matrix(spec, q).matrix)
    return math.log(rho)


def find_alpha(
    spec: SmoothingSpec,
    bracket: Optional[tuple[float, float]] = None,
    tol: float = ROOT_TOL,
) -> AdmissiblePair:
    """The largest root α of λ(q) = log ρ(m(q)) in the bracket, with its eigenvector."""
    lo, hi = bracket or (ADMISSIBLE_SCAN_GRID[0], ADMISSIBLE_SCAN_GRID[-1])
    roots = convex_roots(partial(smoothing_lambda, spec), lo, hi, ADMISSIBLE_SCAN_GRID, tol)
    alpha = roots[-1]
    m = weight_matrix(spec, alpha).matrix
    rho, v = leading_eigenvalue(m)
    residual = float(np.max(np.abs(m @ v - v)))
    logger.debug("find_alpha(%s): roots=%s, α=%.10g", spec.name, roots, alpha)
    return AdmissiblePair(omega=float(alpha), v=v, residual=residual, label="smoothing")


def renewal_condition(spec: SmoothingSpec, alpha: float) -> np.ndarray:
    """E_i[Σ_k (v_{J_k}/v_i) C_k^α log C_k] per type."""
    v = spec.v
    out = np.zeros(spec.n_types)
    for i, law in enumerate(spec.laws):
        terms = [
            a.prob * (v[j] / v[i]) * c ** alpha * math.log(c)
            for a in law
            for j, c in zip(a.child_types, a.child_weights)
            if c > 0
        ]
        out[i] = math.fsum(terms)
    return out


def _offspring_atom(spec: MapSpec, i: int, alpha: float, omega: float, controls: SimControls, prob: float, stream: SeededStream) -> OffspringAtom:
    tree = simulate_tree(spec, 1.0, i, alpha, controls, stream)
    entries = [e for e in tree.ledger if e.generation == 1]
    return OffspringAtom(
        prob=prob,
        child_types=tuple(int(e.type) for e in entries),
        child_weights=tuple(float(e.size) ** omega for e in entries),
    )


def offspring_from_trees(
    spec: MapSpec,
    alpha: float,
    pair: AdmissiblePair,
    controls: SimControls,
    reps: int,
    rng: SeededStream,
    mapper: Optional[Mapper] = None,
) -> SmoothingSpec:
    """
    Empirical offspring law C_k = X_k(0)^ω of the first generation of a unit
    Eve cell, one equally likely atom per simulated Eve cell. Every child is
    kept whatever its size, and the Eve cell's cut remainder enters as one
    more child.
    """
    eve_only = SimControls(max_generation=0, min_size=controls.min_size, horizon=controls.horizon)
    prob = 1.0 / reps
    laws = []
    for i in range(spec.n_types):
        task = partial(_offspring_atom, spec, i, float(alpha), float(pair.omega), eve_only, prob)
        laws.append(tuple(run_replicas(task, reps, rng.spawn("offspring", i), mapper)))
    return SmoothingSpec(
        n_types=spec.n_types,
        laws=tuple(laws),
        v=np.asarray(pair.v, dtype=float),
        empirical=True,
        name=f"{spec.name}-offspring",
    )


# ── Population dynamics ──────────────────────────────────────────────────────

@dataclass
class PopulationResult:
    pools: list[np.ndarray]
    history: list[dict] = field(default_factory=list)
    stabilized: bool = False
    iterations: int = 0

    def pool_rows(self) -> list[dict]:
        return [
            {"iteration": self.iterations, "type": j, "value": float(x)}
            for j, pool in enumerate(self.pools)
            for x in pool
        ]


def _padded_law(spec: SmoothingSpec, i: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    law = spec.laws[i]
    width = max((len(a.child_types) for a in law), default=0) or 1
    types = np.zeros((len(law), width), dtype=int)
    weights = np.zeros((len(law), width))
    for r, a in enumerate(law):
        k = len(a.child_types)
        types[r, :k] = a.child_types
        weights[r, :k] = a.child_weights
    probs = np.array([a.prob for a in law], dtype=float)
    return probs / probs.sum(), types, weights


def population_dynamics(
    spec: SmoothingSpec,
    pop_size: int,
    iterations: int,
    rng: SeededStream,
    min_iterations: int = POP_MIN_ITERATIONS,
    quantile_tol: float = POP_QUANTILE_REL_TOL,
    se_multiplier: float = SE_MULTIPLIER,
) -> PopulationResult:
    """
    Iterate the smoothing map on N pools of size pop_size, started at the
    constant 1. Stops once every pool mean is within se_multiplier SE of 1
    and every 0.9-quantile moved by less than quantile_tol.
    """
    n = spec.n_types
    v = spec.v
    laws = [_padded_law(spec, i) for i in range(n)]
    pools = np.ones((n, int(pop_size)))
    prev_q90 = np.quantile(pools, 0.9, axis=1)
    result = PopulationResult(pools=list(pools))
    for it in range(1, int(iterations) + 1):
        new = np.empty_like(pools)
        for i in range(n):
            gen = rng.spawn("pop", it, i).generator()
            probs, types, weights = laws[i]
            idx = gen.choice(len(probs), size=pools.shape[1], p=probs)
            ct, cw = types[idx], weights[idx]
            members = gen.integers(0, pools.shape[1], size=ct.shape)
            new[i] = np.sum((v[ct] / v[i]) * cw * pools[ct, members], axis=1)
        pools = new
        q90 = np.quantile(pools, 0.9, axis=1)
        stable_mean = True
        for i in range(n):
            mean, se = mean_se(pools[i])
            stable_mean &= abs(mean - 1.0) <= se_multiplier * se
            result.history.append({"iteration": it, "type": i, "mean": mean, "se": se, "q90": float(q90[i])})
        moved = np.abs(q90 - prev_q90) / np.maximum(np.abs(prev_q90), 1e-300)
        prev_q90 = q90
        result.iterations = it
        if it >= min_iterations and stable_mean and bool(np.all(moved < quantile_tol)):
            result.stabilized = True
            break
    else:
        logger.warning("population_dynamics(%s): not stabilized after %d iterations", spec.name, iterations)
    result.pools = list(pools)
    return result


# ── Random affine equation ────────────────────────────────────────────────────

def _affine_matrices(spec: AffineSpec, beta: float = 1.0) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(P, M_β, b): type transitions, E_i[mult^β 1{J=j}], E_i[B]."""
    n = spec.n_types
    p = np.zeros((n, n))
    m = np.zeros((n, n))
    b = np.zeros(n)
    for i in range(n):
        probs, mult, bb, nxt = spec.arrays(i)
        for pr, a, j in zip(probs, mult, nxt):
            p[i, j] += pr
            m[i, j] += pr * (a ** beta if a > 0 else 0.0)
        b[i] = float(probs @ bb)
    return p, m, b


def contraction_exponent(spec: AffineSpec) -> float:
    """E_π[log((v_J/v_i)A)] under the stationary law of the type chain."""
    p, _, _ = _affine_matrices(spec)
    pi = left_perron_vector(p) if spec.n_types > 1 else np.ones(1)
    total = 0.0
    for i in range(spec.n_types):
        probs, mult, _, _ = spec.arrays(i)
        with np.errstate(divide="ignore"):
            total += pi[i] * float(probs @ np.log(mult))
    return total


def spectral_radius(matrix: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(matrix))))


BOUND_PATHWISE = "pathwise"
BOUND_CONDITIONAL_MEAN = "conditional-mean"


def remainder_constants(spec: AffineSpec) -> tuple[np.ndarray, str]:
    """
    c with |R − (first n terms)| ≤ |Π_{l≤n} A_l|·c_{J_n}. Pathwise when
    every |A| < 1 (c = max|B|/(1 − max|A|)); otherwise a bound on the
    conditional mean of the remainder, c = (I − M)^{-1} E|B| with
    M = E_i[|A| 1{J=j}], available when ρ(M) < 1.
    """
    n = spec.n_types
    laws = [spec.arrays(i) for i in range(n)]
    a_max = max(float(np.max(np.abs(mult))) for _, mult, _, _ in laws)
    b_max = max(float(np.max(np.abs(bb))) for _, _, bb, _ in laws)
    if a_max < 1.0:
        return np.full(n, b_max / (1.0 - a_max)), BOUND_PATHWISE
    m = np.zeros((n, n))
    b = np.zeros(n)
    for i, (probs, mult, bb, nxt) in enumerate(laws):
        np.add.at(m[i], nxt, probs * np.abs(mult))
        b[i] = float(probs @ np.abs(bb))
    radius = spectral_radius(m)
    if not radius < 1.0:
        raise ContractionError(f"ρ(E|A|) = {radius:.4g} ≥ 1 and max|A| = {a_max:.4g} ≥ 1: no geometric remainder bound")
    return np.linalg.solve(np.eye(n) - m, b), BOUND_CONDITIONAL_MEAN


@dataclass
class AffineSeries:
    """Truncated-series samples of R^{(i)} with the remainder bound left by each."""
    values: np.ndarray
    n_terms: int
    bounds: np.ndarray
    bound_kind: str
    rel_tol: float

    def max_relative_bound(self) -> float:
        scale = np.maximum(np.abs(self.values), 1e-300)
        return float(np.max(self.bounds / scale)) if self.values.size else 0.0

    def to_dict(self) -> dict:
        return {
            "n_terms": self.n_terms,
            "bound_kind": self.bound_kind,
            "rel_tol": self.rel_tol,
            "max_relative_bound": self.max_relative_bound(),
            "n": int(self.values.size),
        }


def affine_fixed_point(
    spec: AffineSpec,
    n_terms: Optional[int],
    reps: int,
    rng: SeededStream,
    start_type: int = 0,
    rel_tol: float = AFFINE_REL_TOL,
    max_terms: int = MAX_AFFINE_TERMS,
) -> AffineSeries:
    """
    Samples of R^{(start_type)} from the series Σ_k Π_{l≤k} A_l B_{k+1},
    truncated after n_terms terms. With n_terms None each sample runs until
    its remainder bound is below rel_tol·|sample|, and n_terms reports the
    longest run. Raises TruncationBoundError when a fixed n_terms, or
    max_terms, leaves some bound above that.
    """
    exponent = contraction_exponent(spec)
    if not exponent < 0:
        raise ContractionError(f"E_π[log A] = {exponent:.4g} is not negative; the series does not converge")
    if n_terms is not None and int(n_terms) < 1:
        raise PreconditionError(f"n_terms must be >= 1, got {n_terms}")
    consts, kind = remainder_constants(spec)
    laws = [spec.arrays(i) for i in range(spec.n_types)]
    limit = int(n_terms) if n_terms is not None else int(max_terms)

    gen = rng.spawn("affine", start_type).generator()
    reps = int(reps)
    total = np.zeros(reps)
    prod = np.ones(reps)
    typ = np.full(reps, int(start_type))
    active = np.ones(reps, dtype=bool)
    used = 0
    for _ in range(limit):
        idx_active = np.flatnonzero(active)
        if idx_active.size == 0:
            break
        used += 1
        draws = gen.random(idx_active.size)
        for i, (probs, mult, bb, nxt) in enumerate(laws):
            sel = idx_active[typ[idx_active] == i]
            if sel.size == 0:
                continue
            k = np.searchsorted(np.cumsum(probs), draws[typ[idx_active] == i], side="right")
            k = np.minimum(k, len(probs) - 1)
            total[sel] += prod[sel] * bb[k]
            prod[sel] *= mult[k]
            typ[sel] = nxt[k]
        if n_terms is None:
            active &= ~(np.abs(prod) * consts[typ] < rel_tol * np.abs(total))

    bounds = np.abs(prod) * consts[typ]
    short = int(np.sum(~(bounds < rel_tol * np.abs(total))))
    if short:
        raise TruncationBoundError(
            f"{short} of {reps} affine series keep a {kind} remainder bound ≥ {rel_tol:g}·|sample| after {used} terms"
        )
    logger.debug("affine_fixed_point(%s): %d samples, %d terms, %s bound", spec.name, reps, used, kind)
    return AffineSeries(values=total, n_terms=used, bounds=bounds, bound_kind=kind, rel_tol=float(rel_tol))


def affine_moment_probe(
    spec: AffineSpec,
    beta: float,
    reps: int,
    rng: SeededStream,
    start_type: int = 0,
    samples: Optional[np.ndarray] = None,
) -> dict:
    """
    Analytic criterion ρ(E[((v_J/v_i)A)^β 1{J=j}]) < 1 against the Monte
    Carlo stability of the β-moment over sample-size doubling.
    """
    _, m_beta, _ = _affine_matrices(spec, beta)
    radius = spectral_radius(m_beta)
    if samples is None:
        samples = affine_fixed_point(spec, None, reps, rng, start_type=start_type).values
    probe = moment_stability_probe(samples, [beta])[0]
    finite = radius < 1.0
    return {
        "beta": float(beta),
        "spectral_radius": radius,
        "finite_predicted": finite,
        "blowup_observed": probe["blowup"],
        "agree": finite != probe["blowup"],
        "moments": probe["moments"],
    }


def kesten_exponent(spec: AffineSpec, bracket: tuple[float, float] = (0.05, 32.0)) -> float:
    """The positive κ with ρ(M_κ) = 1."""
    f = lambda q: math.log(spectral_radius(_affine_matrices(spec, q)[1]))
    roots = convex_roots(f, bracket[0], bracket[1], ADMISSIBLE_SCAN_GRID)
    return roots[-1]


def pool_ks_inputs(result: PopulationResult, i: int) -> np.ndarray:
    if i >= len(result.pools):
        raise PreconditionError(f"no pool for type {i}")
    pool = result.pools[i]
    if pool.size < 100:
        raise InsufficientSamplesError(f"pool of type {i} has only {pool.size} members")
    return pool
