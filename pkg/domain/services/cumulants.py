"""
domain/services/cumulants.py

Multitype cumulants of a growth-fragmentation driven by a MAP, admissible
(ω, v) pairs, and the spine MAP they induce.

Conventions
───────────
Π_{i,k} collects every negative jump of a type-i cell that releases a child
of type k: Lévy atoms of type i with mark k, and transition atoms (i→j)
with mark k weighted by q_ij. The cell keeps its type after a Lévy jump and
moves to j after a transition; that "parent type after" is kept on each atom.

    κ_i(q)   = ψ_i(q) + q_ii + Σ_{Π_ii} w(1−e^x)^q
    A_ij(q)  = Σ_{Π_ij} w(1−e^x)^q + q_ij G_ij(q)          (i ≠ j)
    𝒦_i(q)   = (A(q)v)_i / v_i
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import partial
from typing import Literal, Optional, Sequence

import numpy as np

from config.settings import ADMISSIBLE_SCAN_GRID, CUMULANT_RESIDUAL_TOL, ROOT_TOL
from domain.errors import PreconditionError
from domain.models.map_spec import JumpAtom, LevyComponent, MapSpec, TransitionJump
from domain.models.paths import KIND_TRANSITION
from domain.models.spectral import AdmissiblePair
from domain.services.linalg import leading_eigenvalue
from domain.services.map_simulation import _generator, sample_map_path
from domain.services.map_spectral import chi, is_irreducible, second_divided_differences
from domain.services.rng_streams import Mapper, SeededStream, run_replicas
from domain.services.root_finding import convex_roots

logger = logging.getLogger(__name__)

Which = Literal["both", "lower", "upper"]


# ── Π measure ─────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class PiAtom:
    size: float
    weight: float
    child_type: int
    parent_type_after: int
    source: str  # "levy" or "transition"

    def transform(self, q: float) -> float:
        """w·(1−e^x)^q"""
        return self.weight * (-math.expm1(self.size)) ** q


@dataclass(frozen=True)
class PiMeasure:
    n_types: int
    atoms: dict[tuple[int, int], tuple[PiAtom, ...]] = field(default_factory=dict)

    def at(self, i: int, k: int) -> tuple[PiAtom, ...]:
        return self.atoms.get((i, k), ())

    def transform(self, i: int, k: int, q: float) -> float:
        """∫ Π_{i,k}(dx)(1−e^x)^q"""
        return math.fsum(a.transform(q) for a in self.at(i, k))

    def to_dict(self) -> dict:
        return {
            f"{i},{k}": [
                {"size": a.size, "weight": a.weight, "parent_type_after": a.parent_type_after, "source": a.source}
                for a in atoms
            ]
            for (i, k), atoms in sorted(self.atoms.items())
        }


def pi_measure(spec: MapSpec) -> PiMeasure:
    n = spec.n_types
    acc: dict[tuple[int, int], list[PiAtom]] = {}
    for i, comp in enumerate(spec.levy):
        for a in comp.atoms:
            if a.size < 0 and a.weight > 0:
                acc.setdefault((i, a.type_mark), []).append(PiAtom(a.size, a.weight, a.type_mark, i, "levy"))
    q = spec.q_matrix
    for i in range(n):
        for j in range(n):
            if i == j or q[i, j] <= 0:
                continue
            for a in spec.transition(i, j).atoms:
                if a.size < 0 and a.weight > 0:
                    acc.setdefault((i, a.type_mark), []).append(
                        PiAtom(a.size, q[i, j] * a.weight, a.type_mark, j, "transition")
                    )
    return PiMeasure(n, {key: tuple(v) for key, v in acc.items()})


# ── Cumulants ─────────────────────────────────────────────────────────────────

def kappa(spec: MapSpec, i: int, q: float, pi: Optional[PiMeasure] = None) -> float:
    pi = pi or pi_measure(spec)
    return spec.psi(i, q) + float(spec.q_matrix[i, i]) + pi.transform(i, i, q)


def cumulant_matrix(spec: MapSpec, q: float, pi: Optional[PiMeasure] = None) -> np.ndarray:
    pi = pi or pi_measure(spec)
    n = spec.n_types
    a = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i == j:
                a[i, i] = kappa(spec, i, q, pi)
            else:
                qij = spec.q_matrix[i, j]
                a[i, j] = pi.transform(i, j, q) + (qij * spec.g(i, j, q) if qij > 0 else 0.0)
    return a


def multitype_cumulant(spec: MapSpec, i: int, q: float, v: Sequence[float], pi: Optional[PiMeasure] = None) -> float:
    v = np.asarray(v, dtype=float)
    a = cumulant_matrix(spec, q, pi)
    return float(a[i] @ v) / float(v[i])


def cumulant_residual(spec: MapSpec, q: float, v: np.ndarray, pi: Optional[PiMeasure] = None) -> float:
    a = cumulant_matrix(spec, q, pi)
    return float(np.max(np.abs(a @ v / v)))


def lambda_tilde(spec: MapSpec, q: float, pi: Optional[PiMeasure] = None) -> float:
    """Leading eigenvalue of A(q)."""
    return leading_eigenvalue(cumulant_matrix(spec, q, pi))[0]


def lambda_convexity(spec: MapSpec, grid: Sequence[float]) -> float:
    """Smallest second divided difference of λ̃ on the grid."""
    pi = pi_measure(spec)
    values = [lambda_tilde(spec, q, pi) for q in grid]
    return float(np.min(second_divided_differences(values, grid)))


# ── Admissible pairs ──────────────────────────────────────────────────────────

def _pair(spec: MapSpec, omega: float, label: str, pi: PiMeasure) -> AdmissiblePair:
    _, v = leading_eigenvalue(cumulant_matrix(spec, omega, pi))
    residual = cumulant_residual(spec, omega, v, pi)
    if residual > CUMULANT_RESIDUAL_TOL:
        logger.warning("admissible pair at ω=%.10g has residual %.3e", omega, residual)
    return AdmissiblePair(omega=float(omega), v=v, residual=residual, label=label)


def find_admissible(
    spec: MapSpec,
    search: Optional[tuple[float, float]] = None,
    which: Which = "both",
    tol: float = ROOT_TOL,
) -> list[AdmissiblePair]:
    """
    Roots of λ̃ in the search bracket, located on the geometric scan grid and
    refined with Brent's method. Convexity allows at most two.
    """
    lo, hi = search or (ADMISSIBLE_SCAN_GRID[0], ADMISSIBLE_SCAN_GRID[-1])
    pi = pi_measure(spec)
    roots = convex_roots(partial(lambda_tilde, spec, pi=pi), lo, hi, ADMISSIBLE_SCAN_GRID, tol)
    if len(roots) == 1:
        pairs = [_pair(spec, roots[0], "single", pi)]
    else:
        pairs = [_pair(spec, roots[0], "lower", pi), _pair(spec, roots[1], "upper", pi)]
    logger.debug("find_admissible(%s): %s", spec.name, ", ".join(str(p) for p in pairs))
    if which == "lower":
        return pairs[:1]
    if which == "upper":
        return pairs[-1:]
    return pairs


@dataclass(frozen=True)
class AdmissibleRoots:
    """ω₋ and ω₊; `upper` is None for a degenerate single root."""
    lower: AdmissiblePair
    upper: Optional[AdmissiblePair]

    @property
    def two_roots(self) -> bool:
        return self.upper is not None

    def to_dict(self) -> dict:
        return {
            "lower": self.lower.to_dict(),
            "upper": self.upper.to_dict() if self.upper else None,
        }


def admissible_roots(spec: MapSpec, search: Optional[tuple[float, float]] = None) -> AdmissibleRoots:
    pairs = find_admissible(spec, search)
    return AdmissibleRoots(lower=pairs[0], upper=pairs[1] if len(pairs) == 2 else None)


def chi_negative_below(spec: MapSpec, upper: float, n_points: int = 20) -> float:
    """max of χ over an interior grid of (0, upper); negative when the tail lemma applies."""
    grid = np.linspace(0.0, upper, n_points + 2)[1:-1]
    return float(max(chi(spec, g) for g in grid))


# ── Spine exponent ────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class SpineExponent:
    """F̂(q) = diag(v)^{-1} A(ω+q) diag(v)."""
    spec: MapSpec
    omega: float
    v: np.ndarray

    def matrix(self, q: float) -> np.ndarray:
        a = cumulant_matrix(self.spec, self.omega + q)
        return a * self.v[None, :] / self.v[:, None]

    def chi(self, q: float) -> float:
        return leading_eigenvalue(self.matrix(q))[0]

    def chi_derivative(self, h: float = 1e-5) -> float:
        return (self.chi(h) - self.chi(-h)) / (2.0 * h)

    def tabulate(self, grid: Sequence[float]) -> list[dict]:
        return [
            {"q": float(q), "matrix": [[float(x) for x in row] for row in self.matrix(q)], "chi": self.chi(q)}
            for q in grid
        ]


def spine_exponent(spec: MapSpec, pair: AdmissiblePair) -> SpineExponent:
    return SpineExponent(spec=spec, omega=float(pair.omega), v=np.asarray(pair.v, dtype=float))


def spine_spec(spec: MapSpec, pair: AdmissiblePair) -> MapSpec:
    """
    The spine MAP with matrix exponent F̂. Spine jump marks carry the type
    of the piece left behind, so the released piece can be re-rooted.
    """
    n = spec.n_types
    om = float(pair.omega)
    v = np.asarray(pair.v, dtype=float)
    pi = pi_measure(spec)
    q = spec.q_matrix

    levy = []
    for i, comp in enumerate(spec.levy):
        atoms = [JumpAtom(a.size, a.weight * math.exp(om * a.size), a.type_mark) for a in comp.atoms]
        for a in pi.at(i, i):
            atoms.append(JumpAtom(math.log(-math.expm1(a.size)), a.transform(om), a.parent_type_after))
        levy.append(
            LevyComponent(drift=comp.drift + comp.gauss_var * om, gauss_var=comp.gauss_var, atoms=tuple(atoms), kill_rate=0.0)
        )

    q_hat = np.zeros((n, n))
    trans: dict[tuple[int, int], TransitionJump] = {}
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            ratio = v[j] / v[i]
            raw: list[tuple[float, float, int]] = [
                (math.log(-math.expm1(a.size)), ratio * a.transform(om), a.parent_type_after) for a in pi.at(i, j)
            ]
            if q[i, j] > 0:
                raw += [
                    (a.size, ratio * q[i, j] * a.weight * math.exp(om * a.size), a.type_mark)
                    for a in spec.transition(i, j).atoms
                ]
            total = math.fsum(r for _, r, _ in raw)
            if total <= 0:
                continue
            q_hat[i, j] = total
            trans[(i, j)] = TransitionJump(atoms=tuple(JumpAtom(s, r / total, m) for s, r, m in raw))
        q_hat[i, i] = -float(np.sum(q_hat[i]))
    return MapSpec(n, q_hat, tuple(levy), trans, name=f"{spec.name}-spine({om:.6g})")


def mu_ii(spec: MapSpec, i: int, omega: float) -> float:
    """−Π_ii(ω)/(q_ii + ψ_i(ω)); the spine construction needs it below 1."""
    denom = float(spec.q_matrix[i, i]) + spec.psi(i, omega)
    if denom >= 0:
        return float("inf")
    return -pi_measure(spec).transform(i, i, omega) / denom


# ── Genealogical mean matrix ──────────────────────────────────────────────────

def genealogical_mean_matrix(spec: MapSpec, q: float) -> np.ndarray:
    """
    m_ij(q) = E_i[Σ_{first-generation children k} X_k(0)^q 1{J_k = j}] for a unit
    Eve cell, as (I − B)^{-1}A with one-visit matrices A and B.
    """
    n = spec.n_types
    pi = pi_measure(spec)
    d = np.array([spec.psi(i, q) + spec.q_matrix[i, i] for i in range(n)])
    if np.any(d >= 0):
        raise PreconditionError(f"ψ_i(q) + q_ii must be negative for all i at q={q}")
    a = np.array([[-pi.transform(i, j, q) / d[i] for j in range(n)] for i in range(n)])
    b = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j and spec.q_matrix[i, j] > 0:
                b[i, j] = -spec.q_matrix[i, j] * spec.g(i, j, q) / d[i]
    if n > 1 and float(np.max(np.abs(np.linalg.eigvals(b)))) >= 1.0:
        raise PreconditionError(f"spectral radius of B(q) ≥ 1 at q={q}")
    return np.linalg.solve(np.eye(n) - b, a)


def genealogical_lambda(spec: MapSpec, q: float) -> float:
    """log ρ(m(q)); shares its zeros with λ̃."""
    rho, _ = leading_eigenvalue(genealogical_mean_matrix(spec, q))
    return math.log(rho)


def assumption_a_structural(spec: MapSpec) -> bool:
    """Irreducibility of the sparsity graph of m(q): Q-moves followed by one Π edge."""
    n = spec.n_types
    pi = pi_measure(spec)
    q_adj = (spec.q_matrix > 0) & ~np.eye(n, dtype=bool)
    reach = np.eye(n, dtype=bool)
    for _ in range(n):
        reach = reach | (reach.astype(int) @ q_adj.astype(int) > 0)
    pi_adj = np.array([[bool(pi.at(j, k)) for k in range(n)] for j in range(n)])
    m_adj = (reach.astype(int) @ pi_adj.astype(int)) > 0
    if n == 1:
        return bool(m_adj[0, 0])
    return is_irreducible(m_adj)


def assumption_h_analytic(spec: MapSpec, pair: AdmissiblePair, h: float = 1e-4) -> np.ndarray:
    """(m′(ω)v)_i / v_i by central differences; (H) asks for all entries in (−∞, 0)."""
    v = np.asarray(pair.v, dtype=float)
    dm = (genealogical_mean_matrix(spec, pair.omega + h) - genealogical_mean_matrix(spec, pair.omega - h)) / (2.0 * h)
    return dm @ v / v


# ── Stopped martingale ────────────────────────────────────────────────────────

def _stopped_value(spec: MapSpec, omega: float, v: np.ndarray, start_type: int, chunk: float, stream: SeededStream) -> float:
    gen = _generator(stream)
    parts: list[float] = []
    xi, j = 0.0, int(start_type)
    while True:
        path = sample_map_path(spec, j, chunk, gen, start_value=xi)
        kinds = path.knot_kinds
        hits = np.flatnonzero(kinds == KIND_TRANSITION)
        stop = int(hits[0]) if hits.size else path.n_segments
        for k in np.flatnonzero((kinds[: stop + 1] != 0) & (path.knot_jumps[: stop + 1] < 0)):
            size = math.exp(path.left_values[k]) * -math.expm1(path.knot_jumps[k])
            parts.append(float(v[path.knot_marks[k]]) * size ** omega)
        if hits.size:
            parts.append(float(v[path.types[stop]]) * math.exp(omega * path.right_values[stop]))
            return math.fsum(parts)
        if path.killed:
            return math.fsum(parts)
        xi, j = path.end_value, path.end_type


def stopped_martingale_samples(
    spec: MapSpec,
    pair: AdmissiblePair,
    start_type: int,
    reps: int,
    rng: SeededStream,
    chunk: float = 4.0,
    mapper: Optional[Mapper] = None,
) -> np.ndarray:
    """
    Samples of M(H): children released before the first type change H,
    weighted v_mark·size^ω, plus v_{J(H)}X(H)^ω. Admissibility ⟺ E_i[M(H)] = v_i.
    """
    if spec.q_matrix[start_type, start_type] >= 0:
        raise PreconditionError(f"type {start_type} never changes type; M(H) undefined")
    task = partial(_stopped_value, spec, float(pair.omega), np.asarray(pair.v, dtype=float), int(start_type), float(chunk))
    return np.array(run_replicas(task, reps, rng.spawn("stopped", start_type), mapper), dtype=float)

