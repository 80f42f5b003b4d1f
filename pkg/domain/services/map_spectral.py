"""
domain/services/map_spectral.py

Analysis of finite-type MAPs: validation, matrix exponent F(z), Perron root
χ(z) and eigenvector w(z), stationary law, duality, reflection, Cramér
numbers and exponential tilting.

Convention
──────────
F_ii(z) = ψ_i(z) + q_ii,   F_ij(z) = q_ij·G_ij(z)  (i ≠ j).
"""
from __future__ import annotations

import logging
from collections import deque
from typing import Optional, Sequence

import numpy as np

from config.settings import ADMISSIBLE_SCAN_GRID, ROOT_TOL, TRANSITION_SUM_TOL
from domain.errors import InvalidSpecError, NoRootError
from domain.models.map_spec import JumpAtom, LevyComponent, MapSpec, TransitionJump
from domain.models.spectral import SpectralData
from domain.services.linalg import leading_eigenvalue, left_perron_vector
from domain.services.root_finding import bracketed_root, geometric_grid, scan_sign_changes

logger = logging.getLogger(__name__)


# ── Validation ────────────────────────────────────────────────────────────────

def _reachable(adjacency: np.ndarray, start: int) -> set[int]:
    seen = {start}
    queue = deque([start])
    while queue:
        i = queue.popleft()
        for j in np.flatnonzero(adjacency[i]):
            j = int(j)
            if j not in seen:
                seen.add(j)
                queue.append(j)
    return seen


def is_irreducible(adjacency: np.ndarray) -> bool:
    """Reachability closure: every type reaches every other type."""
    n = adjacency.shape[0]
    return all(len(_reachable(adjacency, i)) == n for i in range(n))


def validate_spec(spec: MapSpec) -> None:
    """Raise InvalidSpecError naming the first violated invariant."""
    n = spec.n_types
    if n < 1:
        raise InvalidSpecError(f"n_types must be >= 1, got {n}")
    q = spec.q_matrix
    if q.shape != (n, n):
        raise InvalidSpecError(f"q_matrix shape {q.shape} does not match n_types={n}")
    if not np.all(np.isfinite(q)):
        raise InvalidSpecError("q_matrix has non-finite entries")
    if len(spec.levy) != n:
        raise InvalidSpecError(f"expected {n} Lévy components, got {len(spec.levy)}")

    off = ~np.eye(n, dtype=bool)
    if np.any(q[off] < 0):
        i, j = np.argwhere((q < 0) & off)[0]
        raise InvalidSpecError(f"negative rate q[{i},{j}]={q[i, j]:g}")
    scale = max(1.0, float(np.max(np.abs(q))))
    for i in range(n):
        row = float(np.sum(q[i]))
        if abs(row) > TRANSITION_SUM_TOL * scale:
            raise InvalidSpecError(f"row {i} of Q sums to {row:.3e}, not 0")
    if n > 1 and not is_irreducible(q * off > 0):
        raise InvalidSpecError("Q not irreducible")

    for i, comp in enumerate(spec.levy):
        if not np.isfinite(comp.drift):
            raise InvalidSpecError(f"type {i}: drift is not finite")
        if comp.gauss_var < 0:
            raise InvalidSpecError(f"type {i}: negative gauss_var {comp.gauss_var:g}")
        if comp.kill_rate < 0:
            raise InvalidSpecError(f"type {i}: negative kill_rate {comp.kill_rate:g}")
        for atom in comp.atoms:
            if atom.weight < 0:
                raise InvalidSpecError(f"type {i}: negative Lévy atom weight {atom.weight:g}")
            if atom.size == 0.0:
                raise InvalidSpecError(f"type {i}: Lévy atom of size 0")
            if not 0 <= atom.type_mark < n:
                raise InvalidSpecError(f"type {i}: atom type_mark {atom.type_mark} out of range")

    for (i, j), jump in spec.trans.items():
        if not (0 <= i < n and 0 <= j < n) or i == j:
            raise InvalidSpecError(f"transition key ({i},{j}) invalid")
        for atom in jump.atoms:
            if atom.weight < 0:
                raise InvalidSpecError(f"transition ({i},{j}): negative probability {atom.weight:g}")
            if not 0 <= atom.type_mark < n:
                raise InvalidSpecError(f"transition ({i},{j}): type_mark {atom.type_mark} out of range")
        if q[i, j] > 0:
            total = float(sum(a.weight for a in jump.atoms))
            if abs(total - 1.0) > TRANSITION_SUM_TOL:
                raise InvalidSpecError(f"transition ({i},{j}) weights sum {total:g}≠1")


# ── Matrix exponent and spectral data ─────────────────────────────────────────

def matrix_exponent(spec: MapSpec, z: float) -> np.ndarray:
    n = spec.n_types
    f = np.empty((n, n), dtype=float)
    for i in range(n):
        for j in range(n):
            if i == j:
                f[i, i] = spec.psi(i, z) + spec.q_matrix[i, i]
            else:
                qij = spec.q_matrix[i, j]
                f[i, j] = qij * spec.g(i, j, z) if qij > 0 else 0.0
    return f


def spectral_data(spec: MapSpec, z: float) -> SpectralData:
    f = matrix_exponent(spec, z)
    chi, w = leading_eigenvalue(f, is_ml=True)
    return SpectralData(z=float(z), f_matrix=f, chi=chi, w=w)


def chi(spec: MapSpec, z: float) -> float:
    return leading_eigenvalue(matrix_exponent(spec, z))[0]


def chi_derivative(spec: MapSpec, z: float = 0.0, h: float = 1e-5) -> float:
    """Central finite difference of χ; χ′(0) is the mean drift of ξ."""
    return (chi(spec, z + h) - chi(spec, z - h)) / (2.0 * h)


def second_divided_differences(values: Sequence[float], grid: Sequence[float]) -> np.ndarray:
    x = np.asarray(grid, dtype=float)
    y = np.asarray(values, dtype=float)
    first = np.diff(y) / np.diff(x)
    return np.diff(first) / (x[2:] - x[:-2]) * 2.0


def stationary_distribution(spec: MapSpec) -> np.ndarray:
    """π with πQ = 0 and Σπ = 1 (leading left eigenvector of Q)."""
    if spec.n_types == 1:
        return np.ones(1)
    return left_perron_vector(spec.q_matrix)


# ── Derived MAPs ────────────────────────────────────────────────────

def _negate_atoms(atoms: Sequence[JumpAtom]) -> tuple[JumpAtom, ...]:
    return tuple(JumpAtom(-a.size, a.weight, a.type_mark) for a in atoms)


def dual_spec(spec: MapSpec) -> MapSpec:
    """
    MAP with F♮(z) = Δ_π^{-1} F(−z)ᵀ Δ_π: q♮_ij = π_j q_ji / π_i, ξ_i negated,
    U♮_{i,j} distributed as −U_{j,i}.
    """
    n = spec.n_types
    pi = stationary_distribution(spec)
    q = spec.q_matrix
    qd = np.zeros_like(q)
    for i in range(n):
        for j in range(n):
            if i != j:
                qd[i, j] = pi[j] * q[j, i] / pi[i]
    for i in range(n):
        qd[i, i] = q[i, i]
    levy = tuple(
        LevyComponent(drift=-c.drift, gauss_var=c.gauss_var, atoms=_negate_atoms(c.atoms), kill_rate=c.kill_rate)
        for c in spec.levy
    )
    trans = {
        (i, j): TransitionJump(atoms=_negate_atoms(jump.atoms))
        for (j, i), jump in spec.trans.items()
    }
    return MapSpec(n, qd, levy, trans, name=f"{spec.name}-dual")


def reflect_spec(spec: MapSpec) -> MapSpec:
    """The MAP (−ξ, Θ): same Q, every drift and jump size negated."""
    levy = tuple(
        LevyComponent(drift=-c.drift, gauss_var=c.gauss_var, atoms=_negate_atoms(c.atoms), kill_rate=c.kill_rate)
        for c in spec.levy
    )
    trans = {key: TransitionJump(atoms=_negate_atoms(jump.atoms)) for key, jump in spec.trans.items()}
    return MapSpec(spec.n_types, spec.q_matrix.copy(), levy, trans, name=f"{spec.name}-reflected")


def tilt_spec(spec: MapSpec, gamma: float) -> MapSpec:
    """
    Explicit MAP under the Wald change of measure at γ, with exponent
    F^{(γ)}(z) = diag(w(γ))^{-1}(F(γ+z) − χ(γ)I) diag(w(γ)).
    """
    n = spec.n_types
    sd = spectral_data(spec, gamma)
    w = sd.w
    levy = []
    for c in spec.levy:
        atoms = tuple(JumpAtom(a.size, a.weight * np.exp(gamma * a.size), a.type_mark) for a in c.atoms)
        levy.append(LevyComponent(drift=c.drift + c.gauss_var * gamma, gauss_var=c.gauss_var, atoms=atoms, kill_rate=0.0))
    q = spec.q_matrix
    qt = np.zeros_like(q)
    trans: dict[tuple[int, int], TransitionJump] = {}
    for i in range(n):
        for j in range(n):
            if i == j or q[i, j] <= 0:
                continue
            g = spec.g(i, j, gamma)
            qt[i, j] = q[i, j] * g * w[j] / w[i]
            jump = spec.transition(i, j)
            trans[(i, j)] = TransitionJump(
                atoms=tuple(JumpAtom(a.size, a.weight * np.exp(gamma * a.size) / g, a.type_mark) for a in jump.atoms)
            )
        qt[i, i] = -float(np.sum(qt[i]))
    return MapSpec(n, qt, tuple(levy), trans, name=f"{spec.name}-tilt({gamma:g})")


def duality_residual(spec: MapSpec, z: float) -> float:
    """max |F♮(z) − Δ_π^{-1} F(−z)ᵀ Δ_π| entrywise."""
    pi = stationary_distribution(spec)
    expected = (matrix_exponent(spec, -z).T * pi[None, :]) / pi[:, None]
    return float(np.max(np.abs(matrix_exponent(dual_spec(spec), z) - expected)))


def tilt_residual(spec: MapSpec, gamma: float, z: float) -> float:
    """|χ^{(γ)}(z) − (χ(γ+z) − χ(γ))| for the explicit tilted spec."""
    tilted = tilt_spec(spec, gamma)
    return abs(chi(tilted, z) - (chi(spec, gamma + z) - chi(spec, gamma)))


# ── Cramér number ─────────────────────────────────────────────────────────────

def cramer_number(spec: MapSpec, bracket: Optional[tuple[float, float]] = None, tol: float = ROOT_TOL) -> float:
    """
    Positive root Υ of χ. With no bracket the geometric scan grid is used
    to locate the sign change.
    """
    f = lambda q: chi(spec, q)
    if bracket is not None:
        lo, hi = bracket
        if lo <= 0:
            raise NoRootError(f"Cramér bracket must have lo > 0, got {lo}")
        f_lo, f_hi = f(lo), f(hi)
        if f_lo * f_hi >= 0 and f_lo != 0.0 and f_hi != 0.0:
            raise NoRootError(f"no sign change of χ in [{lo}, {hi}]")
        root = bracketed_root(f, lo, hi, tol)
    else:
        brackets, exact = scan_sign_changes(f, ADMISSIBLE_SCAN_GRID)
        if exact:
            root = exact[0]
        elif brackets:
            root = bracketed_root(f, *brackets[0], tol)
        else:
            raise NoRootError("χ has no positive root on the scan grid")
    logger.debug("cramer_number(%s) = %.12g", spec.name, root)
    return float(root)


def scan_grid(lo: float, hi: float) -> list[float]:
    return geometric_grid(lo, hi, ADMISSIBLE_SCAN_GRID)
