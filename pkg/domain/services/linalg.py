"""
domain/services/linalg.py

Perron-Frobenius eigen-solver for Metzler matrices, closed-form cross-checks
for N ≤ 3, and the matrix exponential.
"""
from __future__ import annotations

import logging

import numpy as np
from scipy.linalg import expm as _scipy_expm

from config.settings import EIG_MAX_ITER, EIG_REL_TOL
from domain.errors import NonConvergenceError

logger = logging.getLogger(__name__)


def is_metzler(matrix: np.ndarray) -> bool:
    m = np.asarray(matrix, dtype=float)
    off = m[~np.eye(m.shape[0], dtype=bool)]
    return bool(np.all(off >= 0.0))


def leading_eigenvalue(
    matrix: np.ndarray,
    is_ml: bool = True,
    rel_tol: float = EIG_REL_TOL,
    max_iter: int = EIG_MAX_ITER,
) -> tuple[float, np.ndarray]:
    """
    Dominant real eigenvalue and positive eigenvector (w[0] = 1).

    Metzler input: power iteration on F + sI with s = max|F_ii| + 1, stopped
    when the eigen-residual drops below rel_tol·max(‖F‖, 1). Otherwise the
    eigenvalue with largest real part from a dense solve.
    """
    m = np.asarray(matrix, dtype=float)
    n = m.shape[0]
    if m.shape != (n, n):
        raise ValueError(f"square matrix required, got shape {m.shape}")
    if n == 1:
        return float(m[0, 0]), np.ones(1)

    if not is_ml:
        vals, vecs = np.linalg.eig(m)
        k = int(np.argmax(vals.real))
        vec = np.real(vecs[:, k])
        vec = vec / vec[0]
        return float(vals[k].real), vec

    if not is_metzler(m):
        raise NonConvergenceError("matrix has negative off-diagonal entries; not of Metzler form")

    shift = float(np.max(np.abs(np.diag(m)))) + 1.0
    b = m + shift * np.eye(n)
    scale = max(float(np.max(np.abs(m))), 1.0)
    x = np.ones(n) / np.sqrt(n)
    mu = 0.0
    for it in range(1, int(max_iter) + 1):
        y = b @ x
        mu = float(x @ y) / float(x @ x)
        norm = float(np.max(np.abs(y)))
        if norm == 0.0:
            raise NonConvergenceError("power iteration collapsed to the zero vector")
        x_new = y / norm
        resid = float(np.max(np.abs(m @ x_new - (mu - shift) * x_new)))
        x = x_new
        if resid <= rel_tol * scale:
            break
    else:
        raise NonConvergenceError(
            f"power iteration did not converge in {max_iter} iterations (residual {resid:.3e}); "
            "input may be reducible or defective"
        )

    chi = float(x @ (m @ x)) / float(x @ x)
    if np.any(x <= 0.0):
        raise NonConvergenceError("leading eigenvector is not strictly positive; matrix is reducible")
    w = x / x[0]
    logger.debug("leading_eigenvalue: chi=%.15g after %d iterations", chi, it)
    return chi, w


def closed_form_leading_eigenvalue(matrix: np.ndarray) -> tuple[float, np.ndarray]:
    """Explicit characteristic-polynomial solution for N ≤ 3."""
    m = np.asarray(matrix, dtype=float)
    n = m.shape[0]
    if n == 1:
        return float(m[0, 0]), np.ones(1)
    if n == 2:
        a, b, c, d = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
        tr, det = a + d, a * d - b * c
        lam = 0.5 * (tr + np.sqrt(tr * tr - 4.0 * det))
        if b != 0.0:
            w = np.array([1.0, (lam - a) / b])
        else:
            w = np.array([1.0, c / (lam - d)])
        return float(lam), w
    if n == 3:
        roots = np.roots(np.poly(m))
        real = roots[np.abs(roots.imag) < 1e-9].real
        lam = float(np.max(real))
        # null vector of (m − λI) from the cross product of two rows
        shifted = m - lam * np.eye(3)
        w = np.cross(shifted[0], shifted[1])
        if np.max(np.abs(w)) < 1e-12:
            w = np.cross(shifted[0], shifted[2])
        return lam, w / w[0]
    raise ValueError("closed form available for N ≤ 3 only")


def left_perron_vector(matrix: np.ndarray) -> np.ndarray:
    """Positive left eigenvector of a Metzler matrix, normalized to sum 1."""
    _, w = leading_eigenvalue(np.asarray(matrix, dtype=float).T)
    return w / w.sum()


def expm(matrix: np.ndarray) -> np.ndarray:
    """Matrix exponential (scaling and squaring with Padé approximation)."""
    return _scipy_expm(np.asarray(matrix, dtype=float))
