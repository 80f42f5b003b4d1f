"""
domain/services/root_finding.py

Sign-change scanning and bracketed root finding for convex spectral curves.
"""
from __future__ import annotations

import logging
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from config.settings import ROOT_TOL
from domain.errors import NoRootError, TooManyRootsError

logger = logging.getLogger(__name__)


def bracketed_root(f: Callable[[float], float], lo: float, hi: float, tol: float = ROOT_TOL) -> float:
    """
    Root of f in [lo, hi] given a sign change (Brent: bisection + secant +
    inverse quadratic steps). The returned point satisfies |f| < tol or is
    the better endpoint of a bracket narrower than machine resolution.
    """
    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0.0:
        return float(lo)
    if f_hi == 0.0:
        return float(hi)
    if np.sign(f_lo) == np.sign(f_hi):
        raise NoRootError(f"no sign change in [{lo}, {hi}]: f(lo)={f_lo:.3e}, f(hi)={f_hi:.3e}")
    root = brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    value = f(root)
    if abs(value) >= tol:
        logger.debug("bracketed_root: |f(root)|=%.3e above tol %.1e at root %.15g", abs(value), tol, root)
    return float(root)


def scan_sign_changes(f: Callable[[float], float], grid: Sequence[float]) -> tuple[list[tuple[float, float]], list[float]]:
    """
    Evaluate f on a sorted grid. Returns (brackets, exact_roots): adjacent
    grid points where f changes sign, and grid points where f is exactly 0.
    """
    pts = sorted(float(g) for g in grid)
    vals = [f(p) for p in pts]
    brackets: list[tuple[float, float]] = []
    exact: list[float] = []
    for k, (p, v) in enumerate(zip(pts, vals)):
        if v == 0.0:
            exact.append(p)
            continue
        if k + 1 < len(pts):
            w = vals[k + 1]
            if w != 0.0 and np.sign(v) != np.sign(w):
                brackets.append((p, pts[k + 1]))
    return brackets, exact


def geometric_grid(lo: float, hi: float, base_grid: Sequence[float]) -> list[float]:
    """Base grid points strictly inside (lo, hi) plus the endpoints."""
    inner = [g for g in base_grid if lo < g < hi]
    return [float(lo)] + inner + [float(hi)]


def convex_roots(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    base_grid: Sequence[float],
    tol: float = ROOT_TOL,
) -> list[float]:
    """
    Zeros of a convex function in [lo, hi]: sign changes on the geometric
    grid refined by Brent, plus exact zeros at grid points. At most two.
    """
    brackets, exact = scan_sign_changes(f, geometric_grid(lo, hi, base_grid))
    roots = sorted(exact + [bracketed_root(f, a, b, tol) for a, b in brackets])
    if not roots:
        raise NoRootError(f"no root in [{lo}, {hi}]")
    if len(roots) > 2:
        raise TooManyRootsError(f"{len(roots)} sign changes in [{lo}, {hi}]: {roots}")
    return roots
