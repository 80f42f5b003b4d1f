"""
domain/services/stats_checks.py

Two-sample comparisons (plain and importance-weighted KS) and moment
stability probes used by the verification suites.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from config.settings import MOMENT_BLOWUP_FACTOR
from domain.models.estimates import Estimate
from domain.services.rng_streams import mean_se

logger = logging.getLogger(__name__)

MIN_KS_SAMPLES = 20


@dataclass(frozen=True)
class KsResult:
    statistic: float
    pvalue: float
    n_a: float
    n_b: float
    skipped: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def estimate(values: Sequence[float] | np.ndarray) -> Estimate:
    mean, se = mean_se(values)
    return Estimate(estimate=mean, se=se, n=int(np.size(values)))


def effective_sample_size(weights: np.ndarray) -> float:
    w = np.asarray(weights, dtype=float)
    total = math.fsum(w.tolist())
    sq = math.fsum((w * w).tolist())
    return total * total / sq if sq > 0 else 0.0


def ks_two_sample(a: np.ndarray, b: np.ndarray) -> KsResult:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size < MIN_KS_SAMPLES or b.size < MIN_KS_SAMPLES:
        return KsResult(float("nan"), float("nan"), float(a.size), float(b.size), skipped=True)
    res = stats.ks_2samp(a, b)
    return KsResult(float(res.statistic), float(res.pvalue), float(a.size), float(b.size))


def _weighted_ecdf(values: np.ndarray, weights: np.ndarray, grid: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    v = values[order]
    cw = np.cumsum(weights[order])
    cw = cw / cw[-1]
    idx = np.searchsorted(v, grid, side="right")
    out = np.zeros(grid.size)
    mask = idx > 0
    out[mask] = cw[idx[mask] - 1]
    return out


def weighted_ks_2samp(
    a: np.ndarray,
    b: np.ndarray,
    weights_a: Optional[np.ndarray] = None,
    weights_b: Optional[np.ndarray] = None,
) -> KsResult:
    """
    KS distance between two weighted empirical laws. The p-value uses the
    Kolmogorov limit law with effective sample sizes (Σw)²/Σw².
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    wa = np.ones(a.size) if weights_a is None else np.asarray(weights_a, dtype=float)
    wb = np.ones(b.size) if weights_b is None else np.asarray(weights_b, dtype=float)
    keep_a = wa > 0
    keep_b = wb > 0
    a, wa, b, wb = a[keep_a], wa[keep_a], b[keep_b], wb[keep_b]
    na, nb = effective_sample_size(wa), effective_sample_size(wb)
    if na < MIN_KS_SAMPLES or nb < MIN_KS_SAMPLES:
        return KsResult(float("nan"), float("nan"), na, nb, skipped=True)
    grid = np.concatenate([a, b])
    d = float(np.max(np.abs(_weighted_ecdf(a, wa, grid) - _weighted_ecdf(b, wb, grid))))
    en = math.sqrt(na * nb / (na + nb))
    p = float(stats.kstwobign.sf(en * d))
    return KsResult(d, p, na, nb)


def per_type_ks(
    values_a: np.ndarray,
    types_a: np.ndarray,
    values_b: np.ndarray,
    types_b: np.ndarray,
    n_types: int,
    weights_a: Optional[np.ndarray] = None,
    weights_b: Optional[np.ndarray] = None,
) -> dict[int, KsResult]:
    """Weighted KS comparison of the value laws, conditioned on each type."""
    out: dict[int, KsResult] = {}
    wa = np.ones(len(values_a)) if weights_a is None else np.asarray(weights_a, dtype=float)
    wb = np.ones(len(values_b)) if weights_b is None else np.asarray(weights_b, dtype=float)
    for j in range(n_types):
        ma = np.asarray(types_a) == j
        mb = np.asarray(types_b) == j
        out[j] = weighted_ks_2samp(np.asarray(values_a)[ma], np.asarray(values_b)[mb], wa[ma], wb[mb])
    return out


def ks_passed(results: dict[int, KsResult], p_min: float) -> bool:
    """True when every non-skipped comparison has p > p_min."""
    return all(r.skipped or r.pvalue > p_min for r in results.values())


def moment_stability_probe(
    samples: np.ndarray,
    betas: Sequence[float],
    n_levels: int = 4,
    blowup_factor: float = MOMENT_BLOWUP_FACTOR,
) -> list[dict]:
    """
    β-moments on nested prefixes of size n/2^{n_levels−1}, …, n/2, n.
    A moment whose value grows by more than `blowup_factor` from the
    smallest to the full sample is flagged as blowing up.
    """
    x = np.abs(np.asarray(samples, dtype=float))
    n = x.size
    sizes = [max(n // 2 ** k, 1) for k in range(n_levels - 1, -1, -1)]
    out = []
    for beta in betas:
        moments = [math.fsum((x[:m] ** beta).tolist()) / m for m in sizes]
        growth = moments[-1] / moments[0] if moments[0] > 0 else float("inf")
        out.append(
            {
                "beta": float(beta),
                "sizes": sizes,
                "moments": moments,
                "growth": growth,
                "blowup": bool(growth > blowup_factor),
            }
        )
    return out
