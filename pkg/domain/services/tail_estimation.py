"""
domain/services/tail_estimation.py

Power-law tail exponents from samples: Hill estimator over the top-k order
statistics with percentile bootstrap CI, log-log rank regression as a
cross-check, and the acceptance rule used by the tail suites.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from config.settings import (
    BOOTSTRAP_RESAMPLES,
    HILL_DEFAULT_K_FRAC,
    HILL_K_FRACS,
    MIN_TAIL_SAMPLES,
    MIN_TAIL_VERIFY_SAMPLES,
    TAIL_REL_TOL,
)
from domain.errors import InsufficientSamplesError
from domain.models.estimates import FAIL, INCONCLUSIVE, PASS, HillEstimate, TailReport
from domain.services.rng_streams import SeededStream

logger = logging.getLogger(__name__)

MIN_EXCEEDANCES = 10


def _top(values: np.ndarray, k: int) -> np.ndarray:
    """The k+1 largest values, descending."""
    part = np.partition(values, values.size - k - 1)[values.size - k - 1:]
    return np.sort(part)[::-1]


def hill_index(values: np.ndarray, k: int) -> float:
    top = _top(values, k)
    logs = np.log(top)
    h = float(np.mean(logs[:k] - logs[k]))
    return 1.0 / h if h > 0 else float("inf")


def rank_regression_slope(values: np.ndarray, k: int) -> float:
    """−slope of log(rank/n) against log(value) over the top k values."""
    top = _top(values, k)[:k]
    ranks = np.arange(1, k + 1, dtype=float) / values.size
    slope, _ = np.polyfit(np.log(top), np.log(ranks), 1)
    return float(-slope)


def hill_estimate(
    samples: Sequence[float] | np.ndarray,
    k_frac: float,
    n_boot: int = BOOTSTRAP_RESAMPLES,
    rng: Optional[np.random.Generator] = None,
) -> HillEstimate:
    x = np.asarray(samples, dtype=float)
    x = x[x > 0]
    n = x.size
    k = int(np.floor(k_frac * n))
    if k < MIN_EXCEEDANCES or k >= n:
        raise InsufficientSamplesError(f"too few exceedances: k={k} for n={n}, k_frac={k_frac}")
    est = hill_index(x, k)
    gen = rng if rng is not None else SeededStream(0, (k,)).generator()
    boot = np.empty(int(n_boot))
    for b in range(int(n_boot)):
        boot[b] = hill_index(x[gen.integers(0, n, n)], k)
    lo, hi = np.percentile(boot, [2.5, 97.5])
    return HillEstimate(estimate=est, ci_lo=float(lo), ci_hi=float(hi), k_frac=float(k_frac), k=k, n=n)


def tail_exponent(
    samples: Sequence[float] | np.ndarray,
    k_fracs: Sequence[float] = HILL_K_FRACS,
    default_k_frac: float = HILL_DEFAULT_K_FRAC,
    n_boot: int = BOOTSTRAP_RESAMPLES,
    rng: Optional[SeededStream] = None,
    min_samples: int = MIN_TAIL_SAMPLES,
) -> TailReport:
    """Hill estimates across k_fracs with the default fraction singled out."""
    x = np.asarray(samples, dtype=float)
    x = x[x > 0]
    if x.size < min_samples:
        raise InsufficientSamplesError(f"tail estimation needs >= {min_samples} samples, got {x.size}")
    stream = rng or SeededStream(0)
    fracs = sorted(set(float(f) for f in k_fracs) | {float(default_k_frac)})
    hills = []
    for idx, frac in enumerate(fracs):
        try:
            hills.append(hill_estimate(x, frac, n_boot, stream.spawn("hill", idx).generator()))
        except InsufficientSamplesError as exc:
            logger.debug("tail_exponent: skipping k_frac=%g (%s)", frac, exc)
    default = next((h for h in hills if h.k_frac == float(default_k_frac)), None)
    if default is None:
        raise InsufficientSamplesError(f"too few exceedances at the default k_frac={default_k_frac}")
    slope = rank_regression_slope(x, default.k)
    logger.debug("tail_exponent: hill=%.4g [%.4g, %.4g], rank slope=%.4g", default.estimate, default.ci_lo, default.ci_hi, slope)
    return TailReport(hill=tuple(hills), default=default, rank_slope=slope, n=int(x.size))


@dataclass(frozen=True)
class TailVerification:
    report: TailReport
    expected: float
    verdict: str
    reason: str = ""

    def to_dict(self) -> dict:
        out = self.report.to_dict()
        out.update({"expected": self.expected, "verdict": self.verdict, "reason": self.reason})
        return out


def tail_verify(
    samples: Sequence[float] | np.ndarray,
    alpha_expected: float,
    rel_tol: float = TAIL_REL_TOL,
    rng: Optional[SeededStream] = None,
    min_samples: int = MIN_TAIL_VERIFY_SAMPLES,
    k_fracs: Sequence[float] = HILL_K_FRACS,
) -> TailVerification:
    """
    Passes when alpha_expected lies inside the bootstrap CI and within
    rel_tol of the Hill point estimate. A tail clearly lighter than expected
    may come from a vanishing tail constant and is reported as inconclusive.
    """
    report = tail_exponent(samples, k_fracs=k_fracs, rng=rng, min_samples=min_samples)
    h = report.default
    rel_err = abs(h.estimate - alpha_expected) / alpha_expected
    if h.contains(alpha_expected) and rel_err <= rel_tol:
        return TailVerification(report, alpha_expected, PASS)
    if h.ci_lo > alpha_expected * (1.0 + rel_tol):
        return TailVerification(report, alpha_expected, INCONCLUSIVE, "degenerate constant suspected")
    return TailVerification(
        report,
        alpha_expected,
        FAIL,
        f"hill {h.estimate:.4g} [{h.ci_lo:.4g}, {h.ci_hi:.4g}] vs expected {alpha_expected:.4g}",
    )


def pareto_samples(alpha: float, n: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """Exact Pareto(alpha) draws by inverse CDF."""
    u = rng.random(int(n))
    return scale * (1.0 - u) ** (-1.0 / alpha)
