"""
application/workflows/suite_simulate_map.py

Monte Carlo checks of the MAP simulator against its analytic exponent:
Laplace matrix, Wald martingale, time reversal and stationary drift.
"""
from __future__ import annotations

import logging
from itertools import product

import numpy as np

from domain.errors import GrowthFragError
from domain.models.estimates import Estimate
from domain.services.map_simulation import (
    empirical_laplace_matrix,
    reversed_laplace_matrix,
    stationary_increment_samples,
    wald_martingale_samples,
)
from domain.services.map_spectral import chi_derivative
from domain.services.rng_streams import mean_se
from application.workflows.context import SuiteContext
from infrastructure.plotting.svg_plots import trace_plot

logger = logging.getLogger(__name__)

LAPLACE_Z = (0.0, 0.5)
LAPLACE_T = (0.5, 1.0)
WALD_TIMES = (0.5, 1.0, 2.0)
FALLBACK_GAMMAS = (0.5, 1.0)


def _wald_gammas(ctx: SuiteContext) -> list[tuple[str, float]]:
    try:
        roots = ctx.roots()
    except GrowthFragError as exc:
        logger.warning("no admissible roots (%s); Wald check uses fixed γ", exc)
        return [(f"gamma{g:g}", g) for g in FALLBACK_GAMMAS]
    out = [("omega_minus", roots.lower.omega)]
    if roots.upper is not None:
        out.append(("omega_plus", roots.upper.omega))
    return out


def run_simulate_map_suite(ctx: SuiteContext) -> None:
    spec = ctx.spec
    reps = ctx.reps("laplace_paths")
    rows = []
    for k, (z, t) in enumerate(product(LAPLACE_Z, LAPLACE_T)):
        name = f"laplace_z{z:g}_t{t:g}"
        with ctx.guard(name):
            est = empirical_laplace_matrix(spec, z, t, reps, ctx.stream.spawn("laplace", k), ctx.mapper)
            ctx.record(name, est.within(ctx.se_multiplier), max_z=float(np.max(est.z_scores())), **est.to_dict())
            for i in range(spec.n_types):
                for j in range(spec.n_types):
                    rows.append({"z": z, "t": t, "i": i, "j": j, "mean": est.mean[i, j], "se": est.se[i, j], "exact": est.exact[i, j]})
    ctx.write_csv("laplace.csv", rows, ["z", "t", "i", "j", "mean", "se", "exact"])

    wald_rows = []
    series = {}
    for label, gamma in _wald_gammas(ctx):
        with ctx.guard(f"wald_{label}"):
            samples = wald_martingale_samples(
                spec, gamma, WALD_TIMES, ctx.reps("wald_paths"), ctx.stream.spawn("wald", label), ctx.config.start_type, ctx.mapper
            )
            ests = [Estimate(*mean_se(samples[t]), n=samples[t].size) for t in WALD_TIMES]
            ok = all(e.within(1.0, ctx.se_multiplier) for e in ests)
            ctx.record(f"wald_{label}", ok, gamma=gamma, estimates=[e.to_dict() for e in ests])
            series[label] = ([e.estimate for e in ests], [e.se for e in ests])
            wald_rows += [{"gamma": gamma, "t": t, "mean": e.estimate, "se": e.se, "n": e.n} for t, e in zip(WALD_TIMES, ests)]
    ctx.write_csv("wald.csv", wald_rows, ["gamma", "t", "mean", "se", "n"])
    if series:
        trace_plot(WALD_TIMES, series, ctx.plot_path("wald.svg"), title="Wald martingale", ylabel="mean", reference=1.0)

    if not spec.is_conservative:
        ctx.skip("time_reversal", "killed spec has no stationary time reversal")
        ctx.skip("stationary_drift", "killed spec has no stationary drift")
        return

    with ctx.guard("time_reversal"):
        est = reversed_laplace_matrix(spec, 0.5, 1.0, reps, ctx.stream.spawn("reversal"), ctx.mapper)
        ctx.record("time_reversal", est.within(ctx.se_multiplier), max_z=float(np.max(est.z_scores())), **est.to_dict())

    with ctx.guard("stationary_drift"):
        t = 1.0
        values = stationary_increment_samples(spec, t, reps, ctx.stream.spawn("drift"), ctx.mapper)
        est = Estimate(*mean_se(values), n=values.size)
        target = chi_derivative(spec) * t
        ctx.record("stationary_drift", est.within(target, ctx.se_multiplier), target=target, **est.to_dict())
