"""
application/workflows/suite_renewal.py

Cascade machinery: Hill estimation on exact Pareto draws, the Kesten affine
fixture, the binary smoothing transform, and the bridge from cell trees to
a smoothing transform whose fixed point is the normalized ℳ⁻(∞).
"""
from __future__ import annotations

import logging

import numpy as np

from config.fixtures import binary_smoothing, kesten_affine
from config.settings import ROOT_TOL
from domain.models.estimates import INCONCLUSIVE
from domain.services.cell_system import martingale_limit_samples
from domain.services.renewal import (
    affine_fixed_point,
    affine_moment_probe,
    find_alpha,
    kesten_exponent,
    offspring_from_trees,
    pool_ks_inputs,
    population_dynamics,
    renewal_condition,
    weight_matrix,
)
from domain.services.stats_checks import ks_two_sample
from domain.services.tail_estimation import pareto_samples, tail_verify
from application.workflows.context import SuiteContext
from infrastructure.plotting.svg_plots import histogram_plot, loglog_tail

logger = logging.getLogger(__name__)

PARETO_ALPHAS = (1.5, 3.0)
KESTEN_EXPONENT = 2.0
KESTEN_BETAS = (1.5, 2.5)
EXACT_TOL = 1e-6


def _pareto(ctx: SuiteContext) -> None:
    n = ctx.reps("pareto_samples")
    samples = {}
    for a in PARETO_ALPHAS:
        name = f"pareto_{a:g}"
        with ctx.guard(name):
            x = pareto_samples(a, n, ctx.stream.spawn("pareto", str(a)).generator())
            check = tail_verify(x, a, ctx.tail_rel_tol, ctx.stream.spawn("pareto-boot", str(a)), ctx.tail_min_samples)
            ctx.record(name, check.verdict, check.reason, **check.to_dict())
            samples[f"Pareto({a:g})"] = x
    if samples:
        loglog_tail(samples, ctx.plot_path("pareto.svg"), title="exact Pareto draws")


def _kesten(ctx: SuiteContext) -> None:
    spec = kesten_affine()
    with ctx.guard("kesten_exponent"):
        kappa = kesten_exponent(spec)
        ctx.record("kesten_exponent", abs(kappa - KESTEN_EXPONENT) < EXACT_TOL, value=kappa, expected=KESTEN_EXPONENT)

    with ctx.guard("kesten_tail"):
        series = affine_fixed_point(spec, None, ctx.reps("affine_reps"), ctx.stream.spawn("kesten"))
        samples = series.values
        check = tail_verify(samples, KESTEN_EXPONENT, ctx.tail_rel_tol, ctx.stream.spawn("kesten-boot"), ctx.tail_min_samples)
        ctx.record("kesten_tail", check.verdict, check.reason, series=series.to_dict(), **check.to_dict())
        loglog_tail({"R (affine)": samples}, ctx.plot_path("kesten.svg"), title="Kesten affine fixed point",
                    reference_slope=KESTEN_EXPONENT)

        probes = []
        for beta in KESTEN_BETAS:
            probe = affine_moment_probe(spec, beta, 0, ctx.stream, samples=samples)
            probes.append(probe)
            # unseen blow-up at finite n is inconclusive
            outcome = True if probe["agree"] else (INCONCLUSIVE if not probe["finite_predicted"] else False)
            ctx.record(f"kesten_moment_{beta:g}", outcome, **probe)
        ctx.write_json("kesten.json", {"exponent": KESTEN_EXPONENT, "series": series.to_dict(), "tail": check, "moments": probes})


def _binary(ctx: SuiteContext) -> None:
    with ctx.guard("binary_smoothing"):
        pair = find_alpha(binary_smoothing())
        ctx.record("binary_smoothing", abs(pair.omega - 1.0) < ROOT_TOL, value=pair.omega)


def _bridge(ctx: SuiteContext) -> None:
    roots = ctx.roots()
    if not roots.two_roots:
        ctx.skip("bridge_alpha", "single admissible root; Cramér suites skipped")
        ctx.skip("bridge_ks", "single admissible root; Cramér suites skipped")
        return
    lower, upper = roots.lower, roots.upper
    expected = upper.omega / lower.omega
    cfg = ctx.config

    offspring = offspring_from_trees(ctx.spec, cfg.alpha, lower, ctx.controls, ctx.reps("trees"), ctx.stream.spawn("offspring"), ctx.mapper)
    unit = weight_matrix(offspring, 1.0)
    found = find_alpha(offspring)
    rel = abs(found.omega - expected) / expected
    ctx.record("bridge_alpha", rel <= ctx.tail_rel_tol, value=found.omega, expected=expected, rel_err=rel,
               unit_matrix=unit, renewal_condition=renewal_condition(offspring, found.omega))

    pop = population_dynamics(offspring, ctx.reps("pop_size"), ctx.reps("pop_iterations"), ctx.stream.spawn("population"),
                              se_multiplier=ctx.se_multiplier)
    ctx.write_csv("population_history.csv", pop.history, ["iteration", "type", "mean", "se", "q90"])
    ctx.write_csv("population_pools.csv", pop.pool_rows(), ["iteration", "type", "value"])

    with ctx.guard("bridge_ks"):
        pool = pool_ks_inputs(pop, cfg.start_type)
        limit = martingale_limit_samples(ctx.spec, cfg.x0, cfg.start_type, cfg.alpha, lower.omega, lower.v, ctx.controls,
                                         ctx.reps("trees"), ctx.stream.spawn("limit"), ctx.mapper)
        normalized = limit.corrected() / (float(lower.v[cfg.start_type]) * cfg.x0 ** lower.omega)
        ks = ks_two_sample(pool, normalized)
        outcome = (not ks.skipped and ks.pvalue > ctx.ks_pvalue_min) if pop.stabilized else INCONCLUSIVE
        reason = "" if pop.stabilized else f"population not stabilized after {pop.iterations} iterations"
        ctx.record("bridge_ks", outcome, reason, ks=ks, iterations=pop.iterations)
        histogram_plot({"population pool": np.log(pool[pool > 0]), "cell trees": np.log(normalized[normalized > 0])},
                       ctx.plot_path("bridge.svg"), title="normalized ℳ⁻(∞): cascade vs cell trees", xlabel="log R")


def run_renewal_suite(ctx: SuiteContext) -> None:
    _pareto(ctx)
    _kesten(ctx)
    _binary(ctx)
    with ctx.guard("bridge"):
        _bridge(ctx)
