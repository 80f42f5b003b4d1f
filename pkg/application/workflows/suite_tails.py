"""
application/workflows/suite_tails.py

Heavy tails: the weighted exponential functional against the Cramér number,
and the limit ℳ⁻(∞) of the intrinsic martingale against ω₊/ω₋, with the
β-moment probe on both sides of that exponent.
"""
from __future__ import annotations

import logging

import numpy as np

from domain.errors import NoRootError, PreconditionError
from domain.models.estimates import INCONCLUSIVE
from domain.models.paths import TAIL_BOUND_HEURISTIC
from domain.services.cell_system import martingale_limit_samples
from domain.services.cumulants import assumption_h_analytic
from domain.services.lamperti import exp_functional_samples, weighted_functional_weights
from domain.services.stats_checks import moment_stability_probe
from domain.services.tail_estimation import tail_exponent, tail_verify
from application.workflows.context import SuiteContext
from infrastructure.plotting.svg_plots import loglog_tail

logger = logging.getLogger(__name__)

FUNCTIONAL_ALPHA = 1.0
MOMENT_FRACTIONS_BELOW = (0.5, 0.8)
MOMENT_FRACTION_ABOVE = 1.2


def _functional_tail(ctx: SuiteContext) -> None:
    spec = ctx.spec
    try:
        _, expected = weighted_functional_weights(spec, FUNCTIONAL_ALPHA)
    except NoRootError as exc:
        ctx.skip("functional_tail", f"no Cramér number: {exc}")
        return

    reps = ctx.reps("functional_samples")
    weighted = exp_functional_samples(spec, ctx.config.start_type, FUNCTIONAL_ALPHA, reps, ctx.stream.spawn("weighted"),
                                      weighted=True, mapper=ctx.mapper)
    values = np.array([s.value for s in weighted])
    check = tail_verify(values, expected, ctx.tail_rel_tol, ctx.stream.spawn("weighted-boot"), ctx.tail_min_samples)
    heuristic = sum(s.bound_kind == TAIL_BOUND_HEURISTIC for s in weighted)
    ctx.record("functional_tail", check.verdict, check.reason, heuristic_bounds=heuristic, **check.to_dict())

    plain = exp_functional_samples(spec, ctx.config.start_type, FUNCTIONAL_ALPHA, reps, ctx.stream.spawn("plain"), mapper=ctx.mapper)
    plain_values = np.array([s.value for s in plain])
    with ctx.guard("plain_functional_tail"):
        report = tail_exponent(plain_values, rng=ctx.stream.spawn("plain-boot"), min_samples=ctx.tail_min_samples)
        ctx.write_json("plain_functional_tail.json", {"expected": expected, "report": report})

    ctx.write_csv("functional_samples.csv", [{"weighted": a, "plain": b} for a, b in zip(values, plain_values)], ["weighted", "plain"])
    loglog_tail({"J (weighted)": values, "I (plain)": plain_values}, ctx.plot_path("functional_tail.svg"),
                title=f"exponential functional tails, α={FUNCTIONAL_ALPHA:g}", reference_slope=expected)


def _limit_tail(ctx: SuiteContext) -> None:
    roots = ctx.roots()
    if not roots.two_roots:
        ctx.skip("limit_tail", "single admissible root; Cramér suites skipped")
        return
    lower, upper = roots.lower, roots.upper
    expected = upper.omega / lower.omega

    h_ok = True
    try:
        h_ok = bool(np.all(assumption_h_analytic(ctx.spec, lower) < 0))
    except PreconditionError as exc:
        logger.info("(H) has no analytic form here: %s", exc)

    cfg = ctx.config
    limit = martingale_limit_samples(ctx.spec, cfg.x0, cfg.start_type, cfg.alpha, lower.omega, lower.v, ctx.controls,
                                     ctx.reps("limit_trees"), ctx.stream.spawn("limit"), ctx.mapper)
    normalized = limit.corrected() / (float(lower.v[cfg.start_type]) * cfg.x0 ** lower.omega)
    ctx.write_csv("limit_samples.csv", limit.to_rows(), ["replica", "generation", "value", "remainder"])

    with ctx.guard("limit_tail"):
        check = tail_verify(normalized, expected, ctx.tail_rel_tol, ctx.stream.spawn("limit-boot"), ctx.tail_min_samples)
        if h_ok:
            ctx.record("limit_tail", check.verdict, check.reason, **check.to_dict())
        else:
            ctx.record("limit_tail", INCONCLUSIVE, "(H) fails; the ℳ⁻ tail is not covered", **check.to_dict())

    betas = [f * expected for f in MOMENT_FRACTIONS_BELOW] + [MOMENT_FRACTION_ABOVE * expected]
    probe = moment_stability_probe(normalized, betas)
    stable = all(not row["blowup"] for row in probe[:-1])
    ctx.record("moments_below", stable, critical=expected, probe=probe[:-1])
    above = probe[-1]
    ctx.record("moments_above", True if above["blowup"] else INCONCLUSIVE,
               "" if above["blowup"] else "no blow-up visible at this sample size", critical=expected, probe=above)
    ctx.write_json("moment_probe.json", {"critical": expected, "probe": probe})

    loglog_tail({"ℳ⁻(∞)": normalized}, ctx.plot_path("limit_tail.svg"), title="tail of ℳ⁻(∞)", reference_slope=expected)


def run_tails_suite(ctx: SuiteContext) -> None:
    with ctx.guard("functional_tail"):
        _functional_tail(ctx)
    with ctx.guard("limit_tail"):
        _limit_tail(ctx)
