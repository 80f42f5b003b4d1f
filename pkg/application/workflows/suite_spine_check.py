"""
application/workflows/suite_spine_check.py

Tagged-leaf spine against the directly simulated F̂ spine, the many-to-one
moments, and the independence of the pieces hanging off the spine.
"""
from __future__ import annotations

import logging

from domain.services.spine import rebuild_check, spine_equivalence_test
from domain.services.stats_checks import ks_passed
from application.workflows.context import SuiteContext
from infrastructure.plotting.svg_plots import bar_plot, histogram_plot

logger = logging.getLogger(__name__)

SPINE_TIME = 1.0
MAX_FLAGGED_WEIGHT = 0.01
MAX_UNRESOLVED_WEIGHT = 0.01
SPINE_COLUMNS = ["t", "log_value", "type", "arm", "weight", "flagged", "resolved"]


def run_spine_check_suite(ctx: SuiteContext) -> None:
    cfg = ctx.config
    eq = None
    with ctx.guard("spine_equivalence"):
        min_reps = 10 if cfg.profile == "smoke" else 100
        eq = spine_equivalence_test(
            ctx.spec, ctx.pair_minus(), cfg.x0, cfg.start_type, cfg.alpha, SPINE_TIME,
            ctx.reps("spine_reps"), ctx.stream.spawn("equivalence"), ctx.controls, ctx.mapper, min_reps=min_reps,
        )
        ks = {str(j): r.to_dict() for j, r in eq.ks.items()}
        ctx.record("spine_ks", ks_passed(eq.ks, ctx.ks_pvalue_min), ks=ks)
        for check in eq.many_to_one:
            ctx.record(f"many_to_one_{check.name}", abs(check.z_score) <= ctx.se_multiplier, **check.to_dict())
        flagged = eq.flagged_weight_fraction()
        ctx.record("flagged_weight", flagged < MAX_FLAGGED_WEIGHT, value=flagged, limit=MAX_FLAGGED_WEIGHT)
        unresolved = eq.unresolved_weight_fraction()
        ctx.record("unresolved_weight", unresolved < MAX_UNRESOLVED_WEIGHT, value=unresolved, limit=MAX_UNRESOLVED_WEIGHT)

    if eq is None:
        ctx.skip("rebuild", "no tagged spines")
        return

    with ctx.guard("rebuild"):
        report = rebuild_check(ctx.spec, cfg.alpha, ctx.controls, eq.pieces(), ctx.stream.spawn("rebuild"), ctx.mapper,
                               min_pieces=10 if cfg.profile == "smoke" else 50)
        ctx.record("rebuild", ks_passed(report.ks, ctx.ks_pvalue_min), **report.to_dict())

    rows = eq.rows()
    ctx.write_csv("spine_samples.csv", rows, SPINE_COLUMNS)
    histogram = eq.generation_histogram()
    ctx.write_json("generation_histogram.json", {"t": SPINE_TIME, "law": {str(g): w for g, w in histogram.items()}})
    if histogram:
        bar_plot(histogram, ctx.plot_path("generation_histogram.svg"), title=f"spine generation at t={SPINE_TIME:g}")

    tagged = [r for r in rows if r["arm"] == "tagged" and r["resolved"] and r["type"] >= 0]
    direct = [r for r in rows if r["arm"] == "direct"]
    histogram_plot(
        {"tagged leaf": [r["log_value"] for r in tagged], "direct spine": [r["log_value"] for r in direct]},
        ctx.plot_path("spine_log_size.svg"),
        title="log spine size at t",
        xlabel="log 𝒳̂(t)",
        weights={"tagged leaf": [r["weight"] for r in tagged]},
    )
