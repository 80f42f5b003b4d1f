"""
application/workflows/suite_entrance.py

Entrance law η_t of the self-similar process from 0, sampled through the
dual MAP, against direct simulation from a tiny starting size.
"""
from __future__ import annotations

import logging
from functools import partial

import numpy as np

from domain.models.paths import CEMETERY
from domain.services.lamperti import entrance_law_sample, simulate_ssmp
from domain.services.map_spectral import chi_derivative, reflect_spec, stationary_distribution
from domain.services.rng_streams import SeededStream, run_replicas
from domain.services.stats_checks import ks_passed, per_type_ks
from application.workflows.context import SuiteContext
from infrastructure.plotting.svg_plots import histogram_plot

logger = logging.getLogger(__name__)

ENTRANCE_TIME = 1.0
TINY_START = 1e-3


def _direct_state(spec, x, pi, alpha, t, stream: SeededStream):
    """(size, type) at t from x with a π-distributed start type, or None if dead."""
    start = int(stream.generator().choice(len(pi), p=pi))
    path = simulate_ssmp(spec, x, start, alpha, t, stream.spawn("path"))
    state = path.query(t) if path.covers(t) else None
    if state is None or state is CEMETERY:
        return None
    return state


def run_entrance_suite(ctx: SuiteContext) -> None:
    spec = ctx.spec
    if not chi_derivative(spec) > 0:
        spec = reflect_spec(spec).with_name(f"{spec.name}-reflected")
        logger.info("entrance: %s drifts down, using its reflection %s", ctx.spec.name, spec.name)
    alpha = abs(ctx.config.alpha)
    reps = ctx.reps("entrance_reps")

    with ctx.guard("entrance"):
        sample = entrance_law_sample(spec, alpha, ENTRANCE_TIME, reps, ctx.stream.spawn("eta"), mapper=ctx.mapper)
        mass = sample.total_mass()
        ctx.record("entrance_mass", mass.within(1.0, ctx.se_multiplier), **mass.to_dict())

        pi = stationary_distribution(spec)
        direct = run_replicas(partial(_direct_state, spec, TINY_START, pi, alpha, ENTRANCE_TIME), reps, ctx.stream.spawn("direct"), ctx.mapper)
        alive = [s for s in direct if s is not None]
        sizes = np.array([s[0] for s in alive])
        types = np.array([s[1] for s in alive], dtype=int)
        ks = per_type_ks(np.log(sample.values), sample.types, np.log(sizes), types, spec.n_types, sample.weights, None)
        ctx.record("entrance_ks", ks_passed(ks, ctx.ks_pvalue_min), ks={str(j): r.to_dict() for j, r in ks.items()},
                   dead=len(direct) - len(alive), spec=spec.name)

        ctx.write_csv(
            "entrance.csv",
            [{"arm": "eta", "value": y, "type": int(j), "weight": w} for y, j, w in zip(sample.values, sample.types, sample.weights)]
            + [{"arm": "direct", "value": y, "type": int(j), "weight": 1.0} for y, j in zip(sizes, types)],
            ["arm", "value", "type", "weight"],
        )
        histogram_plot(
            {"η_t (dual)": np.log(sample.values), f"direct from x={TINY_START:g}": np.log(sizes)},
            ctx.plot_path("entrance.svg"),
            title=f"entrance law at t={ENTRANCE_TIME:g}",
            xlabel="log X(t)",
            weights={"η_t (dual)": sample.weights},
        )
