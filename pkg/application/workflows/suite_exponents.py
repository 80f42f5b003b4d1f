"""
application/workflows/suite_exponents.py

Admissible pairs (ω±, v±), the spine exponent F̂ and the structural
assumptions behind the martingale and tail results.
"""
from __future__ import annotations

import logging

import numpy as np

from config.fixtures import binary_split
from config.settings import CUMULANT_RESIDUAL_TOL
from domain.errors import PreconditionError
from domain.models.estimates import INCONCLUSIVE, Estimate
from domain.models.spectral import AdmissiblePair
from domain.services.cumulants import (
    admissible_roots,
    assumption_a_structural,
    assumption_h_analytic,
    chi_negative_below,
    genealogical_lambda,
    lambda_convexity,
    lambda_tilde,
    mu_ii,
    pi_measure,
    spine_exponent,
    stopped_martingale_samples,
)
from domain.services.rng_streams import mean_se
from domain.services.spine import spine_wald_relation
from application.workflows.context import SuiteContext
from infrastructure.plotting.svg_plots import trace_plot

logger = logging.getLogger(__name__)

SPINE_GRID = (-0.5, -0.25, 0.0, 0.25, 0.5, 1.0)
LAMBDA_GRID = tuple(np.geomspace(1.0 / 16.0, 32.0, 40))
IDENTITY_TOL = 1e-8


def _pair_checks(ctx: SuiteContext, label: str, pair: AdmissiblePair) -> dict:
    spec = ctx.spec
    ctx.record(f"residual_{label}", pair.residual < CUMULANT_RESIDUAL_TOL, value=pair.residual, omega=pair.omega, v=pair.v)

    with ctx.guard(f"genealogical_lambda_{label}"):
        try:
            value = genealogical_lambda(spec, pair.omega)
        except PreconditionError as exc:
            ctx.skip(f"genealogical_lambda_{label}", str(exc))
        else:
            ctx.record(f"genealogical_lambda_{label}", abs(value) < IDENTITY_TOL, value=value)

    exponent = spine_exponent(spec, pair)
    chi0 = exponent.chi(0.0)
    slope = exponent.chi_derivative()
    ctx.record(f"spine_conservative_{label}", abs(chi0) < IDENTITY_TOL, value=chi0)
    if label == "minus":
        ctx.record("spine_drift_minus", slope < 0, value=slope)
    elif label == "plus":
        ctx.record("spine_drift_plus", slope > 0, value=slope)

    mus = [mu_ii(spec, i, pair.omega) for i in range(spec.n_types)]
    ctx.record(f"mu_ii_{label}", all(m < 1.0 for m in mus), values=mus)

    for i in range(spec.n_types):
        name = f"stopped_{label}_type{i}"
        if spec.q_matrix[i, i] >= 0:
            ctx.skip(name, f"type {i} never changes type")
            continue
        with ctx.guard(name):
            samples = stopped_martingale_samples(spec, pair, i, ctx.reps("stopped_paths"), ctx.stream.spawn("stopped", label), mapper=ctx.mapper)
            est = Estimate(*mean_se(samples), n=samples.size)
            ctx.record(name, est.within(float(pair.v[i]), ctx.se_multiplier), target=float(pair.v[i]), **est.to_dict())

    return {"pair": pair, "spine_chi0": chi0, "spine_drift": slope, "mu_ii": mus, "spine_table": exponent.tabulate(SPINE_GRID)}


def run_exponents_suite(ctx: SuiteContext) -> None:
    spec = ctx.spec
    summary: dict = {"spec": spec.name}

    with ctx.guard("binary_split_root"):
        binary = admissible_roots(binary_split())
        exact = binary.upper is None and binary.lower.omega == 1.0 and np.array_equal(binary.lower.v, np.ones(1))
        ctx.record("binary_split_root", exact, omega=binary.lower.omega, v=binary.lower.v)

    with ctx.guard("convexity"):
        curvature = lambda_convexity(spec, LAMBDA_GRID)
        ctx.record("convexity", curvature > -1e-8, value=curvature)

    ctx.record("assumption_a", assumption_a_structural(spec))

    with ctx.guard("admissible"):
        roots = ctx.roots()
        summary["roots"] = roots.to_dict()
        summary["minus"] = _pair_checks(ctx, "minus" if roots.two_roots else "single", roots.lower)

        if not roots.two_roots:
            reason = f"single admissible root ω={roots.lower.omega:.10g}; Cramér suites skipped"
            for name in ("two_exponent", "spine_wald_relation", "chi_negative_below"):
                ctx.skip(name, reason)
        else:
            summary["plus"] = _pair_checks(ctx, "plus", roots.upper)
            gap = roots.upper.omega - roots.lower.omega
            two = spine_exponent(spec, roots.lower).chi(gap)
            ctx.record("two_exponent", abs(two) < IDENTITY_TOL, value=two, gap=gap)
            dev = spine_wald_relation(spec, roots.lower, roots.upper, SPINE_GRID)
            ctx.record("spine_wald_relation", dev < IDENTITY_TOL, value=dev)
            top = chi_negative_below(spec, roots.upper.omega)
            ctx.record("chi_negative_below", top < 0, value=top)

        try:
            h = assumption_h_analytic(spec, roots.lower)
        except PreconditionError as exc:
            ctx.skip("assumption_h", str(exc))
        else:
            ok = bool(np.all(h < 0))
            ctx.record("assumption_h", True if ok else INCONCLUSIVE, "" if ok else "(H) fails analytically", values=h)

    ctx.write_json("exponents.json", summary)
    rows = []
    for key in ("minus", "plus"):
        for row in summary.get(key, {}).get("spine_table", []):
            flat = {"pair": key, "q": row["q"], "chi": row["chi"]}
            flat.update({f"f{i}{j}": x for i, r in enumerate(row["matrix"]) for j, x in enumerate(r)})
            rows.append(flat)
    if rows:
        ctx.write_csv("spine_exponent.csv", rows)

    pi = pi_measure(spec)
    curve = [lambda_tilde(spec, q, pi) for q in LAMBDA_GRID]
    ctx.write_csv("lambda.csv", [{"q": q, "lambda": lam} for q, lam in zip(LAMBDA_GRID, curve)], ["q", "lambda"])
    trace_plot(LAMBDA_GRID, {"λ̃(q)": (curve, np.zeros(len(curve)))}, ctx.plot_path("lambda.svg"),
               title=f"cumulant eigenvalue, {spec.name}", xlabel="q", ylabel="λ̃(q)", reference=0.0)
