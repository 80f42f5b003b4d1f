"""
application/workflows/suite_spectral.py

Spectral identities of the configured MAP and of a few random valid specs:
eigen-residuals of F(z), χ(0) = 0, convexity of χ, the closed-form
cross-check, duality and tilting identities, and the Cramér number.
"""
from __future__ import annotations

import logging

import numpy as np

from config.fixtures import random_spec
from domain.errors import NoRootError
from domain.models.map_spec import MapSpec
from domain.services.linalg import closed_form_leading_eigenvalue
from domain.services.map_spectral import (
    chi,
    cramer_number,
    duality_residual,
    second_divided_differences,
    spectral_data,
    stationary_distribution,
    tilt_residual,
)
from application.workflows.context import SuiteContext
from infrastructure.plotting.svg_plots import trace_plot

logger = logging.getLogger(__name__)

Z_GRID = (-1.0, -0.5, 0.0, 0.5, 1.0, 2.0)
CONVEXITY_GRID = tuple(np.linspace(-1.0, 3.0, 20))
TILT_GAMMAS = (0.5, 1.0)
TILT_Z = (-0.5, 0.5, 1.0)
N_RANDOM_SPECS = 3

EIGEN_REL_TOL = 1e-10
DUALITY_TOL = 1e-12
TILT_TOL = 1e-9
CLOSED_FORM_TOL = 1e-9
CONVEXITY_TOL = -1e-8


def _identities(ctx: SuiteContext, spec: MapSpec, tag: str) -> list[dict]:
    rows = []
    worst = 0.0
    for z in Z_GRID:
        sd = spectral_data(spec, z)
        scale = max(float(np.max(np.abs(sd.f_matrix))), 1.0)
        worst = max(worst, sd.residual() / scale)
        row = {"spec": tag, "z": z, "chi": sd.chi}
        row.update({f"w{j}": float(x) for j, x in enumerate(sd.w)})
        rows.append(row)
    ctx.record(f"{tag}/eigen_residual", worst < EIGEN_REL_TOL, value=worst, tolerance=EIGEN_REL_TOL)

    if spec.is_conservative:
        chi0 = chi(spec, 0.0)
        ctx.record(f"{tag}/chi_zero", abs(chi0) < 1e-12, value=chi0)

    values = [chi(spec, z) for z in CONVEXITY_GRID]
    curvature = float(np.min(second_divided_differences(values, CONVEXITY_GRID)))
    ctx.record(f"{tag}/chi_convex", curvature > CONVEXITY_TOL, value=curvature)

    if spec.n_types <= 3:
        gaps = []
        for z in Z_GRID:
            sd = spectral_data(spec, z)
            lam, w = closed_form_leading_eigenvalue(sd.f_matrix)
            gaps.append(max(abs(lam - sd.chi), float(np.max(np.abs(w - sd.w)))))
        ctx.record(f"{tag}/closed_form", max(gaps) < CLOSED_FORM_TOL, value=max(gaps))

    dual_gap = max(duality_residual(spec, z) for z in Z_GRID)
    ctx.record(f"{tag}/duality", dual_gap < DUALITY_TOL, value=dual_gap, pi=stationary_distribution(spec))

    tilt_gap = max(tilt_residual(spec, g, z) for g in TILT_GAMMAS for z in TILT_Z)
    ctx.record(f"{tag}/tilt", tilt_gap < TILT_TOL, value=tilt_gap)
    return rows


def run_spectral_suite(ctx: SuiteContext) -> None:
    spec = ctx.spec
    rows = []
    with ctx.guard("identities"):
        rows += _identities(ctx, spec, spec.name)

    gen = ctx.stream.spawn("random-specs").generator()
    for k in range(N_RANDOM_SPECS):
        other = random_spec(2 + k % 2, gen, name=f"random{k}")
        with ctx.guard(f"random{k}"):
            rows += _identities(ctx, other, other.name)

    with ctx.guard("cramer"):
        try:
            upsilon = cramer_number(spec)
        except NoRootError as exc:
            ctx.skip("cramer", str(exc))
        else:
            sd = spectral_data(spec, upsilon)
            ok = abs(sd.chi) < 1e-9 and bool(np.all(sd.w > 0))
            ctx.record("cramer", ok, value=upsilon, chi=sd.chi, w=sd.w)

    ctx.write_csv("spectral.csv", rows)
    ctx.write_json("spectral.json", {"spec": spec.to_dict(), "grid": [spectral_data(spec, z) for z in Z_GRID]})
    curve = [chi(spec, z) for z in CONVEXITY_GRID]
    trace_plot(
        CONVEXITY_GRID,
        {"χ(z)": (curve, np.zeros(len(curve)))},
        ctx.plot_path("chi.svg"),
        title=f"leading eigenvalue, {spec.name}",
        xlabel="z",
        ylabel="χ(z)",
        reference=0.0,
    )
