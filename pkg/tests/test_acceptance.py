"""Acceptance suite: one test per criterion, each at its stated tolerance,
with a per-criterion pass/fail line in the terminal summary.

The heavy sweeps (the pre-baked tables and the strip-mesh figure series)
are module-scoped fixtures shared across criteria; the full module takes
on the order of fifteen minutes, dominated by the finest strip meshes
(up to 1.5e6 unknowns).
"""

import math

import numpy as np
import pytest

from conftest import record_criterion
from helpers import sci, sci4
from sipdg.analysis import (
    consistency_residual,
    interpolation_bound_ratio,
    l2_ratio_check,
    observed_order,
    trace_constant_bound,
    verify_trace_constant,
)
from sipdg.assembly import (
    SchemeConfig,
    assemble_jump,
    assemble_penalty,
    assemble_system,
    assemble_volume,
    coercivity_threshold,
)
from sipdg.dg_space import build_dof_map
from sipdg.harness import (
    FIGURE_SERIES,
    ExperimentSpec,
    emit_plot_data,
    figure_specs,
    run_experiment,
    sweep,
    table1_specs,
    table2_specs,
    table3_specs,
    table4_specs,
    unit_sine,
)
from sipdg.mesh import (
    build_facet_topology,
    generate_rect_mesh,
    generate_schwarz_peano_mesh,
    mesh_quality_report,
)

# printed table values: m/N -> (h, R, L2, H1, P, DG); error entries None on
# the non-converged row
PRINTED_T1 = {
    40: ("3.536e-2", "1.768e-2", 2.991e-4, 3.643e-2, 1.972e-2, 4.142e-2),
    60: ("3.006e-2", "1.503e-2", 2.095e-4, 3.067e-2, 1.710e-2, 3.511e-2),
    80: ("2.795e-2", "1.398e-2", 1.706e-4, 2.807e-2, 1.645e-2, 3.253e-2),
    100: ("2.693e-2", "1.346e-2", 1.484e-4, 2.663e-2, 1.634e-2, 3.124e-2),
    120: ("2.637e-2", "1.318e-2", 1.334e-4, 2.581e-2, 1.648e-2, 3.062e-2),
    140: ("2.602e-2", "1.301e-2", 1.222e-4, 2.564e-2, 1.720e-2, 3.088e-2),
    160: ("2.578e-2", "1.289e-2", 1.147e-4, 3.173e-2, 2.620e-2, 4.115e-2),
    180: ("2.562e-2", "1.281e-2", 1.150e-4, 3.330e-2, 2.858e-2, 4.389e-2),
    200: ("2.550e-2", "1.275e-2", None, None, None, None),
}
PRINTED_T2 = {
    40: ("3.536e-2", "1.768e-2", 2.905e-4, 3.630e-2, 2.037e-2, 4.162e-2),
    80: ("2.795e-2", "1.398e-2", 1.719e-4, 2.824e-2, 1.635e-2, 3.133e-2),
    120: ("2.637e-2", "1.318e-2", 1.449e-4, 2.630e-2, 1.563e-2, 3.059e-2),
    160: ("2.578e-2", "1.289e-2", 1.347e-4, 2.557e-2, 1.531e-2, 2.962e-2),
    200: ("2.550e-2", "1.275e-2", 1.298e-4, 2.522e-2, 1.526e-2, 2.947e-2),
    400: ("2.512e-2", "1.256e-2", 1.234e-4, 2.474e-2, 1.509e-2, 2.898e-2),
}
PRINTED_T3 = {
    20: ("1.00e-1", 5.528e-2, 2.157e-1),
    40: ("5.00e-2", 3.350e-2, 1.296e-1),
    60: ("3.34e-2", 2.624e-2, 1.000e-1),
    80: ("2.50e-2", 2.198e-2, 8.404e-2),
    100: ("2.00e-2", 1.926e-2, 7.390e-2),
    120: ("1.67e-2", 1.765e-2, 6.661e-2),
    140: ("1.43e-2", 1.589e-2, 6.112e-2),
}
PRINTED_T4 = {
    20: ("1.00e-1", 1.300e-1, 4.906e-1),
    40: ("5.00e-2", 1.263e-1, 4.772e-1),
    60: ("3.34e-2", 1.273e-1, 4.752e-1),
    80: ("2.50e-2", 1.305e-1, 4.751e-1),
}


def within(value, reference, rel):
    return abs(value - reference) <= rel * abs(reference)


@pytest.fixture(scope="module")
def table1_rows():
    return sweep(table1_specs())


@pytest.fixture(scope="module")
def table2_rows():
    return sweep(table2_specs())


@pytest.fixture(scope="module")
def table3_rows():
    return sweep(table3_specs())


@pytest.fixture(scope="module")
def table4_rows():
    return sweep(table4_specs())


@pytest.fixture(scope="module")
def figure_rows(table3_rows, table4_rows):
    rows = {}
    keep15 = {str(N) for N in FIGURE_SERIES[1.5]}
    rows[1.5] = [r for r in table3_rows if r.param in keep15]
    rows[2.0] = table4_rows
    for alpha in (1.2, 1.8, 2.1):
        rows[alpha] = sweep(figure_specs(alpha))
    return rows


# --- criterion 1: mesh-metric reproduction -------------------------------

def _rect_metric_cases():
    cases = []
    for table, printed in (("table1", PRINTED_T1), ("table2", PRINTED_T2)):
        for m, row in printed.items():
            for col, want in (("h", row[0]), ("R", row[1])):
                known_artifact = col == "R" and m == 120
                if known_artifact:
                    continue
                cases.append(pytest.param(m, col, want, id=f"{table}-m{m}-{col}"))
    return cases


@pytest.mark.parametrize("m,col,want", _rect_metric_cases())
def test_criterion1_rect_metrics(m, col, want):
    q = mesh_quality_report(generate_rect_mesh(40, m, coord_decimals=4))
    got = q.max_diameter if col == "h" else q.max_circumradius
    assert sci4(got) == want


@pytest.mark.xfail(
    strict=True,
    reason="the reference tables print R=1.318e-2 at m=120, which is "
    "round-half-even of the already-rounded h column (2.637e-2 / 2 = "
    "1.3185e-2); the circumradius computed from the same mesh is 1.3187e-2 "
    "and prints 1.319e-2.",
)
def test_criterion1_m120_circumradius_as_printed():
    q = mesh_quality_report(generate_rect_mesh(40, 120, coord_decimals=4))
    assert sci4(q.max_circumradius) == "1.318e-2"


def test_criterion1_m120_circumradius_diagnosis():
    # R = h/2 exactly on this family; the printed pair is self-inconsistent
    q = mesh_quality_report(generate_rect_mesh(40, 120, coord_decimals=4))
    assert q.max_circumradius == pytest.approx(q.max_diameter / 2, rel=1e-15)
    assert sci4(q.max_diameter) == "2.637e-2"
    assert sci4(q.max_circumradius) == "1.319e-2"
    # the printed R column is half the rounded h column under decimal
    # banker's rounding (1.3185 -> 1.318, also matching the printed R at the
    # half-cases m=80 and m=100)
    from decimal import ROUND_HALF_EVEN, Decimal

    half = Decimal("2.637") / 2
    assert str(half.quantize(Decimal("0.001"), ROUND_HALF_EVEN)) == "1.318"


def test_criterion1_strip_metrics_and_summary():
    checks = []
    for printed, alpha in ((PRINTED_T3, 1.5), (PRINTED_T4, 2.0)):
        for N, (h_str, R_val, _dg) in printed.items():
            q = mesh_quality_report(generate_schwarz_peano_mesh(N, alpha, coord_decimals=4))
            checks.append((f"a{alpha}-N{N}-h", sci(q.max_diameter, 3) == h_str))
            checks.append((f"a{alpha}-N{N}-R", within(q.max_circumradius, R_val, 5e-3)))
            # the exact (unquantized) generator keeps max h_T = 2/N up to the
            # ulp of the order-one coordinates being differenced
            exact_q = mesh_quality_report(generate_schwarz_peano_mesh(N, alpha))
            checks.append(
                (f"a{alpha}-N{N}-exact-h", abs(exact_q.max_diameter - 2.0 / N) <= 1e-15)
            )
    bad = [name for name, ok in checks if not ok]
    record_criterion(
        1,
        "mesh metrics match Tables 1-4 (4 s.d. for rect, 0.5% for strip R)",
        not bad,
        "R@m=120 is a documented reference-table double-rounding artifact (xfailed)",
    )
    assert not bad, f"failed strip-metric checks: {bad}"


# --- criterion 2: Table 2 reproduction ------------------------------------

def test_criterion2_table2(table2_rows):
    checks = []
    for row in table2_rows:
        m = int(row.param)
        checks.append((f"m{m}-converged", row.converged))
        if not row.converged:
            continue
        _, _, l2, h1, p, dg = PRINTED_T2[m]
        checks.append((f"m{m}-L2", within(row.l2, l2, 0.05)))
        checks.append((f"m{m}-H1", within(row.broken_h1, h1, 0.05)))
        checks.append((f"m{m}-P", within(row.penalty, p, 0.05)))
        checks.append((f"m{m}-DG", within(row.dg, dg, 0.05)))
    for field in ("l2", "broken_h1", "dg"):
        vals = [getattr(r, field) for r in table2_rows]
        checks.append((f"{field}-strictly-decreasing", all(a > b for a, b in zip(vals, vals[1:]))))
    runtime = sum(r.wall_time for r in table2_rows)
    checks.append(("runtime<5min", runtime < 300.0))
    bad = [name for name, ok in checks if not ok]
    record_criterion(
        2, "Table 2 errors within 5%, monotone, under 5 minutes", not bad,
        f"runtime {runtime:.0f}s",
    )
    assert not bad, f"failed: {bad}"


# --- criterion 3: Table 1 degradation -------------------------------------

def test_criterion3_table1(table1_rows):
    by_m = {int(r.param): r for r in table1_rows}
    checks = []
    for m in (40, 60, 80, 100, 120, 140):
        row = by_m[m]
        checks.append((f"m{m}-converged", row.converged))
        if not row.converged:
            continue
        _, _, l2, h1, p, dg = PRINTED_T1[m]
        checks.append((f"m{m}-L2", within(row.l2, l2, 0.05)))
        checks.append((f"m{m}-H1", within(row.broken_h1, h1, 0.05)))
        checks.append((f"m{m}-P", within(row.penalty, p, 0.05)))
        checks.append((f"m{m}-DG", within(row.dg, dg, 0.05)))
    checks.append(("m180-converged", by_m[180].converged))
    if by_m[180].converged and by_m[120].converged:
        checks.append(("H1-nonmonotone", by_m[180].broken_h1 > by_m[120].broken_h1))
    checks.append(("m200-not-converged", not by_m[200].converged))
    bad = [name for name, ok in checks if not ok]
    record_criterion(
        3, "Table 1: 5% for m<=140, H1 non-monotone at 180, failure at 200", not bad,
        f"m=200 status {by_m[200].status}",
    )
    assert not bad, f"failed: {bad}"


# --- criterion 4: strip-mesh tables ----------------------------------------

def test_criterion4_strip_tables(table3_rows, table4_rows):
    checks = []
    for row in table3_rows:
        N = int(row.param)
        checks.append((f"t3-N{N}-converged", row.converged))
        if row.converged:
            checks.append((f"t3-N{N}-DG", within(row.dg, PRINTED_T3[N][2], 0.10)))
    dgs = [r.dg for r in table3_rows if r.converged]
    checks.append(("t3-DG-strictly-decreasing", all(a > b for a, b in zip(dgs, dgs[1:]))))

    for row in table4_rows:
        N = int(row.param)
        checks.append((f"t4-N{N}-converged", row.converged))
        if row.converged:
            checks.append((f"t4-N{N}-DG", within(row.dg, PRINTED_T4[N][2], 0.10)))
            checks.append((f"t4-N{N}-band", 4.6e-1 <= row.dg <= 5.1e-1))
    slope = observed_order([(r.h, r.dg) for r in table4_rows if r.converged])
    checks.append(("t4-no-decreasing-trend", abs(slope) <= 0.1))
    bad = [name for name, ok in checks if not ok]
    record_criterion(
        4, "Table 3 DG within 10% and decreasing; Table 4 confined, stalled", not bad,
        f"table4 DG slope vs h {slope:+.3f}",
    )
    assert not bad, f"failed: {bad}"


# --- criterion 5: figure series, errors governed by R ----------------------

def test_criterion5_figure_series(figure_rows, tmp_path):
    # the head claim is boundedness of broken-H1/R and penalty/R across every
    # alpha series; the slope band applies to the error the R-estimate bounds
    # (the DG error) on the converging families, since the individual
    # components carry no slope-1 statement and their regressions are
    # unstable over the narrow R ranges reachable at alpha=1.8; alpha=2.1
    # additionally pins its ratio spread below 3
    checks = []
    slopes = {}
    ratios = {}
    for alpha, rows in figure_rows.items():
        good = [r for r in rows if r.converged]
        checks.append((f"a{alpha}-all-converged", len(good) == len(rows)))
        for field in ("broken_h1", "penalty"):
            vals = [getattr(r, field) / r.R for r in good]
            ratios[f"{alpha}-{field}"] = max(vals) / min(vals)
            checks.append((f"a{alpha}-{field}-ratio-bounded", max(vals) / min(vals) < 3.0))
    for alpha in (1.2, 1.5, 1.8):
        good = [r for r in figure_rows[alpha] if r.converged]
        s = observed_order([(r.R, r.dg) for r in good])
        slopes[alpha] = s
        checks.append((f"a{alpha}-DG-slope", 0.8 <= s <= 1.2))
    # the qualitative hallmark of a failed circumradius condition: at
    # alpha=2.1 the raw errors grow as h shrinks, yet error/R stays bounded
    h1_21 = [r.broken_h1 for r in figure_rows[2.1] if r.converged]
    checks.append(("a2.1-H1-grows-as-h-shrinks", h1_21[-1] > h1_21[0]))
    paths = emit_plot_data(
        {f"alpha{a}": rows for a, rows in figure_rows.items()}, "R", tmp_path
    )
    checks.append(("plot-files", len(paths) == 5 and all(p.exists() for p in paths)))
    bad = [name for name, ok in checks if not ok]
    detail = ", ".join(f"slope(a={a})={s:.2f}" for a, s in slopes.items())
    worst = max(ratios.values())
    record_criterion(
        5, "errors governed by R: ratios bounded, DG slopes in [0.8,1.2]", not bad,
        f"{detail}; worst ratio spread {worst:.2f}",
    )
    assert not bad, f"failed: {bad} (slopes {slopes}, ratio spreads {ratios})"


# --- criterion 6: property suite -------------------------------------------

def _coercivity_min_ratio(mesh, eta, seed):
    topo = build_facet_topology(mesh)
    dofmap = build_dof_map(mesh, 1)
    config = SchemeConfig(variant="new", eta=eta, degree=1)
    A0 = assemble_volume(mesh, dofmap)
    J = assemble_jump(mesh, topo, dofmap)
    P = assemble_penalty(mesh, topo, dofmap, config)
    rng = np.random.default_rng(seed)
    worst = np.inf
    for _ in range(100):
        w = rng.standard_normal(dofmap.total)
        num = w @ A0.matvec(w) - w @ J.matvec(w) + w @ P.matvec(w)
        den = w @ A0.matvec(w) + w @ P.matvec(w)
        worst = min(worst, num / den)
    return worst


def test_criterion6_property_suite(table2_rows):
    checks = []

    # system symmetry on both variants
    mesh = generate_rect_mesh(40, 40, coord_decimals=4)
    topo = build_facet_topology(mesh)
    dofmap = build_dof_map(mesh, 1)
    exact = unit_sine()
    for variant in ("standard", "new"):
        sys = assemble_system(mesh, topo, dofmap, SchemeConfig(variant=variant), exact.phi)
        checks.append((f"{variant}-symmetry", sys.A.transpose_equals_self(1e-13)))

    # discrete coercivity at the threshold penalty on anisotropic meshes
    eta = coercivity_threshold(1)
    r1 = _coercivity_min_ratio(generate_rect_mesh(40, 400), eta, seed=11)
    checks.append(("coercivity-rect40x400", r1 >= 0.5 - 1e-10))
    r2 = _coercivity_min_ratio(generate_schwarz_peano_mesh(80, 2.0), eta, seed=12)
    checks.append(("coercivity-sp80", r2 >= 0.5 - 1e-10))

    # consistency of the adaptive form applied to the analytic solution
    mesh8 = generate_rect_mesh(8, 8)
    topo8 = build_facet_topology(mesh8)
    dof8 = build_dof_map(mesh8, 1)
    res = consistency_residual(
        mesh8, topo8, dof8, exact, SchemeConfig(variant="new", eta=0.8), volume_degree=10
    )
    checks.append(("consistency<1e-8", res < 1e-8))

    # DG norm identity on a real error report
    for row in table2_rows[:1]:
        lhs = row.dg**2
        rhs = row.broken_h1**2 + row.penalty**2
        checks.append(("dg-identity", abs(lhs - rhs) <= 1e-12 * rhs))

    # empirical trace maxima never exceed the closed-form constants
    for j in (0, 1, 2):
        got = verify_trace_constant(j, trials=10_000 if j == 1 else 2_000, seed=5 + j)
        checks.append((f"trace-j{j}", got <= trace_constant_bound(j) * (1 + 1e-9)))

    # interpolation-bound ratio shows no growth on degenerating strip meshes,
    # including past the circumradius condition (alpha = 2.1)
    slope = None
    for alpha, Ns in ((1.5, (20, 40, 80)), (2.1, (12, 16, 24))):
        ratios = []
        for N in Ns:
            mesh_sp = generate_schwarz_peano_mesh(N, alpha)
            ratios.append((N, interpolation_bound_ratio(mesh_sp, unit_sine())))
        s = observed_order(ratios)
        if alpha == 1.5:
            slope = s
        checks.append((f"interp-bound-non-growing-a{alpha}", s <= 0.1))

    bad = [name for name, ok in checks if not ok]
    record_criterion(
        6, "symmetry, coercivity, consistency, norms, trace and interp bounds", not bad,
        f"coercivity ratios {r1:.6f}/{r2:.6f}, consistency {res:.2e}, interp slope {slope:+.3f}",
    )
    assert not bad, f"failed: {bad}"


# --- criterion 7: convergence orders ---------------------------------------

def _uniform_convergence_rows(k, eta):
    rows = []
    for n in (8, 16, 32, 64):
        spec = ExperimentSpec(
            mesh="rect", n=n, m=n, scheme="new", eta=eta, degree=k,
            solver="iccg", tol=1e-12, quad="exact",
        )
        rows.append(run_experiment(spec))
    return rows


def test_criterion7_convergence_orders():
    checks = []
    detail = []
    for k, eta, dg_min, l2_min in ((1, 0.8, 0.9, 1.9), (2, 3.0, 1.9, 2.9)):
        rows = _uniform_convergence_rows(k, eta)
        checks.append((f"k{k}-all-converged", all(r.converged for r in rows)))
        dg_order = observed_order([(r.h, r.dg) for r in rows])
        l2_order = observed_order([(r.h, r.l2) for r in rows])
        checks.append((f"k{k}-DG-order>={dg_min}", dg_order >= dg_min))
        checks.append((f"k{k}-L2-order>={l2_min}", l2_order >= l2_min))
        detail.append(f"k={k}: DG {dg_order:.2f}, L2 {l2_order:.2f}")
    bad = [name for name, ok in checks if not ok]
    record_criterion(7, "uniform-mesh orders k=1 and k=2", not bad, "; ".join(detail))
    assert not bad, f"failed: {bad}"


# --- extras tied to the table data ------------------------------------------

def test_l2_duality_ratio_bounded_on_tables(table2_rows, table3_rows):
    # L2 <= C * R * DG*; the ratio must not grow under refinement
    for rows in (table2_rows, table3_rows):
        good = [(r.R, r.l2, r.dg_star) for r in rows if r.converged]
        ratios = [l2 / (R * dgs) for R, l2, dgs in good]
        assert max(ratios) == l2_ratio_check(good)
        assert max(ratios) / min(ratios) < 2.0
        assert ratios[-1] <= 1.5 * ratios[0]


def test_galerkin_orthogonality_small_mesh():
    from sipdg.analysis import apply_form_to_exact
    from sipdg.sparse_linalg import iccg_solve

    mesh = generate_rect_mesh(8, 8)
    topo = build_facet_topology(mesh)
    dofmap = build_dof_map(mesh, 1)
    exact = unit_sine()
    config = SchemeConfig(variant="new", eta=0.8)
    sys = assemble_system(mesh, topo, dofmap, config, exact.phi)
    rep = iccg_solve(sys.A, sys.b, tol=1e-12)
    assert rep.converged
    F = apply_form_to_exact(mesh, topo, dofmap, exact, config)
    # a(u - u_h, basis_i) = (F - b) + (b - A u_h): consistency + solver residual
    resid = F - sys.A.matvec(rep.x)
    scale = np.linalg.norm(sys.b)
    assert np.abs(resid).max() <= 1e-8 + 10 * 1e-12 * scale
