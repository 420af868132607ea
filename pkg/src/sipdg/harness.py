"""End-to-end experiment harness: build mesh -> assemble -> solve -> measure,
with the pre-baked sweeps behind the table1..table4 CLI subcommands and the
strip-mesh figure series.

Everything a row reports is deterministic given its spec; wall time is kept
on the row object but never enters the CSV.
"""

import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analysis import ExactSolution, error_norms
from .assembly import SchemeConfig, assemble_system
from .dg_space import build_dof_map
from .mesh import (
    build_facet_topology,
    generate_rect_mesh,
    generate_schwarz_peano_mesh,
    mesh_quality_report,
    read_mesh,
)
from .quadrature import triangle_rule
from .sparse_linalg import cg_solve, iccg_solve, sor_solve

MESH_KINDS = ("rect", "sp", "file")
SCHEMES = ("std", "new")
SOLVERS = ("iccg", "cg", "sor")
QUAD_MODES = ("paper", "exact")

CSV_HEADER = "param,h,R,L2,H1,P,DG,status,iters"


def _sine_problem():
    pi = np.pi

    def u(x, y):
        return 0.5 * np.sin(pi * x) * np.sin(pi * y)

    def grad(x, y):
        return (
            0.5 * pi * np.cos(pi * x) * np.sin(pi * y),
            0.5 * pi * np.sin(pi * x) * np.cos(pi * y),
        )

    def hess(x, y):
        s = np.sin(pi * x) * np.sin(pi * y)
        c = np.cos(pi * x) * np.cos(pi * y)
        return (-0.5 * pi**2 * s, 0.5 * pi**2 * c, -0.5 * pi**2 * s)

    def phi(x, y):
        return pi**2 * np.sin(pi * x) * np.sin(pi * y)

    return u, grad, hess, phi


def unit_sine() -> ExactSolution:
    """u = sin(pi x) sin(pi y)/2 on (0,1)^2; |u|_{2,Omega} = pi^2/2."""
    u, grad, hess, phi = _sine_problem()
    return ExactSolution(u=u, grad=grad, hess=hess, phi=phi, seminorm_h2=np.pi**2 / 2)


def biunit_sine() -> ExactSolution:
    """Same formulas on (-1,1)^2; |u|_{2,Omega} = pi^2."""
    u, grad, hess, phi = _sine_problem()
    return ExactSolution(u=u, grad=grad, hess=hess, phi=phi, seminorm_h2=np.pi**2)


PROBLEMS = {
    "unit-sine": (unit_sine, (0.0, 0.0, 1.0, 1.0)),
    "biunit-sine": (biunit_sine, (-1.0, -1.0, 1.0, 1.0)),
}


@dataclass
class ExperimentSpec:
    mesh: str = "rect"
    n: int = None
    m: int = None
    N: int = None
    alpha: float = None
    mesh_file: str = None
    scheme: str = "new"
    eta: float = None   # default 10 (std) / 0.8 (new)
    degree: int = 1
    solver: str = "iccg"
    tol: float = 1e-12
    maxit: int = None
    omega: float = 1.5
    quad: str = "exact"
    problem: str = None  # default by mesh kind
    coord_decimals: int = None

    def __post_init__(self):
        if self.mesh not in MESH_KINDS:
            raise ValueError(f"unknown mesh kind {self.mesh!r}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.solver not in SOLVERS:
            raise ValueError(f"unknown solver {self.solver!r}")
        if self.quad not in QUAD_MODES:
            raise ValueError(f"unknown quadrature mode {self.quad!r}")
        if self.mesh == "rect" and (self.n is None or self.m is None):
            raise ValueError("rect mesh needs n and m")
        if self.mesh == "sp" and (self.N is None or self.alpha is None):
            raise ValueError("sp mesh needs N and alpha")
        if self.mesh == "file" and not self.mesh_file:
            raise ValueError("file mesh needs mesh_file")
        if self.problem is None:
            self.problem = "biunit-sine" if self.mesh == "sp" else "unit-sine"
        if self.problem not in PROBLEMS:
            raise ValueError(f"unknown problem {self.problem!r}")


@dataclass
class ResultRow:
    param: str
    h: float
    R: float
    l2: float = None
    broken_h1: float = None
    penalty: float = None
    dg: float = None
    dg_star: float = None
    status: str = "converged"
    iterations: int = 0
    wall_time: float = 0.0

    @property
    def converged(self) -> bool:
        return self.status == "converged"


def sci(value, sig=4) -> str:
    """Scientific notation with `sig` significant digits, e.g. 3.536e-2."""
    mant, ex = f"{float(value):.{sig - 1}e}".split("e")
    return f"{mant}e{int(ex)}"


def _build_mesh(spec: ExperimentSpec):
    _, domain = PROBLEMS[spec.problem]
    if spec.mesh == "rect":
        return generate_rect_mesh(spec.n, spec.m, rect=domain, coord_decimals=spec.coord_decimals)
    if spec.mesh == "sp":
        return generate_schwarz_peano_mesh(spec.N, spec.alpha, coord_decimals=spec.coord_decimals)
    return read_mesh(spec.mesh_file)


def _param_label(spec: ExperimentSpec) -> str:
    if spec.mesh == "rect":
        return str(spec.m)
    if spec.mesh == "sp":
        return str(spec.N)
    return Path(spec.mesh_file).stem


def run_experiment(spec: ExperimentSpec) -> ResultRow:
    """One full pipeline run; solver failure yields a row with absent error
    fields, never an exception."""
    t0 = time.perf_counter()
    mesh = _build_mesh(spec)
    quality = mesh_quality_report(mesh)
    topo = build_facet_topology(mesh)
    dofmap = build_dof_map(mesh, spec.degree)
    exact = PROBLEMS[spec.problem][0]()
    config = SchemeConfig(
        variant="standard" if spec.scheme == "std" else "new",
        eta=spec.eta,
        degree=spec.degree,
    )
    system = assemble_system(mesh, topo, dofmap, config, exact.phi)
    if spec.solver == "iccg":
        report = iccg_solve(system.A, system.b, tol=spec.tol, maxit=spec.maxit)
    elif spec.solver == "cg":
        report = cg_solve(system.A, system.b, tol=spec.tol, maxit=spec.maxit)
    else:
        report = sor_solve(system.A, system.b, omega=spec.omega, tol=spec.tol, maxit=spec.maxit)
    row = ResultRow(
        param=_param_label(spec),
        h=quality.max_diameter,
        R=quality.max_circumradius,
        status=report.status,
        iterations=report.iterations,
    )
    if report.converged:
        tri = triangle_rule(3) if spec.quad == "paper" else None
        err = error_norms(mesh, topo, dofmap, report.x, exact, config, tri_rule=tri)
        row.l2 = err.l2
        row.broken_h1 = err.broken_h1
        row.penalty = err.penalty
        row.dg = err.dg
        row.dg_star = err.dg_star
    row.wall_time = time.perf_counter() - t0
    return row


def rows_to_csv(rows) -> str:
    """Deterministic CSV: 4-significant-digit columns, absent errors empty."""
    lines = [CSV_HEADER]
    for r in rows:
        err = ["", "", "", ""]
        if r.converged:
            err = [sci(r.l2), sci(r.broken_h1), sci(r.penalty), sci(r.dg)]
        lines.append(
            ",".join([str(r.param), sci(r.h), sci(r.R), *err, r.status, str(r.iterations)])
        )
    return "\n".join(lines) + "\n"


def parse_results_csv(text: str):
    """Rows of (param, h, R, L2, H1, P, DG, status, iters); error fields are
    None where the CSV left them empty.  Lines starting with '#' (appended
    order summaries) are skipped."""
    lines = [l for l in text.strip().splitlines() if l and not l.startswith("#")]
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError("unrecognized results CSV header")
    out = []
    for line in lines[1:]:
        parts = line.split(",")
        vals = [float(p) if p else None for p in parts[1:7]]
        out.append((parts[0], *vals, parts[7], int(parts[8])))
    return out


def sweep(specs, out=None):
    """Run specs in order; optionally write the CSV to `out`."""
    specs = list(specs)
    if not specs:
        raise ValueError("sweep needs at least one spec")
    rows = [run_experiment(s) for s in specs]
    if out is not None:
        Path(out).write_text(rows_to_csv(rows))
    return rows


def emit_plot_data(series, x_axis, outdir, quantity="broken_h1"):
    """One whitespace-delimited two-column file per series, log-log ready.

    series: mapping label -> list of ResultRow; x_axis: "h" or "R";
    quantity: which error column to emit.  Returns the written paths.
    """
    if x_axis not in ("h", "R"):
        raise ValueError("x_axis must be 'h' or 'R'")
    if not series:
        raise ValueError("need at least one series")
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = []
    for label, rows in series.items():
        path = outdir / f"{label}_{quantity}_vs_{x_axis}.dat"
        lines = []
        for r in rows:
            if not r.converged:
                continue
            x = r.h if x_axis == "h" else r.R
            lines.append(f"{x:.10e} {getattr(r, quantity):.10e}")
        path.write_text("\n".join(lines) + "\n")
        paths.append(path)
    return paths


TABLE1_M = (40, 60, 80, 100, 120, 140, 160, 180, 200)
TABLE2_M = (40, 80, 120, 160, 200, 400)
TABLE3_N = (20, 40, 60, 80, 100, 120, 140)
TABLE4_N = (20, 40, 60, 80)

# strip-mesh figure sweeps: N per alpha chosen so element counts stay within
# a workstation budget (strip counts grow like N^alpha) and, for alpha=2.1,
# past the coarse preasymptotic dip
FIGURE_SERIES = {
    1.2: (20, 40, 60, 80, 100),
    1.5: (20, 40, 60, 80, 100),
    1.8: (12, 20, 28, 40, 48),
    2.0: (20, 40, 60, 80),
    2.1: (16, 20, 24, 28, 32),
}


def table1_specs():
    """Standard scheme, eta=10, n=40: the degradation sweep."""
    return [
        ExperimentSpec(
            mesh="rect", n=40, m=m, scheme="std", eta=10.0, solver="iccg",
            tol=1e-12, maxit=5000, quad="paper", coord_decimals=4,
        )
        for m in TABLE1_M
    ]


def table2_specs():
    """Adaptive-penalty scheme, eta=0.8, n=40."""
    return [
        ExperimentSpec(
            mesh="rect", n=40, m=m, scheme="new", eta=0.8, solver="iccg",
            tol=1e-12, maxit=5000, quad="paper", coord_decimals=4,
        )
        for m in TABLE2_M
    ]


def table3_specs():
    return [
        ExperimentSpec(
            mesh="sp", N=N, alpha=1.5, scheme="new", eta=0.8, solver="iccg",
            tol=1e-12, maxit=5000, quad="paper", coord_decimals=4,
        )
        for N in TABLE3_N
    ]


def table4_specs():
    return [
        ExperimentSpec(
            mesh="sp", N=N, alpha=2.0, scheme="new", eta=0.8, solver="iccg",
            tol=1e-12, maxit=5000, quad="paper", coord_decimals=4,
        )
        for N in TABLE4_N
    ]


def figure_specs(alpha):
    if alpha not in FIGURE_SERIES:
        raise ValueError(f"no figure series for alpha={alpha}")
    return [
        ExperimentSpec(
            mesh="sp", N=N, alpha=alpha, scheme="new", eta=0.8, solver="iccg",
            tol=1e-12, maxit=5000, quad="paper", coord_decimals=4,
        )
        for N in FIGURE_SERIES[alpha]
    ]


TABLE_SPECS = {
    "table1": table1_specs,
    "table2": table2_specs,
    "table3": table3_specs,
    "table4": table4_specs,
}
