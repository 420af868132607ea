"""Command-line driver.

Subcommands: `run` (one experiment), `sweep` (a range of m or N),
`table1`..`table4` (pre-baked sweeps), `quality` (mesh metrics),
`order` (log-log slope over a results CSV).

Exit code 0 means every row converged; 3 flags solver-failure rows (the
degradation sweep ends in one by design).
"""

import argparse
import sys
from pathlib import Path

from .analysis import observed_order
from .harness import (
    TABLE_SPECS,
    ExperimentSpec,
    emit_plot_data,
    parse_results_csv,
    rows_to_csv,
    run_experiment,
    sci,
    sweep,
)
from .mesh import (
    generate_rect_mesh,
    generate_schwarz_peano_mesh,
    mesh_quality_report,
    read_mesh,
)

EXIT_SOLVER_FAILURE = 3

_ERR_COLS = {"L2": 1, "H1": 2, "P": 3, "DG": 4}


def _add_mesh_flags(p):
    p.add_argument("--mesh", choices=["rect", "sp", "file"], default="rect")
    p.add_argument("--n", type=int, default=None, help="rect: horizontal cells")
    p.add_argument("--m", type=int, default=None, help="rect: vertical cells")
    p.add_argument("--N", type=int, default=None, help="sp: base divisions")
    p.add_argument("--alpha", type=float, default=None, help="sp: height exponent")
    p.add_argument("--mesh-file", default=None, help="path to an ASCII mesh file")
    p.add_argument(
        "--coord-decimals", type=int, default=None,
        help="round generated coordinates to this many decimals",
    )


def _add_scheme_flags(p):
    p.add_argument("--scheme", choices=["std", "new"], default="new")
    p.add_argument("--eta", type=float, default=None, help="penalty parameter")
    p.add_argument("--degree", type=int, default=1)
    p.add_argument("--solver", choices=["iccg", "cg", "sor"], default="iccg")
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--maxit", type=int, default=None)
    p.add_argument("--omega", type=float, default=1.5)
    p.add_argument("--quad", choices=["paper", "exact"], default="exact")
    p.add_argument("--problem", choices=["unit-sine", "biunit-sine"], default=None)


def _spec_from_args(args, **overrides):
    fields = dict(
        mesh=args.mesh, n=args.n, m=args.m, N=args.N, alpha=args.alpha,
        mesh_file=args.mesh_file, scheme=args.scheme, eta=args.eta,
        degree=args.degree, solver=args.solver, tol=args.tol, maxit=args.maxit,
        omega=args.omega, quad=args.quad, problem=args.problem,
        coord_decimals=args.coord_decimals,
    )
    fields.update(overrides)
    return ExperimentSpec(**fields)


def _print_rows(rows, file=None):
    file = file if file is not None else sys.stdout
    head = f"{'param':>6} {'h':>10} {'R':>10} {'L2':>10} {'H1':>10} {'P':>10} {'DG':>10}  {'status':<16} {'iters':>7}"
    print(head, file=file)
    for r in rows:
        err = ["-"] * 4
        if r.converged:
            err = [sci(r.l2), sci(r.broken_h1), sci(r.penalty), sci(r.dg)]
        print(
            f"{r.param:>6} {sci(r.h):>10} {sci(r.R):>10} "
            f"{err[0]:>10} {err[1]:>10} {err[2]:>10} {err[3]:>10}  "
            f"{r.status:<16} {r.iterations:>7}",
            file=file,
        )


def _finish(rows, out):
    if out:
        Path(out).write_text(rows_to_csv(rows))
    return 0 if all(r.converged for r in rows) else EXIT_SOLVER_FAILURE


def _cmd_run(args):
    row = run_experiment(_spec_from_args(args))
    _print_rows([row])
    return _finish([row], args.out)


def _parse_int_list(text):
    try:
        return [int(tok) for tok in text.split(",") if tok]
    except ValueError as exc:
        raise SystemExit(f"bad integer list {text!r}") from exc


def _cmd_sweep(args):
    if args.mesh == "rect":
        if not args.m_list:
            raise SystemExit("sweep over a rect mesh needs --m 40,80,...")
        specs = [_spec_from_args(args, m=m) for m in _parse_int_list(args.m_list)]
    elif args.mesh == "sp":
        if not args.N_list:
            raise SystemExit("sweep over an sp mesh needs --N 20,40,...")
        specs = [_spec_from_args(args, N=N) for N in _parse_int_list(args.N_list)]
    else:
        raise SystemExit("sweep supports rect and sp meshes")
    rows = sweep(specs)
    _print_rows(rows)
    order_lines = []
    if args.order:
        good = [r for r in rows if r.converged]
        if len(good) >= 3:
            for name, col in (("L2", "l2"), ("H1", "broken_h1"), ("DG", "dg")):
                slope = observed_order([(r.h, getattr(r, col)) for r in good])
                order_lines.append(f"# observed order vs h: {name} {slope:.3f}")
    for line in order_lines:
        print(line)
    if args.plot_dir:
        label = f"alpha{args.alpha}" if args.mesh == "sp" else f"n{args.n}"
        emit_plot_data({label: rows}, args.plot_x, args.plot_dir)
    code = _finish(rows, args.out)
    if args.out and order_lines:
        with open(args.out, "a") as fh:
            fh.write("\n".join(order_lines) + "\n")
    return code


def _cmd_table(name):
    def runner(args):
        rows = sweep(TABLE_SPECS[name]())
        _print_rows(rows)
        return _finish(rows, args.out)

    return runner


def _cmd_quality(args):
    if args.mesh == "rect":
        if args.n is None or args.m is None:
            raise SystemExit("quality for a rect mesh needs --n and --m")
        mesh = generate_rect_mesh(args.n, args.m, coord_decimals=args.coord_decimals)
    elif args.mesh == "sp":
        if args.N is None or args.alpha is None:
            raise SystemExit("quality for an sp mesh needs --N and --alpha")
        mesh = generate_schwarz_peano_mesh(args.N, args.alpha, coord_decimals=args.coord_decimals)
    else:
        if not args.mesh_file:
            raise SystemExit("quality for a file mesh needs --mesh-file")
        mesh = read_mesh(args.mesh_file)
    q = mesh_quality_report(mesh)
    print(f"vertices              {q.n_vertices}")
    print(f"triangles             {q.n_triangles}")
    print(f"max diameter h        {sci(q.max_diameter)}")
    print(f"max circumradius R    {sci(q.max_circumradius)}")
    print(f"shape regularity      {q.shape_regularity:.4g}")
    print(f"max inner angle       {q.max_angle:.6g} rad")
    print(f"max R/h               {q.max_circumradius_ratio:.4g}")
    return 0


def _cmd_order(args):
    rows = parse_results_csv(Path(args.csv).read_text())
    col = _ERR_COLS[args.col]
    x_idx = 1 if args.x == "h" else 2
    pts = [
        (r[x_idx], r[2 + col])
        for r in rows
        if r[2 + col] is not None
    ]
    slope = observed_order(pts)
    print(f"observed order of {args.col} vs {args.x}: {slope:.4f}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sipdg",
        description="Interior-penalty DG Poisson experiments on structured and anisotropic meshes",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment")
    _add_mesh_flags(p_run)
    _add_scheme_flags(p_run)
    p_run.add_argument("--out", default=None, help="write a results CSV")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a range of mesh parameters")
    _add_mesh_flags(p_sweep)
    _add_scheme_flags(p_sweep)
    p_sweep.add_argument("--m-list", dest="m_list", default=None, metavar="40,80,120")
    p_sweep.add_argument("--N-list", dest="N_list", default=None, metavar="20,40,60")
    p_sweep.add_argument("--out", default=None)
    p_sweep.add_argument("--order", action="store_true", help="print observed orders")
    p_sweep.add_argument("--plot-dir", default=None, help="emit two-column plot data")
    p_sweep.add_argument("--plot-x", choices=["h", "R"], default="R")
    p_sweep.set_defaults(func=_cmd_sweep)

    for name in ("table1", "table2", "table3", "table4"):
        p_t = sub.add_parser(name, help=f"pre-baked {name} sweep")
        p_t.add_argument("--out", default=None)
        p_t.set_defaults(func=_cmd_table(name))

    p_q = sub.add_parser("quality", help="mesh quality metrics")
    _add_mesh_flags(p_q)
    p_q.set_defaults(func=_cmd_quality)

    p_o = sub.add_parser("order", help="observed order over a results CSV")
    p_o.add_argument("--csv", required=True)
    p_o.add_argument("--x", choices=["h", "R"], default="h")
    p_o.add_argument("--col", choices=sorted(_ERR_COLS), default="DG")
    p_o.set_defaults(func=_cmd_order)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
