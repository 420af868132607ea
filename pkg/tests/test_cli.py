import numpy as np

from sipdg.cli import EXIT_SOLVER_FAILURE, main
from sipdg.harness import parse_results_csv
from sipdg.mesh import generate_rect_mesh, write_mesh


def test_run_writes_csv_and_exits_zero(tmp_path, capsys):
    out = tmp_path / "row.csv"
    code = main(
        [
            "run", "--mesh", "rect", "--n", "4", "--m", "4",
            "--scheme", "new", "--eta", "0.8", "--tol", "1e-10", "--out", str(out),
        ]
    )
    assert code == 0
    rows = parse_results_csv(out.read_text())
    assert rows[0][0] == "4" and rows[0][7] == "converged"
    assert "converged" in capsys.readouterr().out


def test_run_failure_exit_code(tmp_path):
    code = main(
        ["run", "--mesh", "rect", "--n", "4", "--m", "4", "--solver", "sor", "--maxit", "1"]
    )
    assert code == EXIT_SOLVER_FAILURE


def test_sweep_with_orders_and_plots(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    plots = tmp_path / "plots"
    code = main(
        [
            "sweep", "--mesh", "rect", "--n", "4", "--m-list", "4,8,16",
            "--eta", "0.8", "--tol", "1e-10", "--out", str(out),
            "--order", "--plot-dir", str(plots), "--plot-x", "h",
        ]
    )
    assert code == 0
    assert len(parse_results_csv(out.read_text())) == 3
    assert "observed order" in capsys.readouterr().out
    assert list(plots.glob("*.dat"))


def test_quality_subcommand(capsys):
    assert main(["quality", "--mesh", "rect", "--n", "40", "--m", "40"]) == 0
    out = capsys.readouterr().out
    assert "3.536e-2" in out and "1.768e-2" in out


def test_order_subcommand(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    main(
        [
            "sweep", "--mesh", "rect", "--n", "4", "--m-list", "4,8,16",
            "--eta", "0.8", "--tol", "1e-10", "--out", str(out),
        ]
    )
    code = main(["order", "--csv", str(out), "--col", "L2", "--x", "h"])
    assert code == 0
    assert "observed order of L2" in capsys.readouterr().out


def test_mesh_file_path(tmp_path, capsys):
    mesh = generate_rect_mesh(3, 3)
    path = tmp_path / "grid.mesh"
    write_mesh(mesh, path)
    code = main(
        ["run", "--mesh", "file", "--mesh-file", str(path), "--problem", "unit-sine",
         "--eta", "0.8", "--tol", "1e-10"]
    )
    assert code == 0
    assert main(["quality", "--mesh", "file", "--mesh-file", str(path)]) == 0
