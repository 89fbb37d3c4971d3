import csv
import math
import os

import numpy as np
import pytest

from cayleyqw import (
    DihedralParams,
    GroupFamily,
    build_cayley_graph,
    make_dirac,
    make_hadamard,
    make_weyl,
    make_dihedral_walk,
    save_walk_spec,
    scalar_walk,
)
from cayleyqw.cli import main


def write_spec(path, walk):
    save_walk_spec(path, walk)
    return str(path)


@pytest.fixture
def dirac_spec(tmp_path):
    return write_spec(tmp_path / "dirac.spec", make_dirac(0.8, 0.6, +1))


@pytest.fixture
def weyl_spec(tmp_path):
    return write_spec(tmp_path / "weyl.spec", make_weyl())


@pytest.fixture
def broken_spec(tmp_path):
    graph = build_cayley_graph(
        GroupFamily.free_abelian(1), [("+1", (1,)), ("-1", (-1,))]
    )
    walk = scalar_walk(graph, {"+1": 1 / math.sqrt(2), "-1": 1 / math.sqrt(2)})
    return write_spec(tmp_path / "broken.spec", walk)


def read_csv(path):
    with open(path, newline="") as handle:
        return list(csv.DictReader(handle))


def test_check_passes_and_prints_residual(dirac_spec, capsys):
    assert main(["check", dirac_spec]) == 0
    out = capsys.readouterr().out
    assert "max residual" in out


def test_check_fails_on_broken_spec(broken_spec):
    assert main(["check", broken_spec]) == 1


def test_missing_file_is_usage_error(tmp_path):
    assert main(["check", str(tmp_path / "nope.spec")]) == 2


def test_malformed_spec_is_usage_error(tmp_path):
    bad = tmp_path / "bad.spec"
    bad.write_text("family = z(1)\n")
    assert main(["check", str(bad)]) == 2


def test_unknown_subcommand_is_usage_error():
    assert main(["frobnicate"]) == 2


def test_dispersion_csv_weyl(weyl_spec, tmp_path):
    out = tmp_path / "disp.csv"
    assert main(["dispersion", weyl_spec, "--samples", "8", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert len(rows) == 8
    for row in rows:
        k = float(row["k"])
        assert float(row["omega_plus"]) == pytest.approx(abs(k), abs=1e-12)
        # the negative branch agrees with -|k| as a phase (the zone boundary
        # -pi wraps to +pi)
        got = np.exp(1j * float(row["omega_minus"]))
        assert got == pytest.approx(np.exp(-1j * abs(k)), abs=1e-12)


def test_dispersion_is_bit_stable(dirac_spec, tmp_path):
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["dispersion", dirac_spec, "--samples", "64", "--out", str(out1)]) == 0
    assert main(["dispersion", dirac_spec, "--samples", "64", "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_evolve_writes_distribution(dirac_spec, tmp_path):
    out = tmp_path / "dist.csv"
    assert main([
        "evolve", dirac_spec, "--steps", "1", "--init", "0,0", "--out", str(out)
    ]) == 0
    rows = {(r["site"], r["component"]): float(r["prob"]) for r in read_csv(out)}
    assert rows[("-1", "0")] == pytest.approx(0.64)
    assert rows[("0", "1")] == pytest.approx(0.36)
    assert sum(rows.values()) == pytest.approx(1.0)


def test_evolve_dihedral_walk(tmp_path):
    spec = write_spec(
        tmp_path / "d.spec", make_dihedral_walk(DihedralParams.generic(0.8, 0.2, 0.5))
    )
    out = tmp_path / "dist.csv"
    assert main(["evolve", spec, "--steps", "5", "--init", "0,1", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert {r["component"] for r in rows} == {"0", "1"}
    assert sum(float(r["prob"]) for r in rows) == pytest.approx(1.0)


def test_coarse_grain_then_parity_and_canonical(tmp_path):
    spec = write_spec(
        tmp_path / "gen.spec",
        make_dihedral_walk(DihedralParams.generic(0.8, 0.2, 0.5)),
    )
    cg = tmp_path / "cg.spec"
    assert main(["coarse-grain", spec, "--out", str(cg)]) == 0
    assert main(["parity", str(cg)]) == 0
    assert main(["canonical", str(cg)]) == 0


def test_parity_and_canonical_reject_hadamard(tmp_path):
    spec = write_spec(tmp_path / "h.spec", make_hadamard())
    assert main(["parity", spec]) == 1
    assert main(["canonical", spec]) == 1


def test_classify_cli(tmp_path, capsys):
    fam = GroupFamily.abelian((2,), 1)
    graph = build_cayley_graph(fam, [("g1", (0, 1)), ("g2", (1, 1))])
    walk = scalar_walk(graph, {"g1": 1 / math.sqrt(2), "g2": 1j / math.sqrt(2)})
    spec = write_spec(tmp_path / "t.spec", walk)
    out = tmp_path / "blocks.csv"
    assert main(["classify", spec, "--out", str(out)]) == 0
    assert "2 shift block(s)" in capsys.readouterr().out
    rows = read_csv(out)
    assert [r["shift"] for r in rows] == ["1", "1"]


def test_classify_rejects_dihedral_input(tmp_path):
    spec = write_spec(
        tmp_path / "d.spec", make_dihedral_walk(DihedralParams.mu_zero(0.5, 0.5))
    )
    assert main(["classify", spec]) == 1


def test_solve_inline_presentation(tmp_path, capsys):
    out = tmp_path / "sol.csv"
    code = main([
        "solve", "family=abelian(2,2|0); gens: g1=(1,0), g2=(0,1)",
        "--starts", "24", "--seed", "1", "--out", str(out),
    ])
    assert code == 0
    rows = read_csv(out)
    assert rows
    assert set(rows[0]) == {"g1_re", "g1_im", "g2_re", "g2_im", "residual"}
    assert all(float(r["residual"]) <= 1e-10 for r in rows)


def test_solve_is_deterministic_for_fixed_seed(tmp_path):
    out1, out2 = tmp_path / "s1.csv", tmp_path / "s2.csv"
    pres = "family=abelian(2,2|0); gens: g1=(1,0), g2=(0,1)"
    assert main(["solve", pres, "--starts", "16", "--seed", "9", "--out", str(out1)]) == 0
    assert main(["solve", pres, "--starts", "16", "--seed", "9", "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_dihedral_make_and_enumerate(tmp_path, capsys):
    out = tmp_path / "walk.spec"
    assert main([
        "dihedral", "make", "--case", "ze_zero", "--p", "0.4", "--mu", "0.5",
        "--out", str(out),
    ]) == 0
    assert main(["check", str(out)]) == 0
    assert main(["dihedral", "enumerate", "--max-n", "2"]) == 0
    lines = [l for l in capsys.readouterr().out.splitlines() if l.startswith("family=")]
    assert len(lines) == 4


def test_dihedral_make_finite(tmp_path):
    out = tmp_path / "f.spec"
    assert main([
        "dihedral", "make", "--case", "generic", "--p", "0.8", "--q", "0.2",
        "--mu", "0.5", "--finite-n", "6", "--out", str(out),
    ]) == 0
    assert main(["check", str(out)]) == 0


def test_plot_script_and_render(dirac_spec, tmp_path):
    disp = tmp_path / "disp.csv"
    assert main(["dispersion", dirac_spec, "--samples", "32", "--out", str(disp)]) == 0
    script = tmp_path / "plot.py"
    png = tmp_path / "disp.png"
    assert main([
        "plot-script", str(disp), "--out", str(script), "--render", str(png)
    ]) == 0
    assert script.exists() and "matplotlib" in script.read_text()
    assert png.exists() and png.stat().st_size > 0


def test_dispersion_plot_flag(dirac_spec, tmp_path):
    disp = tmp_path / "disp.csv"
    png = tmp_path / "disp.png"
    assert main([
        "dispersion", dirac_spec, "--samples", "32", "--out", str(disp),
        "--plot", str(png),
    ]) == 0
    assert png.exists() and png.stat().st_size > 0


def test_out_dir_environment_variable(dirac_spec, tmp_path, monkeypatch):
    monkeypatch.setenv("QW_OUT_DIR", str(tmp_path / "outputs"))
    assert main(["dispersion", dirac_spec, "--samples", "16", "--out", "nested/d.csv"]) == 0
    assert (tmp_path / "outputs" / "nested" / "d.csv").exists()
