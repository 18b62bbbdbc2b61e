import subprocess
import sys

import pytest

from dmrfem.cli import dispatch
from dmrfem import load_mesh


@pytest.fixture
def mesh8(tmp_path):
    p = tmp_path / "m.txt"
    assert dispatch(["mesh", "gen", "--n", "8", "-o", str(p)]) == 0
    return p


def test_mesh_gen_writes_file(mesh8):
    assert mesh8.exists()
    assert mesh8.read_text().startswith("# dmrfem")
    assert load_mesh(mesh8).n_elements == 128


def test_mesh_check_and_stats(mesh8, capsys):
    assert dispatch(["mesh", "check", str(mesh8)]) == 0
    assert dispatch(["mesh", "stats", str(mesh8)]) == 0
    out = capsys.readouterr().out
    assert "kappa_h 0.0883883" in out and "h 0.176777" in out


def test_mesh_check_failure(tmp_path):
    from conftest import obtuse_pair
    from dmrfem import save_mesh

    p = tmp_path / "obtuse.txt"
    save_mesh(obtuse_pair(), p)
    assert dispatch(["mesh", "check", str(p)]) == 2


def test_bad_mesh_file(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("dim 2\nnodes x\n")
    assert dispatch(["mesh", "stats", str(p)]) == 2


def test_dump_matrices(mesh8, tmp_path):
    d = tmp_path / "mats"
    assert dispatch(["mesh", "stats", str(mesh8), "--dump-matrices", str(d)]) == 0
    assert sorted(x.name for x in d.iterdir()) == ["D.txt", "Mc.txt", "S.txt"]


def test_stability_refusal(mesh8, tmp_path, capsys):
    out = tmp_path / "t.csv"
    code = dispatch(["solve", "--mesh", str(mesh8), "--theta", "0", "--tau", "0.1", "--T", "0.1", "--out", str(out)])
    assert code == 2
    assert "tau_max=" in capsys.readouterr().err
    assert not out.exists()


def test_solve_trajectory(mesh8, tmp_path):
    out = tmp_path / "t.csv"
    states = tmp_path / "states"
    argv = ["solve", "--mesh", str(mesh8), "--theta", "1", "--tau", "0.05", "--T", "0.2",
            "--out", str(out), "--dump-states", str(states)]
    assert dispatch(argv) == 0
    rows = [ln for ln in out.read_text().splitlines() if not ln.startswith("#")]
    assert rows[0] == "n,t,linf,l2" and len(rows) == 6
    assert len(list(states.iterdir())) == 5


def test_custom_problem_needs_u0(mesh8, tmp_path):
    argv = ["solve", "--mesh", str(mesh8), "--theta", "1", "--tau", "0.05", "--T", "0.2",
            "--problem", "custom", "--out", str(tmp_path / "t.csv")]
    assert dispatch(argv) == 64
    u0 = tmp_path / "u0.txt"
    u0.write_text("\n".join(["1"] * 49))
    assert dispatch(argv + ["--u0", str(u0)]) == 0


def test_unknown_flag():
    assert dispatch(["mesh", "gen", "--n", "8", "-o", "x", "--nope"]) == 64
    assert dispatch(["frobnicate"]) == 64


@pytest.mark.parametrize("kind", ["range", "positivity", "gn", "sobolev", "fracpower", "imagpower"])
def test_diag_is_deterministic(mesh8, tmp_path, kind):
    out = tmp_path / "d.csv"
    argv = ["diag", kind, "--mesh", str(mesh8), "--samples", "4", "--seed", "3", "--out", str(out)]
    assert dispatch(argv) == 0
    text = out.read_text()
    assert dispatch(argv) == 0
    assert out.read_text() == text
    assert "# seed: 3" in text and "sample,value" in text


def test_study_linear(tmp_path, capsys):
    out = tmp_path / "study"
    assert dispatch(["study", "linear", "--cases", "5", "--variant", "A", "--levels", "8,16,32", "--out", str(out)]) == 0
    text = (out / "case5_A.csv").read_text()
    slope = float(text.strip().splitlines()[-1].split("=")[1])
    assert 1.8 <= slope <= 2.2
    assert (out / "case5_A_log10.csv").exists()
    assert "fitted_slope" in capsys.readouterr().out


def test_module_entry_point(tmp_path):
    p = tmp_path / "m.txt"
    r = subprocess.run([sys.executable, "-m", "dmrfem", "mesh", "gen", "--n", "4", "-o", str(p)], capture_output=True)
    assert r.returncode == 0 and p.exists()
    r = subprocess.run([sys.executable, "-m", "dmrfem", "diag", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "--seed" in r.stdout
