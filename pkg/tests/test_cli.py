import numpy as np
import pytest

from epmesh import cli, verify
from epmesh.output import read_energy_csv, read_pgm, read_snapshot_text

SMALL = """
[model]
kind = epdiff
[grid]
nx = 16
ny = 16
[particles]
per_cell = 4
[time]
t_end = {t_end}
cg_max_iter = {cg_max_iter}
[output]
snapshot_stride = 2
figures = {figures}
[ic]
name = two_lines
"""


def write_cfg(tmp_path, t_end=0.1, cg_max_iter=500, figures="false", name="run.cfg"):
    p = tmp_path / name
    p.write_text(SMALL.format(t_end=t_end, cg_max_iter=cg_max_iter, figures=figures))
    return p


def test_run_writes_outputs(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    out = tmp_path / "out"
    assert cli.main(["run", str(cfg), "--out", str(out), "--dump-particles", "--dump-components"]) == 0
    printed = capsys.readouterr().out
    assert "max |H(t) - H(0)|" in printed
    steps = round(0.1 / 0.0204)
    energy = read_energy_csv(out / "energy.csv")
    assert len(energy["t"]) == steps + 1
    assert len(set(energy["mass"])) == 1
    snaps = sorted(out.glob("snap_*.txt"))
    assert [s.name for s in snaps] == [f"snap_{k:06d}.txt" for k in range(0, steps + 1, 2)]
    for k, s in zip(range(0, steps + 1, 2), snaps):
        values, t, _ = read_snapshot_text(s)
        assert t == k * 0.0204 and values.shape == (16, 16) and np.all(np.isfinite(values))
    assert (out / "snap_000000.pgm").exists()
    assert (out / "snapx_000000.txt").exists() and (out / "particles_000000.csv").exists()
    assert not list(out.glob("*.png"))


def test_run_with_figures(tmp_path):
    cfg = write_cfg(tmp_path, t_end=0.0204, figures="true")
    out = tmp_path / "fig"
    assert cli.main(["run", str(cfg), "--out", str(out)]) == 0
    assert (out / "energy.png").exists() and (out / "speed_000000.png").exists()


def test_zero_t_end_writes_initial_state_only(tmp_path):
    cfg = write_cfg(tmp_path, t_end=0)
    out = tmp_path / "zero"
    assert cli.main(["run", str(cfg), "--out", str(out)]) == 0
    assert len((out / "energy.csv").read_text().splitlines()) == 2
    assert [p.name for p in out.glob("snap_*.txt")] == ["snap_000000.txt"]


def test_runs_are_deterministic(tmp_path):
    cfg = write_cfg(tmp_path)
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["run", str(cfg), "--out", str(a)]) == 0
    assert cli.main(["run", str(cfg), "--out", str(b)]) == 0
    for f in ["energy.csv"] + [p.name for p in a.glob("snap_*.txt")]:
        assert (a / f).read_bytes() == (b / f).read_bytes()


def test_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("[particles]\nper_cell = 7\n")
    assert cli.main(["run", str(bad)]) == 2
    err = capsys.readouterr().err
    assert "line 2" in err and len(err.strip().splitlines()) == 1
    assert cli.main(["run", str(tmp_path / "nope.cfg")]) == 2


def test_solver_failure_exit_code(tmp_path, capsys):
    cfg = write_cfg(tmp_path, cg_max_iter=1)
    assert cli.main(["run", str(cfg), "--out", str(tmp_path / "f")]) == 3
    assert "solver failure" in capsys.readouterr().err


def test_verify_tiny(capsys):
    assert cli.main(["verify", "--size", "tiny"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 9 and "tol=" in out and "observed=" in out


def test_verify_failure_exit_code(monkeypatch, capsys):
    monkeypatch.setattr(verify, "run_checks", lambda size, seed: [verify.Check("broken", 1.0, 1e-3)])
    assert cli.main(["verify"]) == 4
    assert "FAIL" in capsys.readouterr().out


def test_demo_rejects_bad_scale(capsys):
    assert cli.main(["demo-epdiff", "--scale", "3"]) == 2


def test_demo_short_run(tmp_path):
    out = tmp_path / "demo"
    assert cli.main(["demo-epdiff", "--scale", "8", "--t-end", "0.0612", "--out", str(out), "--no-figures"]) == 0
    energy = read_energy_csv(out / "energy.csv")
    assert len(energy["t"]) == 4
    img, _ = read_pgm(out / "snap_000003.pgm")
    assert img.shape == (16, 16) and img.max() == 255


@pytest.mark.slow
def test_demo_scale_4(tmp_path, capsys):
    out = tmp_path / "demo32"
    assert cli.main(["demo-epdiff", "--scale", "4", "--out", str(out), "--no-figures"]) == 0
    energy = read_energy_csv(out / "energy.csv")
    H = energy["hamiltonian"]
    assert len(H) == 50 and np.max(np.abs(H - H[0])) < 0.15 * H[0]
    assert "32x32" in capsys.readouterr().out
