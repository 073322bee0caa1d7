"""CLI contract: exit codes, output formats, determinism."""

import json
import subprocess
import sys

import numpy as np
import pytest

from pme import cli


def run_cli(*argv):
    return cli.main(list(argv))


def write_cfg(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


BASE_CFG = """
manifold = quad-critical
dim = 3
c = 0.5
m = 2
u0 = log-growth(1.0)
R = 20
cells = 200
t_end = 0.02
dt0 = 2e-4
dt_max = 1e-3
"""


# -- geometry ---------------------------------------------------------------------


def test_geometry_report(tmp_path):
    out = tmp_path / "constants.json"
    rc = run_cli(
        "geometry", "--manifold", "euclidean", "--dim", "3", "--report", str(out)
    )
    assert rc == 0
    data = json.loads(out.read_text())
    assert data["c_prime"] == pytest.approx(2.0 * 1.001, rel=1e-12)
    assert data["c_double_prime"] is None
    assert set(data) >= {"c_prime", "c_double_prime", "c_o", "c_m", "attained_at"}


def test_geometry_deterministic_bytes(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        assert (
            run_cli(
                "geometry",
                "--manifold",
                "log-critical",
                "--dim",
                "2",
                "--c",
                "1.0",
                "--report",
                str(out),
            )
            == 0
        )
    assert a.read_bytes() == b.read_bytes()


# -- barrier-check -------------------------------------------------------------------


def test_barrier_check_super_euclidean(tmp_path):
    out = tmp_path / "cert.json"
    rc = run_cli(
        "barrier-check", "--manifold", "euclidean", "--dim", "2",
        "--m", "2", "--which", "super", "--out", str(out),
    )
    assert rc == 0
    cert = json.loads(out.read_text())
    assert cert["pass"] is True
    assert cert["min_residual"] >= -1e-10
    assert cert["params"]["a"] > 0


def test_barrier_check_sub_requires_lower_bound(tmp_path):
    out = tmp_path / "cert.json"
    rc = run_cli(
        "barrier-check", "--manifold", "hyperbolic", "--dim", "2",
        "--m", "2", "--which", "sub", "--out", str(out),
    )
    assert rc == 3


def test_barrier_check_sub_quad_passes(tmp_path):
    out = tmp_path / "cert.json"
    rc = run_cli(
        "barrier-check", "--manifold", "quad-critical", "--dim", "3", "--c", "0.5",
        "--m", "2", "--which", "sub", "--out", str(out),
    )
    assert rc == 0
    cert = json.loads(out.read_text())
    assert cert["pass"] is True
    assert cert["params"]["r"] == 2.0


def test_barrier_check_eta(tmp_path):
    out = tmp_path / "cert.json"
    rc = run_cli(
        "barrier-check", "--manifold", "euclidean", "--dim", "2",
        "--m", "2", "--which", "eta", "--out", str(out),
    )
    assert rc == 0
    cert = json.loads(out.read_text())
    assert cert["params"]["K"] == pytest.approx(1 / 4.4, rel=1e-12)


# -- solve ------------------------------------------------------------------------------


def test_solve_writes_outputs(tmp_path):
    cfg = write_cfg(tmp_path, BASE_CFG)
    out, summary = tmp_path / "traj.csv", tmp_path / "summary.json"
    rc = run_cli("solve", "--config", cfg, "--out", str(out), "--summary", str(summary))
    assert rc == 0
    header = out.read_text().splitlines()[0]
    assert header == "t,rho,u"
    data = json.loads(summary.read_text())
    assert set(data) >= {
        "log_norm_series",
        "tail_ratio_series",
        "mass_series",
        "max_barrier_violation",
        "existence_time",
    }
    assert data["max_barrier_violation"] < 0.5
    assert len(data["tail_ratio_series"]) == len(data["log_norm_series"])


def test_solve_rejects_small_exponent(tmp_path, capsys):
    cfg = write_cfg(tmp_path, BASE_CFG.replace("m = 2", "m = 0.5"))
    rc = run_cli(
        "solve", "--config", cfg, "--out", str(tmp_path / "t.csv"),
        "--summary", str(tmp_path / "s.json"),
    )
    assert rc == 2
    assert "m > 1" in capsys.readouterr().err


def test_solve_rejects_unknown_key(tmp_path):
    cfg = write_cfg(tmp_path, BASE_CFG + "\nwhatever = 3\n")
    rc = run_cli(
        "solve", "--config", cfg, "--out", str(tmp_path / "t.csv"),
        "--summary", str(tmp_path / "s.json"),
    )
    assert rc == 2


def test_solve_table_datum(tmp_path):
    table = tmp_path / "u0.csv"
    rho = np.linspace(0.05, 20.0, 40)
    rows = "\n".join(f"{r},{v}" for r, v in zip(rho, np.exp(-rho)))
    table.write_text("rho,value\n" + rows + "\n")
    cfg = write_cfg(tmp_path, BASE_CFG.replace("u0 = log-growth(1.0)", f"u0 = table({table})"))
    rc = run_cli(
        "solve", "--config", cfg, "--out", str(tmp_path / "t.csv"),
        "--summary", str(tmp_path / "s.json"),
    )
    assert rc == 0


def test_solve_with_barrier_boundary(tmp_path):
    cfg = write_cfg(
        tmp_path,
        """
manifold = quad-critical
dim = 3
c = 0.5
m = 2
u0 = log-growth(1.0)
R = 12
cells = 120
t_end = 0.01
dt0 = 2e-4
boundary = barrier-dirichlet
barrier_a = 1.001
barrier_r = 2.0
barrier_T = 4.0
barrier_delta = 0.12
""",
    )
    out, summary = tmp_path / "traj.csv", tmp_path / "summary.json"
    rc = run_cli("solve", "--config", cfg, "--out", str(out), "--summary", str(summary))
    assert rc == 0
    data = json.loads(summary.read_text())
    # growing boundary datum: last cell of the trajectory stays positive
    assert data["log_norm_series"][-1] > 0


def test_solve_deterministic_bytes(tmp_path):
    cfg = write_cfg(tmp_path, BASE_CFG)
    outs = []
    for tag in ("x", "y"):
        out, summary = tmp_path / f"{tag}.csv", tmp_path / f"{tag}.json"
        assert run_cli("solve", "--config", cfg, "--out", str(out), "--summary", str(summary)) == 0
        outs.append((out.read_bytes(), summary.read_bytes()))
    assert outs[0] == outs[1]


# -- exhaust -----------------------------------------------------------------------------


def test_exhaust_cli(tmp_path):
    cfg = write_cfg(
        tmp_path,
        """
manifold = quad-critical
dim = 3
c = 0.02
m = 2
u0 = bounded(1.0)
cells = 30
t_end = 0.5
dt0 = 5e-3
dt_max = 2e-2
""",
    )
    out = tmp_path / "exhaust.json"
    rc = run_cli("exhaust", "--config", cfg, "--radii", "6,12,24", "--out", str(out))
    assert rc == 0
    rep = json.loads(out.read_text())
    assert rep["monotonicity_gap"] <= rep["tau_h"]
    assert len(rep["inner_increments"]) == 2


# -- blowup ------------------------------------------------------------------------------


def test_blowup_cli_and_ledger(tmp_path):
    cfg = write_cfg(
        tmp_path,
        """
manifold = quad-critical
dim = 3
c = 0.5
m = 2
u0 = log-growth(1.0)
R = 12
cells = 120
blowup_threshold = 30
steps_per_stage = 20
""",
    )
    ledger = tmp_path / "ledger.json"
    rc = run_cli("blowup", "--config", cfg, "--ledger", str(ledger))
    assert rc == 0
    led = json.loads(ledger.read_text())
    assert led["status"] == "blown-up"
    assert led["tau"] <= led["tau_bound"] + 1e-6
    stage = led["stages"][0]
    assert set(stage) >= {"n", "T_n", "S_n", "eps_n", "delta_n", "t_n", "liminf_est", "limsup_est", "lognorm"}


def test_blowup_dump_stages(tmp_path):
    cfg = write_cfg(
        tmp_path,
        """
manifold = quad-critical
dim = 3
c = 0.5
m = 2
u0 = log-growth(1.0)
R = 12
cells = 60
blowup_max_stages = 3
steps_per_stage = 10
""",
    )
    dump = tmp_path / "stages"
    rc = run_cli(
        "blowup", "--config", cfg, "--ledger", str(tmp_path / "l.json"),
        "--dump-stages", str(dump),
    )
    assert rc == 0
    files = sorted(p.name for p in dump.glob("stage_*.csv"))
    assert files == ["stage_0000.csv", "stage_0001.csv", "stage_0002.csv"]


def test_blowup_rejects_bounded_datum(tmp_path):
    cfg = write_cfg(
        tmp_path,
        """
manifold = quad-critical
dim = 3
c = 0.5
m = 2
u0 = bounded(1.0)
R = 12
cells = 60
""",
    )
    rc = run_cli("blowup", "--config", cfg, "--ledger", str(tmp_path / "l.json"))
    assert rc == 3


# -- uniq-check ---------------------------------------------------------------------------


def test_uniq_check_decay_regime(tmp_path, capsys):
    rc = run_cli("uniq-check", "--T", "0.05", "--c_m", "1", "--k", "0.2")
    captured = capsys.readouterr()
    assert rc == 0
    data = json.loads(captured.out)
    assert data["regime"] == "decay"
    assert data["F_at_100"] < 1e-30


def test_uniq_check_growth_regime_fails():
    rc = run_cli("uniq-check", "--T", "0.2", "--c_m", "1", "--k", "0.2")
    assert rc == 3


def test_uniq_check_boundary_case_inconclusive(capsys):
    rc = run_cli("uniq-check", "--T", "0.1", "--c_m", "1", "--k", "0.2")
    assert rc == 3
    assert "inconclusive" in capsys.readouterr().err


def test_uniq_check_writes_table(tmp_path):
    out = tmp_path / "uniq.json"
    rc = run_cli("uniq-check", "--T", "0.05", "--c_m", "1", "--out", str(out))
    assert rc == 0
    table = (tmp_path / "uniq.csv").read_text().splitlines()
    assert table[0] == "R,F,logF"
    logf = [float(line.split(",")[2]) for line in table[1:]]
    assert all(a > b for a, b in zip(logf, logf[1:]))


# -- sweep -------------------------------------------------------------------------------


def test_sweep_amplitude_scaling(tmp_path):
    cfg = write_cfg(
        tmp_path,
        """
manifold = quad-critical
dim = 3
c = 0.5
m = 2
u0 = log-growth(1.0)
R = 12
cells = 120
blowup_threshold = 30
steps_per_stage = 20
""",
    )
    out = tmp_path / "sweep.csv"
    rc = run_cli("sweep", "--config", cfg, "--param", "b", "--values", "0.5,1,2", "--workers", "1", "--out", str(out))
    assert rc == 0
    lines = out.read_text().splitlines()
    rows = [dict(zip(lines[0].split(","), ln.split(","))) for ln in lines[1:]]
    taus = {float(r["value"]): float(r["tau"]) for r in rows}
    assert abs(taus[1.0] / taus[0.5] - 0.5) < 0.05
    assert abs(taus[2.0] / taus[1.0] - 0.5) < 0.05
    assert [float(r["value"]) for r in rows] == [0.5, 1.0, 2.0]


def test_sweep_worker_pool(tmp_path):
    cfg = write_cfg(
        tmp_path,
        """
manifold = quad-critical
dim = 3
c = 0.5
m = 2
u0 = log-growth(1.0)
R = 12
cells = 60
blowup_threshold = 10
steps_per_stage = 10
""",
    )
    out = tmp_path / "sweep.csv"
    rc = run_cli("sweep", "--config", cfg, "--param", "b", "--values", "1,2", "--workers", "2", "--out", str(out))
    assert rc == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 3


def test_sweep_empty_grid(tmp_path):
    cfg = write_cfg(tmp_path, BASE_CFG)
    rc = run_cli("sweep", "--config", cfg, "--param", "b", "--values", "", "--out", str(tmp_path / "s.csv"))
    assert rc == 2


def test_single_value_sweep_matches_direct_run(tmp_path):
    text = """
manifold = quad-critical
dim = 3
c = 0.5
m = 2
u0 = log-growth(1.0)
R = 12
cells = 120
blowup_threshold = 30
steps_per_stage = 20
"""
    cfg = write_cfg(tmp_path, text)
    ledger = tmp_path / "l.json"
    assert run_cli("blowup", "--config", cfg, "--ledger", str(ledger)) == 0
    out = tmp_path / "sweep.csv"
    assert run_cli("sweep", "--config", cfg, "--param", "b", "--values", "1.0", "--workers", "1", "--out", str(out)) == 0
    lines = out.read_text().splitlines()
    row = dict(zip(lines[0].split(","), lines[1].split(",")))
    direct = json.loads(ledger.read_text())
    assert float(row["tau"]) == pytest.approx(direct["tau"], rel=1e-12)
    assert int(row["stages"]) == len(direct["stages"])


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "pme.cli", "--help"], capture_output=True, text=True
    )
    assert proc.returncode == 0
    assert "barrier-check" in proc.stdout
