import csv
import math

import pytest

from qdgate import cli
from qdgate.model import derive, reference_system

FAST = ["--sim.fock_cutoff", "8", "--run.n_states", "20"]


def _rows(text):
    return list(csv.reader(line for line in text.splitlines() if not line.startswith("#")))


def test_phases_golden_header_and_closure(tmp_path):
    out = tmp_path / "p.csv"
    assert cli.main(["phases", "--phases.samples", "200", "-o", str(out)]) == cli.EXIT_OK
    rows = _rows(out.read_text())
    assert rows[0] == ["t_inv_mev", "t_ps", "alpha_fg_re", "alpha_fg_im", "alpha_gf_re", "alpha_gf_im",
                       "alpha_gg_re", "alpha_gg_im", "phi_fg", "phi_gf", "theta_gg", "phi_gg"]
    assert len(rows) == 201
    last = [float(x) for x in rows[-1]]
    assert max(abs(x) for x in last[2:8]) <= 1e-12
    eps = derive(reference_system()).epsilon
    assert last[8] == pytest.approx(-2 * math.pi * abs(eps) ** 2 / 0.025 ** 2, rel=1e-9)
    assert last[11] == pytest.approx(4 * last[8], rel=1e-12)


def test_phases_zero_loops_is_header_only(capsys):
    assert cli.main(["phases", "--phases.loops", "0"]) == cli.EXIT_OK
    assert len(_rows(capsys.readouterr().out)) == 1


def test_zero_detuning_is_user_error(capsys):
    assert cli.main(["phases", "--gate.delta", "0"]) == cli.EXIT_USER
    assert "zero detuning" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [["gate", "--config", "/nonexistent/run.cfg"], ["gate", "--bogus"],
                                  ["sweep-fluct", "--sweep.parameter", "hbar"], [],
                                  ["gate", "--run.seed", "x"], ["sweep-fluct", "--sweep.zetas", "0,1.5"]])
def test_user_errors(argv):
    assert cli.main(argv) == cli.EXIT_USER


def test_config_file_is_read(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("run.n_states = 3  # tiny\nsim.fock_cutoff = 8\n")
    assert cli.main(["gate", "--config", str(cfg)]) == cli.EXIT_OK
    assert "states = 3 (seed 20100601)" in capsys.readouterr().out


def test_gate_without_decay(capsys):
    assert cli.main(["gate", *FAST]) == cli.EXIT_OK
    out = capsys.readouterr().out
    mean = float(out.split("mean fidelity = ")[1].split()[0])
    assert mean >= 0.9999
    assert "loops l = " in out and "= 25" in out
    assert "computed/literature" in out


def test_gate_trajectory(tmp_path, capsys):
    traj = tmp_path / "traj.csv"
    assert cli.main(["gate", *FAST, "--cavity.gamma_ratio", "1", "--trajectory", str(traj),
                     "--checkpoints", "10"]) == cli.EXIT_OK
    text = traj.read_text()
    assert "# target_sector_amplitudes = " in text
    rows = _rows(text)
    assert rows[0][:3] == ["t_inv_mev", "trace", "pop_ff"] and len(rows) == 12
    assert float(rows[-1][1]) == pytest.approx(1, abs=1e-9)


def test_numerical_failures_exit_2():
    assert cli.main(["gate", "--sim.fock_cutoff", "3", "--run.n_states", "2", "--strict"]) == cli.EXIT_NUMERIC
    assert cli.main(["verify-effective", "--sim.max_steps", "100"]) == cli.EXIT_NUMERIC


def test_check_exit_codes(capsys):
    assert cli.main(["check", "--only", "phase_ratio", "--only", "loop_closure"]) == cli.EXIT_OK
    assert cli.main(["check", "--only", "phase_ratio", "--inject-fault"]) == cli.EXIT_NUMERIC
    assert cli.main(["check", "--only", "bch_identity", "--tolerance", "1e-30"]) == cli.EXIT_TOLERANCE
    assert "tolerance-induced" in capsys.readouterr().out
    assert cli.main(["check", "--only", "no_such_check"]) == cli.EXIT_USER


def test_sweep_decay_reproducible_across_runs_and_workers(tmp_path):
    args = ["sweep-decay", *FAST, "--sweep.gamma_ratios", "0,1,2"]
    paths = [tmp_path / f"s{k}.csv" for k in range(3)]
    assert cli.main([*args, "-o", str(paths[0])]) == cli.EXIT_OK
    assert cli.main([*args, "-o", str(paths[1])]) == cli.EXIT_OK
    assert cli.main([*args, "--workers", "2", "-o", str(paths[2])]) == cli.EXIT_OK
    data = [p.read_bytes() for p in paths]
    assert data[0] == data[1] == data[2]
    rows = _rows(data[0].decode())
    assert rows[0] == ["swept_value", "mean_fidelity", "std_error", "min_fidelity", "n_states"]
    assert [float(r[0]) for r in rows[1:]] == [0.0, 1.0, 2.0]


def test_fluctuation_zero_row_matches_gate(tmp_path, capsys):
    assert cli.main(["gate", *FAST, "--cavity.gamma_ratio", "1"]) == cli.EXIT_OK
    gate_mean = float(capsys.readouterr().out.split("mean fidelity = ")[1].split()[0])
    out = tmp_path / "f.csv"
    assert cli.main(["sweep-fluct", *FAST, "--cavity.gamma_ratio", "1", "--sweep.zetas", "0,0.02",
                     "-o", str(out)]) == cli.EXIT_OK
    rows = _rows(out.read_text())
    assert float(rows[1][1]) == pytest.approx(gate_mean, abs=1e-8)
    assert "# parameter = g" in out.read_text()
