import csv
import json

import numpy as np
import pytest

from pps4bp import cli


def run(*argv):
    return cli.main([str(a) for a in argv])


def read_csv(path):
    lines = path.read_text().splitlines()
    header = [ln for ln in lines if ln.startswith("#")]
    rows = list(csv.reader(ln for ln in lines if not ln.startswith("#")))
    return header, rows


@pytest.fixture(scope="module")
def results(tmp_path_factory):
    out = tmp_path_factory.mktemp("results")
    assert run("solve-equal-mass", "--out", out) == 0
    assert run("sweep", "--m-from", 1.0, "--m-to", 1.0, "--out", out) == 0
    return out


def test_report_output(tmp_path, capsys):
    assert run("solve-equal-mass", "--out", tmp_path, "--report") == 0
    text = capsys.readouterr().out
    assert "theta   = 2.574869926" in text
    assert "E_hat(T=2pi) = -2.818584" in text
    data = json.loads((tmp_path / "equal_mass.json").read_text())
    assert data["manifest"]["command"] == "solve-equal-mass"
    assert abs(data["theta"] - 2.57486992651942) < 1e-9


def test_outputs_are_deterministic(tmp_path):
    run("solve-equal-mass", "--out", tmp_path)
    first = {p.name: p.read_bytes() for p in tmp_path.glob("*.json")}
    run("solve-equal-mass", "--out", tmp_path)
    second = {p.name: p.read_bytes() for p in tmp_path.glob("*.json")}
    assert first == second and len(first) == 2


def test_single_step_sweep(results):
    header, rows = read_csv(results / "sweep.csv")
    assert header[0].startswith("# manifest: ")
    assert json.loads(header[0][len("# manifest: "):])["command"] == "sweep"
    assert rows[0][0] == "m" and len(rows) == 2
    assert float(rows[1][2]) < 1e-6
    assert (results / "orbits" / "orbit_m1.000.json").exists()


def test_stability_at_equal_mass(results, tmp_path):
    out = tmp_path / "stab.csv"
    assert run("stability", "--orbits", results / "orbits", "--out", out, "--jobs", 1) == 0
    _, rows = read_csv(out)
    assert rows[1][rows[0].index("verdict")] == "LinearlyStable"


def test_stability_empty_input(tmp_path):
    empty = tmp_path / "none"
    empty.mkdir()
    out = tmp_path / "stab.csv"
    assert run("stability", "--orbits", empty, "--out", out) == 0
    _, rows = read_csv(out)
    assert len(rows) == 1


def test_stability_bad_file(tmp_path):
    bad = tmp_path / "orbits"
    bad.mkdir()
    (bad / "orbit_m0.500.json").write_text("{}")
    assert run("stability", "--orbits", bad, "--out", tmp_path / "s.csv", "--jobs", 1) == cli.EXIT_INTEGRATION
    assert "integration failure" in (tmp_path / "s.csv").read_text()


def test_export_missing_orbit(results, tmp_path):
    assert run("export-trajectory", "--m", 0.77, "--orbits", results / "orbits", "--out", tmp_path / "t.csv") == 5


def test_export_trajectory(results, tmp_path):
    out = tmp_path / "traj.csv"
    assert run("export-trajectory", "--m", 1.0, "--orbits", results / "orbits", "--out", out, "--stride", 5) == 0
    header, rows = read_csv(out)
    meta = {h[2:].split(":")[0]: h.split(": ", 1)[1] for h in header}
    assert float(meta["omega2_0"]) == pytest.approx(1.287434964, abs=1e-6)
    assert float(meta["initial_state x1 x2 x3 x4 w1 w2 w3 w4"].split()[0]) == pytest.approx(1.0, abs=1e-12)
    R = float(meta["physical_period_R"])
    data = np.array(rows[1:], dtype=float)
    t, pos = data[:, 1], data[:, 2:6]
    # One regularized period covers two physical periods; positions close up.
    assert t[-1] == pytest.approx(2 * R, rel=1e-9)
    assert np.max(np.abs(pos[-1] - pos[0])) < 1e-6
    # The first binary collision (bodies 1 and 2 meet) happens at a quarter period.
    k = np.argmin(np.abs(pos[:, 0] - pos[:, 2]) + np.abs(pos[:, 1] - pos[:, 3]))
    assert t[k] == pytest.approx(R / 4, abs=1e-3 * R)
    # The mirrored bodies are the negated positions.
    assert np.array_equal(data[:, 6:], -pos)


def test_resolve_jobs(monkeypatch):
    monkeypatch.delenv("SBC_ORBITS_JOBS", raising=False)
    assert cli.resolve_jobs(3) == 3
    monkeypatch.setenv("SBC_ORBITS_JOBS", "2")
    assert cli.resolve_jobs(7) == 2
    monkeypatch.setenv("SBC_ORBITS_JOBS", "lots")
    assert cli.resolve_jobs(7) == 7


def test_unknown_command_exits():
    with pytest.raises(SystemExit):
        run("frobnicate")
