import csv
import json

import numpy as np
import pytest

from acboundary.cli import RunManifest, emit, run

SUBCOMMANDS = {
    "profiles": ["--eps", "0.1"],
    "ode": [],
    "solve": ["--eps", "0.1"],
    "neumann-sweep": [],
    "expansion-residual": ["--order", "0"],
    "schauder-sweep": [],
    "match-sphere": [],
    "project": ["--eps", "0.05"],
    "geometry": [],
}


def test_profiles_csv(tmp_path):
    out = tmp_path / "p.csv"
    assert run(["profiles", "--eps", "0.1", "--omega", "6", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t,g,gbar,gdot,R_omega"
    row = lines[2].split(",")
    assert all("%.17g" % float(v) == v for v in row)


def test_profiles_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run(["profiles", "--eps", "0.05", "--out", str(a)])
    run(["profiles", "--eps", "0.05", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_neumann_fit_json(tmp_path):
    out = tmp_path / "fit.json"
    code = run(["neumann-sweep", "--geom", "disk:R=1", "--eps-list", "0.1,0.05,0.025,0.0125",
                "--fit", "--out", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    assert set(doc) == {"manifest", "records"}
    assert "H_coefficient" in doc["records"][0]


def test_neumann_csv_columns(tmp_path, monkeypatch):
    monkeypatch.setenv("ACBOUNDARY_MAX_WORKERS", "1")
    out = tmp_path / "n.csv"
    assert run(["neumann-sweep", "--geom", "sphere_cap:n=2,tau=0", "--workers", "3",
                "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 4
    assert {"eps", "dnu", "resid_after_inv_eps", "resid_after_eps3"} <= set(rows[0])


def test_solve_trivial_exit_code(tmp_path):
    out = tmp_path / "s.csv"
    assert run(["solve", "--eps", "0.5", "--geom", "disk:R=1", "--out", str(out)]) == 2
    side = json.loads(out.with_suffix(".json").read_text())
    assert "trivial" in side["manifest"]["flags"]
    assert side["records"][0]["trivial"] is True
    assert out.read_text().splitlines()[0] == "t,u,residual"


def test_geometry_file(tmp_path, capsys):
    cfg = tmp_path / "g.toml"
    cfg.write_text('kind = "disk"\nR = 2.0\n')
    assert run(["geometry", "--geom", str(cfg), "--describe"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["H0"] == 0.5


@pytest.mark.parametrize("name", list(SUBCOMMANDS))
def test_dry_run(tmp_path, name, capsys):
    out = tmp_path / "x.out"
    assert run([name, *SUBCOMMANDS[name], "--out", str(out), "--dry-run"]) == 0
    assert not out.exists()
    assert "plan" in json.loads(capsys.readouterr().out)


@pytest.mark.parametrize("argv", [
    ["nonsense"],
    ["solve", "--eps", "0.1", "--bogus", "--out", "x"],
    ["solve", "--eps", "1.5", "--out", "x"],
    ["profiles", "--eps", "0.1", "--omega", "4", "--out", "x"],
    ["solve", "--eps", "0.1", "--geom", "missing/file.toml", "--out", "x"],
    ["solve", "--eps", "0.1", "--geom", "torus:R=1", "--out", "x"],
    ["solve", "--eps", "0.1", "--divisor", "5", "--out", "x"],
])
def test_usage_errors(argv):
    assert run(argv) == 1


def test_malformed_config(tmp_path):
    cfg = tmp_path / "bad.toml"
    cfg.write_text("kind = = disk\n")
    assert run(["geometry", "--geom", str(cfg)]) == 1


def test_emit_csv_shapes(tmp_path):
    p = tmp_path / "e.csv"
    emit([], "csv", p, columns=["eps", "dnu"])
    assert p.read_text() == "eps,dnu\n"
    recs = [{"eps": 0.1 / 2**k, "dnu": 1 / 3} for k in range(4)]
    emit(recs, "csv", p)
    lines = p.read_text().splitlines()
    assert len(lines) == 5
    assert lines[1] == "0.10000000000000001,0.33333333333333331"
    with pytest.raises(ValueError):
        emit([{"a": 1}, {"b": 2}], "csv", p)


def test_emit_json_round_trip(tmp_path):
    p = tmp_path / "e.json"
    recs = [{"eps": 0.05, "values": np.array([1.0, 2.5]), "ok": np.bool_(True)}]
    man = RunManifest("test", {"eps": 0.05}, seed=7)
    emit(recs, "json", p, man)
    doc = json.loads(p.read_text())
    assert doc["records"] == [{"eps": 0.05, "values": [1.0, 2.5], "ok": True}]
    assert doc["manifest"]["seed"] == 7


def test_match_and_project_commands(tmp_path):
    m = tmp_path / "m.json"
    assert run(["match-sphere", "--n", "2", "--eps", "0.05", "--out", str(m)]) == 0
    assert abs(json.loads(m.read_text())["records"][0]["C_plus"]) <= 1e-8
    p = tmp_path / "p.json"
    assert run(["project", "--eps", "0.025", "--out", str(p)]) == 0
    assert len(json.loads(p.read_text())["records"]) == 2


def test_schauder_and_expansion_commands(tmp_path):
    k = tmp_path / "k.json"
    assert run(["schauder-sweep", "--geom", "slab:L=1", "--eps-list", "0.1,0.05",
                "--trials", "8", "--seed", "3", "--out", str(k)]) == 0
    recs = json.loads(k.read_text())["records"]
    assert [r["eps"] for r in recs] == [0.1, 0.05]
    e = tmp_path / "e.json"
    assert run(["expansion-residual", "--geom", "disk:R=1", "--order", "1", "--out", str(e)]) == 0
    assert json.loads(e.read_text())["records"][0]["w_rhs_operative"] == "gdot"


def test_ode_command(tmp_path):
    o = tmp_path / "o.csv"
    assert run(["ode", "--rhs", "tgdot", "--n", "20000", "--stride", "100", "--out", str(o)]) == 0
    assert o.read_text().splitlines()[0] == "t,F,dF,d2F"
