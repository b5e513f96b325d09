import csv
import json
import subprocess
import sys

import pytest

from ssctraj.cli import (EXIT_INFEASIBLE, EXIT_NUMERICAL, EXIT_PARSE, EXIT_PLANNING, EXIT_SEED_COLLISION,
                         EXIT_SEED_CUBE_COLLISION, EXIT_VERIFICATION, exit_code_for, main)
from ssctraj.errors import (Infeasible, ParseError, PlanningError, SchemaVersionMismatch, SeedCollision,
                            SeedCubeCollision, SolverNumericalFailure, VerificationFailure)
from ssctraj.scenario_io import corpus_dir

GAP = corpus_dir() / "gap_speed_limit.yaml"


def test_exit_codes_are_distinct():
    codes = [EXIT_PARSE, EXIT_SEED_COLLISION, EXIT_SEED_CUBE_COLLISION, EXIT_INFEASIBLE, EXIT_VERIFICATION,
             EXIT_NUMERICAL, EXIT_PLANNING]
    assert len(set(codes)) == len(codes) and 0 not in codes and 2 not in codes
    assert exit_code_for(SchemaVersionMismatch("x")) == EXIT_PARSE
    assert exit_code_for(SeedCollision("x")) == EXIT_SEED_COLLISION
    assert exit_code_for(SeedCubeCollision("x")) == EXIT_SEED_CUBE_COLLISION
    assert exit_code_for(Infeasible("x")) == EXIT_INFEASIBLE
    assert exit_code_for(VerificationFailure("x")) == EXIT_VERIFICATION
    assert exit_code_for(SolverNumericalFailure("x")) == EXIT_NUMERICAL
    assert exit_code_for(PlanningError("x")) == EXIT_PLANNING


def test_run_gap_scenario(tmp_path):
    out = tmp_path / "gap"
    assert main(["run", str(GAP), "--out", str(out), "--dump-corridor", "-q"]) == 0
    names = {p.name for p in out.iterdir()}
    assert names == {"trajectory.json", "st.csv", "lt.csv", "velocity.csv", "acceleration.csv", "corridor.json",
                     "report.json"}
    report = json.loads((out / "report.json").read_text())
    assert report["status"] == "ok" and report["verification"]["passed"]
    # velocity inside the 6 m/s band
    traj = json.loads((out / "trajectory.json").read_text())["samples"]
    inside = [v for s, v in zip(traj["s"], traj["s_dot"]) if 60.0 <= s <= 90.0]
    assert inside and max(inside) <= 6.0 + 1e-6
    with open(out / "velocity.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == len(traj["t"]) and set(rows[0]) == {"t", "s_dot", "l_dot"}


def test_dump_corridor_is_chained(tmp_path):
    main(["run", str(GAP), "--out", str(tmp_path), "--dump-corridor", "-q"])
    cubes = json.loads((tmp_path / "corridor.json").read_text())["cubes"]
    for a, b in zip(cubes, cubes[1:]):
        assert a["upper"]["t"] == b["lower"]["t"]
    assert all(c["lower"][ax] < c["upper"][ax] for c in cubes for ax in "slt")


def test_outputs_are_byte_identical(tmp_path):
    for d in ("a", "b"):
        assert main(["run", str(GAP), "--out", str(tmp_path / d), "--dump-corridor", "-q"]) == 0
    for p in (tmp_path / "a").iterdir():
        assert p.read_bytes() == (tmp_path / "b" / p.name).read_bytes(), p.name


@pytest.mark.parametrize("name, code", [("obstacle_wall", EXIT_SEED_COLLISION),
                                        ("infeasible_contradiction", EXIT_INFEASIBLE)])
def test_failure_exit_codes(tmp_path, name, code):
    assert main(["run", str(corpus_dir() / f"{name}.yaml"), "--out", str(tmp_path), "-q"]) == code
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["exit_code"] == code and "error" in report


def test_parse_error_exit(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("schema_version: 1\nlane: {straight: {length: 10}}\n")
    assert main(["run", str(bad), "--out", str(tmp_path / "o"), "-q"]) == EXIT_PARSE
    assert main(["run", str(tmp_path / "missing.yaml"), "--out", str(tmp_path / "o"), "-q"]) == EXIT_PARSE


def test_horizon_and_config_flags(tmp_path):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text("optimizer: {w_l: 2.0}\noutput: {dt: 0.05}\n")
    out = tmp_path / "o"
    assert main(["run", str(corpus_dir() / "lane_keep_minimal.yaml"), "--out", str(out), "--horizon", "4",
                 "--config", str(cfg), "-q"]) == 0
    t = json.loads((out / "trajectory.json").read_text())["samples"]["t"]
    assert t[-1] == pytest.approx(3.9) and t[1] - t[0] == pytest.approx(0.05)
    cfg.write_text("optimizer: {w_l: -1}\n")
    assert main(["run", str(corpus_dir() / "lane_keep_minimal.yaml"), "--out", str(out), "--config", str(cfg),
                 "-q"]) == EXIT_PARSE


def test_verify_only(tmp_path):
    scen = corpus_dir() / "lane_change_left.yaml"
    assert main(["run", str(scen), "--out", str(tmp_path), "-q"]) == 0
    traj = tmp_path / "trajectory.json"
    assert main(["run", str(scen), "--out", str(tmp_path / "v"), "--verify-only", str(traj), "-q"]) == 0
    doc = json.loads(traj.read_text())
    doc["segments"][1]["control_points"]["l"][2] += 5.0
    traj.write_text(json.dumps(doc))
    assert main(["run", str(scen), "--out", str(tmp_path / "v"), "--verify-only", str(traj), "-q"]) == EXIT_VERIFICATION


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "ssctraj", "run", str(corpus_dir() / "short_horizon.yaml"),
                        "--out", str(tmp_path)], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert "verification passed" in r.stdout
    r = subprocess.run([sys.executable, "-m", "ssctraj"], capture_output=True, text=True)
    assert r.returncode == 2
