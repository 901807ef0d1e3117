"""Scenario files and the command-line interface."""

import json
import os

import numpy as np
import pytest
import yaml

from morphquad.cli import main
from morphquad.scenario import (
    PayloadEvent,
    ScenarioError,
    ScenarioSpec,
    Waypoint,
    load_scenario,
    save_scenario,
    spec_from_dict,
    spec_to_dict,
)


def small_spec(**kw):
    base = dict(
        name="unit", mode="morphing", duration_s=2.0,
        waypoints=[Waypoint(0.0, np.array([0.0, 0.0, -2.0]), yaw=np.deg2rad(10.0))],
        payload_events=[PayloadEvent(t=0.5, action="attach", mass=0.4,
                                     position=np.array([0.0, 0.05, 0.0])),
                        PayloadEvent(t=1.5, action="drop")],
    )
    base.update(kw)
    return ScenarioSpec(**base)


# ---------------------------------------------------------------------------
# round trip and validation
# ---------------------------------------------------------------------------

def test_dict_round_trip_identity():
    spec = small_spec()
    d1 = spec_to_dict(spec)
    d2 = spec_to_dict(spec_from_dict(d1))
    assert d1 == d2


def test_yaml_file_round_trip(tmp_path):
    spec = small_spec()
    path = tmp_path / "s.yaml"
    save_scenario(spec, path)
    loaded = load_scenario(path)
    assert loaded.name == spec.name
    assert loaded.mode == spec.mode
    assert loaded.waypoints[0].yaw == pytest.approx(np.deg2rad(10.0))
    assert loaded.payload_events[0].mass == pytest.approx(0.4)
    assert spec_to_dict(loaded) == spec_to_dict(spec)


def test_degrees_at_boundary(tmp_path):
    spec = small_spec()
    path = tmp_path / "s.yaml"
    save_scenario(spec, path)
    raw = yaml.safe_load(open(path))
    assert raw["waypoints"][0]["yaw_deg"] == pytest.approx(10.0)
    assert raw["airframe"]["theta_min_deg"] == pytest.approx(-15.0)
    assert raw["airframe"]["theta_max_deg"] == pytest.approx(105.0)


def test_validation_decreasing_timeline():
    with pytest.raises(ScenarioError, match="strictly increasing"):
        small_spec(waypoints=[Waypoint(0.0, np.zeros(3)),
                              Waypoint(2.0, np.zeros(3)),
                              Waypoint(1.0, np.zeros(3))]).validate()


def test_validation_bad_mode():
    with pytest.raises(ScenarioError, match="mode"):
        small_spec(mode="hybrid").validate()


def test_validation_bad_dt():
    with pytest.raises(ScenarioError, match="dt"):
        small_spec(dt=0.01).validate()


def test_validation_unknown_keys():
    d = spec_to_dict(small_spec())
    d["turbo"] = True
    with pytest.raises(ScenarioError, match="unknown keys"):
        spec_from_dict(d)


def test_validation_wrong_schema_version():
    d = spec_to_dict(small_spec())
    d["schema_version"] = 99
    with pytest.raises(ScenarioError, match="schema_version"):
        spec_from_dict(d)


def test_validation_attach_without_mass():
    with pytest.raises(ScenarioError, match="attach"):
        small_spec(payload_events=[PayloadEvent(t=0.5, action="attach", mass=0.0)]).validate()


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

@pytest.fixture
def short_scenario(tmp_path):
    spec = ScenarioSpec(name="cli_unit", mode="morphing", duration_s=2.0,
                        waypoints=[Waypoint(0.0, np.array([0.0, 0.0, -2.0]))])
    path = tmp_path / "scenario.yaml"
    save_scenario(spec, path)
    return str(path)


def test_cli_validate_ok(short_scenario):
    assert main(["validate", short_scenario]) == 0


def test_cli_validate_rejects_garbage(tmp_path, capsys):
    path = tmp_path / "bad.yaml"
    path.write_text("mode: warp\nschema_version: 1\n")
    assert main(["validate", str(path)]) == 2
    assert "validation error" in capsys.readouterr().err


def test_cli_validate_missing_file():
    assert main(["validate", "/nonexistent/file.yaml"]) == 2


def test_cli_run_happy_path(short_scenario, tmp_path, capsys):
    telem = tmp_path / "t.csv"
    summ = tmp_path / "s.json"
    code = main(["run", short_scenario, "--telemetry", str(telem), "--summary", str(summ)])
    assert code == 0
    assert telem.exists() and summ.exists()
    summary = json.loads(summ.read_text())
    assert summary["completed"] is True
    assert summary["crash"] is False
    header = telem.read_text().splitlines()[0]
    assert header.startswith("t_s,px_m")


def test_cli_run_idempotent(short_scenario, tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    main(["run", short_scenario, "--telemetry", str(a), "--summary", str(tmp_path / "a.json")])
    main(["run", short_scenario, "--telemetry", str(b), "--summary", str(tmp_path / "b.json")])
    assert a.read_bytes() == b.read_bytes()


def test_cli_run_crash_exit_code(tmp_path):
    # far beyond the static envelope: tips over within a couple of seconds
    spec = ScenarioSpec(name="crash_unit", mode="fixed-frame", duration_s=10.0,
                        waypoints=[Waypoint(0.0, np.array([0.0, 0.0, -3.0]))],
                        payload_events=[PayloadEvent(t=0.0, action="attach", mass=3.0,
                                                     position=np.array([0.0, 0.20, 0.0]))])
    path = tmp_path / "crash.yaml"
    save_scenario(spec, path)
    code = main(["run", str(path), "--telemetry", str(tmp_path / "t.csv"),
                 "--summary", str(tmp_path / "s.json")])
    assert code == 3
    assert json.loads((tmp_path / "s.json").read_text())["crash"] is True


def test_cli_morphology(capsys):
    assert main(["morphology", "--mass", "3.0", "--cog-x", "0.0", "--cog-y", "0.05"]) == 0
    out = capsys.readouterr().out
    assert "theta_deg" in out and "efficiency" in out


def test_cli_morphology_infeasible(capsys):
    assert main(["morphology", "--mass", "3.0", "--cog-x", "0.2", "--cog-y", "0.2"]) == 4
    assert "infeasible" in capsys.readouterr().err


def test_cli_sweep_small(tmp_path):
    out = tmp_path / "table.csv"
    code = main(["sweep", "--offsets-cm", "0", "--directions", "y",
                 "--modes", "morphing", "--duration", "3", "--out", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("mode,direction,offset_cm,status")
    assert len(lines) == 2
    assert "ok" in lines[1]


def test_cli_sweep_rejects_bad_direction(tmp_path):
    assert main(["sweep", "--offsets-cm", "0", "--directions", "q",
                 "--modes", "morphing", "--out", str(tmp_path / "t.csv")]) == 2


def test_cli_sweep_empty_grid(tmp_path):
    out = tmp_path / "empty.csv"
    assert main(["sweep", "--offsets-cm", "", "--directions", "y",
                 "--modes", "morphing", "--out", str(out)]) == 0
    assert out.read_text().splitlines()[0].startswith("mode,")
    assert len(out.read_text().splitlines()) == 1


def test_cli_morphology_batch_table(tmp_path):
    out = tmp_path / "morph.csv"
    code = main(["morphology", "--mass", "3.0",
                 "--cog-list", "0,0 0,0.05 0.3,0.3", "--table", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("x_cog_m,y_cog_m,theta1_deg")
    assert len(lines) == 4
    assert "False" in lines[3]      # unreachable CoG recorded, not fatal


def test_airframe_file_reference(tmp_path):
    import yaml as _yaml
    airframe = {"d": 0.12, "l": 0.134, "f_max": 9.5}
    (tmp_path / "airframe.yaml").write_text(_yaml.safe_dump(airframe))
    d = spec_to_dict(small_spec())
    d["airframe"] = "airframe.yaml"
    path = tmp_path / "ref.yaml"
    path.write_text(_yaml.safe_dump(d))
    spec = load_scenario(path)
    assert spec.airframe.f_max == pytest.approx(9.5)


def test_airframe_file_reference_missing(tmp_path):
    import yaml as _yaml
    d = spec_to_dict(small_spec())
    d["airframe"] = "missing_airframe.yaml"
    path = tmp_path / "ref.yaml"
    path.write_text(_yaml.safe_dump(d))
    with pytest.raises(ScenarioError, match="referenced file not found"):
        load_scenario(path)


def test_cli_out_dir_env(tmp_path, short_scenario, monkeypatch):
    monkeypatch.setenv("MORPHQUAD_OUT_DIR", str(tmp_path / "outputs"))
    code = main(["run", short_scenario])
    assert code == 0
    assert (tmp_path / "outputs" / "cli_unit_telemetry.csv").exists()
    assert (tmp_path / "outputs" / "cli_unit_summary.json").exists()
