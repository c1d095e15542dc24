import json

import numpy as np
import pytest

import helifil.cli as cli
from helifil import build_robot_mesh, config_hash, default_config, load_config
from helifil.config import robot_spec_from_config, validate_config
from helifil.output import write_json_atomic


def write_cfg(tmp_path, raw, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(raw) + "\n")
    return str(path)


TINY_ROBOT = {"robot": {"sections": [
    {"handedness": "right", "R": 0.06, "lambda": 0.2, "r": 0.015,
     "n_windings": 2}]},
    "filament": None,
    "numerics": {"t_end": 0.02, "dt": 0.001, "output_dt": 0.01},
    "output": {"plots": False}}


def test_print_defaults(capsys):
    assert cli.main(["--print-defaults"]) == 0
    out = capsys.readouterr().out
    assert json.loads(out) == default_config()


def test_no_command_exits_2(capsys):
    assert cli.main([]) == 2


def test_missing_config_source(capsys):
    assert cli.main(["simulate"]) == 2
    err = capsys.readouterr().err.strip().splitlines()[-1]
    obj = json.loads(err)
    assert obj["error"] == "config"
    assert any("--config" in m for m in obj["messages"])


def test_invalid_config_reports_messages(tmp_path, capsys):
    path = write_cfg(tmp_path, {"robot": {}, "numerics": {"t_end": "x"}})
    assert cli.main(["simulate", "--config", path]) == 2
    obj = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert obj["error"] == "config"
    assert any("numerics.t_end" in m for m in obj["messages"])


def test_unknown_seed_scenario_rejected(capsys):
    with pytest.raises(SystemExit):
        cli.main(["simulate", "--seed-scenario", "fig99"])


def test_runtime_failure_exit_3(tmp_path, capsys):
    cfg = {"robot": TINY_ROBOT["robot"], "filament": None,
           "pathline": {"omega": 10.0, "duration": 0.01, "dt": 0.005,
                        "seed": None},
           "output": {"plots": False}}
    mesh = build_robot_mesh(robot_spec_from_config(validate_config(cfg)))
    cfg["pathline"]["seed"] = [float(v) for v in mesh.nodes[0]]
    path = write_cfg(tmp_path, cfg)
    out = tmp_path / "out"
    assert cli.main(["pathline", "--config", path, "--out", str(out)]) == 3
    obj = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert obj["error"] == "runtime"
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "failed"
    assert manifest["failure_reason"]


def test_simulate_writes_outputs(tmp_path):
    path = write_cfg(tmp_path, TINY_ROBOT)
    out = tmp_path / "run1"
    assert cli.main(["simulate", "--config", path, "--out", str(out)]) == 0
    rows = (out / "timeseries.csv").read_text().splitlines()
    assert rows[0].split(",")[0] == "t"
    assert len(rows) == 4
    assert float(rows[-1].split(",")[0]) == 0.02
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "ok"
    assert manifest["command"] == "simulate"
    assert manifest["config_hash"] == config_hash(load_config(path))
    assert "V_z" in manifest["summary"]
    assert manifest["summary"]["stepped_out"] is False
    # identical reruns give byte-identical data files
    out2 = tmp_path / "run2"
    assert cli.main(["simulate", "--config", path, "--out", str(out2)]) == 0
    assert ((out2 / "timeseries.csv").read_bytes()
            == (out / "timeseries.csv").read_bytes())


def test_simulate_plot_flag(tmp_path):
    path = write_cfg(tmp_path, TINY_ROBOT)
    out = tmp_path / "plots"
    assert cli.main(["simulate", "--config", path, "--out", str(out),
                     "--plot"]) == 0
    # no filament, so no relative-displacement plot
    assert not (out / "delta-z.svg").exists()
    assert (out / "z-top.svg").exists()


@pytest.mark.filterwarnings("ignore::UserWarning")
def test_pathline_run(tmp_path):
    # run too short for the tracer to clear the bottom quarter plane, so the
    # confinement diameter comes back NaN with a warning; the command still
    # succeeds and reports the pathline itself
    cfg = {"robot": TINY_ROBOT["robot"], "filament": None,
           "pathline": {"omega": 25.0, "duration": 0.5, "dt": 0.002,
                        "seed": None},
           "output": {"plots": True}}
    path = write_cfg(tmp_path, cfg)
    out = tmp_path / "out"
    assert cli.main(["pathline", "--config", path, "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["summary"]["omega"] == 25.0
    assert (out / "pathline.csv").exists()
    assert (out / "pathline.svg").exists()


def test_flowfield_run(tmp_path):
    cfg = {"robot": TINY_ROBOT["robot"], "filament": None,
           "flowfield": {"x_offsets": [0.0, 0.1], "z_margin": 0.1,
                         "n_samples": 11},
           "output": {"plots": False}}
    path = write_cfg(tmp_path, cfg)
    out = tmp_path / "out"
    assert cli.main(["flowfield", "--config", path, "--out", str(out)]) == 0
    rows = (out / "profiles.csv").read_text().splitlines()
    assert rows[0] == "frame,x_offset,z,u_z,valid"
    assert len(rows) == 1 + 2 * 2 * 11
    manifest = json.loads((out / "manifest.json").read_text())
    assert "mean_on_axis_u_z" in manifest["summary"]
    assert manifest["summary"]["omega_z"] == pytest.approx(8.0 * np.pi)


def test_coeffs_run(tmp_path):
    cfg = {"robot": TINY_ROBOT["robot"], "filament": None,
           "coeffs": {"n_windings": 3.0},
           "output": {"plots": False}}
    path = write_cfg(tmp_path, cfg)
    out = tmp_path / "out"
    assert cli.main(["coeffs", "--config", path, "--out", str(out)]) == 0
    rows = (out / "coeffs.csv").read_text().splitlines()
    assert len(rows) == 2
    manifest = json.loads((out / "manifest.json").read_text())
    s = manifest["summary"]
    assert 0.0 < s["alpha"] < 1.0
    assert s["beta"] < 0.0
    assert np.isfinite(s["eta_star"])


def test_etamap_run(tmp_path):
    cfg = {"robot": TINY_ROBOT["robot"], "filament": None,
           "etamap": {"r_over_R": [0.3], "lambda_over_R": [0.1, 2.0],
                      "n_windings": 3.0},
           "output": {"plots": True}}
    path = write_cfg(tmp_path, cfg)
    out = tmp_path / "out"
    assert cli.main(["etamap", "--config", path, "--out", str(out)]) == 0
    rows = (out / "etamap.csv").read_text().splitlines()
    assert len(rows) == 3
    assert (out / "eta-star-map.svg").exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["summary"]["n_cells"] == 2
    assert manifest["summary"]["n_valid"] == 1
    assert manifest["summary"]["invalid_notes"]


def test_sweep_runs_and_fits(tmp_path, monkeypatch):
    class FakeResult:
        def __init__(self, dz):
            self.series = {"delta_z": np.array([0.0, dz])}

    def fake_run(scenario):
        lam = scenario.robot.sections[0].lam
        return FakeResult(2.0 * lam - 0.5)

    monkeypatch.setattr(cli, "run_transport", fake_run)
    cfg = {"robot": TINY_ROBOT["robot"], "filament": None,
           "sweep": {"parameter": "lambda", "values": [0.2, 0.25, 0.3]},
           "output": {"plots": True}}
    path = write_cfg(tmp_path, cfg)
    out = tmp_path / "out"
    assert cli.main(["sweep", "--config", path, "--out", str(out)]) == 0
    rows = (out / "sweep.csv").read_text().splitlines()
    assert rows[0] == "lambda,delta_z_t_end"
    assert len(rows) == 4
    assert (out / "sweep.svg").exists()
    manifest = json.loads((out / "manifest.json").read_text())
    s = manifest["summary"]
    assert s["slope"] == pytest.approx(2.0, abs=1e-12)
    assert s["zero_crossing"] == pytest.approx(0.25, abs=1e-12)
    # thread pool preserves value order
    out2 = tmp_path / "out2"
    assert cli.main(["sweep", "--config", path, "--out", str(out2),
                     "--threads", "3"]) == 0
    assert ((out2 / "sweep.csv").read_bytes()
            == (out / "sweep.csv").read_bytes())


def test_sweep_without_block_fails(tmp_path, capsys):
    path = write_cfg(tmp_path, TINY_ROBOT)
    out = tmp_path / "out"
    assert cli.main(["sweep", "--config", path, "--out", str(out)]) == 2
    obj = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert obj["error"] == "config"
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "failed"


def test_manifest_helper_atomic(tmp_path):
    write_json_atomic(tmp_path / "x.json", {"k": 1})
    assert json.loads((tmp_path / "x.json").read_text()) == {"k": 1}
