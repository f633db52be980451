import csv
import json

import numpy as np
import pytest

from gaussflow.cli import EXIT_CONFIG, EXIT_OK, EXIT_PHYSICS, main
from gaussflow.config import ConfigError, apply_override, load_config


def write_cfg(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc, indent=2) + "\n" if not isinstance(doc, str) else doc)
    return p


SPHERE = {
    "shape": {"kind": "sphere", "radius": 1.0},
    "grid": {"mode": "axisymmetric", "N": 32},
    "speed": {"kind": "power", "alpha": 1.0},
    "flow": {"t_max": 0.3},
    "monitors": {"record_stride": 200},
}


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_run_sphere(tmp_path):
    cfg = write_cfg(tmp_path, SPHERE)
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    rows = read_csv(out / "series.csv")
    assert float(rows[-1]["t"]) == 0.3
    assert float(rows[-1]["r_in"]) == pytest.approx(0.1 ** (1 / 3), abs=1e-4)
    report = json.loads((out / "report.json").read_text())
    assert report["status"] == "completed"
    assert report["config"]["grid"]["N"] == 32
    assert report["config"]["flow"]["c_cfl"] == 0.2  # defaults are resolved into the report
    assert all(v["passed"] for v in report["verdicts"].values())
    assert (out / "final_state.obj").read_text().startswith("v ")


def test_run_is_bitwise_reproducible(tmp_path):
    cfg = write_cfg(tmp_path, dict(SPHERE, shape={"kind": "ellipsoid", "a": 1.0, "c": 1.2}, flow={"t_max": 0.02}))
    for d in ("a", "b"):
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path / d)]) == EXIT_OK
    for name in ("series.csv", "report.json", "final_state.obj"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_set_override(tmp_path):
    cfg = write_cfg(tmp_path, SPHERE)
    out = tmp_path / "o"
    assert main(["run", "--config", str(cfg), "--out", str(out), "--set", "flow.t_max=0.05",
                 "--set", "output.write_obj=false"]) == EXIT_OK
    assert float(read_csv(out / "series.csv")[-1]["t"]) == 0.05
    assert not (out / "final_state.obj").exists()


def test_check_speed_reports_failure(tmp_path):
    cfg = write_cfg(tmp_path, {"speed": {"kind": "power", "alpha": 0.5}})
    assert main(["check-speed", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_OK
    rep = json.loads((tmp_path / "o" / "condition_report.json").read_text())
    assert rep["verdicts"]["ii"] == "fail"
    assert rep["constants"]["alpha2"] is None


def test_check_speed_log_power(tmp_path):
    cfg = write_cfg(tmp_path, {"speed": {"kind": "log_power", "n": 2, "K0": float(np.e**2),
                                         "check": {"K_range": [1, 100], "gamma": 2 / 3}}})
    assert main(["check-speed", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_OK
    rep = json.loads((tmp_path / "o" / "condition_report.json").read_text())
    assert rep["verdicts"] == {k: "pass" for k in ("i", "ii", "iii", "iv", "v")}
    assert rep["config"]["speed"]["K0"] == pytest.approx(np.e**2)


def test_missing_config_creates_nothing(tmp_path, capsys):
    out = tmp_path / "never"
    assert main(["run", "--config", str(tmp_path / "nope.json"), "--out", str(out)]) == EXIT_CONFIG
    assert not out.exists()
    assert "cannot read config" in capsys.readouterr().err


def test_unknown_key_reports_line(tmp_path, capsys):
    text = '{\n  "grid": {"mode": "axisymmetric"},\n  "flow": {\n    "tmax": 1.0\n  }\n}\n'
    cfg = write_cfg(tmp_path, text)
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    err = capsys.readouterr().err
    assert f"{cfg}:4" in err and "flow.tmax" in err
    assert not (tmp_path / "o").exists()


def test_invalid_json(tmp_path, capsys):
    cfg = write_cfg(tmp_path, '{"grid": {"N": 32,}}')
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert "invalid JSON" in capsys.readouterr().err


@pytest.mark.parametrize(
    "doc",
    [
        {"shape": {"kind": "ellipsoid"}},
        {"shape": {"kind": "cube"}},
        {"grid": {"N": 4}},
        {"grid": {"mode": "icosahedral"}},
        {"grid": {"N": 32.5}},
        {"flow": {"c_cfl": 2.0}},
        {"flow": {"scheme": "rk4"}},
        {"monitors": {"sigmas": [-1]}},
        {"speed": {"kind": "exp"}},
        {"bogus": {}},
    ],
)
def test_invalid_configs_exit_2(tmp_path, doc):
    cfg = write_cfg(tmp_path, doc)
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert not (tmp_path / "o").exists()


def test_bad_override(tmp_path):
    cfg = write_cfg(tmp_path, SPHERE)
    for bad in ("flow.tmax=1", "flow.t_max", "flow.t_max=abc", "t_max=1"):
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o"), "--set", bad]) == EXIT_CONFIG


def test_apply_override_parsing():
    cfg = {"flow": {}}
    apply_override(cfg, "flow.scheme=euler")
    apply_override(cfg, "flow.t_max=0.5")
    assert cfg["flow"] == {"scheme": "euler", "t_max": 0.5}
    with pytest.raises(ConfigError):
        apply_override(cfg, "speed.check.K_range=1")


def test_kind_change_drops_default_keys(tmp_path):
    cfg = load_config(write_cfg(tmp_path, {"shape": {"kind": "ellipsoid", "a": 1, "c": 2}}))
    assert "radius" not in cfg["shape"]


def test_convexity_loss_exit_1(tmp_path, capsys):
    vals = [1.0] * 32
    vals[6] = 1.6
    cfg = write_cfg(tmp_path, dict(SPHERE, shape={"kind": "custom", "values": vals}))
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_PHYSICS
    assert "convexity lost" in capsys.readouterr().err


def test_theta_scan(tmp_path):
    doc = dict(SPHERE, flow={"t_max": 0.5, "r_min": 0.3, "theta_values": [0.5, 1.0, 2.0]}, grid={"N": 16})
    cfg = write_cfg(tmp_path, doc)
    assert main(["theta-scan", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_OK
    rows = read_csv(tmp_path / "o" / "scan.csv")
    assert [float(r["theta"]) for r in rows] == [0.5, 1.0, 2.0]
    assert rows[0]["status"] == "extinct" and rows[0]["censored"] == "false"
    assert rows[2]["censored"] == "true" and rows[2]["extinction_time"] == ""
    bad = write_cfg(tmp_path, dict(doc, flow={"theta_values": [1.0, 0.5]}), "bad.json")
    assert main(["theta-scan", "--config", str(bad), "--out", str(tmp_path / "b")]) == EXIT_CONFIG


def test_convergence_test(tmp_path):
    doc = {"shape": {"kind": "ellipsoid", "a": 1.0, "c": 2.0}, "grid": {"refine": [32, 64, 128]}}
    cfg = write_cfg(tmp_path, doc)
    assert main(["convergence-test", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_OK
    rows = read_csv(tmp_path / "o" / "convergence.csv")
    assert [int(r["N"]) for r in rows] == [32, 64, 128]
    assert rows[0]["order"] == ""
    assert all(float(r["order"]) > 1.9 for r in rows[1:])
    errs = [float(r["max_rel_err_K"]) for r in rows]
    assert errs == sorted(errs, reverse=True)
    sph = write_cfg(tmp_path, SPHERE, "s.json")
    assert main(["convergence-test", "--config", str(sph), "--out", str(tmp_path / "s")]) == EXIT_CONFIG


@pytest.mark.parametrize("name", ["sphere", "ellipsoid_log_power", "check_log_power", "theta_scan", "convergence"])
def test_shipped_configs_load(name):
    from pathlib import Path

    cfg = load_config(Path(__file__).parent.parent / "configs" / f"{name}.json")
    assert cfg["grid"]["N"] >= 8
