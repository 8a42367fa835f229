import json
import os

import pytest

from pencil_lab.cli import main

BD_KEYS = {"1,2": "0.2", "2,1": "0.1*R1", "3,1": "0.15",
           "1,3": "0.1+0.05*R3", "2,3": "0.2", "3,2": "0.25"}


def _write(tmp_path, name, cfg):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def _cfg_ham():
    return {"chart": {"n": 2, "box": [[0.0, 1.0], [0.0, 1.0]],
                      "shape": [9, 9]},
            "metric": {"diag": ["1+R1^2", "3+R2^2"]}}


def _cfg_compat(tilde):
    return {"chart": {"n": 2, "box": [[0.5, 1.5], [0.5, 1.5]],
                      "shape": [9, 9]},
            "metric": {"diag": ["1", "1"]},
            "metric_tilde": {"diag": tilde},
            "lambdas": [0.0, 0.75, 1.5]}


def _cfg_diag(extra=None):
    cfg = {"chart": {"n": 3, "box": [[0.0, 1.0]] * 3, "shape": [17] * 3},
           "etas": ["1", "2", "4"],
           "beta_boundary": dict(BD_KEYS)}
    if extra:
        cfg.update(extra)
    return cfg


def _cfg_surface():
    return {"chart": {"n": 2, "box": [[0.5, 1.5], [0.0, 1.0]],
                      "shape": [33, 33]},
            "surface": {"g11": "1", "g22": "R1^2", "eta1": "5-R1^2",
                        "eta2": "1+R2^2", "k1_line": "2+2*R1",
                        "k2_line": "2.5"},
            "lambdas": [0.0, 1.0]}


def _report(out):
    with open(os.path.join(out, "report.json")) as fh:
        return json.load(fh)


def test_check_hamiltonian_passes(tmp_path, capsys):
    cfg = _write(tmp_path, "c.json", _cfg_ham())
    out = str(tmp_path / "out")
    assert main(["check-hamiltonian", "--config", cfg, "--out", out]) == 0
    assert capsys.readouterr().out.strip() == "check-hamiltonian: pass"
    rep = _report(out)
    assert rep["verdict"] == "pass"
    assert set(rep["residuals"]) == {"J1", "J2"}


def test_check_compat_pass_and_fail(tmp_path):
    ok = _write(tmp_path, "ok.json", _cfg_compat(["1+R1^2", "3+R2^2"]))
    out = str(tmp_path / "ok_out")
    assert main(["check-compat", "--config", ok, "--out", out]) == 0
    rep = _report(out)
    assert rep["lambdas_used"] == [0.0, 0.75, 1.5]
    assert rep["lambdas_skipped"] == []

    bad = _write(tmp_path, "bad.json", _cfg_compat(["R2", "R1"]))
    out2 = str(tmp_path / "bad_out")
    assert main(["check-compat", "--config", bad, "--out", out2]) == 1
    rep2 = _report(out2)
    assert rep2["residuals"]["nijenhuis"]["verdict"] == "fail"


def test_lambda_override(tmp_path):
    ok = _write(tmp_path, "ok.json", _cfg_compat(["1+R1^2", "3+R2^2"]))
    out = str(tmp_path / "out")
    assert main(["check-compat", "--config", ok, "--out", out,
                 "--lambda", "0.25,1.25"]) == 0
    assert _report(out)["lambdas_used"] == [0.25, 1.25]


def test_solve_diagonal_outputs(tmp_path):
    cfg = _write(tmp_path, "d.json", _cfg_diag())
    out = str(tmp_path / "out")
    assert main(["solve-diagonal", "--config", cfg, "--out", out]) == 0
    rep = _report(out)
    assert {"F1", "F2", "F3", "P_drift"} <= set(rep["residuals"])
    assert rep["egorov"] is False
    assert "beta.csv" in rep["artifacts"]
    header = open(os.path.join(out, "beta.csv")).readline()
    assert rep["config_digest"] in header


def test_solve_diagonal_angle_system_inconclusive_then_pass(tmp_path):
    cfg = _write(tmp_path, "d.json", _cfg_diag(
        {"s2": {"seed": ["1.5707963267948966", "0", "0"]}}))
    out = str(tmp_path / "coarse")
    # second differences of the marched potential at h = 1/16 land between
    # the verdict bands
    assert main(["solve-diagonal", "--config", cfg, "--out", out]) == 2
    out2 = str(tmp_path / "fine")
    assert main(["solve-diagonal", "--config", cfg, "--out", out2,
                 "--grid", "33"]) == 0
    rep = _report(out2)
    assert "angles.csv" in rep["artifacts"]


def test_frame_command(tmp_path):
    cfg = _write(tmp_path, "f.json", _cfg_diag({"lambdas": [0.5, 2.0]}))
    out = str(tmp_path / "out")
    assert main(["frame", "--config", cfg, "--out", out]) == 0
    rep = _report(out)
    for lam in ("0.5", "2"):
        assert f"zero_curvature_{lam}" in rep["residuals"]
        assert f"slice_lambda_{lam}.obj" in rep["artifacts"]
    assert "scaling_closed_form" in rep["residuals"]
    assert "lame.csv" in rep["artifacts"]
    obj = open(os.path.join(out, "slice_lambda_0.5.obj")).read()
    assert "v " in obj and "vn " in obj and "f " in obj


def test_frame_respects_thread_env(tmp_path, monkeypatch):
    monkeypatch.setenv("PENCIL_LAB_THREADS", "2")
    cfg = _write(tmp_path, "f.json", _cfg_diag({"lambdas": [0.5, 2.0]}))
    out = str(tmp_path / "out")
    assert main(["frame", "--config", cfg, "--out", out]) == 0


def test_frame_pole_is_config_error(tmp_path):
    cfg = _write(tmp_path, "f.json", _cfg_diag({"lambdas": [0.5]}))
    assert main(["frame", "--config", cfg, "--out", str(tmp_path / "o"),
                 "--lambda=-10"]) == 3


def test_deform_surface_full_chain(tmp_path):
    cfg = _write(tmp_path, "s.json", _cfg_surface())
    out = str(tmp_path / "out")
    assert main(["deform-surface", "--config", cfg, "--out", out]) == 0
    rep = _report(out)
    res = rep["residuals"]
    assert res["curvature_one_0"]["verdict"] == "pass"
    assert res["curvature_one_1"]["verdict"] == "pass"
    assert res["weingarten_eigenvalues"]["verdict"] == "pass"
    assert res["weingarten_directions"]["verdict"] == "pass"
    assert res["deformation_size"]["verdict"] == "pass"
    assert "surface_lambda_0.obj" in rep["artifacts"]
    assert "surface_lambda_1.obj" in rep["artifacts"]
    assert rep["excluded_vertices"] == [0, 0]


def test_deform_surface_negative_control(tmp_path):
    cfg_dict = _cfg_surface()
    cfg_dict["surface"]["eta1"] = "5-R1^2+3*R2^2"
    cfg = _write(tmp_path, "s.json", cfg_dict)
    out = str(tmp_path / "out")
    assert main(["deform-surface", "--config", cfg, "--out", out]) == 1
    rep = _report(out)
    assert rep["residuals"]["curvature_one_0"]["verdict"] == "fail"
    assert any("eta1" in n for n in rep["notes"])


def test_missing_config_file(tmp_path):
    assert main(["check-hamiltonian", "--config",
                 str(tmp_path / "absent.json")]) == 3


def test_malformed_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert main(["check-hamiltonian", "--config", str(path)]) == 3


def test_bad_expression_is_config_error(tmp_path):
    cfg_dict = _cfg_ham()
    cfg_dict["metric"]["diag"][0] = "1+*R1"
    cfg = _write(tmp_path, "c.json", cfg_dict)
    assert main(["check-hamiltonian", "--config", cfg,
                 "--out", str(tmp_path / "o")]) == 3


def test_small_grid_is_config_error(tmp_path):
    cfg = _write(tmp_path, "c.json", _cfg_ham())
    assert main(["check-hamiltonian", "--config", cfg,
                 "--out", str(tmp_path / "o"), "--grid", "3"]) == 3


def test_missing_surface_key_is_config_error(tmp_path):
    cfg_dict = _cfg_surface()
    del cfg_dict["surface"]["k1_line"]
    cfg = _write(tmp_path, "s.json", cfg_dict)
    assert main(["deform-surface", "--config", cfg,
                 "--out", str(tmp_path / "o")]) == 3


def test_outputs_are_deterministic(tmp_path):
    cfg = _write(tmp_path, "d.json", _cfg_diag())
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    assert main(["solve-diagonal", "--config", cfg, "--out", str(out_a)]) == 0
    assert main(["solve-diagonal", "--config", cfg, "--out", str(out_b)]) == 0
    for name in ("report.json", "beta.csv"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()
