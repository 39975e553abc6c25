import json

import numpy as np
import pytest

from barrier_scatter.cli import main


def _write_config(path, payload):
    path.write_text(json.dumps(payload))
    return str(path)


BASE = {
    "potential": {"kind": "anisotropic-gaussian", "n": 2, "E0": 1.0,
                  "Q": [[1.0, 0.0], [0.0, 4.0]]},
    "omega": [1.0, 0.0],
}


def test_unknown_config_key_is_rejected(tmp_path):
    cfg = _write_config(tmp_path / "c.json", {**BASE, "bogus": 1})
    with pytest.raises(SystemExit):
        main(["trajectory", "--config", cfg, "--out", str(tmp_path)])


def test_invalid_json_is_rejected(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("{not json")
    with pytest.raises(SystemExit):
        main(["trajectory", "--config", str(p), "--out", str(tmp_path)])


def test_missing_potential_is_rejected(tmp_path):
    cfg = _write_config(tmp_path / "c.json", {"omega": [1.0, 0.0]})
    with pytest.raises(SystemExit):
        main(["quasimode", "--config", cfg, "--out", str(tmp_path)])


def test_trajectory_run_writes_full_precision_csv(tmp_path):
    cfg = _write_config(tmp_path / "c.json", {
        **BASE, "theta": [np.cos(0.4), np.sin(0.4)], "energy": 1.3,
    })
    out = tmp_path / "out"
    code = main(["trajectory", "--config", cfg, "--out", str(out)])
    assert code == 0
    lines = (out / "trajectory.csv").read_text().strip().splitlines()
    header = lines[0].split(",")
    assert header[:2] == ["z0", "theta0"]
    assert len(lines) >= 2
    for line in lines[1:]:
        vals = line.split(",")
        # 17 significant digits survive a float round trip exactly
        for v in vals[:4]:
            assert "%.17g" % float(v) == v
    report = json.loads((out / "run_report.json").read_text())
    assert report["status"] == "ok"
    assert report["command"] == "trajectory"


def test_quasimode_run_writes_ratio_table(tmp_path):
    cfg = _write_config(tmp_path / "c.json", {
        **BASE, "quasimode": {"lambdas": [1.0], "h_grid": [1e-3, 1e-2]},
    })
    out = tmp_path / "out"
    assert main(["quasimode", "--config", cfg, "--out", str(out)]) == 0
    lines = (out / "quasimode.csv").read_text().strip().splitlines()
    assert lines[0].split(",")[0] == "h"
    assert len(lines) == 3


def test_asymptotics_run_reports_small_errors(tmp_path):
    cfg = _write_config(tmp_path / "c.json", {
        **BASE,
        "asymptotics": {"alphas": [1.0], "betas": [0],
                        "lam_grid": [1e3, 1e4]},
    })
    out = tmp_path / "out"
    assert main(["verify-asymptotics", "--config", cfg, "--out", str(out)]) == 0
    report = json.loads((out / "run_report.json").read_text())
    assert report["all_small"] is True


def test_cross_section_run(tmp_path):
    cfg = _write_config(tmp_path / "c.json", {
        "potential": {"kind": "gaussian", "n": 2, "E0": 1.0, "q": 1.0},
        "omega": [1.0, 0.0],
        "h_grid": [0.2],
    })
    out = tmp_path / "out"
    assert main(["cross-section", "--config", cfg, "--out", str(out)]) == 0
    lines = (out / "cross_section.csv").read_text().strip().splitlines()
    assert len(lines) == 2
    assert float(lines[1].split(",")[1]) > 0.0


def test_failed_task_reports_reason_and_nonzero_exit(tmp_path):
    # cross-section is only implemented transverse to 2 or 3 dimensions
    cfg = _write_config(tmp_path / "c.json", {
        "potential": {"kind": "gaussian", "n": 1, "E0": 1.0, "q": 1.0},
        "omega": [1.0],
        "h_grid": [0.2],
    })
    out = tmp_path / "out"
    assert main(["cross-section", "--config", cfg, "--out", str(out)]) == 1
    report = json.loads((out / "run_report.json").read_text())
    assert report["status"] == "failed"
    assert "reason" in report
