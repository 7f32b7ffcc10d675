"""Command-line interface: output shapes, frozen values, exit codes, config."""
from __future__ import annotations

import json
import math
import subprocess
import sys

import pytest

from sl2flow import MetricDiag, curvature_report
from sl2flow.cli import main


def run_cli(argv, capsys):
    try:
        rc = main(argv)
    except SystemExit as exc:  # argparse-level failures
        rc = exc.code
    out, err = capsys.readouterr()
    return (0 if rc is None else rc), out, err


def test_curvature_json_default(capsys):
    rc, out, _ = run_cli(["curvature", "--metric", "1,2,1"], capsys)
    assert rc == 0
    assert json.loads(out) == {
        "k1": -4.0, "k2": -4.0, "k3": 4.0,
        "F1": -8.0, "F2": -8.0, "F3": 8.0,
        "ric1": 0.0, "ric2": 0.0, "ric3": -8.0,
        "h1": -16.0, "h2": -16.0, "h3": 16.0,
        "scalar": -8.0,
    }


def test_curvature_csv_round_trips(capsys):
    rc, out, _ = run_cli(["curvature", "--metric", "1,2,0.3", "--format", "csv"], capsys)
    assert rc == 0
    header, row = out.strip().splitlines()
    rep = curvature_report(MetricDiag(1.0, 2.0, 0.3))
    expected = {
        "k1": rep.k1, "k2": rep.k2, "k3": rep.k3,
        "F1": rep.F1, "F2": rep.F2, "F3": rep.F3,
        "ric1": rep.ricci[0], "ric2": rep.ricci[1], "ric3": rep.ricci[2],
        "h1": rep.cross[0], "h2": rep.cross[1], "h3": rep.cross[2],
        "scalar": rep.scalar,
    }
    for name, tok in zip(header.split(","), row.split(",")):
        assert float(tok) == expected[name]


def test_integrate_csv_shape(capsys):
    rc, out, _ = run_cli(["integrate", "--metric", "1,2,1"], capsys)
    assert rc == 0
    lines = out.strip().splitlines()
    assert lines[0] == "t,A,B,C"
    assert lines[1] == "0,1,2,1"
    assert lines[-1] == "# termination=TimeReached"
    assert float(lines[-2].split(",")[0]) == 10.0  # default time span


def test_integrate_json_keys(capsys):
    rc, out, _ = run_cli(["integrate", "--metric", "1,2,1", "--t-end", "1.0",
                          "--format", "json"], capsys)
    assert rc == 0
    data = json.loads(out)
    assert set(data) == {"times", "states", "termination"}
    assert data["termination"] == "TimeReached"
    assert data["states"][0] == [1.0, 2.0, 1.0]
    assert data["times"][-1] == 1.0


def test_integrate_volume_chart(capsys):
    rc, out, _ = run_cli(["integrate", "--metric", "1,2,1", "--volume-chart"], capsys)
    assert rc == 0
    assert out.strip().splitlines()[-1] == "# termination=TimeReached"


def test_volume_chart_rejects_xcf(capsys):
    rc, _, _ = run_cli(["integrate", "--flow", "xcf", "--metric", "1,2,1",
                        "--volume-chart"], capsys)
    assert rc == 2


def test_classify_json(capsys):
    rc, out, _ = run_cli(["classify", "--metric", "3,2,1"], capsys)
    assert rc == 0
    data = json.loads(out)
    assert data["label"] == "Q1"
    assert data["trigger"] == "A - B held at s = 0"
    assert data["termination"] == "StepUnderflow"
    assert data["swapped_bc"] is False
    assert abs(data["Tb_estimate"] - 0.03328129142399429) <= 1e-6
    assert abs(data["exponents"][0][0] + 0.5) <= 0.01


def test_classify_no_fit(capsys):
    rc, out, _ = run_cli(["classify", "--metric", "3,2,1", "--no-fit"], capsys)
    assert rc == 0
    data = json.loads(out)
    assert data["label"] == "Q1"
    assert data["termination"] == "NotIntegrated"
    assert data["Tb_estimate"] is None and data["exponents"] is None


def test_separatrix_csv(capsys):
    rc, out, _ = run_cli(["separatrix"], capsys)
    assert rc == 0
    lines = out.strip().splitlines()
    assert lines[0] == "x,y"
    assert lines[1] == "1,0"


def test_separatrix_json(capsys):
    rc, out, _ = run_cli(["separatrix", "--flow", "xcf", "--format", "json"], capsys)
    assert rc == 0
    data = json.loads(out)
    assert set(data) == {"chart", "parameter_range", "samples", "tangent_at_saddle"}
    assert data["chart"] == "xcf_ac"
    assert data["samples"][0] == [0.0, 1.0]
    assert data["tangent_at_saddle"] == [0.0, -1.0]


def test_portrait_line_ids(capsys):
    rc, out, _ = run_cli(["portrait", "--nx", "3", "--ny", "3"], capsys)
    assert rc == 0
    lines = out.strip().splitlines()
    assert lines[0] == "line_id,x,y"
    ids = {int(row.split(",")[0]) for row in lines[1:]}
    # separatrix (0) plus one orbit per in-domain grid seed
    assert ids == set(range(7))
    first = lines[1].split(",")
    assert (float(first[1]), float(first[2])) == (1.0, 0.0)


def test_blowup_report(capsys):
    rc, out, _ = run_cli(["blowup-report"], capsys)
    assert rc == 0
    data = json.loads(out)
    assert set(data) == {"axis_check", "circle_equilibria"}
    eqs = data["circle_equilibria"]
    assert len(eqs) == 8
    assert abs(eqs[0]["theta"] + 2.186276035465284) <= 1e-12
    assert abs(eqs[0]["radial_rate"] + 4.0 / 3.0) <= 1e-12
    assert abs(eqs[0]["angular_rate"] - 16.0 / 3.0) <= 1e-12
    assert eqs[0]["kind"] == "SaddleStableIn"
    assert data["axis_check"]["conclusion"] == "non-approach confirmed"
    assert data["axis_check"]["start"] == {"theta0": 0.5, "r0": 0.1}


def test_blowup_report_custom_start(capsys):
    rc, out, _ = run_cli(["blowup-report", "--theta0", "0.3", "--r0", "0.2"], capsys)
    assert rc == 0
    data = json.loads(out)
    assert data["axis_check"]["start"] == {"theta0": 0.3, "r0": 0.2}


def test_exponents(capsys):
    rc, out, _ = run_cli(["exponents", "--metric", "3,2,1"], capsys)
    assert rc == 0
    data = json.loads(out)
    assert data["termination"] == "StepUnderflow"
    for got, want in zip(data["exponents"], (-0.5, 0.25, 0.25)):
        assert abs(got - want) <= 0.02
    assert abs(data["etas"][0] - math.sqrt(3.0 / 8.0)) <= 0.02
    assert data["n_window"] > 500
    assert abs(data["Tb"] - 0.03328129142399429) <= 1e-6


@pytest.mark.parametrize(
    "argv, code",
    [
        (["curvature", "--metric", "1,2,-1"], 2),
        (["integrate", "--flow", "xcf", "--metric", "1,2,1", "--volume-chart"], 2),
        (["curvature", "--metric", "1,2,1", "--config", "/nonexistent/cfg.json"], 2),
        (["exponents", "--metric", "1e150,2,1"], 3),
    ],
)
def test_exit_codes(argv, code, capsys):
    rc, _, _ = run_cli(argv, capsys)
    assert rc == code


def test_non_dict_config_rejected(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text("[1, 2]")
    rc, _, _ = run_cli(["curvature", "--metric", "1,2,1", "--config", str(cfg)], capsys)
    assert rc == 2


def test_out_writes_file(tmp_path, capsys):
    target = tmp_path / "report.json"
    rc, out, _ = run_cli(["curvature", "--metric", "1,2,1", "--out", str(target)], capsys)
    assert rc == 0
    assert out == ""
    assert json.loads(target.read_text())["scalar"] == -8.0


def test_config_defaults_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"t_end": 3.0}))
    rc, out, _ = run_cli(["integrate", "--metric", "1,2,1", "--config", str(cfg)], capsys)
    assert rc == 0
    assert float(out.strip().splitlines()[-2].split(",")[0]) == 3.0
    rc, out, _ = run_cli(["integrate", "--metric", "1,2,1", "--config", str(cfg),
                          "--t-end", "1.0"], capsys)
    assert rc == 0
    assert float(out.strip().splitlines()[-2].split(",")[0]) == 1.0


def test_output_is_byte_stable(capsys):
    argv = ["integrate", "--metric", "1,2,1", "--t-end", "2.0"]
    _, first, _ = run_cli(argv, capsys)
    _, second, _ = run_cli(argv, capsys)
    assert first == second


def _run_subprocess(argv, env=None):
    import os

    full_env = dict(os.environ)
    if env:
        full_env.update(env)
    return subprocess.run(
        [sys.executable, "-c",
         "import sys; from sl2flow.cli import main; sys.exit(main(sys.argv[1:]))",
         *argv],
        capture_output=True, text=True, env=full_env,
    )


def test_numerical_failure_message_on_stderr():
    proc = _run_subprocess(["exponents", "--metric", "1e150,2,1"])
    assert proc.returncode == 3
    assert "numerical failure" in proc.stderr


def test_unknown_log_level_warns():
    proc = _run_subprocess(["curvature", "--metric", "1,2,1"],
                           env={"GEOMFLOW_LOG": "bogus"})
    assert proc.returncode == 0
    assert "unknown GEOMFLOW_LOG value" in proc.stderr
