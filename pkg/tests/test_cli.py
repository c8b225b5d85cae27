import json
import subprocess
import sys
from pathlib import Path

import pytest

from rkbs_mirror.cli import main
from rkbs_mirror.experiment import read_trace_csv

SMOKE = Path(__file__).resolve().parents[1] / "src" / "rkbs_mirror" / "configs" / "smoke.json"


def test_run_with_overrides(tmp_path, capsys):
    out = tmp_path / "o"
    code = main(["run", str(SMOKE), "--out", str(out), "--seed", "3", "--p", "1.5", "--eta", "0.5",
                 "--iters", "40", "--inverse", "alg1"])
    assert code == 0
    cfg = json.loads((out / "report.json").read_text())["config"]
    assert cfg["seed"] == 3 and cfg["p_values"] == [1.5] and cfg["eta"] == 0.5
    assert cfg["T"] == 40 and cfg["inverse"] == "alg1" and cfg["output_dir"] == str(out)
    assert read_trace_csv(out / "trace_p1.5.csv")[-1].iter == 40
    assert "p=1.5" in capsys.readouterr().out


def test_run_projected_mode(tmp_path):
    out = tmp_path / "o"
    assert main(["run", str(SMOKE), "--out", str(out), "--iters", "20", "--mode", "proj", "--radius", "1.0",
                 "--kernel", "gaussian"]) == 0
    cfg = json.loads((out / "report.json").read_text())["config"]
    assert (cfg["mode"], cfg["radius"], cfg["kernel"]) == ("proj", 1.0, "gaussian")


def test_run_regularized_mode(tmp_path):
    out = tmp_path / "o"
    assert main(["run", str(SMOKE), "--out", str(out), "--iters", "20", "--mode", "reg", "--lambda", "0.1"]) == 0
    assert json.loads((out / "report.json").read_text())["config"]["lam"] == 0.1


@pytest.mark.parametrize("argv", [
    ["run", "{cfg}", "--mode", "proj"],                # proj without radius
    ["run", "{cfg}", "--p", "0.5"],                    # p out of range
    ["run", "{cfg}", "--eta", "-1"],
    ["run", "{cfg}", "--mode", "sideways"],            # argparse choice error
    ["run", "{cfg}", "--p", "a,b"],
    ["frobnicate"],
])
def test_config_errors_exit_1(tmp_path, argv):
    argv = [a.format(cfg=SMOKE) for a in argv]
    with pytest.raises(SystemExit) as exc:
        sys.exit(main(argv + ["--out", str(tmp_path / "o")] if argv[0] == "run" else argv))
    assert exc.value.code == 1


def test_bad_json_exit_1(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"n_train": 10, "unknown_key": 2}')
    assert main(["run", str(bad)]) == 1


def test_numerical_failure_exit_2(tmp_path):
    assert main(["run", str(SMOKE), "--out", str(tmp_path / "o"), "--eta", "100", "--iters", "2000"]) == 2
    assert json.loads((tmp_path / "o" / "report.json").read_text())["ok"] is False


def test_io_error_exit_3(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["run", str(SMOKE), "--out", str(blocker / "sub"), "--iters", "5"]) == 3
    assert main(["run", str(tmp_path / "missing.json")]) == 3


def test_baseline_command(tmp_path, capsys):
    out = tmp_path / "b"
    assert main(["baseline", str(SMOKE), "--out", str(out)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert set(doc) == {"sigma2", "loss", "mse"}
    assert (out / "baseline_predictions.csv").exists()


def test_check_command(capsys):
    assert main(["check"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines and all(line.startswith("PASS") for line in lines)


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "rkbs_mirror", "run", str(SMOKE), "--out", str(tmp_path / "o"),
                           "--iters", "10"], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "o" / "convergence.svg").exists()
