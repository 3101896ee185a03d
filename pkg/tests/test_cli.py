import json
import math
import subprocess
import sys

import numpy as np
import pytest

from subweibull import constants as C
from subweibull.cli import main, parse_number


def _run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_constants_example(capsys):
    code, out, _ = _run(capsys, "constants", "--theta", "0.5")
    assert code == 0
    assert json.loads(out)["bundle"]["gamma"] == pytest.approx(1.78, abs=5e-3)


def test_norm_example(capsys):
    code, out, _ = _run(capsys, "norm", "--dist", "exponential:1", "--family", "phi", "--theta", "1")
    assert code == 0 and json.loads(out)["norm"]["value"] == pytest.approx(1.0, abs=1e-9)


def test_bound_example(capsys):
    code, out, _ = _run(capsys, "bound", "--theorem", "1b", "--theta", "2", "--norms", "1",
                        "--weights", "1", "--delta", "2/e")
    expected = 2 * math.e * C.big_c(2.0) * (1 + C.l_n(2.0, [1.0]))
    assert code == 0 and json.loads(out)["radius"] == pytest.approx(expected, rel=1e-9)


def test_floats_have_ten_significant_digits(capsys):
    _, out, _ = _run(capsys, "constants", "--theta", "0.5")
    assert '"gamma": 1.778300379' in out


def test_input_errors_exit_two(capsys, tmp_path):
    code, _, err = _run(capsys, "constants", "--theta", "-1")
    assert code == 2 and json.loads(err)["error"] == "input"
    code, _, err = _run(capsys, "estimate", "--file", str(tmp_path / "missing.csv"), "--theta", "1")
    assert code == 2 and "not found" in json.loads(err)["message"]
    bad = tmp_path / "bad.csv"
    bad.write_text("1.0\nabc\n")
    code, _, _ = _run(capsys, "estimate", "--file", str(bad), "--theta", "1")
    assert code == 2
    code, _, _ = _run(capsys, "no-such-verb")
    assert code == 2


def test_numeric_error_exit_three(capsys, tmp_path):
    f = tmp_path / "x.csv"
    f.write_text("\n".join(str(v) for v in np.linspace(0, 1, 5)) + "\n")
    # n = 5 is far below the sample-size requirement, so the radius bracket is negative
    code, _, err = _run(capsys, "robust-mean", "--file", str(f), "--beta", "2", "--epsilon", "0.01",
                        "--v-beta", "0.1")
    assert code == 3 and json.loads(err)["error"] == "numeric"


def test_ci_and_robust_mean(capsys, tmp_path):
    f = tmp_path / "x.csv"
    f.write_text("\n".join(f"{v:.6f}" for v in np.random.default_rng(0).exponential(size=3000)) + "\n")
    code, out, _ = _run(capsys, "ci", "--file", str(f), "--theta", "1", "--delta", "0.05",
                        "--method", "phi_theorem2")
    d = json.loads(out)
    assert code == 0 and d["lo"] < d["center"] < d["hi"]
    code, out, _ = _run(capsys, "robust-mean", "--file", str(f), "--beta", "2", "--epsilon", "0.05")
    assert code == 0 and json.loads(out)["radius"] > 0


def test_parse_number():
    assert parse_number("2/e") == pytest.approx(2 / math.e)
    assert parse_number("pi/4") == pytest.approx(math.pi / 4)
    with pytest.raises(Exception):
        parse_number("__import__('os')")


def _cli(*argv):
    return subprocess.run([sys.executable, "-m", "subweibull", *argv], capture_output=True, check=True).stdout


def test_validate_rerun_is_byte_identical(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"experiment": "nb_sum", "reps": 2000, "seed": 5}))
    a = _cli("validate", "--config", str(cfg))
    b = _cli("validate", "--config", str(cfg), "--jobs", "2")
    assert a == b
    assert json.loads(a)["summary"]["violations"] == 0
    c = _cli("validate", "--config", str(cfg), "--seed", "6")
    assert c != a


def test_csv_output(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"experiment": "single_phi", "reps": 1000}))
    code, out, _ = _run(capsys, "validate", "--config", str(cfg), "--seed", "1", "--csv")
    lines = out.strip().splitlines()
    assert code == 0 and len(lines) == 4 and "violation" in lines[0]
