from __future__ import annotations

import json
import math
import os
import subprocess
import sys

import pytest

from logimap.cli import main
from logimap.precision import PRECISION_ENV


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_iterate_csv_example(capsys):
    code, out, _ = run(capsys, "iterate", "--r", "1", "--beta", "1", "--x0", "0.5", "--n", "3",
                       "--format", "csv")
    assert code == 0
    assert out == "n,lambda\n0,0.5\n1,0.25\n2,0.1875\n3,0.15234375\n"


def test_iterate_json_schema(capsys):
    code, out, _ = run(capsys, "iterate", "--r", "2", "--x0", "0.25", "--n", "1")
    obj = json.loads(out)
    assert code == 0
    assert set(obj) == {"command", "params", "results", "assertions"}
    assert obj["command"] == "iterate" and obj["results"]["values"] == [0.25, 0.375]


def test_bounds_json_example(capsys):
    code, out, _ = run(capsys, "bounds", "--beta", "1", "--x0", "0.5", "--n", "100",
                       "--format", "json")
    obj = json.loads(out)
    assert code == 0
    case = obj["results"]["cases"][0]
    assert case["theorem1"]["holds"] is True
    assert case["theorem1"]["min_lower_gap"] == 0.0 and case["theorem1"]["min_upper_gap"] > 0
    assert all(a["holds"] for a in obj["assertions"])
    assert {"name", "holds", "lhs", "rhs"} == set(obj["assertions"][0])


def test_r2_example(capsys):
    code, out, _ = run(capsys, "r2", "--x0", "0.25", "--n", "2")
    res = json.loads(out)["results"]
    assert code == 0
    assert res["x"] == 0.46875
    assert res["log_dev"] == pytest.approx(-5 * math.log(2), rel=1e-15)


def test_r2_huge_n_stays_finite(capsys):
    code, out, _ = run(capsys, "r2", "--x0", "0.25", "--n", "1000000")
    res = json.loads(out)["results"]
    assert code == 0 and res["log_dev"] == "-inf"
    assert res["log_dev_exponent"] == 10**6


def test_rate_and_ode(capsys):
    code, out, _ = run(capsys, "rate", "--r", "0.1,0.5", "--x0", "0.9", "--format", "csv")
    assert code == 0 and out.splitlines()[0] == "r,lambda0,n,rate"
    code, out, _ = run(capsys, "ode", "--beta", "1", "--beta3", "-0.5", "--lambda0", "1",
                       "--t-end", "10000", "--estimate-limit")
    obj = json.loads(out)
    assert code == 0 and obj["results"]["extrapolated_limit"] == pytest.approx(1, abs=2e-3)
    code, out, _ = run(capsys, "ode", "--beta", "0", "--beta3", "-1", "--lambda0", "1",
                       "--t-end", "1")
    assert code == 0
    assert json.loads(out)["results"]["blow_up"]["t_star"] == pytest.approx(0.5, rel=1e-6)
    code, out, _ = run(capsys, "ode", "--flow", "verhulst", "--a", "1", "--b", "1",
                       "--N0", "0.5", "--t-end", "20")
    assert code == 0


def test_exit_codes(capsys):
    assert run(capsys, "bounds", "--beta", "1", "--x0", "1.5", "--n", "10")[0] == 2
    assert run(capsys, "iterate", "--r", "1", "--x0", "0.5", "--n", "100",
               "--max-iterations", "10")[0] == 3
    assert run(capsys, "r2", "--x0", "0.4", "--n", "10", "--precision", "bigfloat",
               "--bits", "2048")[0] == 3
    assert run(capsys, "verify-all", "--criteria", "99")[0] == 2
    with pytest.raises(SystemExit) as info:
        main(["iterate", "--r", "1"])
    assert info.value.code == 2


def test_assertion_failure_exit(capsys):
    code, out, err = run(capsys, "verify-all", "--criteria", "8", "--format", "json")
    assert code == 1
    failed = [a["name"] for a in json.loads(out)["assertions"] if not a["holds"]]
    assert failed == ["c8:closed-form-vs-2048bit[x0=0.4]", "c8:closed-form-vs-2048bit[x0=0.6]"]
    assert "FAILED c8:closed-form-vs-2048bit[x0=0.4]" in err


def test_precision_flags_and_env(capsys, monkeypatch):
    monkeypatch.setenv(PRECISION_ENV, "bigfloat:128")
    code, out, _ = run(capsys, "iterate", "--r", "1", "--x0", "0.1", "--n", "1")
    obj = json.loads(out)
    assert obj["params"]["precision"] == "bigfloat:128"
    assert obj["results"]["values"][0].startswith("0.1000000000000000055511151231257827")
    code, out, _ = run(capsys, "iterate", "--r", "1", "--x0", "0.1", "--n", "1",
                       "--precision", "double")
    assert json.loads(out)["params"]["precision"] == "double"
    assert run(capsys, "iterate", "--r", "1", "--x0", "0.1", "--n", "1",
               "--precision", "bigfloat")[0] == 2


def test_digits_flag(capsys):
    _, out, _ = run(capsys, "iterate", "--r", "1", "--x0", "0.1", "--n", "1", "--format", "csv",
                    "--digits", "5")
    assert out == "n,lambda\n0,0.1\n1,0.09\n"


def test_atomic_output(tmp_path, capsys):
    target = tmp_path / "orbit.csv"
    target.write_text("old")
    code, out, _ = run(capsys, "iterate", "--r", "2", "--x0", "0.25", "--n", "2",
                       "--format", "csv", "--output", str(target))
    assert code == 0 and out == ""
    assert target.read_text() == "n,lambda\n0,0.25\n1,0.375\n2,0.46875\n"
    assert sorted(os.listdir(tmp_path)) == ["orbit.csv"]


def test_byte_identical_and_parallel_deterministic(capsys):
    args = ["bounds", "--beta", "0.5,1,2", "--x0", "0.1,0.2", "--n", "2000"]
    _, a, _ = run(capsys, *args)
    _, b, _ = run(capsys, *args)
    _, c, _ = run(capsys, *args, "--parallel", "3")
    assert a == b == c


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "logimap", "iterate", "--r", "1", "--x0", "0.5",
                           "--n", "1", "--format", "csv"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout == "n,lambda\n0,0.5\n1,0.25\n"
    assert "s" in proc.stderr  # timing goes to stderr only
