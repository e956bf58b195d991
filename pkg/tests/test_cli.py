import csv
import json
import math
import subprocess
import sys

import pytest

from fracholder.cli import main

HEAT = ["--alpha", "2", "--beta", "1", "--gamma", "0", "--nu", "1", "--d", "1"]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def small_config(tmp_path, **over):
    cfg = {
        "params": {"alpha": 2.0, "beta": 1.0, "gamma": 0.0, "nu": 1.0, "d": 1},
        "L": 1.0, "nx": 32, "nt": 64, "T_end": 1.0,
        "sigma": {"kind": "constant", "c": 1.0},
        "init": {"mu": [], "mu1": []}, "seed": 11, "replicates": 3,
    }
    cfg.update(over)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def test_ml_examples(capsys):
    code, out, _ = run(capsys, "ml", "--beta", "1", "--zeta", "1", "--x", "1")
    assert code == 0
    rows = list(csv.reader(out.splitlines()))
    assert rows[0] == ["x", "value"]
    assert float(rows[1][1]) == pytest.approx(math.exp(-1), abs=1e-15)
    code, out, _ = run(capsys, "ml", "--beta", "2", "--zeta", "1", "--x", str(math.pi**2 / 4))
    assert abs(float(out.splitlines()[1].split(",")[1])) < 1e-10
    code, out, _ = run(capsys, "ml", "--beta", "0.7", "--zeta", "1.2", "--x-range", "0", "10", "5")
    assert len(out.splitlines()) == 6


def test_ml_domain_error(capsys):
    code, _, err = run(capsys, "ml", "--beta", "0", "--zeta", "1", "--x", "1")
    assert code == 2
    assert "beta must lie in (0, 2]" in err


def test_usage_errors_exit_2(capsys):
    assert run(capsys, "ml", "--beta", "1")[0] == 2
    assert run(capsys, "nosuch")[0] == 2
    assert run(capsys, "exponents", "--alpha", "2", "--beta", "0.3", "--gamma", "0", "--d", "1")[0] == 2


def test_exponents_json(capsys):
    code, out, _ = run(capsys, "exponents", "--alpha", "2", "--beta", "1", "--gamma", "0", "--d", "1")
    assert code == 0
    assert json.loads(out) == {"rho": 0.5, "theta": 2.0, "time": 0.25, "space": 0.5}
    code, out, _ = run(capsys, "exponents", "--alpha", "2", "--beta", "1.6", "--gamma", "0", "--d", "1")
    got = json.loads(out)
    assert (got["time"], got["space"]) == pytest.approx((0.7, 0.875))


def test_kernel_and_constants(capsys):
    code, out, _ = run(capsys, "kernel", *HEAT, "--t", "1", "--x", "0", "1")
    rows = list(csv.reader(out.splitlines()))
    assert rows[0] == ["t", "x", "value"]
    assert float(rows[2][2]) == pytest.approx(0.2419707245191434, rel=1e-10)
    code, out, _ = run(capsys, "constants", *HEAT)
    rows = list(csv.reader(out.splitlines()))
    assert rows[0] == ["gamma1", "gamma2", "c", "c_star"]
    assert float(rows[1][2]) == pytest.approx(0.2820947917738781, rel=1e-12)


def test_increments_then_fit(tmp_path, capsys):
    out = tmp_path / "tail.csv"
    code, _, _ = run(capsys, "increments", *HEAT, "--kind", "tail", "--s", "1", "--out", str(out))
    assert code == 0
    rows = read_csv(out)
    assert rows[0] == ["lag", "value"] and len(rows) == 13
    summary = json.loads((tmp_path / "tail.summary.json").read_text())
    assert summary["slope"] == pytest.approx(0.5, abs=1e-10)
    assert summary["expected_exponent"] == 0.5 and summary["tolerance_pass"] is True
    manifest = json.loads((tmp_path / "tail.manifest.json").read_text())
    assert sorted(manifest["outputs"]) == ["tail.csv", "tail.summary.json"]
    assert manifest["command_line"][:2] == ["fracholder", "increments"]

    code, fit_out, _ = run(capsys, "fit", "--csv", str(out), "--kind", "tail")
    assert code == 0
    assert json.loads(fit_out)["slope"] == pytest.approx(0.5, abs=1e-10)


def test_time_increments_summary(capsys):
    code, out, err = run(capsys, "increments", *HEAT, "--kind", "time", "--s", "1")
    assert code == 0
    assert out.startswith("lag,value\n")
    summary = json.loads(err)
    assert summary["tolerance_pass"] and abs(summary["slope"] - 0.5) < 0.03


def test_fit_rejects_headerless_csv(tmp_path, capsys):
    path = tmp_path / "raw.csv"
    path.write_text("0.1,0.2\n0.2,0.4\n0.4,0.8\n0.8,1.6\n")
    assert run(capsys, "fit", "--csv", str(path))[0] == 2
    assert run(capsys, "fit", "--csv", str(tmp_path / "missing.csv"))[0] == 2


def test_fracop(capsys):
    code, out, _ = run(capsys, "fracop", "--op", "caputo", "--func", "exp", "--q", "0.5",
                       "--s", "0", "--t", "1")
    assert code == 0
    assert float(out.splitlines()[1].split(",")[1]) == pytest.approx(2.29069825230324, rel=1e-12)
    code, out, _ = run(capsys, "fracop", "--op", "rl-integral", "--func", "power", "--p", "1",
                       "--q", "0.5", "--s", "0", "--t", "1")
    assert float(out.splitlines()[1].split(",")[1]) == pytest.approx(0.7522527780636751, rel=1e-12)
    assert run(capsys, "fracop", "--op", "caputo", "--func", "exp", "--q", "0.5", "--s", "0")[0] == 2


def test_lfd_command(tmp_path, capsys):
    out = tmp_path / "lfd.csv"
    code, _, _ = run(capsys, "lfd", *HEAT, "--q", "0.45", "--s", "1", "--out", str(out))
    assert code == 0
    assert read_csv(out)[0] == ["t_minus_s", "caputo_value"]
    summary = json.loads((tmp_path / "lfd.summary.json").read_text())
    assert summary["status"] == "limit" and summary["ratio_to_first"] < 1e-3


def test_simulate_outputs_and_determinism(tmp_path, capsys):
    cfg = small_config(tmp_path)
    digests = []
    for name in ("a", "b"):
        code, out, _ = run(capsys, "simulate", "--config", cfg, "--out-dir", str(tmp_path / name))
        assert code == 0
        digests.append(json.loads(out))
    assert digests[0] == digests[1]
    d = tmp_path / "a"
    side = json.loads((d / "field.bin.json").read_text())
    assert side["dims"] == [3, 65, 32] and side["field_digest"] == digests[0]["field_digest"]
    assert (d / "field.bin").stat().st_size == 8 * 3 * 65 * 32
    assert read_csv(d / "increments.csv")[0] == ["direction", "lag", "mean_sq_increment"]
    assert read_csv(d / "fits.csv")[0][:3] == ["direction", "exponent", "slope"]
    manifest = json.loads((d / "manifest.json").read_text())
    assert sorted(manifest["outputs"]) == ["field.bin", "field.bin.json", "fits.csv", "increments.csv"]
    assert manifest["seed"] == 11 and manifest["config_digest"] == digests[0]["config_digest"]


def test_simulate_instability_exit_4(tmp_path, capsys):
    cfg = small_config(tmp_path, sigma={"kind": "linear", "lam": 1e4},
                       init={"mu": [[1.0, 0.0]], "mu1": []}, nx=16, replicates=1)
    code, _, err = run(capsys, "simulate", "--config", cfg, "--out-dir", str(tmp_path / "x"))
    assert code == 4
    assert "step" in err


def test_simulate_bad_config_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "simulate", "--config", str(bad), "--out-dir", str(tmp_path))[0] == 2
    cfg = small_config(tmp_path, nx=4)
    assert run(capsys, "simulate", "--config", cfg, "--out-dir", str(tmp_path))[0] == 2


def test_verify_passes_and_perturbation_fails(tmp_path, capsys):
    out = tmp_path / "v.json"
    code, _, _ = run(capsys, "verify", "--suite", "special", "--tol-profile", "strict", "--out", str(out))
    assert code == 0
    rep = json.loads(out.read_text())
    assert rep["passed"] and all(c["passed"] for c in rep["checks"])
    code, out_text, _ = run(capsys, "verify", "--suite", "special", "--inject-perturbation", "1e-2")
    assert code == 3
    rep = json.loads(out_text)
    assert not rep["passed"] and not any(c["passed"] for c in rep["checks"])


def test_verify_kernels_heat(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "kernels")
    assert code == 0
    checks = {c["name"]: c for c in json.loads(out)["checks"]}
    assert checks["Plancherel identity, heat"]["error"] < 1e-4


def test_entry_points():
    res = subprocess.run([sys.executable, "-m", "fracholder", "ml", "--beta", "1", "--zeta", "2",
                          "--x", "1"], capture_output=True, text=True, check=True)
    assert float(res.stdout.splitlines()[1].split(",")[1]) == pytest.approx(1 - math.exp(-1))
    res = subprocess.run([sys.executable, "-m", "fracholder", "ml", "--beta", "3", "--zeta", "1",
                          "--x", "1"], capture_output=True, text=True)
    assert res.returncode == 2
