import csv
import json
import math
from fractions import Fraction

import numpy as np
import pytest

from qgrad.cli import main, read_config


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_coeffs_m1(tmp_path, capsys):
    assert main(["coeffs", "--m", "1"]) == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert out == ["ell,numerator,denominator,value", "-1,-1,2,-0.5", "0,1,1,1", "1,1,2,0.5"]


def test_coeffs_file_with_moments(tmp_path):
    path = tmp_path / "c.csv"
    assert main(["coeffs", "--m", "5", "--moments", "12", "--output", str(path)]) == 0
    body = rows(path)[1:]
    assert len(body) == 11
    for row in body:
        assert Fraction(int(row[1]), int(row[2])) == Fraction(row[3]) or abs(int(row[1]) / int(row[2]) - float(row[3])) < 1e-16
        assert [Fraction(v) for v in row[4:15]] == [1, 1] + [0] * 9


def test_coeffs_m0_usage():
    assert main(["coeffs", "--m", "0"]) == 1


def test_usage_errors():
    with pytest.raises(SystemExit) as exc:
        main(["nonsense"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["coeffs"])
    assert exc.value.code == 1


def test_smooth_plot(tmp_path):
    path = tmp_path / "s.csv"
    assert main(["smooth-plot", "--m", "1,2", "--xmin", "-0.5", "--xmax", "0.5", "--samples", "21",
                 "--output", str(path)]) == 0
    table = rows(path)
    assert table[0] == ["x", "f", "f_2", "f_4", "defect_2", "defect_4"]
    assert len(table) == 22
    data = np.array(table[1:], dtype=float)
    mid = data[10]
    assert mid[0] == 0 and mid[2] == 0
    assert np.all(data[:, 5] <= data[:, 4] + 1e-17)
    assert np.isfinite(data).all()


def test_smooth_plot_unknown_function(tmp_path):
    assert main(["smooth-plot", "--function", "nope", "--output", str(tmp_path / "x.csv")]) == 1


def test_run_requires_seed(tmp_path):
    assert main(["run", "--output", str(tmp_path / "r")]) == 1


def test_run_zero(tmp_path):
    out = tmp_path / "r"
    assert main(["run", "--function", "zero", "--d", "2", "--eps", "0.2", "--seed", "1", "--output", str(out)]) == 0
    assert rows(out / "estimate.csv") == [["g1", "g2"], ["0", "0"]]
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 1 and set(manifest["outputs"]) == {p.name for p in out.iterdir()}


def test_run_reproducible_and_ledger(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    args = ["run", "--d", "1", "--eps", "0.26", "--amplitude", "0.006", "--seed", "9"]
    assert main(args + ["--output", str(a)]) == 0
    assert main(["run", "--config", str(a / "manifest.json"), "--output", str(b)]) == 0
    for name in ("estimate.csv", "per_loop.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    consts = json.loads((a / "constants.json").read_text())
    ledger = json.loads((a / "manifest.json").read_text())["ledger"]
    assert ledger["base_calls"] == consts["N"] * consts["S"] * (2 * consts["m"] + 1)


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("# experiment\nfunction = test\nd = 1\neps = 0.26\namplitude = 0.006\nseed = 4\ncost-model = paper\n")
    assert read_config(str(cfg))["cost_model"] == "paper"
    out = tmp_path / "o"
    assert main(["run", "--config", str(cfg), "--seed", "5", "--output", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 5 and manifest["ledger"]["cost_model"] == "paper"
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = blue\n")
    assert main(["run", "--config", str(bad), "--seed", "1", "--output", str(out)]) == 1


def test_resource_guard_exit(tmp_path, monkeypatch):
    monkeypatch.setenv("QGRAD_MEMORY_GUARD", "10")
    assert main(["run", "--d", "2", "--eps", "0.2", "--seed", "1", "--output", str(tmp_path / "g")]) == 3


def test_success_prob_exact(tmp_path):
    out = tmp_path / "sp"
    assert main(["success-prob", "--eps", "0.26", "--amplitude", "0.006", "--exact", "--seed", "0",
                 "--output", str(out)]) == 0
    report = json.loads((out / "success.json").read_text())
    assert report["per_loop_probability"] >= 2 / 3


def test_success_prob_trials(tmp_path):
    out = tmp_path / "sp"
    assert main(["success-prob", "--eps", "0.26", "--amplitude", "0.006", "--trials", "5", "--seed", "0",
                 "--output", str(out)]) == 0
    report = json.loads((out / "success.json").read_text())
    assert report["trials"] == 5 and 0 <= report["wilson_low"] <= report["fraction"] <= 1
    ledger = json.loads((out / "manifest.json").read_text())["ledger"]
    assert ledger["runs"] == 5


def test_sweep(tmp_path):
    path = tmp_path / "sw.csv"
    assert main(["sweep", "--dims", "1,2", "--eps", "0.1,0.4,0.2", "--output", str(path)]) == 0
    table = rows(path)
    head, body = table[0], table[1:]
    assert len(body) == 6
    col = {name: i for i, name in enumerate(head)}
    for d in ("1", "2"):
        sub = [r for r in body if r[col["d"]] == d]
        eps = [float(r[col["eps"]]) for r in sub]
        q = [int(r[col["queries"]]) for r in sub]
        assert eps == sorted(eps, reverse=True)
        assert q == sorted(q)
    from qgrad.bounds import lower_bound_general

    r = body[0]
    rep = lower_bound_general(int(r[col["d"]]), 1.0, float(r[col["eps"]]), math.inf, 17 / 18, check_range=False)
    assert float(r[col["lower_bound"]]) == rep.bound_value
    assert all(math.isfinite(float(v)) for row in body for v in row)


def test_bounds_json(tmp_path, capsys):
    assert main(["bounds", "--d", "2", "--c", "1", "--eps", "0.001", "--p", "inf", "--samples", "2000",
                 "--seed", "3"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["lower_bound_p1"] == pytest.approx(2**1.5 / 0.876)
    assert report["lower_bound_general"]["N_boost"] == 6
    assert report["oracle_distance"]["within_limit"]


def test_bounds_sampling_needs_seed():
    assert main(["bounds", "--d", "2", "--c", "1", "--eps", "0.001", "--samples", "10"]) == 1


def test_verify_fast_and_corrupted(capsys):
    assert main(["verify", "--level", "fast"]) == 0
    assert main(["verify", "--level", "fast", "--corrupt-coefficients"]) == 2
    assert "FAIL coefficient identities" in capsys.readouterr().out
