import json
import os
import subprocess
import sys

import pytest

from couponflux.cli import main, run


def invoke(capsys, *argv):
    code = run(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_exact_reset_example(capsys):
    code, out, _ = invoke(capsys, "exact", "reset", "--n", "3", "--rho", "0.25")
    assert code == 0
    rec = json.loads(out)
    assert rec["outputs"]["s"] == pytest.approx(0.25, abs=1e-9)
    assert rec["outputs"]["mean"] == pytest.approx(12.0, abs=1e-9)
    assert rec["schema_version"] == 1 and rec["model"] == "reset"


def test_flux_clumsy_example(capsys):
    code, out, _ = invoke(capsys, "flux", "clumsy", "--n", "2", "--p", "0.5")
    assert code == 0
    assert json.loads(out)["outputs"]["mu"] == pytest.approx(0.125, abs=1e-14)


def test_flux_reset_regime(capsys):
    code, out, _ = invoke(capsys, "flux", "reset", "--n", "3", "--rho", "0.25",
                          "--regime", "equal_reset")
    assert code == 0
    assert json.loads(out)["outputs"]["log_ratio"] == pytest.approx(0.0, abs=1e-12)


def test_exact_large_n_uses_log_space(capsys):
    code, out, _ = invoke(capsys, "exact", "careless", "--n", "60", "--q", "0.5")
    outputs = json.loads(out)["outputs"]
    assert code == 0
    assert outputs["mu"]["log_space"] is True and outputs["mu"]["value"] < -700
    assert "mean" not in outputs  # beyond what a double-precision solve resolves


def test_csv_output(capsys):
    code, out, _ = invoke(capsys, "flux", "clumsy", "--n", "2", "--p", "0.5", "--csv")
    header, row = out.strip().splitlines()
    assert code == 0 and header.split(",")[0] == "mu"
    assert float(row.split(",")[0]) == pytest.approx(0.125)


def test_qseries(capsys):
    code, out, _ = invoke(capsys, "qseries", "--q", "0.5", "--k", "3", "--n", "5")
    assert code == 0
    payload = json.loads(out)
    assert payload["pochhammer_inf"] == pytest.approx(0.288788095086602, rel=1e-12)
    assert len(payload["table"]) == 4 and "log_lucky_weight" in payload["table"][2]
    code, out, _ = invoke(capsys, "qseries", "--q", "0.5", "--k", "2", "--csv")
    assert code == 0 and out.splitlines()[0].startswith("k,")


def test_usage_errors_exit_2(capsys):
    assert invoke(capsys, "exact", "clumsy", "--n", "2")[0] == 2
    assert invoke(capsys, "bogus")[0] == 2
    assert invoke(capsys, "simulate", "clumsy", "--n", "2", "--p", "0.5")[0] == 2
    assert invoke(capsys, "simulate", "clumsy", "--n", "2", "--p", "0.5", "--samples", "5",
                  "--seed", "zz")[0] == 2


def test_domain_errors_exit_3(capsys):
    code, _, err = invoke(capsys, "exact", "clumsy", "--n", "2", "--p", "1.5")
    assert code == 3 and err.startswith("DomainError:")
    code, _, err = invoke(capsys, "exact", "reset", "--n", "30", "--rho", "0.1",
                          "--weights", ",".join(["0.03"] * 30))
    assert code == 3 and err.startswith("SubsetLimit:")


def test_simulate_record(capsys, tmp_path):
    out_file = tmp_path / "r.json"
    code, out, _ = invoke(capsys, "simulate", "careless", "--n", "3", "--q", "0.5",
                          "--samples", "2000", "--seed", "0x10", "--out", str(out_file))
    assert code == 0
    rec = json.loads(out)
    assert rec["seed"] == 16 and len(rec["data"]["samples"]) == 2000
    assert json.loads(out_file.read_text()) == rec
    assert set(rec["outputs"]) >= {"ks", "ks_threshold", "moments", "censored", "log_mu"}


@pytest.mark.parametrize("engine", ["direct", "phase"])
def test_seed_determinism_across_threads(capsys, engine):
    outs = set()
    for threads in ("1", "4", "8"):
        code, out, _ = invoke(capsys, "simulate", "clumsy", "--n", "5", "--p", "0.5",
                              "--samples", "3000", "--seed", "12345", "--engine", engine,
                              "--threads", threads)
        assert code == 0
        outs.add(out)
    assert len(outs) == 1
    code, other, _ = invoke(capsys, "simulate", "clumsy", "--n", "5", "--p", "0.5",
                            "--samples", "3000", "--seed", "12346", "--engine", engine)
    assert other not in outs


def test_verify_identities_exits_zero(capsys):
    code, out, _ = invoke(capsys, "verify", "identities")
    assert code == 0
    assert out.splitlines()[0].startswith("suite identities  seed 0x")
    assert out.strip().endswith("OK")


def test_verify_failure_exits_one(capsys):
    code, out, _ = invoke(capsys, "verify", "audits")
    assert code == 1 and "FAIL" in out


def test_sweep_writes_records(capsys, tmp_path):
    plan = tmp_path / "plan.json"
    plan.write_text(json.dumps({"model": "reset", "seed": 3,
                                "grid": {"rho": [0.1, 0.2, 0.3, 0.4, 0.5],
                                         "n": list(range(8, 17))}}))
    code, out, _ = invoke(capsys, "sweep", "--plan", str(plan), "--out-dir", str(tmp_path / "a"))
    assert code == 0 and len(out.splitlines()) == 45
    invoke(capsys, "sweep", "--plan", str(plan), "--out-dir", str(tmp_path / "b"), "--threads", "4")
    for name in os.listdir(tmp_path / "a"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert invoke(capsys, "sweep", "--plan", str(tmp_path / "missing.json"))[0] == 2


def test_console_entry_point_and_thread_env():
    env = dict(os.environ, COUPONFLUX_THREADS="3")
    argv = [sys.executable, "-m", "couponflux.cli", "simulate", "combined", "--n", "3",
            "--Q", "0.8", "--S", "0.5", "--samples", "500", "--seed", "7"]
    a = subprocess.run(argv, capture_output=True, text=True, env=env, check=True).stdout
    env["COUPONFLUX_THREADS"] = "1"
    b = subprocess.run(argv, capture_output=True, text=True, env=env, check=True).stdout
    assert a == b and json.loads(a)["model"] == "combined"


def test_main_returns_code():
    assert main(["flux", "clumsy", "--n", "1", "--p", "0.5"]) == 0
