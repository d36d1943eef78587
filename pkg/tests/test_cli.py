import json
from pathlib import Path

import pytest

from inner_clt.cli import run

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

SMALL = """
family = "ones"
N_grid = [10, 30, 100]
samples = 20000
seed = 11
"""


@pytest.fixture
def small_cfg(tmp_path):
    p = tmp_path / "small.toml"
    p.write_text(SMALL)
    return p


def test_verify_default(capsys):
    assert run(["verify"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out
    assert "conditional identities" in out


def test_verify_config_file(capsys):
    assert run(["verify", "--config", str(CONFIGS / "default.toml")]) == 0


def test_transfer_two_terms(tmp_path, capsys):
    p = tmp_path / "a.csv"
    p.write_text("n,re_a,im_a\n1,1,0\n2,1,0\n")
    assert run(["transfer", "--coeffs", str(p), "--lambda", "0.5,0"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[:3] == ["n,re_b,im_b", "1,1,0", "2,1.5,0"]
    assert "sigma_N^2 = 3.0" in out


def test_transfer_bad_lambda(tmp_path, capsys):
    p = tmp_path / "a.csv"
    p.write_text("n,re_a,im_a\n1,1,0\n")
    assert run(["transfer", "--coeffs", str(p), "--lambda", "abc"]) == 2
    assert run(["transfer", "--coeffs", str(p), "--lambda", "1.0"]) == 2
    assert run(["transfer", "--coeffs", str(tmp_path / "none.csv"), "--lambda", "0"]) == 2


def test_usage_errors(tmp_path, capsys):
    assert run([]) == 2
    assert run(["simulate"]) == 2
    bad = tmp_path / "bad.toml"
    bad.write_text("bogus = 1\n")
    assert run(["bound", "--config", str(bad)]) == 2
    assert "unknown config keys" in capsys.readouterr().err


def test_simulate_is_idempotent(tmp_path, small_cfg):
    for name in ("a", "b"):
        assert run(["simulate", "--config", str(small_cfg), "--out", str(tmp_path / name)]) == 0
    a = (tmp_path / "a" / "results.csv").read_bytes()
    assert a == (tmp_path / "b" / "results.csv").read_bytes()
    assert (tmp_path / "a" / "ks_vs_N.svg").read_bytes() == (tmp_path / "b" / "ks_vs_N.svg").read_bytes()
    meta = json.loads((tmp_path / "a" / "metadata.json").read_text())
    assert meta["config"]["seed"] == 11


def test_simulate_with_extras_then_rate(tmp_path, small_cfg, capsys):
    cfg = small_cfg.read_text() + "N_grid = [10, 30, 100, 300]\n"
    p = tmp_path / "c.toml"
    p.write_text(cfg.replace("N_grid = [10, 30, 100]\n", ""))
    out = tmp_path / "o"
    assert run(["simulate", "--config", str(p), "--out", str(out), "--weak-law"]) == 0
    meta = json.loads((out / "metadata.json").read_text())
    assert all(r["ok"] for r in meta["weak_law"])
    capsys.readouterr()
    assert run(["rate", "--in", str(out / "results.csv")]) == 0
    assert "(4 points)" in capsys.readouterr().out


def test_rate_below_noise_floor(tmp_path, small_cfg, capsys):
    out = tmp_path / "o"
    assert run(["simulate", "--config", str(small_cfg), "--out", str(out)]) == 0
    capsys.readouterr()
    assert run(["rate", "--in", str(out / "results.csv")]) == 2
    assert "floor" in capsys.readouterr().err


def test_rate_synthetic(tmp_path, capsys):
    p = tmp_path / "results.csv"
    cols = "N,sigma_N,rho_N,abs_b_N,ks_sup,rhs_bound,mN_est,VN2_est,weak_law_moment"
    rows = [f"{N},1,1,1,{N ** -0.25!r},1,0,0,0" for N in (10, 100, 1000, 10000)]
    p.write_text("\n".join([cols] + rows) + "\n")
    assert run(["rate", "--in", str(p)]) == 0
    assert "exponent -0.250000" in capsys.readouterr().out


def test_simulate_tail(tmp_path, capsys):
    p = tmp_path / "t.toml"
    p.write_text((CONFIGS / "tail.toml").read_text().replace("samples = 100000", "samples = 5000"))
    assert run(["simulate", "--config", str(p), "--out", str(tmp_path / "t"), "--tail"]) == 0
    meta = json.loads((tmp_path / "t" / "metadata.json").read_text())
    assert meta["tail"]["discarded_ratio"] <= 1e-4


def test_bound_table(small_cfg, capsys):
    assert run(["bound", "--config", str(small_cfg)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].split() == ["N", "rhs_bound", "ks_sup", "ks/rhs"]
    assert len(lines) == 4
