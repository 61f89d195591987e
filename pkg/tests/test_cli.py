import json
import os
import subprocess
import sys

import pytest

from lrsao.cli import build_parser, main


def run_cli(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def _json_lines(out):
    return [json.loads(line) for line in out.splitlines() if line.strip()]


def test_run_example(capsys):
    code, out, _ = run_cli(capsys, "run", "--n", 10, "--ell", 2, "--seed", 1)
    assert code == 0
    r = json.loads(out)
    assert r["T"] == r["T1"] + r["T2"] + r["T3"]
    assert r["penalty_r"] == pytest.approx(3.75)


def test_run_deterministic(capsys):
    a = run_cli(capsys, "run", "--n", 30, "--ell", 3, "--seed", 9)[1]
    b = run_cli(capsys, "run", "--n", 30, "--ell", 3, "--seed", 9)[1]
    assert a == b


def test_run_seed_env_fallback(capsys, monkeypatch):
    explicit = run_cli(capsys, "run", "--n", 30, "--ell", 3, "--seed", 42)[1]
    monkeypatch.setenv("LRSAO_SEED", "42")
    from_env = run_cli(capsys, "run", "--n", 30, "--ell", 3)[1]
    assert explicit == from_env
    monkeypatch.setenv("LRSAO_SEED", "abc")
    assert run_cli(capsys, "run", "--n", 30, "--ell", 3)[0] == 1


def test_run_rejects_n8(capsys):
    code, out, err = run_cli(capsys, "run", "--n", 8, "--ell", 2)
    assert code == 1 and out == ""
    assert "RangeError" in err


def test_run_penalty_above_window(capsys):
    code, _, err = run_cli(capsys, "run", "--n", 10, "--ell", 2, "--penalty", 14.0)
    assert code == 1
    assert "upper bound" in err and "1/(alpha*gamma)" in err


def test_run_unknown_flag(capsys):
    with pytest.raises(SystemExit) as e:
        main(["run", "--n", "10", "--ell", "2", "--bogus"])
    assert e.value.code == 1


def test_run_censored_exit(capsys):
    code, out, _ = run_cli(capsys, "run", "--n", 200, "--ell", 2, "--max-iters", 5)
    assert code == 2 and json.loads(out)["censored"] is True


def test_run_trace_file(capsys, tmp_path):
    path = tmp_path / "t.jsonl"
    code, out, _ = run_cli(capsys, "run", "--n", 12, "--ell", 3, "--seed", 2, "--trace", path)
    assert code == 0
    recs = _json_lines(path.read_text())
    assert len(recs) == json.loads(out)["T"]
    assert recs[-1]["accepted"] and recs[-1]["w_before"] == 11


def test_bench_example(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        code, out, _ = run_cli(capsys, "bench", "--n-min", 50, "--n-max", 200, "--n-step", 50,
                               "--ell-rule", "const2", "--runs", 200, "--seed", 3, "--out", path)
        assert code == 0
    assert len(a.read_text().splitlines()) == 5
    assert a.read_bytes() == b.read_bytes()
    assert [r["n"] for r in json.loads(out)["rows"]] == [50, 100, 150, 200]


def test_bench_half_rule(capsys):
    code, out, _ = run_cli(capsys, "bench", "--n-min", 105, "--n-max", 105, "--ell-rule", "half",
                           "--runs", 20)
    assert code == 0
    assert json.loads(out)["rows"][0]["ell"] == 50


def test_bench_both_algos_and_figure(capsys, tmp_path):
    fig = tmp_path / "f.png"
    code, out, _ = run_cli(capsys, "bench", "--n-min", 20, "--n-max", 40, "--n-step", 10,
                           "--algos", "lrsao,earl", "--runs", 30, "--figure", fig)
    assert code == 0
    data = json.loads(out)
    assert {r["algo"] for r in data["rows"]} == {"lrsao", "earl"}
    assert data["earl"]["restart_cutoff"] == "n2"
    assert fig.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_bench_bad_algo(capsys):
    assert run_cli(capsys, "bench", "--n-min", 20, "--n-max", 20, "--algos", "ga")[0] == 1


def test_compare(capsys):
    code, out, _ = run_cli(capsys, "compare", "--n", 40, "--ell", 3, "--runs", 50)
    assert code == 0
    d = json.loads(out)
    assert d["lrsao"]["ell"] == d["earl"]["ell"] == 3
    assert d["earl_config"]["gamma"] == 0.99
    assert isinstance(d["ci_disjoint"], bool)


def test_verify_examples(capsys):
    code, out, _ = run_cli(capsys, "verify", "--n", 50, "--ell", 5, "--runs", 1000, "--seed", 0)
    assert code == 0
    summary = _json_lines(out)[-1]
    assert summary["violations"] == 0 and summary["runs"] == 1000
    assert run_cli(capsys, "verify", "--n", 9, "--ell", 2, "--runs", 10)[0] == 0


def test_verify_planted_bug(capsys):
    code, out, _ = run_cli(capsys, "verify", "--n", 20, "--ell", 2, "--runs", 20,
                           "--plant-bug", "penalty-sign")
    assert code == 3
    lines = _json_lines(out)
    assert lines[-1]["violations"] > 0
    assert all(set(v) >= {"lemma_id", "t", "detail"} for v in lines[:-1])


def test_theory_examples(capsys):
    code, out, _ = run_cli(capsys, "theory", "--n", 10, "--ell", 2)
    assert code == 0
    d = json.loads(out)
    assert d["expected_t1"] == pytest.approx(3.396199, abs=1e-6)
    assert d["q_upper_bound"] == pytest.approx(7.7, rel=1e-12)
    assert d["t3_sub2_ub"] == pytest.approx(15.0)
    assert run_cli(capsys, "theory", "--n", 10, "--ell", 4)[0] == 1


def test_help_lists_flags():
    parser = build_parser()
    sub = parser._subparsers._group_actions[0].choices
    assert set(sub) == {"run", "bench", "verify", "compare", "theory"}
    text = sub["run"].format_help()
    for flag in ("--n", "--ell", "--alpha", "--gamma", "--penalty", "--seed", "--kernel", "--trace", "--max-iters"):
        assert flag in text
    text = sub["bench"].format_help()
    for flag in ("--n-min", "--n-max", "--n-step", "--ell-rule", "--runs", "--seed", "--algos", "--out"):
        assert flag in text


def test_console_script_entry():
    env = dict(os.environ)
    env.pop("LRSAO_SEED", None)
    p = subprocess.run([sys.executable, "-m", "lrsao.cli", "theory", "--n", "10", "--ell", "2"],
                       capture_output=True, text=True, env=env)
    assert p.returncode == 0 and json.loads(p.stdout)["ell"] == 2
    p = subprocess.run([sys.executable, "-m", "lrsao.cli", "--help"], capture_output=True, text=True)
    assert p.returncode == 0 and "verify" in p.stdout
