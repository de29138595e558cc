import csv
import json

import pytest

from thinprimes import cli, report
from thinprimes.errors import InvariantViolation


def run(tmp_path, *argv):
    return cli.main(["--quiet", "--out-dir", str(tmp_path), *argv])


def load(path):
    return json.loads(path.read_text())


def test_sieve(tmp_path):
    assert run(tmp_path, "sieve", "--limit", "1e3") == 0
    rep = load(tmp_path / "sieve.json")
    assert rep["result"]["primes"] == 168
    with open(tmp_path / "sieve.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["n", "is_prime", "mobius", "mangoldt_p", "mangoldt_e"] and len(rows) == 1001


def test_exponents_gamma_one(tmp_path):
    assert run(tmp_path, "exponents", "check", "--d", "1", "--c1", "1", "--c2", "1", "--table", "thm3") == 0
    res = load(tmp_path / "exponents.json")["result"]
    assert res["admissible"] and res["max_epsilon_exact"] == "1/84" and res["binding_constraint"] == 0


def test_empty_enum(tmp_path):
    assert run(tmp_path, "thinset", "enum", "--limit", "1") == 0
    assert (tmp_path / "members.csv").read_text() == "p\n"
    assert load(tmp_path / "thinset_enum.json")["result"]["count"] == 0


def test_enum_dual_and_count(tmp_path):
    assert run(tmp_path, "--precision", "exact-boundary", "thinset", "enum", "--limit", "1e5", "--dual") == 0
    res = load(tmp_path / "thinset_enum.json")["result"]
    assert res["dual_identical"] and res["boundary_cases"] == 0
    assert run(tmp_path, "thinset", "count", "--c1", "1.5", "--limit", "1e5") == 0
    res = load(tmp_path / "thinset_count.json")["result"]
    assert 0 < res["ratio"] < 2


def test_expsum_commands(tmp_path):
    assert run(tmp_path, "expsum", "vaughan", "--xi", "1/3", "--m", "1", "--poly", "0,1",
               "--range", "10000", "20000") == 0
    res = load(tmp_path / "expsum_vaughan.json")["result"]
    assert res["difference"] <= 1e-8 * res["mangoldt_mass"] and res["u"] == 21
    assert run(tmp_path, "expsum", "direct", "--xi", "1/3", "--m", "1", "--K", "100") == 0
    assert run(tmp_path, "expsum", "transfer3", "--xi", "1/3", "--ngrid", "1e3,1e4") == 0
    lines = (tmp_path / "expsum_transfer3.csv").read_text().splitlines()
    assert lines[0] == "N,lhs_re,lhs_im,rhs_re,rhs_im,err,scaled" and len(lines) == 3
    assert run(tmp_path, "expsum", "transfer4", "--weighting", "average", "--ngrid", "1e3") == 0


def test_variation_command(tmp_path):
    seq = tmp_path / "seq.csv"
    seq.write_text("index,value_re,value_im\n1,0,0\n2,1,0\n3,0,1\n")
    assert run(tmp_path, "variation", "--r", "2", "--input", str(seq)) == 0
    res = load(tmp_path / "variation.json")["result"]
    # chain 1 -> 2 -> 3: jumps |1| and |-1 + i|, squared 1 + 2
    assert res["exact"]["value"] == pytest.approx(3 ** 0.5)
    bad = tmp_path / "bad.csv"
    bad.write_text("index,value_re\n1,0\n3,1\n")
    assert run(tmp_path, "variation", "--r", "2", "--input", str(bad)) == 2
    wrong = tmp_path / "wrong.csv"
    wrong.write_text("n,value\n1,0\n")
    assert run(tmp_path, "variation", "--r", "2", "--input", str(wrong)) == 2


def test_ergodic_command(tmp_path):
    f = tmp_path / "f.csv"
    f.write_text("x,value\n0,1\n3,-0.5\n")
    assert run(tmp_path, "ergodic", "hilbert", "--f", str(f), "--ngrid", "300,1000") == 0
    res = load(tmp_path / "ergodic_hilbert.json")["result"]
    assert len(res["ratios"]) == 2
    assert (tmp_path / "ergodic_hilbert_trace.csv").read_text().startswith("N_max,members,norm,ratio")


def test_short_option_not_taken_as_abbreviation(tmp_path):
    # --s would otherwise be an ambiguous prefix of the global --seed / --save-config
    assert run(tmp_path, "ergodic", "avg", "--s", "3", "--ngrid", "300") == 0
    assert load(tmp_path / "ergodic_avg.json")["config"]["s"] == 3.0
    bad = tmp_path / "f.csv"
    bad.write_text("point,val\n0,1\n")
    assert run(tmp_path, "ergodic", "avg", "--f", str(bad), "--ngrid", "300") == 2


def test_exit_codes(tmp_path):
    assert run(tmp_path, "thinset", "count", "--c1", "2.5", "--limit", "100") == 2
    assert run(tmp_path, "sieve") == 2
    assert run(tmp_path, "expsum", "vaughan", "--range", "100", "500") == 2
    assert run(tmp_path, "preset", "run", "nope") == 2
    with pytest.raises(SystemExit) as exc:
        run(tmp_path, "sieve", "--limit", "abc")
    assert exc.value.code == 2
    # tau = 1 at n = 1 lies below the window's domain
    assert run(tmp_path, "expsum", "direct", "--m", "1", "--tau", "1", "--K", "5") == 3


def test_invariant_violation_exit_code(tmp_path, monkeypatch):
    def broken(*args, **kwargs):
        raise InvariantViolation("forced")
    monkeypatch.setattr(report, "validate", broken)
    assert run(tmp_path, "sieve", "--limit", "100") == 4


def test_reports_validate(tmp_path):
    run(tmp_path, "sieve", "--limit", "100")
    run(tmp_path, "exponents", "check", "--d", "2", "--c1", "1.05")
    for path in tmp_path.glob("*.json"):
        report.validate(load(path))
    with pytest.raises(InvariantViolation):
        report.validate({"schema_version": 1, "command": "sieve", "paper_anchor": "x", "config": {},
                         "result": {"limit": 3}})


def test_config_round_trip(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("limit = 2e3\nsign = plus\nc1 = 7/5\ndual = false\n")
    a, b = tmp_path / "a", tmp_path / "b"
    saved = tmp_path / "saved.cfg"
    assert cli.main(["--quiet", "--out-dir", str(a), "thinset", "enum", "--config", str(cfg),
                     "--save-config", str(saved)]) == 0
    assert cli.main(["--quiet", "thinset", "enum", "--config", str(saved), "--out-dir", str(b)]) == 0
    ra, rb = load(a / "thinset_enum.json"), load(b / "thinset_enum.json")
    for r in (ra, rb):
        r["result"].pop("path")
    assert ra == rb and ra["config"]["sign"] == "plus" and ra["config"]["c1"] == "7/5"
    # options on the command line win over the file
    assert cli.main(["--quiet", "--out-dir", str(b), "thinset", "enum", "--config", str(saved),
                     "--limit", "100"]) == 0
    assert load(b / "thinset_enum.json")["config"]["limit"] == 100
    bad = tmp_path / "bad.cfg"
    bad.write_text("nonsense = 1\n")
    assert cli.main(["--quiet", "thinset", "enum", "--config", str(bad)]) == 2


def test_thread_count_does_not_change_bytes(tmp_path):
    outs = []
    for threads in ("1", "8"):
        d = tmp_path / threads
        assert cli.main(["--quiet", "--out-dir", str(d), "expsum", "vaughan", "--xi", "3/7", "--m", "5",
                         "--tau", "1", "--poly", "1,1", "--range", "20000", "40000", "--threads", threads]) == 0
        outs.append((d / "expsum_vaughan.json").read_bytes())
    assert outs[0] == outs[1]


def test_preset_list(capsys):
    assert cli.main(["preset", "list"]) == 0
    assert "vaughan-exactness" in capsys.readouterr().out
