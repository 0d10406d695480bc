import json
import subprocess
import sys

import pytest

from picost.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def report(capsys, *argv):
    code, out, _ = run(capsys, *argv)
    return code, json.loads(out)


class TestCheck:
    def test_mergesort_span(self, capsys):
        code, rep = report(capsys, "check", "mergesort", "--mode", "span")
        assert code == 0 and rep["ok"]
        merge = next(d for d in rep["declarations"] if d["name"] == "merge")
        assert merge["synthesized"] == "i + j"

    def test_mergesort_io(self, capsys):
        assert report(capsys, "check", "mergesort", "--mode", "io")[0] == 0

    def test_mergesort_work(self, capsys):
        assert report(capsys, "check", "mergesort", "--mode", "work")[0] == 0

    def test_wrong_bound_has_witness(self, capsys):
        code, rep = report(capsys, "check", "merge-wrong-bound", "--mode", "span")
        assert code == 1 and not rep["ok"]
        bad = next(d for d in rep["declarations"] if not d["ok"])
        assert bad["name"] == "merge" and bad["witness"]

    def test_verbose_logs_to_stderr(self, capsys):
        code, out, err = run(capsys, "-v", "check", "tick-race")
        assert code == 0 and "entails" in err
        json.loads(out)

    def test_json_path(self, capsys, tmp_path):
        dest = tmp_path / "r.json"
        code, out, _ = run(capsys, "check", "empty", "--json", str(dest))
        assert code == 0 and out == ""
        assert json.loads(dest.read_text())["ok"]


class TestRun:
    def test_mergesort_four(self, capsys):
        code, rep = report(capsys, "run", "mergesort", "--bind", "input=[4, 6, 7, 2]", "--max-steps", "10000")
        assert code == 0 and rep["terminated"] and rep["span"] <= 8

    def test_race_exhaustive(self, capsys):
        code, rep = report(capsys, "run", "tick-race", "--policy", "exhaustive:1000", "--max-steps", "10000")
        assert code == 0 and rep["minSpan"] == rep["maxSpan"] == 1

    def test_race_any_interleaving(self, capsys):
        code, rep = report(capsys, "run", "tick-race", "--policy", "exhaustive:1000", "--any-interleaving")
        assert (rep["minSpan"], rep["maxSpan"]) == (1, 2)

    def test_empty_work(self, capsys):
        code, rep = report(capsys, "run", "empty", "--mode", "work", "--max-steps", "10")
        assert code == 0 and rep["work"] == 0

    def test_budget(self, capsys):
        code, rep = report(capsys, "run", "mergesort", "--bind", "input=[4, 6, 7, 2]", "--max-steps", "5")
        assert code == 3 and not rep["terminated"]

    def test_unbound_parameter(self, capsys):
        code, _, err = run(capsys, "run", "mergesort")
        assert code == 2 and "input" in err

    def test_bad_binding(self, capsys):
        assert run(capsys, "run", "mergesort", "--bind", "input")[0] == 2

    def test_bad_policy(self, capsys):
        assert run(capsys, "run", "empty", "--policy", "fifo")[0] == 2


class TestErrors:
    def test_missing_file(self, capsys):
        code, _, err = run(capsys, "check", "no-such-program")
        assert code == 2 and "no such file" in err

    def test_parse_error(self, capsys, tmp_path):
        f = tmp_path / "bad.pi"
        f.write_text("main = a<")
        assert run(capsys, "check", str(f))[0] == 2

    def test_usage(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["check", "--mode", "colour", "empty"])
        assert exc.value.code == 2


class TestCanonErase:
    def test_erase_tick(self, capsys, tmp_path):
        f = tmp_path / "t.pi"
        f.write_text("tick. 0")
        code, out, _ = run(capsys, "erase", str(f))
        assert code == 0 and out.strip() == "0"

    def test_canon_unit(self, capsys, tmp_path):
        f = tmp_path / "u.pi"
        f.write_text("a<0> | 0")
        assert run(capsys, "canon", str(f))[1].strip() == "a<0>"

    def test_canon_idempotent(self, capsys, tmp_path):
        f = tmp_path / "p.pi"
        f.write_text("new a in (a(x). tick. b<x> | (0 | new c in c<>)) | a<0>")
        once = run(capsys, "canon", str(f))[1]
        g = tmp_path / "q.pi"
        g.write_text(once)
        assert run(capsys, "canon", str(g))[1] == once

    def test_program_main(self, capsys):
        code, out, _ = run(capsys, "erase", "tick-race")
        assert code == 0 and "tick" not in out


def test_module_entry_point_exit_code():
    proc = subprocess.run([sys.executable, "-m", "picost", "check", "merge-wrong-bound"], capture_output=True, text=True)
    assert proc.returncode == 1
    assert json.loads(proc.stdout)["ok"] is False
