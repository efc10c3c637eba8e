import csv
import io
import subprocess
import sys

import pytest

from paulithresh.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


class TestEntropy:
    def test_rep5_at_threshold(self, capsys):
        code, out, _ = run(capsys, "entropy", "--family", "depolarizing", "--rep", "5,bit", "--p", "0.0634520293")
        assert code == 0
        (r,) = rows(out)
        assert abs(float(r["entropy"]) - 1.0) <= 1e-8
        assert r["std_error"] == "" and r["level"] == "1"

    def test_identity_channel(self, capsys):
        code, out, _ = run(capsys, "entropy", "--family", "custom:1,0,0,0", "--rep", "3,bit", "--p", "0")
        assert code == 0
        assert float(rows(out)[0]["entropy"]) == 0.0

    def test_header_comment(self, capsys):
        _, out, _ = run(capsys, "entropy", "--rep", "3,bit", "--p", "0.05", "--seed", "9")
        first = out.splitlines()[0]
        assert first.startswith("# paulithresh ") and "config=" in first and "seed=9" in first
        assert out.splitlines()[1] == "level,p,entropy,std_error,samples,seed"

    def test_all_levels(self, capsys):
        _, out, _ = run(capsys, "entropy", "--stack", "rep3bit,rep2phase", "--p", "0.05,0.06", "--all-levels")
        assert [(r["level"], r["p"]) for r in rows(out)] == [("1", "0.05"), ("2", "0.05"), ("1", "0.06"), ("2", "0.06")]

    def test_composite_pair(self, capsys):
        _, a, _ = run(capsys, "entropy", "--n1", "3", "--n2", "4", "--p", "0.06")
        _, b, _ = run(capsys, "entropy", "--stack", "3in4", "--p", "0.06")
        assert float(rows(a)[0]["entropy"]) == pytest.approx(float(rows(b)[0]["entropy"]), abs=1e-11)

    def test_monte_carlo(self, capsys):
        argv = ("entropy", "--stack", "five513x2", "--p", "0.05", "--samples", "500", "--seed", "7")
        _, a, _ = run(capsys, *argv)
        _, b, _ = run(capsys, *argv)
        assert a == b
        r = rows(a)
        assert [x["level"] for x in r] == ["1", "2"]
        assert all(float(x["std_error"]) > 0 and x["samples"] == "500" for x in r)

    def test_mc_subcommand(self, capsys):
        code, out, _ = run(capsys, "mc", "--stack", "five513", "--p", "0.05", "--samples", "300")
        assert code == 0 and len(rows(out)) == 1


class TestThreshold:
    def test_independent_5in77(self, capsys):
        _, out, _ = run(capsys, "threshold", "--family", "independent-sym", "--n1", "5", "--n2", "77")
        r = rows(out)[0]
        assert float(r["p"]) == pytest.approx(0.1127458434, abs=1e-9)
        assert r["method"] == "exact" and r["code"] == "rep5bit,rep77phase"

    def test_hashing_via_trivial_code(self, capsys):
        _, out, _ = run(capsys, "threshold", "--family", "depolarizing", "--n1", "1", "--n2", "1")
        assert float(rows(out)[0]["p"]) == pytest.approx(0.06309654163841059, abs=1e-11)

    def test_percent(self, capsys):
        _, out, _ = run(capsys, "threshold", "--rep", "7,bit", "--family", "two-pauli", "--percent")
        assert float(rows(out)[0]["p"]) == pytest.approx(11.32891165, abs=1e-7)

    def test_bracket_and_brent(self, capsys):
        _, out, _ = run(capsys, "threshold", "--rep", "3,bit", "--bracket", "0.05,0.07", "--method", "brent")
        assert float(rows(out)[0]["p"]) == pytest.approx(0.0622, abs=2e-3)

    def test_mc(self, capsys):
        code, out, _ = run(capsys, "threshold", "--stack", "rep3bit", "--grid", "0.058:0.066:5",
                           "--samples", "4000", "--seed", "1")
        r = rows(out)[0]
        assert code == 0 and r["method"] == "mc" and float(r["uncertainty"]) > 0


def test_sweep(capsys):
    _, out, _ = run(capsys, "sweep", "--n1", "1", "--n2-range", "1:8")
    r = rows(out)
    assert [x["n2"] for x in r if x["optimal"] == "true"] == ["5"]


class TestFrontier:
    def test_two_pauli_zero(self, capsys):
        _, out, _ = run(capsys, "frontier", "--kind", "two-pauli", "--grid", "0", "--n1-values", "1:9")
        r = rows(out)[0]
        assert float(r["bit"]) == pytest.approx(0.1133392680, abs=1e-9) and r["bit_n1"] == "5"

    def test_independent_symmetric_point(self, capsys):
        _, out, _ = run(capsys, "frontier", "--grid", "0.1127458434", "--n1-values", "5:5", "--n2-range", "74:80")
        r = rows(out)[0]
        assert float(r["bit_in_phase"]) == pytest.approx(0.1127458434, abs=1e-9)
        assert float(r["phase_in_bit"]) == pytest.approx(0.1127458434, abs=1e-9)
        assert r["bit_in_phase_code"] == r["phase_in_bit_code"] == "5in77"

    def test_no_phase_flips(self, capsys):
        _, out, _ = run(capsys, "frontier", "--grid", "0", "--n1-values", "1:5", "--n2-range", "1:3")
        r = rows(out)[0]
        # without phase flips every bit-flip rate below 1/2 is correctable
        assert float(r["bit"]) == pytest.approx(0.5, abs=1e-9)


class TestTableAndBound:
    def test_table_3(self, capsys):
        _, out, _ = run(capsys, "table", "--id", "3")
        r = rows(out)
        assert r[4]["two-pauli"] and float(r[4]["two-pauli"]) == pytest.approx(0.1133392680, abs=1e-9)
        assert r[-1]["src"] == "closed-form"

    def test_bound(self, capsys):
        _, out, _ = run(capsys, "bound", "--family", "two-pauli")
        r = {x["bound"]: x for x in rows(out)}
        assert float(r["upper"]["p"]) == pytest.approx(1 / 6, abs=1e-10)
        assert float(r["hashing"]["entropy"]) == pytest.approx(1.0, abs=1e-10)


class TestExitCodes:
    def test_config_error(self, capsys):
        code, _, err = run(capsys, "entropy", "--family", "amplitude", "--rep", "3,bit", "--p", "0.1")
        assert code == 2 and "config error" in err

    def test_missing_p(self, capsys):
        assert run(capsys, "entropy", "--rep", "3,bit")[0] == 2

    def test_conflicting_codes(self, capsys):
        assert run(capsys, "entropy", "--rep", "3,bit", "--stack", "five513", "--p", "0.1")[0] == 2

    def test_bad_table(self, capsys):
        assert run(capsys, "table", "--id", "9")[0] == 2

    def test_argparse_error(self, capsys):
        assert run(capsys, "entropy", "--samples", "many")[0] == 2

    def test_budget(self, capsys):
        code, _, err = run(capsys, "entropy", "--n1", "7", "--n2", "134", "--p", "0.06", "--budget", "1e6")
        assert code == 3 and "budget" in err

    def test_numerical(self, capsys):
        code, _, err = run(capsys, "threshold", "--rep", "3,bit", "--bracket", "0.0,0.01")
        assert code == 4 and "numerical" in err


class TestConfig:
    def test_file_and_precedence(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# run\nfamily = two-pauli\nrep = 7,bit\npercent = true\n")
        _, out, _ = run(capsys, "threshold", "--config", str(cfg))
        assert float(rows(out)[0]["p"]) == pytest.approx(11.32891165, abs=1e-7)
        _, out, _ = run(capsys, "threshold", "--config", str(cfg), "--family", "depolarizing")
        assert float(rows(out)[0]["p"]) < 7.0

    def test_unknown_key(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("colour = blue\n")
        assert run(capsys, "threshold", "--config", str(cfg))[0] == 2

    def test_missing_file(self, capsys, tmp_path):
        assert run(capsys, "threshold", "--config", str(tmp_path / "none.cfg"))[0] == 2

    def test_output_file(self, capsys, tmp_path):
        out = tmp_path / "r.csv"
        run(capsys, "entropy", "--rep", "3,bit", "--p", "0.05", "-o", str(out))
        first = out.read_text()
        run(capsys, "entropy", "--rep", "3,bit", "--p", "0.05", "-o", str(out))
        assert out.read_text() == first and first.startswith("# paulithresh")


def test_stack_file(capsys, tmp_path):
    f = tmp_path / "ladder.stack"
    f.write_text("rep 5 bit\nrep 2 phase\nrep 2 phase\n")
    _, a, _ = run(capsys, "entropy", "--stack", str(f), "--p", "0.0636")
    _, b, _ = run(capsys, "entropy", "--n1", "5", "--n2", "4", "--p", "0.0636")
    assert float(rows(a)[0]["entropy"]) == pytest.approx(float(rows(b)[0]["entropy"]), abs=1e-11)


def test_console_entry_point_byte_identical():
    argv = [sys.executable, "-m", "paulithresh", "entropy", "--stack", "five513", "--p", "0.05",
            "--samples", "200", "--seed", "3"]
    a = subprocess.run(argv, capture_output=True, text=True, check=True).stdout
    b = subprocess.run(argv + ["--workers", "2"], capture_output=True, text=True, check=True).stdout
    assert a == b and a.startswith("# paulithresh")
