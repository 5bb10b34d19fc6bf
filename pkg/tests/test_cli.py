import csv
import json
import subprocess
import sys
from fractions import Fraction

import pytest

from conftest import fib_batch
from zeckgap import __version__
from zeckgap.cli import EXIT_BUDGET, EXIT_CONFIG, EXIT_FINDING, EXIT_OK, build_parser, config_hash, main, parse_n_range
from zeckgap.gapstats import average_gap_measure


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def csv_body(text):
    return list(csv.reader(line for line in text.splitlines() if not line.startswith("#")))


def test_decompose_human_readable(capsys):
    code, out, _ = run(capsys, "decompose", "100", "12")
    assert code == EXIT_OK
    assert out.splitlines() == ["100 = F_10 + F_5 + F_3 (89+8+3)", "12 = F_5 + F_3 + F_1 (8+3+1)"]


def test_decompose_json(capsys):
    code, out, _ = run(capsys, "decompose", "100", "--format", "json")
    doc = json.loads(out)
    assert doc["decompositions"] == [{"z": 100, "k": 3, "indices": [3, 5, 10]}]
    assert doc["tool"] == "zeckgap" and doc["version"] == __version__


def test_decompose_rejects_zero(capsys):
    code, _, err = run(capsys, "decompose", "0")
    assert code == EXIT_CONFIG and "error" in err


def test_seq_csv(capsys):
    code, out, _ = run(capsys, "seq", "--count", "6")
    lines = out.splitlines()
    assert lines[0].startswith(f"# zeckgap {__version__} seq config=")
    assert csv_body(out) == [["i", "b_i"], ["1", "1"], ["2", "2"], ["3", "3"], ["4", "5"], ["5", "8"], ["6", "13"]]


def test_seq_inline_family(capsys):
    code, out, _ = run(capsys, "seq", "--coefficients", "1,1,1", "--initial", "1,2,4", "--count", "5", "--format", "json")
    doc = json.loads(out)
    assert doc["terms"] == [1, 2, 4, 7, 13]
    assert doc["dominant_root"] == pytest.approx(1.839286755214161)


def test_gaps_n5(capsys):
    code, out, _ = run(capsys, "gaps", "--n", "5")
    assert code == EXIT_OK
    assert csv_body(out) == [
        ["g", "count", "probability", "numerator", "denominator"],
        ["2", "3", "0.6", "3", "5"],
        ["3", "1", "0.2", "1", "5"],
        ["4", "1", "0.2", "1", "5"],
    ]


def test_gaps_individual(capsys):
    code, out, _ = run(capsys, "gaps", "--individual", "100", "--format", "json")
    doc = json.loads(out)
    assert doc["z"] == 100
    assert [(r["g"], r["probability"]) for r in doc["masses"]] == [(2, "1/2"), (5, "1/2")]


def test_gaps_needs_scope(capsys):
    assert run(capsys, "gaps")[0] == EXIT_CONFIG
    assert run(capsys, "gaps", "--individual", "8")[0] == EXIT_CONFIG


def test_gaps_json_round_trip_at_15_digits(capsys):
    _, out, _ = run(capsys, "gaps", "--n", "17", "--format", "json")
    doc = json.loads(out)
    exact = average_gap_measure(fib_batch(17))
    for row in doc["masses"]:
        assert Fraction(row["probability"]) == exact(row["g"])
    _, out, _ = run(capsys, "gaps", "--n", "17")
    for g, _, prob, num, den in csv_body(out)[1:]:
        assert float(prob) == pytest.approx(float(exact(int(g))), rel=1e-14)
        assert Fraction(int(num), int(den)) == exact(int(g))


def test_dump_streams_interval(capsys):
    code, out, _ = run(capsys, "dump", "--n", "5")
    assert csv_body(out)[1:] == [["8", "1", "5"], ["9", "2", "1;5"], ["10", "2", "2;5"], ["11", "2", "3;5"], ["12", "3", "1;3;5"]]


def test_budget_exit_code(capsys):
    code, _, err = run(capsys, "dump", "--n", "40")
    assert code == EXIT_BUDGET
    assert "sample" in err


def test_unknown_family_exit_code(capsys):
    code, _, err = run(capsys, "seq", "--family", "lucas")
    assert code == EXIT_CONFIG and "lucas" in err


def test_bad_interval_and_range(capsys):
    assert run(capsys, "gaps", "--n", "5", "--c1", "1", "--d1", "0", "--c2", "1", "--d2", "0")[0] == EXIT_CONFIG
    assert run(capsys, "converge", "--n-range", "9:5")[0] == EXIT_CONFIG
    assert run(capsys, "gaps", "--n", "5", "--samples", "0", "--mode", "sample")[0] == EXIT_CONFIG


def test_argparse_errors_use_config_code(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["gaps", "--n", "five"])
    assert exc.value.code == EXIT_CONFIG


def test_parse_n_range():
    assert parse_n_range("10:20:5") == [10, 15, 20]
    assert parse_n_range("12,18,24") == [12, 18, 24]


def test_family_file(tmp_path, capsys):
    path = tmp_path / "fam.json"
    path.write_text(json.dumps({"families": [{"name": "pellish", "coefficients": [2, 1], "initial_terms": [1, 3]}]}))
    code, out, _ = run(capsys, "seq", "--family", "pellish", "--family-file", str(path), "--count", "4")
    assert code == EXIT_OK
    assert csv_body(out)[1:] == [["1", "1"], ["2", "3"], ["3", "7"], ["4", "17"]]


def test_verify_uniqueness_ok_and_violation(capsys):
    code, out, _ = run(capsys, "verify-uniqueness", "--z-max", "500")
    assert code == EXIT_OK and "violations=0" in out
    code, out, _ = run(capsys, "verify-uniqueness", "--coefficients", "1,1", "--initial", "1,3", "--z-max", "30")
    assert code == EXIT_FINDING


def test_converge_report(capsys):
    code, out, _ = run(capsys, "converge", "--n-range", "10:16:3", "--epsilon", "0.5")
    rows = csv_body(out)
    assert rows[0] == ["n", "count", "mean_distance", "median", "max", "fraction_above_epsilon"]
    assert [r[0] for r in rows[1:]] == ["10", "13", "16"]


def test_decay_report(capsys):
    code, out, _ = run(capsys, "decay", "--n", "20", "--format", "json")
    fit = json.loads(out)["fit"]
    assert fit["r_squared"] > 0.999
    assert fit["inverse_lambda"] == pytest.approx(0.618033988749895)


def test_theorem_check_json(capsys):
    code, out, _ = run(capsys, "theorem-check", "--n-range", "8:12", "--t-grid", "0,1")
    assert code == EXIT_OK
    doc = json.loads(out)
    assert [r["n"] for r in doc["per_n"]] == list(range(8, 13))
    assert doc["verdicts"]["variance_at_zero_is_zero"] is True
    assert run(capsys, "theorem-check", "--format", "csv")[0] == EXIT_CONFIG


def test_config_hash_ignores_workers_only():
    p = build_parser()
    a = p.parse_args(["gaps", "--n", "5", "--workers", "1"])
    b = p.parse_args(["gaps", "--n", "5", "--workers", "3", "--reproducible"])
    c = p.parse_args(["gaps", "--n", "6"])
    assert config_hash(a) == config_hash(b) != config_hash(c)


@pytest.mark.parametrize(
    "argv",
    [
        ["gaps", "--n", "18"],
        ["converge", "--n-range", "10:14:2", "--format", "json"],
        ["theorem-check", "--n-range", "9:11", "--t-grid", "0.5,1"],
        ["gaps", "--n", "30", "--mode", "sample", "--samples", "40000", "--seed", "9"],
    ],
)
def test_reports_are_byte_identical(tmp_path, argv):
    a, b = tmp_path / "a.out", tmp_path / "b.out"
    assert main(argv + ["--workers", "1", "-o", str(a)]) == EXIT_OK
    assert main(argv + ["--workers", "2", "-o", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()


def test_reference_cache(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("ZECKGAP_CACHE_DIR", str(tmp_path / "cache"))
    argv = ["converge", "--n-range", "10:12", "--ref-n", "16"]
    _, first, _ = run(capsys, *argv)
    assert len(list((tmp_path / "cache").glob("ref-*.json"))) == 1
    _, second, _ = run(capsys, *argv)
    assert first == second


def test_console_script_module_entry():
    proc = subprocess.run(
        [sys.executable, "-m", "zeckgap.cli", "decompose", "12"], capture_output=True, text=True, check=True
    )
    assert proc.stdout.strip() == "12 = F_5 + F_3 + F_1 (8+3+1)"


def test_json_floats_carry_15_digits(capsys):
    _, out, _ = run(capsys, "converge", "--n-range", "12", "--format", "json")
    row = json.loads(out)["rows"][0]
    value = row["mean_distance"]
    assert repr(value) in out
    assert float(f"{value:.15g}") == value
