"""Tests for the command-line front end: parsing, outputs, exit codes."""

import csv
import io
import json

import numpy as np
import pytest

import schedchain.cli as cli
from schedchain.cli import RunSpec, execute, main, parse_args, render_csv

PB_ARG = "0.27,0.15,0.17,0.18,0.23"
PB5 = (0.27, 0.15, 0.17, 0.18, 0.23)


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def parse_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], rows[1:]


# ---------------------------------------------------------------------------
# argument parsing


def test_parse_args_mixture_run():
    spec = parse_args(
        ["run", "--scheme", "III_A", "--p", "0.5", "--pb", PB_ARG, "--quanta", "50"]
    )
    assert spec.command == "run"
    assert spec.scheme == "III_A"
    assert spec.free == {"p": 0.5}
    assert spec.pb == PB5
    assert spec.quanta == 50
    assert spec.fmt == "csv"


@pytest.mark.parametrize(
    "argv",
    [
        ["run", "--scheme", "I_A", "--pb", "1.0", "--quanta", "5"],   # m == 1
        ["run", "--scheme", "I_A", "--pb", "0.5,0.4"],                # mass != 1
        ["run", "--scheme", "NOPE", "--pb", PB_ARG],                  # unknown scheme
        ["run", "--scheme", "I_A", "--pb", "a,b"],                    # not numbers
        ["simulate", "--scheme", "I_A", "--pb", PB_ARG, "--walks", "0"],
        ["simulate", "--scheme", "I_A", "--pb", PB_ARG, "--seed", "-3"],
        ["compare", "--preset", "I_B:r=0.2", "--pb", PB_ARG, "--r", "0.1"],
        [],
    ],
)
def test_usage_errors_exit_2(argv):
    with pytest.raises(SystemExit) as exc:
        parse_args(argv)
    assert exc.value.code == 2


def test_constraint_violation_exits_3(capsys):
    code, _, err = run_cli(
        capsys, "run", "--scheme", "II_A", "--s", "0.3", "--pb", PB_ARG
    )
    assert code == 3
    assert "constraint" in err


def test_missing_pb_for_scheme_exits_2(capsys):
    code, _, err = run_cli(capsys, "run", "--scheme", "I_A", "--quanta", "5")
    assert code == 2
    assert "pb" in err


# ---------------------------------------------------------------------------
# trajectory outputs


def test_run_fifo_rows_are_constant(capsys):
    code, out, _ = run_cli(
        capsys, "run", "--scheme", "I_A", "--pb", PB_ARG, "--quanta", "2"
    )
    assert code == 0
    header, rows = parse_csv(out)
    assert header == ["quantum", "P1", "P2", "P3", "P4", "P5", "D"]
    assert len(rows) == 3
    assert rows[0][1:] == rows[1][1:] == rows[2][1:]
    assert [r[0] for r in rows] == ["0", "1", "2"]


def test_run_pinned_start_cycles_unit_mass(capsys):
    code, out, _ = run_cli(
        capsys, "run", "--scheme", "IV", "--m", "5", "--quanta", "5"
    )
    assert code == 0
    _, rows = parse_csv(out)
    for n, row in enumerate(rows):
        values = [float(v) for v in row[1:]]
        expected = [0.0] * 6
        expected[n % 5] = 1.0
        assert values == expected


def test_every_csv_row_sums_to_one(capsys):
    for argv in (
        ["run", "--scheme", "III_B", "--p", "0.417", "--r", "0.166", "--pb", PB_ARG],
        ["closed-form", "--scheme", "II_B", "--r", "0.166", "--pb", PB_ARG],
        ["simulate", "--scheme", "I_B", "--r", "0.166", "--pb", PB_ARG,
         "--quanta", "10", "--walks", "5000", "--seed", "9"],
        ["run", "--q", "0.4", "--s", "0.6", "--pb", PB_ARG],  # raw parameters
    ):
        code, out, _ = run_cli(capsys, *argv)
        assert code == 0
        _, rows = parse_csv(out)
        for row in rows:
            assert abs(sum(float(v) for v in row[1:]) - 1.0) <= 1e-9


def test_closed_form_requires_scheme():
    with pytest.raises(SystemExit) as exc:
        parse_args(["closed-form", "--pb", PB_ARG])
    assert exc.value.code == 2


def test_csv_uses_lf_and_significant_digits(tmp_path):
    spec = parse_args(
        ["run", "--scheme", "I_B", "--r", "0.166", "--pb", PB_ARG, "--quanta", "3"]
    )
    text = render_csv(execute(spec))
    assert "\r" not in text
    assert text.endswith("\n")
    _, rows = parse_csv(text)
    assert rows[1][1] == "0.22518"
    for row in rows:
        for cell in row[1:]:
            # 12 significant digits, no locale artifacts, stable reformatting
            assert cell == format(float(cell), ".12g")


# ---------------------------------------------------------------------------
# determinism


def test_simulate_is_byte_identical_across_runs(capsys):
    argv = [
        "simulate", "--scheme", "I_B", "--r", "0.166", "--pb", PB_ARG,
        "--quanta", "10", "--walks", "20000", "--seed", "42",
    ]
    code1, out1, _ = run_cli(capsys, *argv)
    code2, out2, _ = run_cli(capsys, *argv)
    assert code1 == code2 == 0
    assert out1 == out2


def test_json_meta_round_trips_byte_identically(capsys):
    argv = [
        "simulate", "--scheme", "II_B", "--p", "0.834", "--pb", PB_ARG,
        "--quanta", "8", "--walks", "4000", "--seed", "77", "--format", "json",
    ]
    code, out, _ = run_cli(capsys, *argv)
    assert code == 0
    meta = json.loads(out)["meta"]
    respec = RunSpec.from_meta(meta)
    payload = execute(respec)
    assert cli.render_json(payload) == out


# ---------------------------------------------------------------------------
# compare and absorb


def test_compare_ranks_mixture_first(capsys):
    code, out, _ = run_cli(
        capsys,
        "compare",
        "--preset", "I_B:r=0.166",
        "--preset", "II_B:r=0.166",
        "--preset", "III_B:p=0.417,r=0.166",
        "--pb", PB_ARG,
        "--quanta", "50",
        "--format", "json",
    )
    assert code == 0
    report = json.loads(out)
    assert report["ranking"][0] == "III_B"
    assert {entry["scheme"] for entry in report["schemes"]} == {"I_B", "II_B", "III_B"}
    by_scheme = {entry["scheme"]: entry for entry in report["schemes"]}
    assert by_scheme["I_B"]["expected_absorption"] == pytest.approx(1 / 0.166)


def test_compare_csv_is_long_form(capsys):
    code, out, _ = run_cli(
        capsys, "compare", "--preset", "I_A", "--pb", PB_ARG, "--quanta", "3"
    )
    assert code == 0
    header, rows = parse_csv(out)
    assert header == ["scheme", "quantum", "survival", "fairness", "efficiency_index"]
    assert len(rows) == 4
    assert all(row[0] == "I_A" for row in rows)


def test_absorb_summary_and_histogram(capsys):
    code, out, _ = run_cli(
        capsys,
        "absorb", "--scheme", "I_B", "--r", "0.5", "--pb", PB_ARG,
        "--quanta", "60", "--walks", "3000", "--seed", "4", "--format", "json",
    )
    assert code == 0
    doc = json.loads(out)
    summary = doc["summary"]
    assert summary["n_walks"] == 3000
    hit_total = sum(row[1] for row in doc["rows"][:-1])
    assert hit_total + summary["n_censored"] == 3000
    assert summary["mean_first_hit"] == pytest.approx(2.0, rel=0.1)  # 1/r, r = 0.5
    censored_row = doc["rows"][-1]
    assert censored_row == [-1, summary["n_censored"]]


# ---------------------------------------------------------------------------
# verification and failure paths


def test_verify_passes_for_preset(capsys):
    code, out, _ = run_cli(
        capsys,
        "run", "--scheme", "III_A", "--p", "0.5", "--pb", PB_ARG,
        "--quanta", "40", "--verify",
    )
    assert code == 0
    assert out  # output still emitted


def test_verify_needs_a_scheme(capsys):
    code, _, err = run_cli(
        capsys, "run", "--p", "1.0", "--pb", PB_ARG, "--verify"
    )
    assert code == 2
    assert "closed form" in err


def test_verify_detects_divergence(capsys, monkeypatch):
    from schedchain import Trajectory, Distribution

    def skewed(preset, n):
        rows = []
        for k in range(n + 1):
            probs = np.array(preset.init.probs)
            probs[0] += 1e-6 * (k > 0)
            probs[1] -= 1e-6 * (k > 0)
            rows.append(Distribution(probs, quantum=k))
        return Trajectory(tuple(rows))

    monkeypatch.setattr(cli, "closed_form_trajectory", skewed)
    code, _, err = run_cli(
        capsys, "run", "--scheme", "I_A", "--pb", PB_ARG, "--quanta", "3", "--verify"
    )
    assert code == 1
    assert "diverge" in err


def test_output_file_and_io_failure(tmp_path, capsys):
    target = tmp_path / "out.csv"
    code, _, _ = run_cli(
        capsys,
        "run", "--scheme", "I_A", "--pb", PB_ARG, "--quanta", "2",
        "--output", str(target),
    )
    assert code == 0
    assert target.read_text().startswith("quantum,P1")

    code, _, err = run_cli(
        capsys,
        "run", "--scheme", "I_A", "--pb", PB_ARG,
        "--output", str(tmp_path / "missing" / "out.csv"),
    )
    assert code == 4
    assert "cannot write" in err
