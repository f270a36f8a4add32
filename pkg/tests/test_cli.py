"""CLI surface tests: subcommand behavior, exit codes, determinism, and the
simulate -> procedure round trip."""

import json
import math

import numpy as np
import pytest

from fdpband.cli import main


def run_cli(args):
    return main(args)


def write_labeled(path, labels, scores=None):
    if scores is None:
        scores = range(len(labels), 0, -1)
    path.write_text("".join(f"{l:+d}\t{float(s)!r}\n" for l, s in zip(labels, scores)))


def test_tdc_all_decoys(tmp_path, capsys):
    data = tmp_path / "d.tsv"
    write_labeled(data, [-1, -1, -1])
    assert run_cli(["tdc", "--alpha", "0.05", "--input", str(data)]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["k"] == 0
    assert payload["procedure"] == "tdc"
    assert payload["schema"] == "fdpband-report v1"


def test_compete_and_pairs_flow(tmp_path, capsys):
    pairs = tmp_path / "pairs.tsv"
    pairs.write_text("3.0\t1.0\n2.9\t1.0\n2.8\t1.0\n1.0\t4.0\n")
    out = tmp_path / "labeled.tsv"
    assert run_cli(["compete", "--input", str(pairs), "--output", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("+1\t3.0")
    assert lines[3].startswith("-1\t4.0")
    # pairs files feed procedure commands directly; top-4 estimate is 2/3
    assert run_cli(["tdc", "--alpha", "0.7", "--input", str(pairs)]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["k"] == 4 and payload["num_targets"] == 3


def test_fdp_sd_subcommand(tmp_path, capsys):
    data = tmp_path / "d.tsv"
    write_labeled(data, [1, 1, -1, -1])
    assert run_cli(["fdp-sd", "--alpha", "0.5", "--gamma", "0.5",
                    "--input", str(data)]) == 0
    assert json.loads(capsys.readouterr().out)["k"] == 3
    assert run_cli(["fdp-sd", "--alpha", "0.5", "--gamma", "0.5", "--randomized",
                    "--input", str(data)]) == 0
    assert json.loads(capsys.readouterr().out)["k"] >= 3


def test_bound_krb_example(tmp_path, capsys):
    data = tmp_path / "d.tsv"
    write_labeled(data, [1] * 100)
    assert run_cli(["bound", "--method", "krb", "--gamma", "0.05",
                    "--alpha", "0.05", "--input", str(data)]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["bound"] == pytest.approx(0.044857, abs=1e-5)
    assert payload["num_targets"] == 100


def test_bound_requires_alpha_or_report(tmp_path):
    data = tmp_path / "d.tsv"
    write_labeled(data, [1, -1])
    assert run_cli(["bound", "--method", "krb", "--gamma", "0.05",
                    "--input", str(data)]) == 2


def test_bound_with_prior_report(tmp_path, capsys):
    data = tmp_path / "d.tsv"
    write_labeled(data, [1] * 50)
    report = tmp_path / "tdc.json"
    assert run_cli(["tdc", "--alpha", "0.1", "--input", str(data),
                    "--output", str(report)]) == 0
    assert run_cli(["bound", "--method", "krb", "--gamma", "0.05",
                    "--tdc-report", str(report), "--input", str(data)]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["bound"] == pytest.approx(4.4857 / 50, abs=1e-4)

    # a report that does not match the data is a data error
    write_labeled(data, [1] * 49 + [-1])
    assert run_cli(["bound", "--method", "krb", "--gamma", "0.05",
                    "--tdc-report", str(report), "--input", str(data)]) == 3


def test_precompute_analytic_entry(tmp_path, capsys):
    out = tmp_path / "tables"
    assert run_cli(["precompute", "--d0", "1", "--gammas", "0.05",
                    "--samples", "100000", "--out", str(out)]) == 0
    capsys.readouterr()
    from fdpband import load_table

    uniform = load_table(f"{out}.uniform.tsv")
    assert uniform.entry(0.05, 1)[0] == 2.0 ** -5
    standardized = load_table(f"{out}.standardized.tsv")
    assert abs(standardized.entry(0.05, 1) - 3 / math.sqrt(2)) <= 1e-12


def test_simulate_round_trip_generic_null(tmp_path, capsys):
    data = tmp_path / "sim.tsv"
    truth = tmp_path / "truth.tsv"
    assert run_cli(["simulate", "--model", "generic-null", "--m", "200",
                    "--num-false", "50", "--seed", "5",
                    "--output", str(data), "--truth-out", str(truth)]) == 0
    assert len(data.read_text().splitlines()) == 200
    truth_vals = [int(x) for x in truth.read_text().split()]
    assert sum(truth_vals) == 150
    for args in (["tdc", "--alpha", "0.2"],
                 ["fdp-sd", "--alpha", "0.2", "--gamma", "0.1"],
                 ["fdp-band", "--band", "kr", "--alpha", "0.2", "--gamma", "0.1"]):
        assert run_cli(args + ["--input", str(data)]) == 0
        capsys.readouterr()


def test_simulate_round_trip_spectrum_id(tmp_path, capsys):
    data = tmp_path / "sim.tsv"
    assert run_cli(["simulate", "--model", "spectrum-id", "--m", "300",
                    "--pi0", "0.5", "--seed", "6", "--output", str(data)]) == 0
    rows = data.read_text().splitlines()
    assert len(rows) == 300
    assert all(len(r.split("\t")) == 2 for r in rows)
    assert run_cli(["tdc", "--alpha", "0.2", "--input", str(data)]) == 0
    capsys.readouterr()
    assert run_cli(["fdp-sd", "--alpha", "0.2", "--gamma", "0.1",
                    "--input", str(data)]) == 0
    capsys.readouterr()


def test_exit_codes(tmp_path, capsys):
    missing = tmp_path / "missing.tsv"
    assert run_cli(["tdc", "--alpha", "0.1", "--input", str(missing)]) == 3
    bad = tmp_path / "bad.tsv"
    bad.write_text("not\tnumeric\n")
    assert run_cli(["tdc", "--alpha", "0.1", "--input", str(bad)]) == 3
    data = tmp_path / "d.tsv"
    write_labeled(data, [1, -1])
    assert run_cli(["tdc", "--alpha", "1.5", "--input", str(data)]) == 3
    # uniform band without a table is a configuration error
    assert run_cli(["fdp-band", "--band", "uniform", "--alpha", "0.1",
                    "--gamma", "0.05", "--input", str(data)]) == 4
    capsys.readouterr()
    with pytest.raises(SystemExit) as exc:
        main(["tdc", "--alpha"])  # argparse usage error
    assert exc.value.code == 2
    capsys.readouterr()


def test_labeled_format_autodetect_and_override(tmp_path, capsys):
    tricky = tmp_path / "tricky.tsv"
    # every first field is +-1, so auto mode reads it as labeled; an explicit
    # --format pairs forces the competition reading (where these rows are all
    # decoy wins)
    tricky.write_text("1.0\t5.0\n1.0\t4.0\n-1.0\t3.0\n")
    assert run_cli(["tdc", "--alpha", "0.9", "--input", str(tricky)]) == 0
    as_labeled = json.loads(capsys.readouterr().out)
    assert run_cli(["tdc", "--alpha", "0.9", "--format", "pairs",
                    "--input", str(tricky)]) == 0
    as_pairs = json.loads(capsys.readouterr().out)
    assert as_labeled["k"] == 2 and as_labeled["num_targets"] == 2
    assert as_pairs["k"] == 0


def test_cli_byte_determinism(tmp_path):
    data = tmp_path / "sim.tsv"
    run_cli(["simulate", "--model", "spectrum-id", "--m", "150", "--seed", "9",
             "--output", str(data)])
    outs = []
    for run in range(2):
        out = tmp_path / f"r{run}.json"
        assert run_cli(["fdp-sd", "--alpha", "0.1", "--gamma", "0.05",
                        "--randomized", "--seed", "17",
                        "--input", str(data), "--output", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_evaluate_smoke(tmp_path):
    out = tmp_path / "summary.json"
    csv_out = tmp_path / "rows.csv"
    assert run_cli(["evaluate", "--model", "generic-null", "--m", "150",
                    "--num-false", "0", "--procedures", "tdc,fdp-sd",
                    "--alpha", "0.1", "--gamma", "0.1", "--replicates", "100",
                    "--seed", "4", "--output", str(out),
                    "--csv-out", str(csv_out)]) == 0
    payload = json.loads(out.read_text())
    assert payload["replicates"] == 100
    assert csv_out.read_text().splitlines()[0] == "# fdpband-replicates v1"
