import json

import numpy as np
import pytest

from optray.cli import main


@pytest.fixture
def mixed_csv(tmp_path):
    path = tmp_path / "mixed.csv"
    assert main(["synth", "--kind", "mixed", "--n-per-class", "6", "--seed", "3", "--out", str(path)]) == 0
    return path


@pytest.fixture
def canonical_csv(tmp_path):
    path = tmp_path / "canonical.csv"
    path.write_text("f1,f2,label\n1,0,1\n0,1,1\n0,1,-1\n")
    return path


def test_synth_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["synth", "--kind", "separable", "--n-per-class", "5", "--seed", "1", "--out", str(a)])
    main(["synth", "--kind", "separable", "--n-per-class", "5", "--seed", "1", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_decompose_canonical(canonical_csv, tmp_path, capsys):
    out = tmp_path / "dec"
    code = main(["decompose", "--input", str(canonical_csv), "--out", str(out)])
    assert code == 0
    printed = capsys.readouterr().out
    assert "sep=1 sc=2" in printed
    assert "margin=1" in printed
    dec = json.loads((out / "decomposition.json").read_text())
    assert dec["sep_rows"] == [0] and dec["sc_rows"] == [1, 2]
    margin = json.loads((out / "margin.json").read_text())
    assert margin["margin"] == pytest.approx(1.0, abs=1e-9)
    scvx = json.loads((out / "scvx.json").read_text())
    assert scvx["risk_inf"] == pytest.approx(2 * np.log(2) / 3, abs=1e-10)


def test_decompose_separable_has_no_scvx_file(tmp_path):
    out = tmp_path / "dec"
    code = main(
        ["decompose", "--synth-kind", "separable", "--n-per-class", "8", "--seed", "2", "--out", str(out)]
    )
    assert code == 0
    assert (out / "decomposition.json").exists()
    assert (out / "margin.json").exists()
    assert not (out / "scvx.json").exists()


def test_run_deterministic(mixed_csv, tmp_path):
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    argv = ["run", "--input", str(mixed_csv), "--loss", "logistic", "--schedule", "inv_sqrt", "--steps", "500"]
    assert main(argv + ["--out", str(out1)]) == 0
    assert main(argv + ["--out", str(out2)]) == 0
    assert (out1 / "trace.csv").read_bytes() == (out2 / "trace.csv").read_bytes()


def test_run_single_step(canonical_csv, tmp_path):
    out = tmp_path / "r"
    assert main(["run", "--input", str(canonical_csv), "--steps", "1", "--out", str(out)]) == 0
    lines = (out / "trace.csv").read_text().strip().splitlines()
    assert len(lines) == 2  # header + the t=1 checkpoint


def test_verify_canonical_passes(canonical_csv, tmp_path, capsys):
    out = tmp_path / "v"
    code = main(
        ["verify", "--input", str(canonical_csv), "--schedule", "inv_sqrt", "--steps", "2000", "--out", str(out)]
    )
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert all(c["holds"] for c in report["checks"] if c["applicable"])
    assert "PASS risk_bound" in capsys.readouterr().out


def test_verify_exit_matches_report_and(canonical_csv, tmp_path):
    out = tmp_path / "v"
    code = main(
        ["verify", "--input", str(canonical_csv), "--schedule", "inv_sqrt", "--steps", "200", "--out", str(out)]
    )
    report = json.loads((out / "report.json").read_text())
    expected = 0 if all(c["holds"] for c in report["checks"] if c["applicable"]) else 1
    assert code == expected


def test_verify_detects_corrupted_trace(canonical_csv, tmp_path, capsys):
    run_out = tmp_path / "r"
    assert main(["run", "--input", str(canonical_csv), "--schedule", "inv_sqrt", "--steps", "500", "--out", str(run_out)]) == 0
    # inject a risk increase into the stored per-step series
    steps = np.load(run_out / "steps.npz")
    risk = steps["risk_steps"].copy()
    risk[50] *= 1.05
    np.savez_compressed(run_out / "steps.npz", risk_steps=risk, rel_steps=steps["rel_steps"], eff_steps=steps["eff_steps"])
    out = tmp_path / "v"
    code = main(
        [
            "verify", "--input", str(canonical_csv), "--schedule", "inv_sqrt", "--steps", "500",
            "--trace-dir", str(run_out), "--out", str(out),
        ]
    )
    assert code == 1
    err = capsys.readouterr().err
    assert "smoothness" in err


def test_verify_separable_unit_steps(tmp_path):
    out = tmp_path / "v"
    code = main(
        [
            "verify", "--synth-kind", "separable", "--n-per-class", "10", "--seed", "1",
            "--loss", "exponential", "--schedule", "constant_one", "--steps", "100000",
            "--out", str(out),
        ]
    )
    assert code == 0


def test_empty_input_is_input_error(tmp_path, capsys):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    code = main(["decompose", "--input", str(empty), "--out", str(tmp_path / "o")])
    assert code == 2


def test_missing_input_flag_is_input_error(tmp_path):
    assert main(["decompose", "--out", str(tmp_path / "o")]) == 2


def test_report_pretty_print(canonical_csv, tmp_path, capsys):
    out = tmp_path / "v"
    main(["verify", "--input", str(canonical_csv), "--schedule", "inv_sqrt", "--steps", "200", "--out", str(out)])
    capsys.readouterr()
    assert main(["report", "--report", str(out / "report.json")]) == 0
    printed = capsys.readouterr().out
    assert "risk_bound" in printed and "loss=logistic" in printed
