import json
import subprocess
import sys

import numpy as np
import pytest

from tensortraffic.cli import build_parser, main


def run_cli(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def loop_json(tmp_path):
    path = tmp_path / "loop.json"
    path.write_text(json.dumps({"vertices": 1, "edges": [[0, 0]]}))
    return str(path)


@pytest.fixture
def labeled_cycle_json(tmp_path):
    path = tmp_path / "cyc.json"
    path.write_text(json.dumps({
        "vertices": 2, "edges": [[0, 1], [1, 0]],
        "labels": {"delta": [1, 1], "eps": ["u", "s"]}}))
    return str(path)


@pytest.fixture
def operand_npy(tmp_path):
    path = tmp_path / "op.npy"
    np.save(path, np.stack([np.eye(3, dtype=complex)]))
    return str(path)


def test_mobius_table(capsys):
    code, out, _ = run_cli(["mobius", "--n", "4"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["count"] == 15
    table = {row["partition"]: row["mobius_from_bottom"]
             for row in doc["partitions"]}
    assert table["0,0,0,0"] == -6
    assert table["0,1,2,3"] == 1


def test_trace_json_output(capsys, loop_json, operand_npy):
    code, out, _ = run_cli(["trace", "--graph", loop_json,
                            "--operand", operand_npy], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["value_re"] == 3.0 and doc["L"] == 2 and doc["c"] == 1


def test_trace_operand_json_format(capsys, loop_json, tmp_path):
    op = tmp_path / "op.json"
    op.write_text(json.dumps([[[1, [0, 2]], [[0, -2], 1]]]))
    code, out, _ = run_cli(["trace", "--graph", loop_json,
                            "--operand", str(op)], capsys)
    assert code == 0
    assert json.loads(out)["value_re"] == 2.0


def test_invariants_output(capsys, labeled_cycle_json):
    code, out, _ = run_cli(["invariants", "--graph", labeled_cycle_json],
                           capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["cactus"] and doc["well_oriented"]
    assert doc["validity"] == "valid"
    assert doc["leaf_count"] == 2 and doc["bridges"] == []


def test_predict_verdict(capsys, loop_json):
    code, out, _ = run_cli(["predict", "--word", "1,2,1*,2*",
                            "--blocks", "1,0,0", "--graph", loop_json], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["verdict"] == "VANISHES"
    assert len(doc["quotients"]) == 15


def test_predict_default_loop_base(capsys):
    code, out, _ = run_cli(["predict", "--word", "1,1", "--blocks", "1,1,0"],
                           capsys)
    assert code == 0
    assert json.loads(out)["verdict"] == "VANISHES"


def test_limit_command(capsys, labeled_cycle_json):
    code, out, _ = run_cli(["limit", "--graph", labeled_cycle_json], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["validity"] == "valid" and doc["value"] == 1.0


def test_decompose_tracial(capsys):
    code, out, _ = run_cli(["decompose", "--state", "tracial",
                            "--k", "1", "--n", "4"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["coefficients"]["0,0"][0] == pytest.approx(0.25)
    assert doc["reconstruction_residual"] <= 1e-9


def test_mc_csv_columns(capsys):
    code, out, _ = run_cli(["mc", "--state", "tracial", "--word", "1,2",
                            "--blocks", "1,1,0", "--dims", "4,8",
                            "--samples", "16", "--seed", "1",
                            "--threads", "1"], capsys)
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "N,estimate_re,estimate_im,stderr,variance,samples"
    assert len(lines) == 3
    assert lines[1].split(",")[0] == "4"


def test_mc_rejects_unordered_dims(capsys):
    code, _, err = run_cli(["mc", "--state", "tracial", "--word", "1",
                            "--blocks", "1,0,0", "--dims", "8,4",
                            "--samples", "8"], capsys)
    assert code == 2 and "increasing" in err


def test_character_rows(capsys):
    code, out, _ = run_cli(["character", "--lambda", "1", "--mu", "1",
                            "--dims", "8,16", "--samples", "20",
                            "--seed", "2"], capsys)
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0].startswith("N,mean_abs,")
    assert len(lines) == 3


def test_amalgam_rows(capsys):
    code, out, _ = run_cli(["amalgam", "--d", "2", "--word", "1,2",
                            "--dims", "4,6", "--samples", "3",
                            "--seed", "0"], capsys)
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "N,norm_mean,stderr,samples"
    assert len(lines) == 3


def test_normdemo(capsys):
    code, out, _ = run_cli(["normdemo", "--letters", "3", "--n", "8",
                            "--mode", "conjugate_pair"], capsys)
    assert code == 0
    assert json.loads(out)["norm"] >= 3.0 - 1e-9


def test_selftest_passes(capsys):
    code, out, _ = run_cli(["selftest"], capsys)
    assert code == 0
    lines = out.strip().splitlines()
    assert lines and all(line.startswith("PASS") for line in lines)


def test_exit_code_invalid_argument(capsys):
    code, _, err = run_cli(["predict", "--word", "1,1*", "--blocks", "1,0,0"],
                           capsys)
    assert code == 2 and "identity" in err


def test_exit_code_resource_limit(capsys):
    code, _, err = run_cli(["mobius", "--n", "13"], capsys)
    assert code == 3


def test_missing_file_is_invalid_argument(capsys, tmp_path):
    code, _, _ = run_cli(["trace", "--graph", str(tmp_path / "nope.json"),
                          "--operand", str(tmp_path / "nope.npy")], capsys)
    assert code == 2


def test_out_file_matches_stdout(capsys, tmp_path):
    out_path = tmp_path / "report.csv"
    code, out, _ = run_cli(["mc", "--state", "tracial", "--word", "1",
                            "--blocks", "1,0,0", "--dims", "4",
                            "--samples", "8", "--seed", "7",
                            "--threads", "1", "--out", str(out_path)], capsys)
    assert code == 0
    assert out_path.read_text() == out


def test_determinism_across_invocations_and_threads(capsys):
    args = ["mc", "--state", "tracial", "--word", "1,2,1*,2*",
            "--blocks", "1,1,0", "--dims", "8", "--samples", "40",
            "--seed", "11"]
    _, out1, _ = run_cli(args + ["--threads", "1"], capsys)
    _, out2, _ = run_cli(args + ["--threads", "2"], capsys)
    _, out3, _ = run_cli(args + ["--threads", "1"], capsys)
    assert out1 == out2 == out3


def test_help_for_every_subcommand():
    parser = build_parser()
    subcommands = ["trace", "invariants", "mobius", "decompose", "predict",
                   "mc", "limit", "character", "amalgam", "normdemo",
                   "selftest"]
    for name in subcommands:
        proc = subprocess.run(
            [sys.executable, "-m", "tensortraffic.cli", name, "--help"],
            capture_output=True, text=True)
        assert proc.returncode == 0, name
        assert name in proc.stdout


def test_version_flag():
    proc = subprocess.run(
        [sys.executable, "-m", "tensortraffic.cli", "--version"],
        capture_output=True, text=True)
    assert proc.returncode == 0
