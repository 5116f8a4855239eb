import io
import json

import pytest

from app import experiments
from app.cli import EXIT_DIVERGENCE, EXIT_ERROR, EXIT_OK, main


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out=out, err=err)
    return code, out.getvalue(), err.getvalue()


def test_score_human_output(p1_json_file):
    code, out, _ = run("score", str(p1_json_file))
    assert code == EXIT_OK
    assert out.startswith("piece P1")
    assert out.rstrip().endswith("M = 2.118")


def test_score_json_output(p1_json_file):
    code, out, _ = run("score", str(p1_json_file), "--json")
    payload = json.loads(out)
    assert code == EXIT_OK
    assert payload["m"] == pytest.approx(2.118, abs=0.002)
    assert payload["mode"] == "coifman_wickerhauser"


def test_score_shannon(p1_json_file):
    _, out, _ = run("score", str(p1_json_file), "--json", "--entropy", "shannon")
    assert json.loads(out)["mode"] == "shannon_normalized"


def test_score_many_pieces_writes_csv(pieces_csv_file, tmp_path):
    csv_path = tmp_path / "m.csv"
    code, out, _ = run("score", str(pieces_csv_file), "--json", "--csv", str(csv_path))
    assert code == EXIT_OK
    assert [s["label"] for s in json.loads(out)] == ["P1", "P4"]
    assert csv_path.read_text().splitlines()[0] == "value"
    assert len(csv_path.read_text().splitlines()) == 3


def test_score_midi_piece(tmp_path):
    path = tmp_path / "notes.csv"
    path.write_text("A,69,71,72,69\n")
    code, out, _ = run("score", str(path), "--midi", "--no-register-normalize", "--json")
    assert code == EXIT_OK
    assert json.loads(out)["label"] == "A"


def test_register_normalization_applies_by_default(tmp_path):
    path = tmp_path / "high.csv"
    path.write_text("P1,480,640,680,580\n")
    _, normalized, _ = run("decompose", str(path), "--json")
    _, raw, _ = run("decompose", str(path), "--json", "--no-register-normalize")
    assert json.loads(normalized)["t"] == [40, 10, -25]
    assert json.loads(raw)["t"] == [160, 40, -100]


def test_decompose_human_output(p1_json_file):
    code, out, _ = run("decompose", str(p1_json_file))
    assert code == EXIT_OK
    assert "l1: 1 41 51 26" in out
    assert "w:  30 -25" in out
    assert "d:  75" in out


def test_check_passes_p1(p1_json_file):
    code, out, _ = run("check", str(p1_json_file))
    assert code == EXIT_OK
    assert "signature 2,3,1 (expected 2,3,1): pass" in out


def test_check_with_signature(p1_json_file):
    _, out, _ = run("check", str(p1_json_file), "--signature", "3,2,1", "--json")
    payload = json.loads(out)
    assert payload["passed"] is False
    assert payload["expected_signature"] == [3, 2, 1]


def test_permute(p1_json_file):
    code, out, _ = run("permute", str(p1_json_file))
    assert code == EXIT_OK
    assert "original is max: yes" in out
    assert "original is max on shifted L1: yes" in out


def test_permute_reports_shifted_divergence(tmp_path):
    path = tmp_path / "p3.json"
    path.write_text(json.dumps({"label": "P3", "frequencies": [120, 125, 130, 95]}))
    code, out, _ = run("permute", str(path))
    assert code == EXIT_OK
    assert "original is max: yes" in out
    assert "original is max on shifted L1: no" in out


def test_sweep_json_flags_outranking():
    code, out, _ = run("sweep", "--level", "25", "--json")
    payload = json.loads(out)
    assert code == EXIT_OK
    assert payload["pattern_count"] == 48
    patterns = [c["pattern"] for c in payload["candidates"]]
    assert [15, 5, -5] in patterns and [5, -5, -15] in patterns
    reference = payload["reference"]
    assert [e["label"] for e in reference["expected_winners"]] == ["P4", "P5"]
    assert [5, 5, -15] in [o["pattern"] for o in reference["outranking"]]


def test_sweep_human_output_marks_reference():
    code, out, _ = run("sweep", "--level", "25", "--top", "48")
    assert code == EXIT_OK
    assert out.startswith("level 25: 48 patterns")
    assert "P4" in out
    assert "outranks reference" in out


def test_table1():
    code, out, _ = run("table1", "--json", "--strict")
    payload = json.loads(out)
    assert code == EXIT_OK
    assert all(c["verdict"] == "pass" for c in payload["claims"])


def test_table1_human_output():
    code, out, _ = run("table1")
    assert code == EXIT_OK
    assert out.startswith("table1: 6/6 claims pass")


def test_sweeps_strict_reports_divergence():
    code, out, _ = run("sweeps", "--levels", "25", "--strict")
    assert code == EXIT_DIVERGENCE
    assert "[divergence]" in out


def test_sweeps_without_strict_succeeds(tmp_path, mocker):
    spy = mocker.spy(experiments, "energy_sweep")
    csv_path = tmp_path / "sweeps.csv"
    code, _, _ = run("sweeps", "--levels", "25", "--csv", str(csv_path))
    assert code == EXIT_OK
    assert csv_path.read_text().startswith("level,pattern,M,passed,rank")
    # one global and one per-class sweep, shared by the report and the CSV
    assert spy.call_count == 2


def test_fig3_json():
    code, out, _ = run("fig3", "--count", "3", "--sum", "25", "--json")
    payload = json.loads(out)
    assert code == EXIT_OK
    assert payload["items"][0]["best"] == [5, 5, 15]


@pytest.mark.parametrize("argv", [
    ("sweep", "--level", "25", "--json"),
    ("fig3", "--count", "3", "--sum", "25", "--json"),
])
def test_json_output_is_identical_across_runs_and_workers(argv):
    code, out, _ = run(*argv)
    assert code == EXIT_OK
    assert run(*argv)[:2] == (code, out)
    assert run(*argv, "--workers", "4")[:2] == (code, out)


def test_unknown_subcommand_is_usage_error():
    code, _, err = run("dance")
    assert code == EXIT_ERROR
    assert "invalid choice" in err


def test_unknown_flag_is_usage_error(p1_json_file, capsys):
    code, _, err = run("score", str(p1_json_file), "--loud")
    assert code == EXIT_ERROR
    assert err.startswith("usage:")
    assert "unrecognized arguments: --loud" in err
    assert capsys.readouterr().err == ""


def test_invalid_log_level_is_reported(p1_json_file, monkeypatch):
    monkeypatch.setenv("LOG_LEVEL", "LOUD")
    code, out, err = run("score", str(p1_json_file))
    assert code == EXIT_ERROR
    assert out == ""
    assert "unknown LOG_LEVEL 'LOUD'" in err


def test_missing_file():
    code, _, err = run("score", "/nonexistent/piece.json")
    assert code == EXIT_ERROR
    assert err.startswith("error:")


def test_parse_error_names_line(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("P1,120,160\nP2,120,oops\n")
    code, _, err = run("score", str(path))
    assert code == EXIT_ERROR
    assert "line 2" in err


def test_short_piece_names_level(tmp_path):
    path = tmp_path / "short.csv"
    path.write_text("S,120,150\n")
    code, _, err = run("score", str(path))
    assert code == EXIT_ERROR
    assert "L3" in err
