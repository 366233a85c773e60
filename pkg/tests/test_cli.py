import json
import subprocess
import sys

import pytest

from multihelix.cli import (EXIT_INFEASIBLE, EXIT_OK, EXIT_USAGE, RunConfig, UsageError, main, parse_int_range,
                            read_config_file)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_parse_int_range():
    assert parse_int_range("5") == [5]
    assert parse_int_range("2..5") == [2, 3, 4, 5]
    assert parse_int_range("3,5,8..9") == [3, 5, 8, 9]
    for bad in ("", "x", "5..2", "1..y"):
        with pytest.raises(UsageError):
            parse_int_range(bad)


def test_config_file(tmp_path):
    f = tmp_path / "run.cfg"
    f.write_text("# defaults\nvertices = 800\nverts-per-turn = 120  # coarse\n\n")
    assert read_config_file(f) == {"vertices": "800", "verts_per_turn": "120"}
    f.write_text("vertices 800\n")
    with pytest.raises(UsageError):
        read_config_file(f)


def test_run_config_defaults():
    cfg = RunConfig()
    assert (cfg.vertices, cfg.p, cfg.rule, cfg.output_format) == (500, 3, "minimal", "table")


def test_ideal_table(capsys):
    code, out, _ = run(capsys, "ideal", "--n", "2..3")
    assert code == EXIT_OK
    lines = out.splitlines()
    assert len(lines) == 3 and "1.04587" in lines[1]


def test_json_is_deterministic(capsys):
    args = ("search", "--q", "12", "--json", "--no-timestamp")
    _, first, _ = run(capsys, *args)
    _, second, _ = run(capsys, *args)
    assert first == second
    doc = json.loads(first)
    assert "timestamp" not in doc
    row = doc["rows"][0]
    assert row["arrangement"] == "[1,4,5,2]"
    assert row["length"] == pytest.approx(292.9205, abs=0.05)


def test_json_timestamp_by_default(capsys):
    _, out, _ = run(capsys, "ideal", "--n", "4", "--json")
    assert "timestamp" in json.loads(out)


def test_csv(capsys):
    code, out, _ = run(capsys, "bounds", "--q", "2..4", "--mode", "circular", "--csv")
    assert code == EXIT_OK
    lines = out.strip().splitlines()
    assert lines[0].startswith("q,p,crossings,length,ratio")
    assert len(lines) == 4


@pytest.mark.parametrize("argv, code", [
    (["ideal", "--n", "1"], EXIT_USAGE),
    (["ideal", "--n", "a..b"], EXIT_USAGE),
    (["close", "--arrangement", "1,1", "--p", "1"], EXIT_USAGE),
    (["optimize", "--arrangement", "4,5"], EXIT_USAGE),
    (["optimize", "--arrangement", "1,14"], EXIT_INFEASIBLE),
    (["construct", "incremental", "--k", "4", "--t", "3"], EXIT_USAGE),
    (["search", "--q", "5", "--vertices", "2"], EXIT_USAGE),
    (["no-such-command"], EXIT_USAGE),
])
def test_exit_codes(capsys, argv, code):
    assert run(capsys, *argv)[0] == code


def test_config_flag_and_override(capsys, tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("p = 2\nrule = outer\n")
    _, out, _ = run(capsys, "close", "--arrangement", "1,1", "--config", str(cfg), "--json", "--no-timestamp")
    row = json.loads(out)["rows"][0]
    assert (row["p"], row["rule"], row["crossing_number"]) == (2, "outer", 4)
    _, out, _ = run(capsys, "close", "--arrangement", "1,1", "--config", str(cfg), "--p", "3", "--json")
    assert json.loads(out)["rows"][0]["p"] == 3


def test_close_export_to_env_outdir(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("MULTIHELIX_OUTDIR", str(tmp_path))
    code, out, err = run(capsys, "close", "--arrangement", "1,4,5", "--export", "obj", "--json", "--no-timestamp")
    assert code == EXIT_OK
    row = json.loads(out)["rows"][0]
    assert row["overlap_pass"] and (tmp_path / "T30_10.obj").exists()
    assert "wrote" in err


def test_svg_output_is_reproducible(capsys, tmp_path):
    run(capsys, "bounds", "--q", "2..6", "--svg", "--outdir", str(tmp_path))
    first = (tmp_path / "bounds.svg").read_bytes()
    run(capsys, "bounds", "--q", "2..6", "--svg", "--outdir", str(tmp_path))
    assert (tmp_path / "bounds.svg").read_bytes() == first


def test_construct_incremental(capsys):
    _, out, _ = run(capsys, "construct", "incremental", "--t", "4", "--json", "--no-timestamp")
    row = json.loads(out)["rows"][0]
    assert row["q"] == 51 and row["length"] == pytest.approx(3641.23, abs=0.05)


def test_verify_subset(capsys):
    code, out, err = run(capsys, "verify", "--criteria", "1", "--json", "--no-timestamp")
    rows = json.loads(out)["rows"]
    assert rows[0]["criterion"] == 1 and rows[0]["status"] == "PASS" and code == EXIT_OK


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "multihelix", "ideal", "--n", "6", "--csv"],
                          capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0 and "4.82796" in proc.stdout
