import csv
import io
import json
import subprocess
import sys

import pytest

from fbilora import cli


def run(*args, cwd=None):
    return subprocess.run([sys.executable, "-m", "fbilora", *args], capture_output=True, text=True, cwd=cwd)


def test_map_examples(capsys):
    assert cli.main(["map", "rank", "7,6,5", "--m1", "8", "--m2", "3"]) == 0
    assert cli.main(["map", "unrank", "22", "--m1", "8", "--m2", "3"]) == 0
    assert cli.main(["map", "unrank", "0", "--m1", "8", "--m2", "3"]) == 0
    assert capsys.readouterr().out.split() == ["55", "6,2,1", "2,1,0"]


def test_map_range_error(capsys):
    assert cli.main(["map", "unrank", "56", "--m1", "8", "--m2", "3"]) == 2


def test_missing_ngs_exit_2():
    r = run("simulate", "--sf", "7", "--scheme", "s2", "--fnum", "2", "--gnum", "8")
    assert r.returncode == 2 and "n_gs" in r.stderr


def test_gnum_not_dividing_exit_2(capsys):
    assert cli.main(["simulate", "--sf", "7", "--scheme", "s1", "--fnum", "2", "--gnum", "3"]) == 2
    assert "g_num" in capsys.readouterr().err


def test_enumeration_cap_exit_4(capsys):
    assert cli.main(["theory", "--sf", "12", "--scheme", "s1", "--fnum", "2", "--gnum", "2"]) == 4
    assert "cap" in capsys.readouterr().err


def test_parse_grid():
    assert len(cli.parse_grid("0:1:12")) == 13
    assert cli.parse_grid("0:0.1:0.3") == [0.0, 0.1, 0.2, 0.3]
    assert cli.parse_grid("1,3.5") == [1.0, 3.5]
    with pytest.raises(cli.UsageError):
        cli.parse_grid("0:1")


def test_format_value():
    assert cli.format_value(None) == ""
    assert cli.format_value(0.1) == "0.10000000000000001"
    assert float(cli.format_value(1 / 3)) == 1 / 3
    assert cli.format_value(7) == "7"


def test_simulate_csv_and_manifest(tmp_path):
    out = tmp_path / "r.csv"
    code = cli.main(["simulate", "--sf", "7", "--scheme", "s1", "--fnum", "2", "--gnum", "2",
                     "--channel", "awgn", "--ebn0", "0:1:12", "--seed", "42", "--min-errors", "20",
                     "--max-symbols", "4096", "--out", str(out)])
    lines = out.read_text().splitlines()
    assert lines[0] == ",".join(cli.CSV_FIELDS)
    assert len(lines) == 14
    # high-SNR points cannot reach 20 errors in 4096 symbols
    assert code == cli.EXIT_CENSORED
    first = dict(zip(cli.CSV_FIELDS, lines[1].split(",")))
    assert first["ber_group_field"] == "" and first["wall_time_s"] == ""
    assert float(first["ber"]) == int(first["bit_errors"]) / int(first["bits_sent"])
    manifest = json.loads(cli.manifest_path(out).read_text())
    assert manifest["seed"] == 42 and manifest["config"]["fnum"] == 2 and len(manifest["ebn0_grid_db"]) == 13


def test_replay_reproduces(tmp_path):
    out = tmp_path / "a.csv"
    args = ["simulate", "--sf", "7", "--scheme", "s2", "--fnum", "2", "--gnum", "8", "--ngs", "2",
            "--ebn0", "2,4", "--seed", "5", "--min-errors", "100", "--out", str(out)]
    assert cli.main(args) == 0
    assert cli.main(["replay", str(cli.manifest_path(out)), "--out", str(tmp_path / "b.csv")]) == 0
    assert (tmp_path / "b.csv").read_bytes() == out.read_bytes()


def test_config_file_with_override(tmp_path):
    conf = tmp_path / "run.cfg"
    conf.write_text("sf=7\nscheme=s1\nfnum=2\ngnum=4\nchannel=awgn\nebn0=2,3\nseed=3\n")
    out = tmp_path / "t.json"
    assert cli.main(["theory", "--config", str(conf), "--gnum", "2", "--format", "json", "--out", str(out)]) == 0
    rows = json.loads(out.read_text())
    assert [r["ebn0_db"] for r in rows] == [2.0, 3.0]
    assert json.loads(cli.manifest_path(out).read_text())["config"]["gnum"] == 2


def test_theory_csv_has_empty_simulation_fields(capsys):
    assert cli.main(["theory", "--sf", "7", "--scheme", "s2", "--fnum", "3", "--gnum", "8", "--ngs", "2",
                     "--ebn0", "5"]) == 0
    lines = capsys.readouterr().out.splitlines()
    row = dict(zip(cli.CSV_FIELDS, lines[1].split(",")))
    assert row["bits_sent"] == "" and row["ber"] == ""
    assert float(row["theory_ber"]) > 0 and row["ber_group_field"] != ""


def test_theory_rayleigh_quadrature_nodes(capsys):
    args = ["theory", "--sf", "7", "--scheme", "conventional", "--channel", "rayleigh", "--ebn0", "30"]
    assert cli.main(args + ["--quadrature-nodes", "8"]) == cli.EXIT_FAILURE
    assert "quadrature" in capsys.readouterr().err
    assert cli.main(args) == 0


def test_throughput_command(capsys):
    assert cli.main(["throughput", "--sf", "7", "--scheme", "s1", "--fnum", "2", "--gnum", "4",
                     "--fpa", "8", "--ebn0", "40"]) == 0
    row = next(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert row["config"] == "s1(7,2,4)"
    assert float(row["ratio"]) == pytest.approx(32 / 7)


def test_workers_env_default(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.WORKERS_ENV, "2")
    out = tmp_path / "w.csv"
    assert cli.main(["simulate", "--sf", "7", "--scheme", "conventional", "--ebn0", "2", "--min-errors", "50",
                     "--out", str(out)]) == 0
    assert json.loads(cli.manifest_path(out).read_text())["workers"] == 2
