import csv
import io
import json

import pytest

from holiswap.cli import main
from holiswap.trace_io import SyntheticSpec, generate, read_trace, write_trace


@pytest.fixture()
def trace_file(tmp_path):
    p = tmp_path / "t.txt"
    write_trace(p, generate(SyntheticSpec("hotset", 128 * 4 + 128 * 80, 32768, seed=2, store_ratio=0.1)))
    return p


@pytest.fixture(autouse=True)
def no_env_config(monkeypatch):
    monkeypatch.delenv("HLSW_CONFIG", raising=False)


def test_run_writes_json(trace_file, tmp_path):
    out = tmp_path / "r.json"
    assert main(["run", "--design", "sequential", "--holiswap", "on", "--trace", str(trace_file),
                 "--out", str(out)]) == 0
    d = json.loads(out.read_text())
    assert d["config"]["design"] == "sequential" and d["config"]["holiswap"] is True


def test_run_defaults(trace_file, tmp_path):
    out = tmp_path / "r.json"
    assert main(["run", "--design", "prediction", "--counters", "log", "--trace", str(trace_file),
                 "--out", str(out)]) == 0
    cfg = json.loads(out.read_text())["config"]
    assert (cfg["seed"], cfg["epoch_len"], cfg["threshold"], cfg["design"]) == (0, 256, 128, "prediction_static")
    again = tmp_path / "r2.json"
    main(["run", "--design", "prediction", "--counters", "log", "--trace", str(trace_file), "--out", str(again)])
    assert out.read_bytes() == again.read_bytes()


def test_run_to_stdout_csv(trace_file, capsysbinary):
    assert main(["run", "--trace", str(trace_file), "--format", "csv", "--hot-stats"]) == 0
    rows = list(csv.reader(io.StringIO(capsysbinary.readouterr().out.decode())))
    assert len(rows) == 2 and "hot_lines.hot_access_share" in rows[0]


def test_holiswap_on_off_same_misses(trace_file, tmp_path):
    misses = []
    for flag in ("on", "off"):
        out = tmp_path / f"{flag}.json"
        main(["run", "--holiswap", flag, "--epoch", "16", "--trace", str(trace_file), "--out", str(out)])
        misses.append(json.loads(out.read_text())["totals"]["misses"])
    assert misses[0] == misses[1]


def test_sweep_csv(trace_file, tmp_path):
    out = tmp_path / "s.csv"
    assert main(["sweep", "--epochs", "4,16,64,256,1024", "--trace", str(trace_file), "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert [int(r["epoch_len"]) for r in rows] == [4, 16, 64, 256, 1024]


def test_gen_and_analyze(tmp_path, capsysbinary):
    out = tmp_path / "g.bin"
    assert main(["gen", "--kind", "zipf", "--records", "500", "--seed", "3", "--binary", "--out", str(out)]) == 0
    assert len(read_trace(out)) == 500
    assert main(["analyze", "--trace", str(out)]) == 0
    d = json.loads(capsysbinary.readouterr().out)
    assert d["hot_lines"]["accesses"] == 500


@pytest.mark.parametrize("argv", [
    [],
    ["run"],
    ["run", "--design", "bogus", "--trace", "x"],
    ["run", "--epoch", "100", "--trace", "x"],
    ["run", "--epoch", "16", "--threshold", "32", "--trace", "x"],
    ["run", "--cache-kb", "3", "--trace", "x"],
    ["sweep", "--epochs", "4,x", "--trace", "x"],
    ["gen", "--kind", "hotset", "--hot-fraction", "2", "--out", "x"],
])
def test_usage_errors(argv, trace_file, capsys):
    argv = [str(trace_file) if a == "x" and "--trace" in argv else a for a in argv]
    assert main(argv) == 1
    assert "usage error" in capsys.readouterr().err


def test_input_errors(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("L 0x0 0x0\nQ 0x1 0x1\n")
    assert main(["run", "--trace", str(bad)]) == 2
    assert "line 2" in capsys.readouterr().err
    assert main(["run", "--trace", str(tmp_path / "missing.txt")]) == 2
    geo = tmp_path / "g.ini"
    geo.write_text("[table]\nwire = 1,2\n")
    assert main(["run", "--trace", str(bad), "--geometry", str(geo)]) == 2


def test_geometry_file_changes_energy(trace_file, tmp_path):
    geo = tmp_path / "g.ini"
    geo.write_text("[table]\ntotal_seq = 1,1,1,1\nwire = 0.5,0.5,0.5,0.5\n[timing]\nmiss_penalty = 100\n")
    out = tmp_path / "r.json"
    assert main(["run", "--holiswap", "off", "--trace", str(trace_file), "--geometry", str(geo),
                 "--out", str(out)]) == 0
    d = json.loads(out.read_text())
    assert d["energy_pj"]["total_pj"] == d["totals"]["accesses"] * 1.0
    assert d["config"]["miss_penalty"] == 100


def test_env_config_defaults_and_override(trace_file, tmp_path, monkeypatch):
    cfg = tmp_path / "defaults.ini"
    cfg.write_text("[run]\ndesign = parallel\nepoch = 32\ncounters = exact\n")
    monkeypatch.setenv("HLSW_CONFIG", str(cfg))
    out = tmp_path / "r.json"
    assert main(["run", "--trace", str(trace_file), "--out", str(out)]) == 0
    c = json.loads(out.read_text())["config"]
    assert (c["design"], c["epoch_len"], c["threshold"], c["counter_mode"]) == ("parallel", 32, 16, "exact")
    assert main(["run", "--trace", str(trace_file), "--design", "filter", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["config"]["design"] == "filter"
    cfg.write_text("[run]\nbogus = 1\n")
    assert main(["run", "--trace", str(trace_file)]) == 1


def test_internal_error_exit_code(trace_file, monkeypatch):
    from holiswap import cli
    from holiswap.metrics import InvariantViolation

    def broken(*a, **k):
        raise InvariantViolation("boom")

    monkeypatch.setattr(cli, "finalize_report", broken)
    assert main(["run", "--trace", str(trace_file)]) == 3
