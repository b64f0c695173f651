import csv
import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fuchsian.cli import (SUBCOMMANDS, ConfigError, ScenarioConfig, emit_config, emit_series, main,
                          parse_config, run)
from fuchsian.errors import InvalidArgument


def _report(out):
    return json.loads((out / "report.json").read_text())


def test_fundamental_example(tmp_path, capsys):
    rc = main(["fundamental", "--p", "2", "--d", "3", "--matrix", "identity", "--out", str(tmp_path)])
    assert rc == 0
    rep = _report(tmp_path)
    assert rep["status"] == "pass"
    assert rep["results"]["constant"] == pytest.approx(1 / (4 * math.pi), rel=1e-14)
    assert all(row["flux"] == pytest.approx(-1.0, abs=1e-6) for row in rep["results"]["flux"])
    assert set(rep) >= {"inputs", "results", "checks", "provenance"}
    assert rep["inputs"]["seed"] == 0
    assert "PASS constant" in capsys.readouterr().out


def test_hardy_is_fuchsian_at_origin(tmp_path):
    rc = main(["fuchsian-check", "--potential", "hardy", "--lambda", "0.1", "--p", "2", "--d", "3",
               "--zeta", "origin", "--out", str(tmp_path)])
    assert rc == 0
    assert _report(tmp_path)["results"]["is_fuchsian"] is True


@pytest.mark.parametrize("sub", SUBCOMMANDS)
def test_every_subcommand_runs_with_defaults(tmp_path, sub):
    assert main([sub, "--out", str(tmp_path)]) == 0
    rep = _report(tmp_path)
    assert rep["inputs"]["subcommand"] == sub
    assert rep["checks"] and all(c["passed"] for c in rep["checks"])
    assert json.loads((tmp_path / "metadata.json").read_text())["seed"] == 0


def test_empty_config_is_a_parse_error(tmp_path, capsys):
    cfg = tmp_path / "empty.json"
    cfg.write_text("")
    assert main(["--config", str(cfg)]) == 2
    assert "config error" in capsys.readouterr().err


@pytest.mark.parametrize("text", [
    "{}", "not json", '{"version": 1}', '{"version": 9, "subcommand": "fundamental"}',
    '{"version": 1, "subcommand": "nope"}', '{"version": 1, "subcommand": "fundamental", "bogus": 1}',
    '{"version": 1, "subcommand": "fundamental", "p": 0.5}',
    '{"version": 1, "subcommand": "fundamental", "tolerances": {"flux": -1}}',
    '{"version": 1, "subcommand": "fundamental", "seed": -3}',
])
def test_malformed_configs_are_rejected(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_bad_matrix_exits_2(tmp_path):
    assert main(["fundamental", "--matrix", "1,-1,0", "--out", str(tmp_path)]) == 2
    assert main(["fundamental", "--matrix", "x,y", "--out", str(tmp_path)]) == 2


def test_missing_config_file_exits_2(tmp_path):
    assert main(["--config", str(tmp_path / "missing.json")]) == 2


def test_config_fields_override_flags(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"version": 1, "subcommand": "fundamental", "p": 3.0, "d": 3,
                               "out": str(tmp_path / "o")}))
    assert main(["fundamental", "--p", "2", "--config", str(cfg)]) == 0
    assert _report(tmp_path / "o")["inputs"]["p"] == 3.0


def test_failing_check_exits_1(tmp_path, capsys):
    rc = main(["fuchsian-check", "--potential", "hardy", "--lambda", "0.1", "--expect", "false",
               "--out", str(tmp_path)])
    assert rc == 1
    assert "is_fuchsian" in capsys.readouterr().err
    assert _report(tmp_path)["status"] == "fail"


@given(st.sampled_from(SUBCOMMANDS), st.one_of(st.none(), st.floats(1.1, 6.0)),
       st.one_of(st.none(), st.integers(2, 5)), st.integers(0, 2**31),
       st.dictionaries(st.sampled_from(["flux", "order", "spread"]), st.floats(1e-12, 1.0), max_size=3))
def test_config_round_trip(sub, p, d, seed, tols):
    cfg = ScenarioConfig(sub, p=p, d=d, seed=seed, tolerances=tols, matrix=[1.0, 2.0])
    text = emit_config(cfg)
    again = emit_config(parse_config(text))
    assert again == text
    assert emit_config(parse_config(again)) == again


def test_reports_are_deterministic(tmp_path):
    text = json.dumps({"version": 1, "subcommand": "radial-solve", "p": 3.0, "d": 2,
                       "out": str(tmp_path)})
    run(parse_config(text))
    first = (tmp_path / "report.json").read_bytes()
    first_csv = (tmp_path / "series.csv").read_bytes()
    run(parse_config(text))
    assert (tmp_path / "report.json").read_bytes() == first
    assert (tmp_path / "series.csv").read_bytes() == first_csv


@pytest.mark.parametrize("sub,header", [("radial-solve", ["r", "u", "flux"]),
                                        ("ratio-limit", ["R", "m_r", "M_r"]),
                                        ("solve2d", ["x", "y", "u"])])
def test_series_columns(tmp_path, sub, header):
    assert main([sub, "--out", str(tmp_path)]) == 0
    with (tmp_path / "series.csv").open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == header
    assert len(rows) > 2 and all(len(r) == len(header) for r in rows)


def test_emit_series_keeps_full_precision(tmp_path):
    x = [1 / 3, math.pi, 1e-300]
    path = emit_series({"a": x, "b": [0.1, 0.2, 0.3]}, tmp_path / "s.csv")
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["a", "b"]
    assert [float(r[0]) for r in rows[1:]] == x
    assert rows[1][0] == "%.17g" % (1 / 3)


def test_emit_series_errors(tmp_path):
    with pytest.raises(InvalidArgument):
        emit_series({}, tmp_path / "s.csv")
    with pytest.raises(InvalidArgument):
        emit_series({"a": [1.0], "b": [1.0, 2.0]}, tmp_path / "s.csv")
    with pytest.raises(OSError, match="missing"):
        emit_series({"a": [1.0]}, tmp_path / "missing" / "s.csv")
