import csv
import io
import statistics

import pytest

from copsslite.cli import (
    RUN_COLUMNS,
    VerificationError,
    main,
    report_csv,
    run_specs,
    run_suite,
    verify_reports,
)
from copsslite.config import DEFAULT_CONFIG, ParseError, ValidationError, load_config, parse_config
from copsslite.traffic import Zipf

SMALL = """
[topology]
links =
    1 2 10
    2 3 10

[rp]
/iot = 1

[experiment]
mode = {mode}
publisher = 1
subscribers = {subs}
publications = 5
seeds = {seeds}

[workload.zipf]
dist = zipf
param = {param}
"""


def small(mode="pubsub", subs="3", seeds="1", param="1"):
    return SMALL.format(mode=mode, subs=subs, seeds=seeds, param=param)


# -- config ---------------------------------------------------------------------

def test_default_config_is_valid():
    c = load_config(DEFAULT_CONFIG)
    assert len(c.topology.nodes) == 9 and len(c.topology.links) == 8
    assert c.modes == ("pubsub", "pull")
    assert [len(s) for s in c.subscriber_sets] == list(range(1, 10))
    assert c.seeds == (1, 2, 3, 4, 5)
    assert c.workloads[0].dist == Zipf(1.0)
    assert len(run_specs(c)) == 2 * 6 * 9 * 5


def test_explicit_subscriber_list():
    c = parse_config(small(subs="2 3"))
    assert c.subscriber_sets == ((2, 3),)


def test_unknown_subscriber_is_named():
    with pytest.raises(ValidationError) as e:
        parse_config(small(subs="99"))
    assert e.value.keys == ["subscribers"]


def test_bad_param_is_named():
    with pytest.raises(ValidationError) as e:
        parse_config(small(param="-1"))
    assert "param" in e.value.keys


def test_errors_are_collected():
    with pytest.raises(ValidationError) as e:
        parse_config(small(subs="99", param="-1", mode="sideways"))
    assert len(e.value.keys) >= 3


def test_syntax_error_is_parse_error():
    with pytest.raises(ParseError):
        parse_config("[topology\nlinks = 1 2")


def test_missing_file_is_parse_error(tmp_path):
    with pytest.raises(ParseError):
        load_config(tmp_path / "nope.cfg")


# -- suites -----------------------------------------------------------------------

def test_single_scenario_one_row(tmp_path):
    res = run_suite(parse_config(small()), tmp_path)
    assert len(res.runs) == 1 and len(res.report) == 1
    rows = list(csv.DictReader(io.StringIO((tmp_path / "report.csv").read_text())))
    assert len(rows) == 1
    assert float(rows[0]["mean_ms"]) == 20.0
    assert float(rows[0]["delivery_ratio"]) == 1.0
    assert "# pubsub zipf(1)" in (tmp_path / "report.dat").read_text()


def test_aggregate_is_mean_of_seed_rows(tmp_path):
    run_suite(parse_config(small(mode="pull", seeds="1 2")), tmp_path)
    runs = list(csv.DictReader(io.StringIO((tmp_path / "runs.csv").read_text())))
    report = list(csv.DictReader(io.StringIO((tmp_path / "report.csv").read_text())))
    assert list(runs[0]) == list(RUN_COLUMNS)
    assert len(runs) == 2 and len(report) == 1
    for col in ("mean_ms", "bytes", "frames"):
        want = statistics.fmean(float(r[col]) for r in runs)
        assert float(report[0][col]) == pytest.approx(want, abs=1e-6)


def test_verify_detects_tampering(tmp_path):
    run_suite(parse_config(small(seeds="1 2")), tmp_path, verify=True)
    runs = (tmp_path / "runs.csv").read_text()
    report = (tmp_path / "report.csv").read_text()
    verify_reports(runs, report)
    with pytest.raises(VerificationError):
        verify_reports(runs, report.replace(",20.000000,", ",21.000000,", 1))


def test_parallel_matches_serial(tmp_path):
    c = parse_config(small(mode="both", subs="sweep 1..3", seeds="1 2"))
    a = run_suite(c, tmp_path / "a")
    b = run_suite(c, tmp_path / "b", jobs=2)
    assert report_csv(a.report) == report_csv(b.report)


# -- main -------------------------------------------------------------------------

def test_main_run_honours_env(tmp_path, monkeypatch, capsys):
    cfg = tmp_path / "x.cfg"
    cfg.write_text(small())
    monkeypatch.setenv("COPSSLITE_OUT", str(tmp_path / "env"))
    assert main(["run", str(cfg), "--out", str(tmp_path / "ignored"), "--verify", "--traces"]) == 0
    assert (tmp_path / "env" / "report.csv").exists()
    assert not (tmp_path / "ignored").exists()
    assert len(list((tmp_path / "env" / "traces").iterdir())) == 1
    assert "verify" in capsys.readouterr().out


def test_main_seeds_override(tmp_path, monkeypatch):
    cfg = tmp_path / "x.cfg"
    cfg.write_text(small())
    monkeypatch.delenv("COPSSLITE_OUT", raising=False)
    assert main(["run", str(cfg), "--out", str(tmp_path / "o"), "--seeds", "3"]) == 0
    runs = list(csv.DictReader(io.StringIO((tmp_path / "o" / "runs.csv").read_text())))
    assert [r["seed"] for r in runs] == ["1", "2", "3"]


def test_main_validate(tmp_path, capsys):
    assert main(["validate", str(DEFAULT_CONFIG)]) == 0
    assert "runs=540" in capsys.readouterr().out
    bad = tmp_path / "bad.cfg"
    bad.write_text(small(subs="99"))
    assert main(["validate", str(bad)]) == 2
    assert "error: subscribers:" in capsys.readouterr().err


def test_main_pmf(capsys):
    assert main(["pmf", "zipf", "1", "10"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "k,pmf" and len(lines) == 12
    assert float(lines[1].split(",")[1]) == pytest.approx(0.34142, abs=1e-4)
    assert lines[-1].startswith("# sum=1.0000000000")
    assert main(["pmf", "zipf", "-1", "10"]) == 2
