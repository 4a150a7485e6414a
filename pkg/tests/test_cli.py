import csv
import json
from pathlib import Path

import pytest
import yaml

from siadsim import batch as B
from siadsim.cli import EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION, main
from siadsim.scenario import ScenarioError, dump_scenario, expand, from_dict, load_scenario

ROOT = Path(__file__).resolve().parent.parent
SCENARIOS = sorted((ROOT / "scenarios").glob("*.yaml"))

SMALL = """\
name: small
bandwidth: 10.0e6
buffer: 1.0
horizon: 25
flows:
  - {algorithm: siad, num_rtt: 20}
  - {algorithm: cubic, start: 5}
"""


@pytest.fixture
def small(tmp_path):
    p = tmp_path / "small.yaml"
    p.write_text(SMALL)
    return p


# scenario files ---------------------------------------------------------------


def test_minimal_file_defaults(tmp_path):
    p = tmp_path / "m.yaml"
    p.write_text("bandwidth: 10e6\nbuffer: 1\nflows:\n  - algorithm: siad\n")
    sc = load_scenario(p)
    assert (sc.owd, sc.packet_size, sc.warmup, sc.horizon) == (0.05, 1500, 20.0, 600.0)
    assert sc.bandwidth == 10e6 and isinstance(sc.bandwidth, float)
    assert sc.delayed_ack is True and sc.sample_interval == 0.01
    assert sc.flows[0].num_rtt is None and sc.flows[0].start == 0.0


def test_two_flow_file():
    sc = load_scenario(ROOT / "scenarios" / "fig8a_two_siad.yaml")
    assert sc.bandwidth == 20e6 and sc.buffer == 0.5
    assert [f.num_rtt for f in sc.flows] == [30, 30]


@pytest.mark.parametrize("path", SCENARIOS, ids=lambda p: p.stem)
def test_shipped_scenarios_validate(path):
    sc = load_scenario(path)
    for _, point in expand(sc):
        point.validate()


@pytest.mark.parametrize("text,field", [
    ("bandwidth: 10e6\nbuffer: 0\n", "buffer"),
    ("bandwidth: 10e6\nbuffer: -1\n", "buffer"),
    ("buffer: 1\n", "bandwidth"),
    ("bandwidth: 10e6\nbuffer: 1\nhorizon: 10\nwarmup: 20\n", "warmup"),
    ("bandwidth: 10e6\nbuffer: 1\nflows:\n  - {algorithm: vegas}\n", "flows.0.algorithm"),
    ("bandwidth: 10e6\nbuffer: 1\nflows:\n  - {algorithm: cubic, num_rtt: 20}\n", "flows.0.num_rtt"),
    ("bandwidth: 10e6\nbuffer: 1\nflows:\n  - {num_rtt: 20, num_ms: 100}\n", "flows.0.num_rtt"),
    ("bandwidth: 10e6\nbuffer: 1\nhorizon: 30\nflows:\n  - {start: 40}\n", "flows.0.start"),
    ("bandwidth: 10e6\nbuffer: 1\nbogus: 3\n", "bogus"),
    ("bandwidth: 10e6\nbuffer: 1\nflows:\n  - {colour: red}\n", "flows.0.colour"),
])
def test_validation_errors_name_field(tmp_path, text, field):
    p = tmp_path / "bad.yaml"
    p.write_text(text)
    with pytest.raises(ScenarioError) as e:
        load_scenario(p)
    assert e.value.field == field


def test_validation_error_reports_line(tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("name: x\nbandwidth: 10e6\nbuffer: 0\n")
    with pytest.raises(ScenarioError) as e:
        load_scenario(p)
    assert e.value.line == 3


def test_syntax_error_reports_line(tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("bandwidth: 10e6\nbuffer: [1\n")
    with pytest.raises(ScenarioError) as e:
        load_scenario(p)
    assert e.value.field == "<syntax>" and e.value.line is not None


def test_expand_grid():
    sc = load_scenario(ROOT / "scenarios" / "fig4_buffer_sweep.yaml")
    pts = expand(sc)
    assert len(pts) == 7 * 6
    p, s = pts[7]
    assert p == {"buffer": 0.3, "flows.0.algorithm": "newreno"}
    assert s.buffer == 0.3 and s.flows[0].algorithm == "newreno"


def test_bad_sweep_path():
    sc = from_dict(dict(bandwidth=1e7, buffer=1.0, flows=[{}],
                        sweep={"path": "flows.3.num_rtt", "values": [10]}))
    with pytest.raises(ScenarioError) as e:
        expand(sc)
    assert e.value.field == "sweep.path"


def test_dump_round_trip(tmp_path):
    for path in SCENARIOS:
        sc = load_scenario(path)
        p = tmp_path / "rt.yaml"
        p.write_text(dump_scenario(sc))
        assert load_scenario(p) == sc


# batch and emitted files ------------------------------------------------------


def test_manifest_round_trip_and_rerun(small, tmp_out):
    sc = load_scenario(small)
    res = B.run_batch(sc, 2)
    B.emit_results(res, tmp_out, series=False)
    rows = [json.loads(line) for line in (tmp_out / "summary.jsonl").read_text().splitlines()]
    assert len(rows) == 2
    for rec, row in zip(res.runs, rows):
        man = tmp_out / "manifests" / f"{rec.run_id}.yaml"
        meta = yaml.safe_load(man.read_text())["meta"]
        assert meta["seed"] == rec.seed and meta["run_id"] == rec.run_id and meta["version"]
        again = load_scenario(man)
        assert again == rec.scenario
        rerun = B.run_batch(again, 1).runs[0]
        assert rerun.summary.to_dict() == rec.summary.to_dict()
        assert set(row) == set(B.SUMMARY_FIELDS)


def test_summary_field_names(small, tmp_out):
    B.emit_results(B.run_batch(load_scenario(small), 1), tmp_out)
    row = json.loads((tmp_out / "summary.jsonl").read_text())
    assert list(row) == list(B.SUMMARY_FIELDS)
    assert row["flow_labels"] == ["siad0", "cubic1"]
    assert len(row["flow_rates"]) == 2


def test_series_row_count(small, tmp_out):
    sc = load_scenario(small)
    res = B.run_batch(sc, 1, keep_traces=True)
    B.emit_results(res, tmp_out, series=True)
    files = list((tmp_out / "series").glob("*.csv"))
    assert len(files) == 1
    with open(files[0]) as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == round(sc.horizon / sc.sample_interval) + 1
    assert rows[0][0] == "time" and rows[0][-1] == "qlen"
    assert len(rows[0]) == 2 + len(sc.flows)
    assert float(rows[2][0]) == pytest.approx(0.01)


def test_no_series_without_request(small, tmp_out):
    res = B.run_batch(load_scenario(small), 1)
    B.emit_results(res, tmp_out)
    assert not (tmp_out / "series").exists()
    assert (tmp_out / "summary.jsonl").exists()


def test_single_repetition_aggregate_equals_run(small):
    res = B.run_batch(load_scenario(small), 1)
    s = res.runs[0].summary
    (agg,) = res.aggregate
    assert agg["runs"] == 1
    for name in B.AGGREGATED:
        v = getattr(s, name)
        st = agg[name]
        assert st["mean"] == st["min"] == st["max"] == v
    assert [r["mean"] for r in agg["flow_rates"]] == s.flow_rates


def test_two_seeds_distinct_and_deterministic():
    sc = from_dict(dict(bandwidth=10e6, buffer=0.5, horizon=30.0, loss_rate=0.005, flows=[{}]))
    a = B.run_batch(sc, 2, keep_traces=True)
    b = B.run_batch(sc, 2, keep_traces=True)
    assert [r.seed for r in a.runs] == [sc.seed, sc.seed + 1]
    assert a.runs[0].summary.to_dict() != a.runs[1].summary.to_dict()
    for x, y in zip(a.runs, b.runs):
        assert x.summary.to_dict() == y.summary.to_dict()


def test_explicit_seeds():
    sc = from_dict(dict(bandwidth=10e6, buffer=0.5, horizon=25.0, flows=[{}]))
    res = B.run_batch(sc, 2, seeds=[7, 9])
    assert [r.seed for r in res.runs] == [7, 9]
    with pytest.raises(ScenarioError):
        B.plan(sc, 2, seeds=[1])
    with pytest.raises(ScenarioError):
        B.plan(sc, 0)


def test_batch_aborts_on_invalid_point():
    sc = from_dict(dict(bandwidth=10e6, buffer=1.0, horizon=25.0, flows=[{}],
                        sweep={"path": "buffer", "values": [1.0, 0.0]}))
    with pytest.raises(ScenarioError) as e:
        B.run_batch(sc, 1)
    assert e.value.field == "buffer"
    assert "point" in str(e.value) and "0.0" in str(e.value)


def test_aggregate_groups_by_sweep_point():
    sc = from_dict(dict(bandwidth=10e6, buffer=1.0, horizon=25.0, flows=[{}],
                        sweep={"path": "buffer", "values": [0.5, 1.0]}))
    res = B.run_batch(sc, 2)
    assert [a["point"] for a in res.aggregate] == [{"buffer": 0.5}, {"buffer": 1.0}]
    assert all(a["runs"] == 2 for a in res.aggregate)


def test_parallel_matches_serial():
    sc = from_dict(dict(bandwidth=10e6, buffer=1.0, horizon=25.0, flows=[{}],
                        sweep={"path": "buffer", "values": [0.5, 1.0]}))
    a = B.run_batch(sc, 1)
    b = B.run_batch(sc, 1, workers=2)
    assert [r.summary.to_dict() for r in a.runs] == [r.summary.to_dict() for r in b.runs]


# command line -----------------------------------------------------------------


def test_cli_validate(small, capsys):
    assert main(["validate", str(small)]) == EXIT_OK
    assert "ok: small (1 run)" in capsys.readouterr().out


def test_cli_run(small, tmp_out, capsys):
    assert main(["run", str(small), "--out", str(tmp_out), "--series", "--seed", "5"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "seed=5" in out and "util=" in out
    assert (tmp_out / "summary.jsonl").exists()
    assert len(list((tmp_out / "series").glob("*.csv"))) == 1


def test_cli_batch(small, tmp_out, capsys):
    assert main(["batch", str(small), "--reps", "2", "--out", str(tmp_out)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "runs=2" in out
    assert len((tmp_out / "summary.jsonl").read_text().splitlines()) == 2
    assert json.loads((tmp_out / "aggregate.json").read_text())[0]["runs"] == 2


def test_cli_validation_exit_code(tmp_path, capsys):
    p = tmp_path / "bad.yaml"
    p.write_text("bandwidth: 10e6\nbuffer: 0\n")
    assert main(["validate", str(p)]) == EXIT_VALIDATION
    assert main(["run", str(p)]) == EXIT_VALIDATION
    assert "buffer" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "missing.yaml")]) == EXIT_VALIDATION


def test_cli_runtime_exit_code(small, tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["run", str(small), "--out", str(blocker / "sub")]) == EXIT_RUNTIME
    assert str(blocker) in capsys.readouterr().err


def test_cli_module_entry(small):
    import subprocess
    import sys

    r = subprocess.run([sys.executable, "-m", "siadsim", "validate", str(small)],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "ok:" in r.stdout
