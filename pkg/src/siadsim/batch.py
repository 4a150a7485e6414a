"""Sweep and repetition execution, plus result files for plotting.

Output layout under ``outdir``::

    summary.jsonl         one record per run (fields in SUMMARY_FIELDS)
    aggregate.json        mean/min/max per sweep point
    manifests/<run>.yaml  loadable scenario plus a ``meta`` block
    series/<run>.csv      time, cwnd per traced flow, qlen (only with series)
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .metrics import RunSummary, summarize
from .netsim.runner import Trace, simulate
from .scenario import Scenario, ScenarioError, expand

SUMMARY_FIELDS = (
    "run_id",
    "scenario",
    "point",
    "seed",
    "flow_labels",
    "flow_rates",
    "utilization",
    "queue_fill",
    "loss_rate",
    "mean_loss_event_distance",
    "convergence_time",
)

AGGREGATED = ("utilization", "queue_fill", "loss_rate", "mean_loss_event_distance",
              "convergence_time")


@dataclass
class RunRecord:
    run_id: str
    point: dict
    seed: int
    scenario: Scenario
    summary: RunSummary
    trace: Trace | None = None

    def row(self) -> dict:
        s = self.summary
        return {
            "run_id": self.run_id,
            "scenario": self.scenario.name,
            "point": self.point,
            "seed": self.seed,
            "flow_labels": s.flow_labels,
            "flow_rates": s.flow_rates,
            "utilization": s.utilization,
            "queue_fill": s.queue_fill,
            "loss_rate": s.loss_rate,
            "mean_loss_event_distance": s.mean_loss_event_distance,
            "convergence_time": s.convergence_time,
        }


@dataclass
class BatchResult:
    runs: list[RunRecord]
    aggregate: list[dict] = field(default_factory=list)

    @property
    def summaries(self) -> list[RunSummary]:
        return [r.summary for r in self.runs]

    @property
    def traces(self) -> list[Trace | None]:
        return [r.trace for r in self.runs]


def plan(scenario: Scenario, repetitions: int = 1, seeds=None) -> list[tuple[str, dict, Scenario]]:
    """Concrete (run id, point, scenario) triples for the sweep x repetition x seed grid.

    Without explicit ``seeds`` the r-th repetition uses ``scenario.seed + r``.
    """
    if repetitions < 1:
        raise ScenarioError("repetitions", "must be >= 1")
    if seeds is None:
        seeds = [scenario.seed + r for r in range(repetitions)]
    else:
        seeds = [int(s) for s in seeds]
        if len(seeds) != repetitions:
            raise ScenarioError("seeds", f"expected {repetitions} seeds, got {len(seeds)}")
    out = []
    for point, sc in expand(scenario):
        for seed in seeds:
            out.append((point, replace(sc, seed=seed)))
    width = max(4, len(str(len(out))))
    return [(f"{scenario.name}-{i:0{width}d}", p, s) for i, (p, s) in enumerate(out)]


def _execute(job):
    run_id, point, sc, keep = job
    try:
        sc.validate()
    except ScenarioError as e:
        raise ScenarioError(e.field, f"{e} in run {run_id} at {point}") from None
    tr = simulate(sc)
    summ = summarize(tr, sc.warmup)
    return RunRecord(run_id, point, sc.seed, sc, summ, tr if keep else None)


def _stats(values):
    v = [x for x in values if x is not None and not (isinstance(x, float) and math.isnan(x))]
    if not v:
        return {"mean": None, "min": None, "max": None, "n": 0, "missing": len(values)}
    a = np.asarray(v, dtype=float)
    return {"mean": float(a.mean()), "min": float(a.min()), "max": float(a.max()),
            "n": len(v), "missing": len(values) - len(v)}


def aggregate(runs: list[RunRecord], sweep_path: str | None) -> list[dict]:
    """Mean/min/max of each summary metric, grouped by sweep value."""
    groups: dict = {}
    for r in runs:
        key = r.point.get(sweep_path) if sweep_path else None
        groups.setdefault(json.dumps(key), []).append(r)
    out = []
    for key, rs in groups.items():
        entry = {"point": {sweep_path: json.loads(key)} if sweep_path else {}, "runs": len(rs)}
        for name in AGGREGATED:
            entry[name] = _stats([getattr(r.summary, name) for r in rs])
        n_flows = len(rs[0].summary.flow_rates)
        entry["flow_rates"] = [_stats([r.summary.flow_rates[i] for r in rs])
                               for i in range(n_flows)]
        out.append(entry)
    return out


def run_batch(scenario: Scenario, repetitions: int = 1, seeds=None, *,
              keep_traces: bool = False, workers: int = 1) -> BatchResult:
    """Run every grid point; a validation error in any run aborts the batch."""
    jobs = [(rid, p, sc, keep_traces) for rid, p, sc in plan(scenario, repetitions, seeds)]
    for rid, p, sc, _ in jobs:
        try:
            sc.validate()
        except ScenarioError as e:
            raise ScenarioError(e.field, f"run {rid} at {p}: {e}") from None
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            runs = list(ex.map(_execute, jobs))
    else:
        runs = [_execute(j) for j in jobs]
    sweep_path = scenario.sweep.path if scenario.sweep else None
    return BatchResult(runs, aggregate(runs, sweep_path))


def manifest(record: RunRecord) -> dict:
    d = record.scenario.to_dict()
    d["meta"] = {"run_id": record.run_id, "point": record.point, "seed": record.seed,
                 "version": __version__}
    return d


def series_rows(trace: Trace):
    """Rows of (time, cwnd per traced flow, qlen) for samples in [0, horizon)."""
    n = int(math.floor(trace.horizon / trace.dt + 1e-9))
    n = min(n, len(trace.t))
    for k in range(n):
        yield [round(float(trace.t[k]), 9), *(float(c) for c in trace.cwnd[k]),
               int(trace.qlen[k])]


def write_series(trace: Trace, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time"] + [f"cwnd_{fi.label}" for fi in trace.flows] + ["qlen"])
        w.writerows(series_rows(trace))


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    return obj


def emit_results(result: BatchResult, outdir, series: bool = True) -> list[Path]:
    """Write summary, aggregate, manifests and (if traces were kept) series files."""
    out = Path(outdir)
    written = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "manifests").mkdir(exist_ok=True)
        p = out / "summary.jsonl"
        with open(p, "w") as fh:
            for r in result.runs:
                fh.write(json.dumps(_clean(r.row())) + "\n")
        written.append(p)
        p = out / "aggregate.json"
        p.write_text(json.dumps(_clean(result.aggregate), indent=2) + "\n")
        written.append(p)
        for r in result.runs:
            p = out / "manifests" / f"{r.run_id}.yaml"
            p.write_text(yaml.safe_dump(_clean(manifest(r)), sort_keys=False))
            written.append(p)
        if series and any(r.trace is not None for r in result.runs):
            (out / "series").mkdir(exist_ok=True)
            for r in result.runs:
                if r.trace is None:
                    continue
                p = out / "series" / f"{r.run_id}.csv"
                write_series(r.trace, p)
                written.append(p)
    except OSError as e:
        raise OSError(f"cannot write results under {out}: {e}") from e
    return written
