"""Discrete-event dumbbell simulator."""

from __future__ import annotations

from dataclasses import dataclass

from .runner import FlowInfo, Trace, simulate


@dataclass
class SimResult:
    trace: Trace
    summary: "RunSummary"  # noqa: F821


def run(scenario) -> SimResult:
    """Simulate ``scenario`` and summarize it after its warm-up period."""
    from ..metrics import summarize

    trace = simulate(scenario)
    return SimResult(trace, summarize(trace, scenario.warmup))


__all__ = ["FlowInfo", "SimResult", "Trace", "run", "simulate"]
