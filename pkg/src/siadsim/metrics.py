"""Summary statistics computed from a :class:`~siadsim.netsim.Trace`.

Interval arguments are in seconds and are snapped to the sampling grid.
Rates count payload bits only (packet size minus a fixed 40-byte header);
link utilization counts wire bits.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .netsim.kernel import LOG_ADDITIONAL_DECREASE, LOG_CONGESTION
from .netsim.runner import Trace

DEFAULT_WARMUP = 20.0

CONVERGENCE_WINDOW = 5.0
CONVERGENCE_TOLERANCE = 0.25
CONVERGENCE_HOLD = 10.0


class MetricsError(ValueError):
    pass


def _k(trace: Trace, t: float) -> int:
    k = int(math.floor(t / trace.dt + 0.5))
    return min(max(k, 0), len(trace.t) - 1)


def _interval(trace: Trace, start: float, end: float | None) -> tuple[int, int, float]:
    if end is None:
        end = trace.horizon
    k0, k1 = _k(trace, start), _k(trace, end)
    if not end > start or k1 <= k0:
        raise MetricsError(f"empty interval [{start}, {end}]")
    return k0, k1, trace.t[k1] - trace.t[k0]


def _flow(trace: Trace, flow) -> int:
    if isinstance(flow, str):
        for fi in trace.flows:
            if fi.label == flow:
                return fi.index
        raise MetricsError(f"unknown flow {flow!r}")
    if not 0 <= int(flow) < len(trace.flows):
        raise MetricsError(f"unknown flow {flow!r}")
    return int(flow)


def utilization(trace: Trace, start: float = DEFAULT_WARMUP, end: float | None = None) -> float:
    """Fraction of the link's bit rate used, from packets leaving the bottleneck."""
    k0, k1, span = _interval(trace, start, end)
    bits = (trace.departed[k1] - trace.departed[k0]) * trace.wire_bits
    # a packet in service at either edge can push this a hair past 1
    return min(1.0, bits / (trace.bandwidth * span))


def utilization_from_busy(trace: Trace, start: float = DEFAULT_WARMUP,
                          end: float | None = None) -> float:
    k0, k1, span = _interval(trace, start, end)
    return (trace.busy[k1] - trace.busy[k0]) / span


def queue_fill(trace: Trace, start: float = DEFAULT_WARMUP, end: float | None = None) -> float:
    """Time-weighted mean occupancy divided by the buffer capacity."""
    k0, k1, span = _interval(trace, start, end)
    return (trace.qarea[k1] - trace.qarea[k0]) / span / trace.capacity


def mean_queue_delay(trace: Trace, start: float = DEFAULT_WARMUP, end: float | None = None) -> float:
    k0, k1, span = _interval(trace, start, end)
    return (trace.qarea[k1] - trace.qarea[k0]) / span * trace.wire_bits / trace.bandwidth


def per_flow_rate(trace: Trace, flow, start: float = DEFAULT_WARMUP,
                  end: float | None = None) -> float:
    """Goodput of ``flow`` in bit/s (unique packets, payload bits)."""
    f = _flow(trace, flow)
    k0, k1, span = _interval(trace, start, end)
    return (trace.delivered[k1, f] - trace.delivered[k0, f]) * trace.payload_bits / span


def cross_rate(trace: Trace, start: float = DEFAULT_WARMUP, end: float | None = None) -> float:
    k0, k1, span = _interval(trace, start, end)
    return (trace.cross_delivered[k1] - trace.cross_delivered[k0]) * trace.payload_bits / span


def _drops_in(trace: Trace, start: float, end: float, flow: int | None = None) -> np.ndarray:
    d = trace.drops
    m = (d[:, 0] >= start) & (d[:, 0] < end)
    if flow is not None:
        m &= d[:, 1] == flow
    return d[m]


def loss_rate(trace: Trace, flow=None, start: float = DEFAULT_WARMUP,
              end: float | None = None) -> float:
    """Dropped / transmitted packets of one traced flow, or of all traced flows."""
    k0, k1, _ = _interval(trace, start, end)
    t0, t1 = trace.t[k0], trace.t[k1]
    if flow is None:
        sent = int((trace.sent[k1] - trace.sent[k0]).sum())
        d = _drops_in(trace, t0, t1)
        dropped = int((d[:, 1] < len(trace.flows)).sum())
    else:
        f = _flow(trace, flow)
        sent = int(trace.sent[k1, f] - trace.sent[k0, f])
        dropped = len(_drops_in(trace, t0, t1, f))
    return dropped / sent if sent else 0.0


def congestion_events(trace: Trace, flow=0, start: float = 0.0,
                      end: float | None = None) -> list[tuple[float, float]]:
    """(first drop, last drop) of each congestion event of ``flow``.

    A drop belongs to the first window reduction (congestion event or
    timeout) of its flow that happens after it, so drops are grouped exactly
    as the sender coalesced them.  Drops after the last reduction are ignored.
    """
    f = _flow(trace, flow)
    end = trace.horizon if end is None else end
    d = trace.drops
    times = d[d[:, 1] == f, 0]
    c = trace.cc_events
    cuts = c[(c[:, 1] == f) & (c[:, 2] != LOG_ADDITIONAL_DECREASE), 0]
    owner = np.searchsorted(cuts, times, side="right")
    keep = owner < len(cuts)
    return [
        (first, last)
        for first, last in group_events(times[keep], owner[keep])
        if first >= start and last <= end
    ]


def group_events(times, owner) -> list[tuple[float, float]]:
    """Collapse drop times sharing an owner id into (first, last) pairs."""
    out = []
    for i, (t, o) in enumerate(zip(times, owner)):
        if i and o == owner[i - 1]:
            out[-1] = (out[-1][0], float(t))
        else:
            out.append((float(t), float(t)))
    return out


def event_distances(events) -> list[float]:
    """Gap from the last drop of each event to the first drop of the next."""
    return [b[0] - a[1] for a, b in zip(events, events[1:])]


def loss_event_distance(trace: Trace, flow=0, start: float = DEFAULT_WARMUP,
                        end: float | None = None) -> list[float]:
    """Seconds from the last drop of one congestion event to the first drop of the next."""
    return event_distances(congestion_events(trace, flow, start, end))


def controller_events(trace: Trace, flow=0, kind: int | None = LOG_CONGESTION,
                      start: float = 0.0, end: float | None = None) -> np.ndarray:
    f = _flow(trace, flow)
    end = trace.horizon if end is None else end
    c = trace.cc_events
    m = (c[:, 1] == f) & (c[:, 0] >= start) & (c[:, 0] <= end)
    if kind is not None:
        m &= c[:, 2] == kind
    return c[m]


def epoch_min_queue(trace: Trace, flow=0, start: float = DEFAULT_WARMUP,
                    end: float | None = None) -> np.ndarray:
    """Minimum queue occupancy between consecutive congestion events of ``flow``."""
    ev = controller_events(trace, flow, LOG_CONGESTION, start, end)[:, 0]
    out = []
    for a, b in zip(ev, ev[1:]):
        ka, kb = _k(trace, a), _k(trace, b)
        if kb > ka:
            out.append(int(trace.qmin[ka + 1: kb + 1].min()))
    return np.array(out, dtype=np.int64)


def sliding_rates(trace: Trace, window: float = CONVERGENCE_WINDOW) -> np.ndarray:
    """Per-flow goodput over the trailing ``window`` seconds at every sample (bit/s)."""
    w = max(1, int(round(window / trace.dt)))
    d = trace.delivered.astype(np.float64)
    r = np.full(d.shape, np.nan)
    r[w:] = (d[w:] - d[:-w]) * trace.payload_bits / (w * trace.dt)
    return r


def convergence_time(trace: Trace, joiner=1, fair_share: float | None = None,
                     window: float = CONVERGENCE_WINDOW,
                     tolerance: float = CONVERGENCE_TOLERANCE,
                     hold: float = CONVERGENCE_HOLD) -> float | None:
    """Seconds from the joiner's start until every active flow stays within
    ``tolerance`` of ``fair_share`` for ``hold`` seconds.

    Rates are averaged over a trailing ``window``.  ``fair_share`` defaults to
    the payload capacity split evenly among active traced flows.  Returns
    ``None`` if the condition is never met.
    """
    j = _flow(trace, joiner)
    t_join = trace.flows[j].start
    active = [fi.index for fi in trace.flows if fi.start <= t_join < fi.stop]
    if fair_share is None:
        fair_share = trace.bandwidth * trace.payload_bits / trace.wire_bits / len(active)
    r = sliding_rates(trace, window)[:, active]
    ok = np.all(np.abs(r - fair_share) <= tolerance * fair_share, axis=1)
    k0 = _k(trace, t_join + window)
    ok[:k0] = False
    for fi in trace.flows:
        if fi.index in active and fi.stop < trace.horizon:
            ok[_k(trace, fi.stop):] = False
    h = int(round(hold / trace.dt))
    run = 0
    for k in range(k0, len(ok)):
        run = run + 1 if ok[k] else 0
        if run > h:
            return float(trace.t[k - h] - t_join)
    return None


@dataclass
class SteadyState:
    """Quantities entering the steady-state throughput model of one flow."""

    packets_per_rtt: float  # measured mean packets delivered per mean RTT
    mean_rtt: float
    beta: float  # mean cwnd_after / cwnd_before over congestion events
    event_probability: float  # congestion events per transmitted packet
    events_per_rtt: float
    predicted: float  # 2 / ((beta + 1) * p)


def steady_state(trace: Trace, flow=0, start: float = DEFAULT_WARMUP,
                 end: float | None = None) -> SteadyState:
    f = _flow(trace, flow)
    k0, k1, span = _interval(trace, start, end)
    t0, t1 = trace.t[k0], trace.t[k1]
    ev = controller_events(trace, f, LOG_CONGESTION, t0, t1)
    if len(ev) == 0:
        raise MetricsError("no congestion events in the interval")
    sent = trace.sent[k1, f] - trace.sent[k0, f]
    delivered = trace.delivered[k1, f] - trace.delivered[k0, f]
    ser = trace.wire_bits / trace.bandwidth
    mean_rtt = trace.flows[f].owd * 2 + ser + mean_queue_delay(trace, t0, t1)
    n_rtt = span / mean_rtt
    beta = float(np.mean(ev[:, 4] / ev[:, 3]))
    p = len(ev) / sent
    return SteadyState(
        packets_per_rtt=delivered / n_rtt,
        mean_rtt=mean_rtt,
        beta=beta,
        event_probability=p,
        events_per_rtt=len(ev) / n_rtt,
        predicted=2.0 / ((beta + 1.0) * p),
    )


@dataclass
class RunSummary:
    flow_rates: list[float]
    flow_labels: list[str]
    utilization: float
    utilization_busy: float
    queue_fill: float
    loss_rate: float
    loss_event_distances: list[list[float]]
    mean_loss_event_distance: float | None
    convergence_time: float | None
    cross_rate: float
    warmup: float
    end: float
    timeouts: int
    additional_decreases: int
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def summarize(trace: Trace, warmup: float = DEFAULT_WARMUP, end: float | None = None) -> RunSummary:
    end = trace.horizon if end is None else end
    flows = trace.flows
    rates = [per_flow_rate(trace, fi.index, warmup, end) for fi in flows]
    dists = [loss_event_distance(trace, fi.index, warmup, end) for fi in flows]
    alld = [x for d in dists for x in d]
    conv = None
    starts = [fi.start for fi in flows]
    if len(flows) >= 2 and max(starts) > min(starts):
        joiner = int(np.argmax(starts))
        conv = convergence_time(trace, joiner)
    n_main = len(flows)
    cc = trace.cc_events
    main = cc[:, 1] < n_main
    return RunSummary(
        flow_rates=rates,
        flow_labels=[fi.label for fi in flows],
        utilization=utilization(trace, warmup, end),
        utilization_busy=utilization_from_busy(trace, warmup, end),
        queue_fill=queue_fill(trace, warmup, end),
        loss_rate=loss_rate(trace, None, warmup, end) if flows else 0.0,
        loss_event_distances=dists,
        mean_loss_event_distance=float(np.mean(alld)) if alld else None,
        convergence_time=conv,
        cross_rate=cross_rate(trace, warmup, end),
        warmup=warmup,
        end=end,
        timeouts=int(trace.counters["timeouts"][:n_main].sum()),
        additional_decreases=int(((cc[:, 2] == 1) & main).sum()),
        diagnostics=dict(trace.diagnostics),
    )
