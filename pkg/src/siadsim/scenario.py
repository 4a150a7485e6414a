"""Declarative experiment descriptions and their YAML file format.

A scenario file is a YAML mapping.  Top-level keys (defaults in brackets):

``name``, ``bandwidth`` (bit/s), ``owd`` [0.05 s], ``packet_size`` [1500 B],
``buffer`` (multiple of the base BDP), ``bdp_rtt`` [2*owd] RTT used to size the
buffer, ``horizon`` [600 s], ``warmup`` [20 s], ``seed`` [1],
``sample_interval`` [0.01 s], ``delayed_ack`` [true], ``loss_rate`` [0],
``flows`` (list), ``cross_traffic``, ``rtt_changes``, ``sweep``,
``repetition``.

Each flow: ``algorithm`` (siad, newreno, cubic, scalable, highspeed, htcp),
``num_rtt`` or ``num_ms`` (SIAD only), ``start`` [0], ``stop`` [horizon],
``owd`` [scenario owd], ``delayed_ack`` [scenario value], ``initial_window``
[10], ``label``.

``cross_traffic``: ``burst_bytes`` [300000], ``iat`` [[2, 3]] seconds,
``algorithm`` [newreno], ``start`` [0].

``rtt_changes``: list of ``{time, owd, flow}``; ``flow`` omitted means all
flows.  ``sweep``: ``{path, values}`` where ``path`` is a dotted key such as
``buffer`` or ``flows.1.num_rtt``; ``repetition`` has the same shape and is
crossed with the sweep.
"""

from __future__ import annotations

import copy
import math
import re
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import yaml

from .cc.layout import ALGORITHMS

BASELINES = tuple(a for a in ALGORITHMS if a != "siad")


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads ``10e6`` and ``1.5E-3`` as floats (YAML 1.2 style)."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
                   |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
                   |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
                   |[-+]?\.(?:inf|Inf|INF)
                   |\.(?:nan|NaN|NAN))$""", re.X),
    list("-+0123456789."),
)


def parse_yaml(text: str):
    return yaml.load(text, Loader=_Loader)  # noqa: S506 - _Loader derives from SafeLoader


class ScenarioError(ValueError):
    """Invalid scenario; ``field`` names the offending key."""

    def __init__(self, field: str, message: str, line: int | None = None):
        self.field = field
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{field}: {message}{where}")


@dataclass
class FlowSpec:
    algorithm: str = "siad"
    num_rtt: int | None = None
    num_ms: float | None = None
    start: float = 0.0
    stop: float | None = None
    owd: float | None = None
    delayed_ack: bool | None = None
    initial_window: float = 10.0
    label: str | None = None


@dataclass
class CrossTraffic:
    burst_bytes: int = 300_000
    iat: tuple[float, float] = (2.0, 3.0)
    algorithm: str = "newreno"
    start: float = 0.0


@dataclass
class RttChange:
    time: float
    owd: float
    flow: int | None = None


@dataclass
class Axis:
    path: str
    values: list


@dataclass
class Scenario:
    bandwidth: float
    buffer: float
    flows: list[FlowSpec] = field(default_factory=list)
    name: str = "scenario"
    owd: float = 0.05
    packet_size: int = 1500
    bdp_rtt: float | None = None
    horizon: float = 600.0
    warmup: float = 20.0
    seed: int = 1
    sample_interval: float = 0.01
    delayed_ack: bool = True
    loss_rate: float = 0.0
    cross_traffic: CrossTraffic | None = None
    rtt_changes: list[RttChange] = field(default_factory=list)
    sweep: Axis | None = None
    repetition: Axis | None = None

    @property
    def base_rtt(self) -> float:
        return self.bdp_rtt if self.bdp_rtt is not None else 2.0 * self.owd

    @property
    def bdp_packets(self) -> float:
        return self.bandwidth * self.base_rtt / (self.packet_size * 8)

    @property
    def capacity(self) -> int:
        """Bottleneck buffer in packets."""
        return max(1, int(math.floor(self.buffer * self.bdp_packets + 0.5)))

    def flow_stop(self, i: int) -> float:
        s = self.flows[i].stop
        return self.horizon if s is None else s

    def to_dict(self) -> dict:
        d = asdict(self)
        if self.cross_traffic is not None:
            d["cross_traffic"]["iat"] = list(self.cross_traffic.iat)
        return _strip_none(d)

    def validate(self) -> "Scenario":
        _positive("bandwidth", self.bandwidth)
        _positive("owd", self.owd)
        _positive("buffer", self.buffer)
        _positive("horizon", self.horizon)
        _positive("sample_interval", self.sample_interval)
        if self.bdp_rtt is not None:
            _positive("bdp_rtt", self.bdp_rtt)
        if not (isinstance(self.packet_size, int) and self.packet_size > 40):
            raise ScenarioError("packet_size", "must be an integer > 40 bytes")
        if not 0 <= self.warmup < self.horizon:
            raise ScenarioError("warmup", "must satisfy 0 <= warmup < horizon")
        if not 0 <= self.loss_rate < 1:
            raise ScenarioError("loss_rate", "must be in [0, 1)")
        if not isinstance(self.seed, int) or self.seed < 0 or self.seed >= 2**64:
            raise ScenarioError("seed", "must be a 64-bit unsigned integer")
        for i, fl in enumerate(self.flows):
            _validate_flow(f"flows.{i}", fl, self.horizon)
        ct = self.cross_traffic
        if ct is not None:
            if ct.algorithm not in ALGORITHMS:
                raise ScenarioError("cross_traffic.algorithm", f"unknown algorithm {ct.algorithm!r}")
            if not ct.burst_bytes > 0:
                raise ScenarioError("cross_traffic.burst_bytes", "must be positive")
            lo, hi = ct.iat
            if not 0 < lo <= hi:
                raise ScenarioError("cross_traffic.iat", "need 0 < low <= high")
            if not 0 <= ct.start <= self.horizon:
                raise ScenarioError("cross_traffic.start", "must lie within the horizon")
        for i, ch in enumerate(self.rtt_changes):
            if not 0 <= ch.time <= self.horizon:
                raise ScenarioError(f"rtt_changes.{i}.time", "must lie within the horizon")
            _positive(f"rtt_changes.{i}.owd", ch.owd)
            if ch.flow is not None and not 0 <= ch.flow < len(self.flows):
                raise ScenarioError(f"rtt_changes.{i}.flow", "no such flow")
        for name in ("sweep", "repetition"):
            ax = getattr(self, name)
            if ax is not None and not ax.values:
                raise ScenarioError(f"{name}.values", "must be a non-empty list")
        return self


def _strip_none(obj):
    if isinstance(obj, dict):
        return {k: _strip_none(v) for k, v in obj.items() if v is not None}
    if isinstance(obj, (list, tuple)):
        return [_strip_none(v) for v in obj]
    return obj


def _positive(name, value):
    if not isinstance(value, (int, float)) or isinstance(value, bool) or not value > 0:
        raise ScenarioError(name, f"must be a positive number, got {value!r}")
    if not math.isfinite(value):
        raise ScenarioError(name, "must be finite")


def _validate_flow(prefix, fl: FlowSpec, horizon):
    if fl.algorithm not in ALGORITHMS:
        raise ScenarioError(f"{prefix}.algorithm", f"unknown algorithm {fl.algorithm!r}")
    if fl.algorithm == "siad":
        if fl.num_rtt is not None and fl.num_ms is not None:
            raise ScenarioError(f"{prefix}.num_rtt", "give either num_rtt or num_ms")
        if fl.num_rtt is not None and (not isinstance(fl.num_rtt, int) or fl.num_rtt < 2):
            raise ScenarioError(f"{prefix}.num_rtt", "must be an integer >= 2")
        if fl.num_ms is not None:
            _positive(f"{prefix}.num_ms", fl.num_ms)
    elif fl.num_rtt is not None or fl.num_ms is not None:
        raise ScenarioError(f"{prefix}.num_rtt", "only SIAD flows take num_rtt/num_ms")
    stop = horizon if fl.stop is None else fl.stop
    if not 0 <= fl.start < stop <= horizon:
        raise ScenarioError(f"{prefix}.start", "need 0 <= start < stop <= horizon")
    if fl.owd is not None:
        _positive(f"{prefix}.owd", fl.owd)
    if not fl.initial_window >= 2:
        raise ScenarioError(f"{prefix}.initial_window", "must be >= 2")


_FLOW_KEYS = {f.name for f in fields(FlowSpec)}
_TOP_KEYS = {f.name for f in fields(Scenario)}


def _build(cls, data, prefix, allowed):
    if not isinstance(data, dict):
        raise ScenarioError(prefix or "<root>", "must be a mapping")
    unknown = set(data) - allowed
    if unknown:
        k = sorted(unknown)[0]
        raise ScenarioError(f"{prefix}.{k}" if prefix else k, "unknown key")
    try:
        return cls(**data)
    except TypeError as exc:
        raise ScenarioError(prefix or "<root>", str(exc)) from None


def from_dict(data: dict) -> Scenario:
    """Build and validate a Scenario from plain data (ignores a ``meta`` key)."""
    if not isinstance(data, dict):
        raise ScenarioError("<root>", "scenario must be a mapping")
    data = copy.deepcopy(data)
    data.pop("meta", None)
    for req in ("bandwidth", "buffer"):
        if req not in data:
            raise ScenarioError(req, "is required")
    flows = data.pop("flows", []) or []
    if not isinstance(flows, list):
        raise ScenarioError("flows", "must be a list")
    ct = data.pop("cross_traffic", None)
    changes = data.pop("rtt_changes", []) or []
    sweep = data.pop("sweep", None)
    rep = data.pop("repetition", None)
    sc = _build(Scenario, data, "", _TOP_KEYS)
    sc.flows = [_build(FlowSpec, f, f"flows.{i}", _FLOW_KEYS) for i, f in enumerate(flows)]
    if ct is not None:
        ct = _build(CrossTraffic, ct, "cross_traffic", {f.name for f in fields(CrossTraffic)})
        if not (isinstance(ct.iat, (list, tuple)) and len(ct.iat) == 2):
            raise ScenarioError("cross_traffic.iat", "must be a [low, high] pair")
        ct.iat = (float(ct.iat[0]), float(ct.iat[1]))
        sc.cross_traffic = ct
    sc.rtt_changes = [
        _build(RttChange, c, f"rtt_changes.{i}", {"time", "owd", "flow"})
        for i, c in enumerate(changes)
    ]
    for name, ax in (("sweep", sweep), ("repetition", rep)):
        if ax is not None:
            ax = _build(Axis, ax, name, {"path", "values"})
            if not isinstance(ax.values, list):
                raise ScenarioError(f"{name}.values", "must be a list")
            setattr(sc, name, ax)
    for name in ("bandwidth", "owd", "buffer", "horizon", "warmup", "sample_interval", "loss_rate"):
        v = getattr(sc, name)
        if isinstance(v, int) and not isinstance(v, bool):
            setattr(sc, name, float(v))
    return sc.validate()


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError("<file>", f"cannot read {path}: {exc.strerror}") from None
    try:
        data = parse_yaml(text)
    except yaml.MarkedYAMLError as exc:
        line = exc.problem_mark.line + 1 if exc.problem_mark is not None else None
        raise ScenarioError("<syntax>", str(exc.problem), line) from None
    except yaml.YAMLError as exc:
        raise ScenarioError("<syntax>", str(exc)) from None
    try:
        return from_dict(data)
    except ScenarioError as exc:
        if exc.line is None:
            exc.line = _find_line(text, exc.field)
            if exc.line is not None:
                exc.args = (f"{exc.args[0]} (line {exc.line})",)
        raise


def _find_line(text: str, field_path: str) -> int | None:
    """Best-effort line of the last key in ``field_path``."""
    key = field_path.split(".")[-1]
    if key.isdigit() or key.startswith("<"):
        key = field_path.split(".")[0]
    for i, line in enumerate(text.splitlines(), 1):
        s = line.strip().lstrip("- ")
        if s.startswith(key + ":"):
            return i
    return None


def dump_scenario(sc: Scenario) -> str:
    return yaml.safe_dump(sc.to_dict(), sort_keys=False)


def set_path(data: dict, path: str, value: Any) -> None:
    """Assign ``value`` at a dotted path (integers index lists)."""
    parts = path.split(".")
    cur = data
    for p in parts[:-1]:
        cur = cur[int(p)] if isinstance(cur, list) else cur.setdefault(p, {})
    last = parts[-1]
    if isinstance(cur, list):
        cur[int(last)] = value
    else:
        cur[last] = value


def expand(sc: Scenario) -> list[tuple[dict, Scenario]]:
    """Expand sweep x repetition into concrete scenarios, each tagged with its point."""
    base = sc.to_dict()
    base.pop("sweep", None)
    base.pop("repetition", None)
    sweep = sc.sweep.values if sc.sweep else [None]
    reps = sc.repetition.values if sc.repetition else [None]
    out = []
    for sv in sweep:
        for rv in reps:
            d = copy.deepcopy(base)
            point = {}
            if sc.sweep:
                try:
                    set_path(d, sc.sweep.path, sv)
                except (KeyError, IndexError, ValueError, TypeError):
                    raise ScenarioError("sweep.path", f"cannot resolve {sc.sweep.path!r}") from None
                point[sc.sweep.path] = sv
            if sc.repetition:
                try:
                    set_path(d, sc.repetition.path, rv)
                except (KeyError, IndexError, ValueError, TypeError):
                    raise ScenarioError(
                        "repetition.path", f"cannot resolve {sc.repetition.path!r}"
                    ) from None
                point[sc.repetition.path] = rv
            try:
                out.append((point, from_dict(d)))
            except ScenarioError as e:
                raise ScenarioError(e.field, f"{e.args[0]} at point {point}") from None
    return out
