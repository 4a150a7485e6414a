"""Congestion controllers: SIAD and the loss-based baselines."""

from .baselines import (
    BaselineState,
    cubic_on_ack,
    cubic_on_congestion,
    cubic_window,
    highspeed_on_ack,
    highspeed_on_congestion,
    highspeed_params,
    htcp_on_ack,
    htcp_on_congestion,
    reno_on_ack,
    reno_on_congestion,
    scalable_on_ack,
    scalable_on_congestion,
)
from .layout import ALGORITHMS
from .siad import (
    CcAction,
    Phase,
    SiadConfig,
    SiadState,
    additional_decrease,
    compute_alpha,
    estimate_cwnd_max,
    initialize,
    on_ack,
    on_congestion_event,
    on_rtt_probe_result,
    on_rtt_sample,
    on_timeout,
    resolve_num_rtt,
)

__all__ = [
    "ALGORITHMS",
    "BaselineState",
    "CcAction",
    "Phase",
    "SiadConfig",
    "SiadState",
    "additional_decrease",
    "compute_alpha",
    "cubic_on_ack",
    "cubic_on_congestion",
    "cubic_window",
    "estimate_cwnd_max",
    "highspeed_on_ack",
    "highspeed_on_congestion",
    "highspeed_params",
    "htcp_on_ack",
    "htcp_on_congestion",
    "initialize",
    "on_ack",
    "on_congestion_event",
    "on_rtt_probe_result",
    "on_rtt_sample",
    "on_timeout",
    "reno_on_ack",
    "reno_on_congestion",
    "resolve_num_rtt",
    "scalable_on_ack",
    "scalable_on_congestion",
]
