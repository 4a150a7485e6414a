"""Algorithm dispatch over a state row.

The simulator calls only these five entry points; the ``ALG`` slot selects
the controller.
"""

from .._jit import njit
from . import baselines as bl
from .layout import (
    ALG,
    CUBIC,
    HIGHSPEED,
    HTCP,
    NEWRENO,
    RTT_LAST,
    RTT_MIN,
    RTT_PREV,
    SCALABLE,
    SIAD,
)
from .siad import (
    siad_init,
    siad_on_ack,
    siad_on_congestion,
    siad_on_rtt_sample,
    siad_on_timeout,
)


@njit
def cc_init(st, alg, num_rtt, num_ms, init_win):
    if alg == SIAD:
        siad_init(st, num_rtt, num_ms, init_win)
    else:
        bl.base_init(st, alg, init_win)


@njit
def cc_on_rtt(st, rtt, now):
    st[RTT_PREV] = st[RTT_LAST]
    st[RTT_LAST] = rtt
    if rtt < st[RTT_MIN]:
        st[RTT_MIN] = rtt
    if st[ALG] == SIAD:
        siad_on_rtt_sample(st, rtt, now)


@njit
def cc_on_ack(st, acked_pkts, n_acks, now):
    """SIAD counts acknowledged packets; the baselines count ACKs."""
    alg = st[ALG]
    if alg == SIAD:
        return siad_on_ack(st, acked_pkts, now)
    if alg == NEWRENO:
        bl.reno_on_ack_k(st, n_acks)
    elif alg == CUBIC:
        bl.cubic_on_ack_k(st, n_acks, now)
    elif alg == SCALABLE:
        bl.scalable_on_ack_k(st, n_acks)
    elif alg == HIGHSPEED:
        bl.highspeed_on_ack_k(st, n_acks)
    elif alg == HTCP:
        bl.htcp_on_ack_k(st, n_acks, now)
    return 0


@njit
def cc_on_congestion(st, now):
    alg = st[ALG]
    if alg == SIAD:
        return siad_on_congestion(st, now)
    if alg == NEWRENO:
        bl.reno_on_congestion_k(st)
    elif alg == CUBIC:
        bl.cubic_on_congestion_k(st)
    elif alg == SCALABLE:
        bl.scalable_on_congestion_k(st)
    elif alg == HIGHSPEED:
        bl.highspeed_on_congestion_k(st)
    elif alg == HTCP:
        bl.htcp_on_congestion_k(st, now)
    return 0


@njit
def cc_on_timeout(st, now):
    alg = st[ALG]
    if alg == SIAD:
        return siad_on_timeout(st, now)
    if alg == CUBIC:
        bl.cubic_on_timeout_k(st)
    elif alg == HTCP:
        bl.htcp_on_timeout_k(st, now)
    else:
        bl.generic_on_timeout(st)
    return 0
