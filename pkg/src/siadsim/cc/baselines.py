"""Loss-based comparison controllers: NewReno, Cubic, Scalable, HighSpeed, H-TCP.

Each follows its canonical published definition.  All share the common state
slots (cwnd, ssthresh, RTT tracking) and the same slow start below
``ssthresh``.  Per-ACK increments receive the number of ACKs, not the number
of acknowledged packets; with delayed ACKs this halves the growth rate, as in
Linux without byte counting.
"""

from __future__ import annotations

import math

import numpy as np

from .._jit import njit
from .layout import (
    ALG,
    ALGORITHM_NAMES,
    ALGORITHMS,
    STATE_SIZE,
    CU_EPOCH,
    CU_K,
    CU_ORIGIN,
    CU_W_EST,
    CU_W_MAX,
    CWND,
    HS_A,
    HS_B,
    HT_BETA,
    HT_LAST_EVENT,
    INF,
    INIT_WIN,
    LAST_BETA,
    RTT_LAST,
    RTT_MIN,
    RTT_PREV,
    SSTHRESH,
)
from .layout import SIAD as SIAD_ID

MIN_CWND = 2.0
TIMEOUT_CWND = 1.0

SCALABLE_AI = 0.01
SCALABLE_MD = 0.125

CUBIC_C = 0.4
CUBIC_BETA = 0.3  # fraction removed on loss: cwnd -> 0.7 * cwnd

HS_LOW_WINDOW = 38.0
HS_HIGH_WINDOW = 83000.0
HS_HIGH_P = 1e-7
HS_HIGH_DECREASE = 0.1

HTCP_BETA_MIN = 0.5
HTCP_BETA_MAX = 0.8
HTCP_DELTA_L = 1.0


@njit
def base_init(st, alg, init_win):
    for i in range(st.shape[0]):
        st[i] = 0.0
    st[ALG] = alg
    st[CWND] = init_win
    st[SSTHRESH] = INF
    st[RTT_MIN] = INF
    st[RTT_LAST] = INF
    st[RTT_PREV] = INF
    st[INIT_WIN] = init_win
    st[LAST_BETA] = 1.0
    st[CU_EPOCH] = -1.0 if alg == 2 else st[CU_EPOCH]


@njit
def _slow_start(st, acked):
    """Returns True if the ACK was consumed by slow start."""
    cwnd = st[CWND]
    if cwnd < st[SSTHRESH]:
        st[CWND] = cwnd + acked
        return True
    return False


@njit
def _cut(st, factor):
    before = st[CWND]
    cwnd = before * factor
    if cwnd < MIN_CWND:
        cwnd = MIN_CWND
    st[CWND] = cwnd
    st[SSTHRESH] = cwnd
    st[LAST_BETA] = cwnd / before


@njit
def _timeout(st):
    cwnd = st[CWND]
    ss = cwnd / 2.0
    if ss < MIN_CWND:
        ss = MIN_CWND
    st[SSTHRESH] = ss
    st[CWND] = TIMEOUT_CWND
    st[LAST_BETA] = TIMEOUT_CWND / cwnd


# NewReno ------------------------------------------------------------------


@njit
def reno_on_ack_k(st, acked):
    if not _slow_start(st, acked):
        st[CWND] += acked / st[CWND]


@njit
def reno_on_congestion_k(st):
    _cut(st, 0.5)


# Scalable -----------------------------------------------------------------


@njit
def scalable_on_ack_k(st, acked):
    if not _slow_start(st, acked):
        st[CWND] += SCALABLE_AI * acked


@njit
def scalable_on_congestion_k(st):
    _cut(st, 1.0 - SCALABLE_MD)


# HighSpeed ----------------------------------------------------------------


@njit
def highspeed_b(w):
    if w <= HS_LOW_WINDOW:
        return 0.5
    frac = (math.log(w) - math.log(HS_LOW_WINDOW)) / (
        math.log(HS_HIGH_WINDOW) - math.log(HS_LOW_WINDOW)
    )
    return (HS_HIGH_DECREASE - 0.5) * frac + 0.5


@njit
def highspeed_p(w):
    """Drop rate of the HighSpeed response function at window ``w``."""
    low_p = 1.5 / (HS_LOW_WINDOW * HS_LOW_WINDOW)
    slope = (math.log(HS_HIGH_P) - math.log(low_p)) / (
        math.log(HS_HIGH_WINDOW) - math.log(HS_LOW_WINDOW)
    )
    return math.exp(slope * (math.log(w) - math.log(HS_LOW_WINDOW)) + math.log(low_p))


@njit
def highspeed_a(w):
    if w <= HS_LOW_WINDOW:
        return 1.0
    b = highspeed_b(w)
    return w * w * highspeed_p(w) * 2.0 * b / (2.0 - b)


@njit
def highspeed_on_ack_k(st, acked):
    if _slow_start(st, acked):
        return
    cwnd = st[CWND]
    a = highspeed_a(cwnd)
    st[HS_A] = a
    st[CWND] = cwnd + a * acked / cwnd


@njit
def highspeed_on_congestion_k(st):
    b = highspeed_b(st[CWND])
    st[HS_B] = b
    _cut(st, 1.0 - b)


# H-TCP --------------------------------------------------------------------


@njit
def htcp_alpha(delta):
    if delta <= HTCP_DELTA_L:
        return 1.0
    d = delta - HTCP_DELTA_L
    return 1.0 + 10.0 * d + 0.25 * d * d


@njit
def htcp_beta(rtt_min, rtt_curr):
    if not (rtt_curr < INF and rtt_min < INF) or rtt_curr <= 0.0:
        return HTCP_BETA_MIN
    b = rtt_min / rtt_curr
    if b < HTCP_BETA_MIN:
        b = HTCP_BETA_MIN
    if b > HTCP_BETA_MAX:
        b = HTCP_BETA_MAX
    return b


@njit
def htcp_on_ack_k(st, acked, now):
    if st[HT_BETA] == 0.0:
        st[HT_BETA] = HTCP_BETA_MIN
        st[HT_LAST_EVENT] = now
    if _slow_start(st, acked):
        return
    a = htcp_alpha(now - st[HT_LAST_EVENT])
    st[CWND] += 2.0 * (1.0 - st[HT_BETA]) * a * acked / st[CWND]


@njit
def htcp_on_congestion_k(st, now):
    rtt_curr = st[RTT_LAST] if st[RTT_LAST] < st[RTT_PREV] else st[RTT_PREV]
    b = htcp_beta(st[RTT_MIN], rtt_curr)
    st[HT_BETA] = b
    st[HT_LAST_EVENT] = now
    _cut(st, b)


# Cubic --------------------------------------------------------------------


@njit
def cubic_k(w_max):
    return (w_max * CUBIC_BETA / CUBIC_C) ** (1.0 / 3.0)


@njit
def cubic_window_k(t, w_max, rtt):
    """Cubic target ``rtt`` after ``t`` seconds into an epoch that started at 0.7*w_max."""
    d = t + rtt - cubic_k(w_max)
    return CUBIC_C * d * d * d + w_max


@njit
def cubic_on_ack_k(st, acked, now):
    if _slow_start(st, acked):
        return
    cwnd = st[CWND]
    if st[CU_EPOCH] < 0.0:
        st[CU_EPOCH] = now
        if cwnd < st[CU_W_MAX]:
            st[CU_K] = ((st[CU_W_MAX] - cwnd) / CUBIC_C) ** (1.0 / 3.0)
            st[CU_ORIGIN] = st[CU_W_MAX]
        else:
            st[CU_K] = 0.0
            st[CU_ORIGIN] = cwnd
        st[CU_W_EST] = cwnd
    rtt = st[RTT_MIN]
    if not rtt < INF:
        rtt = 0.0
    d = now - st[CU_EPOCH] + rtt - st[CU_K]
    target = st[CU_ORIGIN] + CUBIC_C * d * d * d
    # TCP-friendly region: AIMD with the same average rate as Reno
    st[CU_W_EST] += 3.0 * CUBIC_BETA / (2.0 - CUBIC_BETA) * acked / cwnd
    if st[CU_W_EST] > target:
        target = st[CU_W_EST]
    if target > cwnd:
        inc = (target - cwnd) / cwnd
        if inc > 0.5:
            inc = 0.5
        st[CWND] = cwnd + inc * acked
    else:
        st[CWND] = cwnd + 0.01 * acked / cwnd


@njit
def cubic_on_congestion_k(st):
    st[CU_W_MAX] = st[CWND]
    st[CU_EPOCH] = -1.0
    _cut(st, 1.0 - CUBIC_BETA)


@njit
def cubic_on_timeout_k(st):
    st[CU_W_MAX] = st[CWND]
    st[CU_EPOCH] = -1.0
    cwnd = st[CWND]
    ss = cwnd * (1.0 - CUBIC_BETA)
    if ss < MIN_CWND:
        ss = MIN_CWND
    st[SSTHRESH] = ss
    st[CWND] = TIMEOUT_CWND
    st[LAST_BETA] = TIMEOUT_CWND / cwnd


@njit
def htcp_on_timeout_k(st, now):
    st[HT_LAST_EVENT] = now
    _timeout(st)


@njit
def generic_on_timeout(st):
    _timeout(st)


# ---------------------------------------------------------------------------
# Python-level API


class BaselineState:
    """Named view over a baseline controller's state vector."""

    __slots__ = ("vec",)

    def __init__(self, algorithm: str | int = "newreno", initial_window: float = 10.0, vec=None):
        if vec is not None:
            self.vec = vec
            return
        alg = ALGORITHMS[algorithm] if isinstance(algorithm, str) else int(algorithm)
        if alg == SIAD_ID or alg not in ALGORITHM_NAMES:
            raise ValueError(f"not a baseline algorithm: {algorithm!r}")
        self.vec = np.zeros(STATE_SIZE)
        base_init(self.vec, float(alg), float(initial_window))

    @property
    def algorithm(self) -> str:
        return ALGORITHM_NAMES[int(self.vec[ALG])]

    def _get(i):
        return property(lambda self: float(self.vec[i]), lambda self, v: self.vec.__setitem__(i, v))

    cwnd = _get(CWND)
    ssthresh = _get(SSTHRESH)
    rtt_min = _get(RTT_MIN)
    w_max = _get(CU_W_MAX)
    epoch_start = _get(CU_EPOCH)
    k = _get(CU_K)
    last_event_time = _get(HT_LAST_EVENT)
    htcp_beta = _get(HT_BETA)
    del _get

    def copy(self) -> "BaselineState":
        return BaselineState(vec=self.vec.copy())

    def __repr__(self):
        return f"BaselineState({self.algorithm}, cwnd={self.cwnd:.3f}, ssthresh={self.ssthresh:.3f})"


def reno_on_ack(state: BaselineState, acked: int = 1) -> BaselineState:
    reno_on_ack_k(state.vec, float(acked))
    return state


def reno_on_congestion(state: BaselineState) -> BaselineState:
    reno_on_congestion_k(state.vec)
    return state


def scalable_on_ack(state: BaselineState, acked: int = 1) -> BaselineState:
    scalable_on_ack_k(state.vec, float(acked))
    return state


def scalable_on_congestion(state: BaselineState) -> BaselineState:
    scalable_on_congestion_k(state.vec)
    return state


def cubic_window(t_since_epoch: float, w_max: float, rtt: float = 0.0) -> float:
    return float(cubic_window_k(t_since_epoch, w_max, rtt))


def cubic_on_ack(state: BaselineState, acked: int, now: float) -> BaselineState:
    cubic_on_ack_k(state.vec, float(acked), now)
    return state


def cubic_on_congestion(state: BaselineState) -> BaselineState:
    cubic_on_congestion_k(state.vec)
    return state


def highspeed_params(cwnd: float) -> tuple[float, float]:
    """Increase ``a(w)`` in packets per RTT and decrease fraction ``b(w)``."""
    if cwnd < 1:
        raise ValueError("cwnd must be >= 1")
    return float(highspeed_a(cwnd)), float(highspeed_b(cwnd))


def highspeed_on_ack(state: BaselineState, acked: int = 1) -> BaselineState:
    highspeed_on_ack_k(state.vec, float(acked))
    return state


def highspeed_on_congestion(state: BaselineState) -> BaselineState:
    highspeed_on_congestion_k(state.vec)
    return state


def htcp_on_ack(state: BaselineState, acked: int, now: float) -> BaselineState:
    htcp_on_ack_k(state.vec, float(acked), now)
    return state


def htcp_on_congestion(state: BaselineState, now: float) -> BaselineState:
    htcp_on_congestion_k(state.vec, now)
    return state
