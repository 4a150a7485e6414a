"""TCP SIAD: Scalable Increase, Adaptive Decrease.

The controller is a deterministic state machine.  Its state lives in a flat
float64 vector (see :mod:`siadsim.cc.layout`) so the same kernels drive both
the unit-level API below and the simulator.  Inputs are ACKs (with the number
of newly acknowledged packets), RTT samples, congestion notifications and
retransmission timeouts; time is always passed in by the caller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .._jit import njit
from .layout import (
    ACT_ADDITIONAL_DECREASE,
    ACT_PROBE_ARMED,
    AD_SUPPRESSED,
    ALG,
    ALPHA,
    ALPHA_GOAL,
    AVG_RTT,
    CNT_DEC,
    CWND,
    CWND_MAX,
    EP_RTT_CNT,
    EP_RTT_SUM,
    EPOCH_START,
    INC_PASS_TIME,
    INCREASED,
    INCTHRESH,
    INF,
    INIT_WIN,
    LAST_BETA,
    NUM_MS,
    NUM_RTT,
    NUM_RTT_CFG,
    PHASE,
    PREV_CWND_MAX,
    PROBE_FIRST,
    PROBE_LEFT,
    PROBE_ROUNDS,
    PROBE_MIN,
    PROBE_RTT,
    PROBE_START,
    PROBE_STATE,
    PROBE_THRESH,
    RTT_LAST,
    RTT_MIN,
    RTT_PREV,
    SIAD,
    SSTHRESH,
    STATE_SIZE,
    TREND,
)

MIN_CWND = 2.0
# a probe sample within 2% of rtt_min counts as "queue drained"
EPS_RTT = 0.02
# two consecutive round minima this close are "the same sample value"
EPS_SAME = 1e-3
# rounds a still-shrinking minimum may delay the verdict
MAX_PROBE_ROUNDS = 4

SLOW_START = 0
LINEAR_INCREMENT = 1
FAST_INCREASE = 2

PROBE_IDLE = 0
PROBE_ARMED = 1
PROBE_ROUND2 = 2


# ---------------------------------------------------------------------------
# kernels


@njit
def compute_alpha(incthresh, ssthresh, num_rtt):
    """Per-RTT increase that reaches ``incthresh`` from ``ssthresh`` in ``num_rtt`` RTTs.

    Clamped to ``[1, ssthresh - 1]``; the lower clamp wins when both bind.
    """
    a = (incthresh - ssthresh) / num_rtt
    if ssthresh >= 2.0 and a > ssthresh - 1.0:
        a = ssthresh - 1.0
    if not a >= 1.0:
        a = 1.0
    return a


@njit
def resolve_num_rtt_k(num_rtt_cfg, num_ms, avg_rtt):
    if num_rtt_cfg > 0.0:
        return num_rtt_cfg
    if not avg_rtt > 0.0:
        return 2.0
    n = math.floor(num_ms / (avg_rtt * 1000.0) + 0.5)
    if n < 2.0:
        n = 2.0
    return n


@njit
def siad_init(st, num_rtt_cfg, num_ms, init_win):
    for i in range(st.shape[0]):
        st[i] = 0.0
    st[ALG] = SIAD
    st[CWND] = init_win
    st[SSTHRESH] = INF
    st[RTT_MIN] = INF
    st[RTT_LAST] = INF
    st[RTT_PREV] = INF
    st[INIT_WIN] = init_win
    st[LAST_BETA] = 1.0
    st[PHASE] = SLOW_START
    st[ALPHA] = init_win
    st[INCTHRESH] = init_win
    st[CWND_MAX] = init_win
    st[PREV_CWND_MAX] = init_win
    st[NUM_RTT_CFG] = num_rtt_cfg
    st[NUM_MS] = num_ms
    st[NUM_RTT] = num_rtt_cfg if num_rtt_cfg > 0.0 else 2.0
    st[PROBE_STATE] = PROBE_IDLE
    st[PROBE_FIRST] = INF
    st[PROBE_MIN] = INF
    st[PROBE_RTT] = INF
    st[INC_PASS_TIME] = -INF
    st[INCREASED] = 1.0


@njit
def siad_on_rtt_sample(st, rtt, now):
    st[EP_RTT_SUM] += rtt
    st[EP_RTT_CNT] += 1.0
    ps = st[PROBE_STATE]
    if (ps == PROBE_ARMED or ps == PROBE_ROUND2) and now >= st[PROBE_START]:
        if rtt < st[PROBE_MIN]:
            st[PROBE_MIN] = rtt


@njit
def _rtt_curr(st):
    a = st[RTT_LAST]
    b = st[RTT_PREV]
    return a if a < b else b


@njit
def _arm_probe(st, now):
    """Watch the RTT right after a reduction.

    Samples count once the packets sent after the cut start returning, about
    one RTT later; the verdict is read when cwnd reaches ssthresh + alpha + 1.
    """
    st[PROBE_STATE] = PROBE_ARMED
    st[PROBE_THRESH] = st[SSTHRESH] + st[ALPHA] + 1.0
    lag = st[RTT_LAST]
    st[PROBE_START] = now + lag if lag < INF else now
    st[PROBE_FIRST] = INF
    st[PROBE_MIN] = INF
    st[PROBE_ROUNDS] = 0.0


@njit
def estimate_cwnd_max_k(st, now):
    cwnd = st[CWND]
    if st[INCREASED] == 0.0:
        return cwnd
    phase = st[PHASE]
    alpha = st[ALPHA]
    if phase == SLOW_START:
        if alpha >= cwnd:
            w = cwnd - cwnd / 2.0
        else:
            w = cwnd - alpha / 2.0
    elif phase == FAST_INCREASE:
        if alpha >= cwnd / 2.0:
            w = cwnd - cwnd / 3.0
        elif now - st[INC_PASS_TIME] <= st[RTT_LAST]:
            w = cwnd - (st[INCTHRESH] - st[SSTHRESH]) / st[NUM_RTT]
        else:
            w = cwnd - alpha / 2.0
    else:
        w = cwnd - alpha
    if w < MIN_CWND:
        w = MIN_CWND
    return w


@njit
def siad_on_congestion(st, now):
    if st[NUM_RTT_CFG] <= 0.0:
        if st[EP_RTT_CNT] > 0.0:
            st[AVG_RTT] = st[EP_RTT_SUM] / st[EP_RTT_CNT]
        st[NUM_RTT] = resolve_num_rtt_k(0.0, st[NUM_MS], st[AVG_RTT])
    st[EP_RTT_SUM] = 0.0
    st[EP_RTT_CNT] = 0.0
    n = st[NUM_RTT]

    cwnd_max = estimate_cwnd_max_k(st, now)
    rtt_curr = _rtt_curr(st)
    beta = 1.0
    if rtt_curr < INF and st[RTT_MIN] < INF:
        beta = st[RTT_MIN] / rtt_curr
        if beta > 1.0:
            beta = 1.0
    cwnd = beta * cwnd_max - 1.0
    if cwnd < MIN_CWND:
        cwnd = MIN_CWND
    st[CWND] = cwnd
    st[SSTHRESH] = cwnd
    trend = cwnd_max - st[PREV_CWND_MAX]
    st[TREND] = trend
    incthresh = cwnd_max + trend
    if incthresh < cwnd:
        incthresh = cwnd
    st[INCTHRESH] = incthresh
    st[PREV_CWND_MAX] = cwnd_max
    st[CWND_MAX] = cwnd_max
    st[CNT_DEC] = 0.0
    st[AD_SUPPRESSED] = 0.0
    st[ALPHA_GOAL] = 0.0
    if incthresh > cwnd:
        st[PHASE] = LINEAR_INCREMENT
        st[ALPHA] = compute_alpha(incthresh, cwnd, n)
    else:
        # no valid target: probe upwards from here
        st[PHASE] = FAST_INCREASE
        st[ALPHA] = 1.0
        st[INC_PASS_TIME] = -INF
    st[INCREASED] = 0.0
    st[LAST_BETA] = beta
    st[EPOCH_START] = now
    _arm_probe(st, now)
    return ACT_PROBE_ARMED


@njit
def can_additional_decrease(st):
    return (
        st[CNT_DEC] < st[NUM_RTT] - 1.0
        and st[CWND] > MIN_CWND
        and st[AD_SUPPRESSED] == 0.0
    )


@njit
def siad_additional_decrease(st, now):
    n = st[NUM_RTT]
    st[CNT_DEC] += 1.0
    c = st[CNT_DEC]
    rtt_curr = st[PROBE_RTT]
    if not rtt_curr < INF:
        rtt_curr = _rtt_curr(st)
    ratio = 1.0
    if rtt_curr < INF and st[RTT_MIN] < INF:
        ratio = st[RTT_MIN] / rtt_curr
    incthresh = st[INCTHRESH]
    # step 1: the regular decrease, applied to the window of one RTT ago
    cwnd = ratio * st[SSTHRESH] - 1.0
    # step 2: spread the remaining reduction over the rest of the epoch
    red = cwnd / (n - c)
    den = n - c - 1.0
    if den < 1.0:
        den = 1.0
    alpha_new = (incthresh - cwnd) / den
    step = red if red > alpha_new else alpha_new
    cwnd = cwnd - step
    if cwnd <= MIN_CWND:
        cwnd = MIN_CWND
        # nothing left to give up this epoch
        st[AD_SUPPRESSED] = 1.0
    if red > alpha_new:
        alpha = (incthresh - cwnd) / (n - c)
    else:
        alpha = alpha_new
    if alpha < 1.0:
        alpha = 1.0
    st[ALPHA_GOAL] = 0.0
    if alpha > cwnd:
        # the cap follows cwnd as it grows, up to the alpha wanted here
        st[ALPHA_GOAL] = alpha
        alpha = cwnd
        st[AD_SUPPRESSED] = 1.0
    st[CWND] = cwnd
    st[ALPHA] = alpha
    st[SSTHRESH] = cwnd - 1.0
    if incthresh < cwnd - 1.0:
        st[INCTHRESH] = cwnd - 1.0
    if cwnd >= incthresh:
        st[PHASE] = FAST_INCREASE
        st[ALPHA] = 1.0
    else:
        st[PHASE] = LINEAR_INCREMENT
    st[INCREASED] = 0.0
    st[LAST_BETA] = ratio
    _arm_probe(st, now)
    return ACT_ADDITIONAL_DECREASE | ACT_PROBE_ARMED


@njit
def siad_on_probe_result(st, measured, now):
    """Verdict on a probe; ``measured`` is the minimum RTT of the last round.

    When a first round has been recorded, a second round with the same value
    means the path itself got slower, so rtt_min moves up instead.
    """
    first = st[PROBE_FIRST]
    best = measured if measured < first else first
    st[PROBE_STATE] = PROBE_IDLE
    st[PROBE_FIRST] = INF
    if not st[SSTHRESH] < INF:
        # no reduction yet, so nothing to verify
        if measured < st[RTT_MIN]:
            st[RTT_MIN] = measured
        return 0
    if best <= st[RTT_MIN] * (1.0 + EPS_RTT):
        if best < st[RTT_MIN]:
            st[RTT_MIN] = best
        return 0
    if first < INF and abs(measured - first) <= EPS_SAME * first:
        st[RTT_MIN] = best
        return 0
    if first < INF and measured < first * (1.0 - EPS_SAME) and st[PROBE_ROUNDS] < MAX_PROBE_ROUNDS:
        # still draining what was queued before the cut: look again
        st[PROBE_ROUNDS] += 1.0
        st[PROBE_FIRST] = measured
        st[PROBE_STATE] = PROBE_ROUND2
        st[PROBE_LEFT] = math.floor(st[CWND])
        st[PROBE_MIN] = INF
        return 0
    # the queue seen right after the cut goes with the window of that time
    st[PROBE_RTT] = first if first < INF else measured
    if can_additional_decrease(st):
        return siad_additional_decrease(st, now)
    return 0


@njit
def siad_on_ack(st, acked, now):
    cwnd = st[CWND]
    alpha = st[ALPHA]
    phase = st[PHASE]
    inc = acked * alpha / cwnd
    new_cwnd = cwnd + inc
    if phase == SLOW_START:
        alpha = alpha + inc
        if alpha > new_cwnd:
            alpha = new_cwnd
        if new_cwnd >= st[SSTHRESH]:
            # leaving Slow Start after a timeout
            if st[INCTHRESH] > st[SSTHRESH]:
                st[PHASE] = LINEAR_INCREMENT
                alpha = compute_alpha(st[INCTHRESH], st[SSTHRESH], st[NUM_RTT])
            else:
                st[PHASE] = FAST_INCREASE
                alpha = 1.0
                st[INC_PASS_TIME] = -INF
    elif phase == FAST_INCREASE:
        alpha = alpha + inc
        if alpha > cwnd / 2.0:
            alpha = cwnd / 2.0
        if alpha < 1.0:
            alpha = 1.0
    else:
        if new_cwnd >= st[INCTHRESH]:
            st[PHASE] = FAST_INCREASE
            alpha = 1.0
            st[ALPHA_GOAL] = 0.0
            st[INC_PASS_TIME] = now
        elif st[ALPHA_GOAL] > alpha:
            alpha = st[ALPHA_GOAL] if st[ALPHA_GOAL] < new_cwnd else new_cwnd
    st[CWND] = new_cwnd
    st[ALPHA] = alpha
    if inc > 0.0:
        st[INCREASED] = 1.0

    flags = 0
    ps = st[PROBE_STATE]
    if ps == PROBE_ARMED:
        m = st[PROBE_MIN]
        if new_cwnd >= st[PROBE_THRESH] and m < INF:
            if m <= st[RTT_MIN] * (1.0 + EPS_RTT):
                st[PROBE_STATE] = PROBE_IDLE
            else:
                # not drained: one more round tells a standing queue from a
                # longer path
                st[PROBE_FIRST] = m
                st[PROBE_STATE] = PROBE_ROUND2
                st[PROBE_LEFT] = math.floor(new_cwnd)
                st[PROBE_MIN] = INF
    elif ps == PROBE_ROUND2:
        st[PROBE_LEFT] -= acked
        if st[PROBE_LEFT] <= 0.0:
            flags = siad_on_probe_result(st, st[PROBE_MIN], now)
    return flags


@njit
def siad_on_timeout(st, now):
    cwnd = st[CWND]
    ss = cwnd / 2.0
    if ss < MIN_CWND:
        ss = MIN_CWND
    st[SSTHRESH] = ss
    st[CWND] = MIN_CWND
    st[INCTHRESH] = ss
    st[PHASE] = SLOW_START
    st[ALPHA] = MIN_CWND
    st[PROBE_STATE] = PROBE_IDLE
    st[PROBE_FIRST] = INF
    st[CNT_DEC] = 0.0
    st[AD_SUPPRESSED] = 0.0
    st[INCREASED] = 1.0
    st[LAST_BETA] = MIN_CWND / cwnd if cwnd > 0.0 else 1.0
    return 0


# ---------------------------------------------------------------------------
# Python-level API


class Phase(IntEnum):
    SLOW_START = SLOW_START
    LINEAR_INCREMENT = LINEAR_INCREMENT
    FAST_INCREASE = FAST_INCREASE


@dataclass(frozen=True)
class SiadConfig:
    """Aggressiveness knob plus window constants.

    Exactly one of ``num_rtt`` (RTTs per congestion epoch) and ``num_ms``
    (milliseconds per congestion epoch) is used; ``num_rtt=20`` if neither is
    given.
    """

    num_rtt: int | None = None
    num_ms: float | None = None
    initial_window: float = 10.0
    min_cwnd: float = MIN_CWND

    def __post_init__(self):
        if self.num_rtt is not None and self.num_ms is not None:
            raise ValueError("give either num_rtt or num_ms, not both")
        if self.num_rtt is None and self.num_ms is None:
            object.__setattr__(self, "num_rtt", 20)
        if self.num_rtt is not None and self.num_rtt < 2:
            raise ValueError(f"num_rtt must be >= 2, got {self.num_rtt}")
        if self.num_ms is not None and not self.num_ms > 0:
            raise ValueError(f"num_ms must be > 0, got {self.num_ms}")
        if self.min_cwnd != MIN_CWND:
            raise ValueError("min_cwnd is fixed at 2 packets")
        if self.initial_window < MIN_CWND:
            raise ValueError("initial_window must be >= 2 packets")


def _slot(index, doc, cast=float):
    def fget(self):
        return cast(self.vec[index])

    def fset(self, value):
        self.vec[index] = value

    return property(fget, fset, doc=doc)


def _flag(index, doc):
    def fget(self):
        return bool(self.vec[index])

    def fset(self, value):
        self.vec[index] = 1.0 if value else 0.0

    return property(fget, fset, doc=doc)


class SiadState:
    """Named view over a SIAD state vector.

    ``vec`` may be a row of the simulator's state matrix; writes go through.
    """

    __slots__ = ("vec",)

    def __init__(self, vec=None):
        if vec is None:
            vec = np.zeros(STATE_SIZE)
        self.vec = vec

    phase = _slot(PHASE, "current phase", lambda v: Phase(int(v)))
    cwnd = _slot(CWND, "congestion window, packets")
    ssthresh = _slot(SSTHRESH, "window right after the last reduction")
    incthresh = _slot(INCTHRESH, "Linear Increment target window")
    alpha = _slot(ALPHA, "increase step, packets per RTT")
    cwnd_max = _slot(CWND_MAX, "estimated window at the last congestion event")
    prev_cwnd_max = _slot(PREV_CWND_MAX, "cwnd_max of the event before")
    trend = _slot(TREND, "cwnd_max minus prev_cwnd_max")
    num_rtt_effective = _slot(NUM_RTT, "RTTs per epoch in force", int)
    cnt_dec = _slot(CNT_DEC, "Additional Decreases in this epoch", int)
    rtt_min = _slot(RTT_MIN, "base RTT estimate, seconds")
    epoch_start_time = _slot(EPOCH_START, "time of the last congestion event")
    probe_threshold = _slot(PROBE_THRESH, "cwnd at which the RTT probe starts")
    avg_rtt = _slot(AVG_RTT, "mean RTT of the previous epoch")
    last_beta = _slot(LAST_BETA, "decrease factor of the last reduction")
    additional_decrease_suppressed = _flag(AD_SUPPRESSED, "no more AD this epoch")
    increased_since_reduction = _flag(INCREASED, "cwnd grew since the last cut")

    @property
    def rtt_last_two(self) -> tuple[float, float]:
        return float(self.vec[RTT_PREV]), float(self.vec[RTT_LAST])

    @property
    def rtt_measure_pending(self) -> bool:
        return int(self.vec[PROBE_STATE]) != PROBE_IDLE

    @property
    def probe_stage(self) -> int:
        return int(self.vec[PROBE_STATE])

    def copy(self) -> "SiadState":
        return SiadState(self.vec.copy())

    def __eq__(self, other):
        if not isinstance(other, SiadState):
            return NotImplemented
        return np.array_equal(self.vec, other.vec, equal_nan=True)

    def __repr__(self):
        return (
            f"SiadState(phase={self.phase.name}, cwnd={self.cwnd:.3f}, "
            f"ssthresh={self.ssthresh:.3f}, incthresh={self.incthresh:.3f}, "
            f"alpha={self.alpha:.3f}, rtt_min={self.rtt_min:.6f})"
        )


@dataclass(frozen=True)
class CcAction:
    new_cwnd: float
    phase_after: Phase
    schedule_rtt_probe: bool = False
    performed_additional_decrease: bool = False


def _action(state: SiadState, flags: int) -> CcAction:
    return CcAction(
        new_cwnd=state.cwnd,
        phase_after=state.phase,
        schedule_rtt_probe=bool(flags & ACT_PROBE_ARMED),
        performed_additional_decrease=bool(flags & ACT_ADDITIONAL_DECREASE),
    )


def initialize(config: SiadConfig) -> SiadState:
    state = SiadState()
    siad_init(
        state.vec,
        float(config.num_rtt or 0),
        float(config.num_ms or 0.0),
        float(config.initial_window),
    )
    return state


def resolve_num_rtt(config: SiadConfig, avg_rtt: float) -> int:
    """Epoch length in RTTs; ``avg_rtt`` in seconds."""
    if not avg_rtt > 0:
        raise ValueError("avg_rtt must be positive")
    return int(resolve_num_rtt_k(float(config.num_rtt or 0), float(config.num_ms or 0.0), avg_rtt))


def on_rtt_sample(state: SiadState, rtt: float, now: float = 0.0) -> None:
    from .common import cc_on_rtt  # avoid an import cycle at module load

    cc_on_rtt(state.vec, rtt, now)


def on_ack(state: SiadState, acked: int, now: float) -> CcAction:
    if acked < 1:
        raise ValueError("acked must be >= 1")
    return _action(state, siad_on_ack(state.vec, float(acked), now))


def estimate_cwnd_max(state: SiadState, now: float = 0.0) -> float:
    return float(estimate_cwnd_max_k(state.vec, now))


def on_congestion_event(state: SiadState, now: float) -> CcAction:
    return _action(state, siad_on_congestion(state.vec, now))


def on_rtt_probe_result(state: SiadState, measured: float, now: float = 0.0) -> CcAction:
    return _action(state, siad_on_probe_result(state.vec, measured, now))


def additional_decrease(state: SiadState, now: float = 0.0) -> CcAction:
    if not can_additional_decrease(state.vec):
        raise AssertionError(
            "additional_decrease called with cnt_dec >= num_rtt - 1, cwnd at minimum, "
            "or further decreases suppressed"
        )
    return _action(state, siad_additional_decrease(state.vec, now))


def on_timeout(state: SiadState, now: float) -> CcAction:
    return _action(state, siad_on_timeout(state.vec, now))
