import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from siadsim.cc import (
    Phase,
    SiadConfig,
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
from siadsim.cc.layout import CNT_DEC, PROBE_FIRST, PROBE_ROUNDS, PROBE_RTT, PROBE_STATE
from siadsim.cc.siad import (
    EPS_RTT,
    MAX_PROBE_ROUNDS,
    MIN_CWND,
    PROBE_ROUND2,
    can_additional_decrease,
)

RTT = 0.1


def siad(num_rtt=20, **kw):
    return initialize(SiadConfig(num_rtt=num_rtt, **kw))


def in_phase(phase, cwnd, alpha, *, incthresh=None, ssthresh=None, rtt_min=RTT, num_rtt=20):
    """A state in ``phase`` that has grown since its last reduction."""
    s = siad(num_rtt)
    on_rtt_sample(s, rtt_min)
    s.phase = phase
    s.cwnd = cwnd
    s.alpha = alpha
    s.ssthresh = cwnd - 10 if ssthresh is None else ssthresh
    s.incthresh = cwnd + 50 if incthresh is None else incthresh
    s.increased_since_reduction = True
    return s


def after_decrease(cwnd=105.0, alpha=5.0, queue=1.5, num_rtt=20, incthresh=110.0):
    s = in_phase(Phase.LINEAR_INCREMENT, cwnd, alpha, incthresh=incthresh, ssthresh=60.0,
                 num_rtt=num_rtt)
    s.prev_cwnd_max = 100.0
    on_rtt_sample(s, queue * RTT)
    on_rtt_sample(s, queue * RTT)
    on_congestion_event(s, 1.0)
    return s


# compute_alpha ----------------------------------------------------------------


def test_alpha_direct_evaluation():
    assert compute_alpha(200.0, 100.0, 20.0) == 5.0


def test_alpha_minimum_increase():
    assert compute_alpha(105.0, 100.0, 20.0) == 1.0


def test_alpha_upper_clamp_below_ssthresh():
    a = compute_alpha(10000.0, 100.0, 20.0)
    assert a < 100.0
    assert a == 99.0


def clamp_oracle(incthresh, ssthresh, num_rtt):
    raw = (incthresh - ssthresh) / num_rtt
    lo = 1.0
    hi = ssthresh - 1.0 if ssthresh >= 2.0 else math.inf
    # the minimum-increase floor wins if the window is too small for both
    return max(lo, min(raw, hi))


def test_alpha_clamp_enumeration():
    ss_values = [0.0, 1.0, 1.5, 2.0, 2.5, 3.0, 10.0, 99.5, 100.0, 1000.0]
    inc_values = [0.0, 1.0, 2.0, 5.0, 50.0, 99.0, 100.0, 101.0, 120.0, 2000.0, 1e6]
    for inc, ss, n in itertools.product(inc_values, ss_values, [1, 2, 3, 7, 20, 40, 200]):
        got = compute_alpha(float(inc), float(ss), float(n))
        assert got == pytest.approx(clamp_oracle(inc, ss, n), rel=1e-12, abs=1e-12), (inc, ss, n)


@given(st.floats(0, 1e6), st.floats(0, 1e6), st.integers(1, 500))
def test_alpha_range(inc, ss, n):
    a = compute_alpha(inc, ss, float(n))
    assert a >= 1.0
    if ss >= 2.0:
        assert a <= max(1.0, ss - 1.0)


# on_ack -----------------------------------------------------------------------


def test_linear_increment_step():
    s = in_phase(Phase.LINEAR_INCREMENT, 100.0, 5.0, incthresh=200.0)
    act = on_ack(s, 1, 0.0)
    assert s.cwnd == pytest.approx(100.05, abs=1e-12)
    assert act.new_cwnd == s.cwnd
    assert act.phase_after == Phase.LINEAR_INCREMENT


def test_crossing_incthresh_enters_fast_increase():
    s = in_phase(Phase.LINEAR_INCREMENT, 99.99, 5.0, incthresh=100.0)
    act = on_ack(s, 1, 0.0)
    assert s.cwnd > 100.0
    assert act.phase_after == Phase.FAST_INCREASE
    assert s.alpha == 1.0


def test_fast_increase_cap_binds():
    s = in_phase(Phase.FAST_INCREASE, 100.0, 50.0, incthresh=90.0)
    on_ack(s, 1, 0.0)
    assert s.alpha == 50.0
    assert s.cwnd == pytest.approx(100.5)


def test_fast_increase_doubles_alpha_per_rtt():
    s = in_phase(Phase.FAST_INCREASE, 1000.0, 1.0, incthresh=900.0)
    for _ in range(1000):
        on_ack(s, 1, 0.0)
    # per-ACK compounding over one window of ACKs: at least doubling, at most e
    assert 2.0 <= s.alpha <= math.e
    assert 1.0 < s.cwnd - 1000.0 < 2.0


def test_slow_start_alpha_capped_at_cwnd():
    s = siad()
    for _ in range(10):
        on_ack(s, 1, 0.0)
    assert s.phase == Phase.SLOW_START
    assert s.cwnd == pytest.approx(20.0)
    assert s.alpha <= s.cwnd


def test_ack_count_must_be_positive():
    with pytest.raises(ValueError):
        on_ack(siad(), 0, 0.0)


# estimate_cwnd_max -------------------------------------------------------------


def test_cwnd_max_linear_increment():
    s = in_phase(Phase.LINEAR_INCREMENT, 120.0, 5.0)
    assert estimate_cwnd_max(s) == 115.0


def test_cwnd_max_fast_increase_at_cap():
    s = in_phase(Phase.FAST_INCREASE, 120.0, 60.0, incthresh=50.0)
    assert estimate_cwnd_max(s) == 80.0


def test_cwnd_max_slow_start_at_cap():
    s = in_phase(Phase.SLOW_START, 120.0, 120.0)
    assert estimate_cwnd_max(s) == 60.0


def test_cwnd_max_general_fast_increase():
    s = in_phase(Phase.FAST_INCREASE, 120.0, 8.0, incthresh=100.0)
    assert estimate_cwnd_max(s, now=50.0) == 116.0


def test_cwnd_max_just_passed_incthresh():
    s = in_phase(Phase.LINEAR_INCREMENT, 149.99, 2.5, incthresh=150.0, ssthresh=100.0)
    on_rtt_sample(s, RTT)
    on_ack(s, 1, 10.0)
    assert s.phase == Phase.FAST_INCREASE
    # within one RTT of the crossing the Linear Increment step applies
    assert estimate_cwnd_max(s, 10.05) == pytest.approx(s.cwnd - 50.0 / 20.0)
    assert estimate_cwnd_max(s, 10.5) == pytest.approx(s.cwnd - s.alpha / 2.0)


def test_cwnd_max_no_increase_since_reduction():
    s = in_phase(Phase.LINEAR_INCREMENT, 120.0, 5.0)
    s.increased_since_reduction = False
    assert estimate_cwnd_max(s) == 120.0


# on_congestion_event -----------------------------------------------------------


def test_adaptive_decrease_arithmetic():
    s = in_phase(Phase.LINEAR_INCREMENT, 155.0, 5.0, incthresh=200.0, ssthresh=100.0)
    s.prev_cwnd_max = 140.0
    on_rtt_sample(s, 0.15)
    on_rtt_sample(s, 0.15)
    act = on_congestion_event(s, 3.0)
    cwnd_max = 150.0
    q = (0.15 - 0.1) / 0.15 * cwnd_max
    assert q == pytest.approx(50.0)
    assert s.last_beta == pytest.approx(2.0 / 3.0)
    assert s.cwnd == pytest.approx(cwnd_max - q - 1.0)
    assert s.cwnd == pytest.approx(99.0)
    assert s.ssthresh == s.cwnd
    assert s.trend == pytest.approx(10.0)
    assert s.incthresh == pytest.approx(160.0)
    assert s.prev_cwnd_max == pytest.approx(150.0)
    assert s.alpha == pytest.approx(compute_alpha(160.0, 99.0, 20.0))
    assert s.cnt_dec == 0
    assert act.phase_after == Phase.LINEAR_INCREMENT
    assert act.schedule_rtt_probe
    assert s.probe_threshold == pytest.approx(s.ssthresh + s.alpha + 1.0)
    assert s.epoch_start_time == 3.0


def test_adaptive_decrease_empty_queue():
    s = in_phase(Phase.LINEAR_INCREMENT, 155.0, 5.0)
    on_rtt_sample(s, RTT)
    on_rtt_sample(s, RTT)
    on_congestion_event(s, 1.0)
    assert s.last_beta == 1.0
    assert s.cwnd == pytest.approx(149.0)


def test_rtt_curr_is_min_of_last_two():
    s = in_phase(Phase.LINEAR_INCREMENT, 155.0, 5.0)
    on_rtt_sample(s, 0.2)
    on_rtt_sample(s, 0.125)
    on_congestion_event(s, 1.0)
    assert s.last_beta == pytest.approx(0.1 / 0.125)


def test_negative_trend_floored_at_ssthresh():
    s = in_phase(Phase.LINEAR_INCREMENT, 105.0, 5.0)
    s.prev_cwnd_max = 400.0
    on_rtt_sample(s, 0.15)
    on_rtt_sample(s, 0.15)
    act = on_congestion_event(s, 1.0)
    assert s.trend == pytest.approx(-300.0)
    assert s.incthresh == s.ssthresh
    # no target above the window: probe upwards at once
    assert act.phase_after == Phase.FAST_INCREASE
    assert s.alpha == 1.0


def test_decrease_floored_at_min_cwnd():
    s = in_phase(Phase.LINEAR_INCREMENT, 4.0, 1.0, ssthresh=2.0, incthresh=10.0)
    on_rtt_sample(s, 1.0)
    on_rtt_sample(s, 1.0)
    on_congestion_event(s, 1.0)
    assert s.cwnd == MIN_CWND


def test_back_to_back_notification_skips_adjustment():
    s = after_decrease()
    before = s.cwnd
    on_congestion_event(s, 2.0)
    # cwnd_max is the window itself, reduced again by the same queue ratio
    assert s.cwnd == pytest.approx(before / 1.5 - 1.0)


# on_rtt_probe_result -----------------------------------------------------------


def test_probe_drained_queue_is_noop():
    s = after_decrease()
    snap = s.copy()
    act = on_rtt_probe_result(s, RTT)
    assert not act.performed_additional_decrease
    assert s.rtt_min == RTT
    assert s.cwnd == snap.cwnd and s.alpha == snap.alpha


def test_probe_within_tolerance_is_drained():
    s = after_decrease()
    act = on_rtt_probe_result(s, RTT * (1 + EPS_RTT))
    assert not act.performed_additional_decrease


def test_probe_standing_queue_triggers_additional_decrease():
    s = after_decrease()
    before = s.cwnd
    act = on_rtt_probe_result(s, 1.5 * RTT)
    assert act.performed_additional_decrease
    assert s.cnt_dec == 1
    assert s.cwnd < before


def test_probe_shorter_path_lowers_rtt_min():
    s = after_decrease()
    act = on_rtt_probe_result(s, 0.06)
    assert not act.performed_additional_decrease
    assert s.rtt_min == 0.06


def test_probe_no_decrease_at_min_cwnd():
    s = after_decrease()
    s.cwnd = MIN_CWND
    act = on_rtt_probe_result(s, 1.5 * RTT)
    assert not act.performed_additional_decrease
    assert s.cwnd == MIN_CWND


def test_probe_no_decrease_after_budget():
    s = after_decrease(num_rtt=3)
    s.vec[CNT_DEC] = 2.0  # num_rtt - 1
    act = on_rtt_probe_result(s, 1.5 * RTT)
    assert not act.performed_additional_decrease


def with_first_round(first):
    s = after_decrease()
    s.vec[PROBE_FIRST] = first
    s.vec[PROBE_STATE] = PROBE_ROUND2
    return s


def test_probe_same_two_rounds_moves_rtt_min_up():
    s = with_first_round(1.4 * RTT)
    act = on_rtt_probe_result(s, 1.4 * RTT, 2.0)
    assert not act.performed_additional_decrease
    assert s.rtt_min == pytest.approx(1.4 * RTT)
    assert s.phase == Phase.LINEAR_INCREMENT


def test_probe_shrinking_minimum_waits_another_round():
    s = with_first_round(1.5 * RTT)
    before = s.cwnd
    act = on_rtt_probe_result(s, 1.3 * RTT)
    assert not act.performed_additional_decrease
    assert s.cwnd == before and s.rtt_min == RTT
    assert s.vec[PROBE_STATE] == PROBE_ROUND2
    assert s.vec[PROBE_FIRST] == pytest.approx(1.3 * RTT)


def test_probe_shrinking_minimum_round_limit():
    s = with_first_round(1.5 * RTT)
    s.vec[PROBE_ROUNDS] = MAX_PROBE_ROUNDS
    act = on_rtt_probe_result(s, 1.3 * RTT)
    assert act.performed_additional_decrease


def test_probe_growing_minimum_is_standing_queue():
    s = with_first_round(1.3 * RTT)
    act = on_rtt_probe_result(s, 1.5 * RTT)
    assert act.performed_additional_decrease
    # the queue right after the cut goes with that window
    assert s.vec[PROBE_RTT] == pytest.approx(1.3 * RTT)


def test_longer_path_refreshes_rtt_min_in_simulation():
    from siadsim.netsim import simulate
    from siadsim.scenario import from_dict

    tr = simulate(from_dict(dict(bandwidth=10e6, buffer=1.0, horizon=60.0, flows=[{}],
                                 rtt_changes=[{"time": 20.0, "owd": 0.07}])))
    assert tr.rtt_min[1900, 0] == pytest.approx(0.1, abs=0.003)
    assert tr.rtt_min[-1, 0] == pytest.approx(0.14, abs=0.003)


# additional_decrease -----------------------------------------------------------


def ad_oracle(ssthresh, rtt_min, rtt_curr, incthresh, n, cnt_dec):
    """Step-by-step Additional Decrease as a scripted hand trace."""
    cnt = cnt_dec + 1
    cwnd = rtt_min / rtt_curr * ssthresh - 1
    red = cwnd / (n - cnt)
    alpha_new = (incthresh - cwnd) / (n - cnt - 1)
    cwnd = max(cwnd - max(red, alpha_new), 2.0)
    alpha = (incthresh - cwnd) / (n - cnt) if red > alpha_new else alpha_new
    alpha = max(alpha, 1.0)
    suppressed = False
    if alpha > cwnd:
        alpha, suppressed = cwnd, True
    return dict(cnt=cnt, cwnd=cwnd, alpha=alpha, ssthresh=cwnd - 1, red=red,
                alpha_new=alpha_new, suppressed=suppressed)


def ad_state(ssthresh, incthresh, probe_rtt, n=20, cnt_dec=0):
    s = in_phase(Phase.LINEAR_INCREMENT, ssthresh + 3.0, 2.0, incthresh=incthresh,
                 ssthresh=ssthresh, num_rtt=n)
    s.vec[CNT_DEC] = cnt_dec
    s.vec[PROBE_RTT] = probe_rtt
    return s


def test_additional_decrease_reduction_factor():
    exp = ad_oracle(101.0, RTT, RTT, 150.0, 20, 0)
    assert exp["red"] == pytest.approx(100.0 / 19.0)
    assert exp["alpha_new"] == pytest.approx(50.0 / 18.0)


def test_additional_decrease_hand_trace():
    s = ad_state(101.0, 150.0, RTT)
    act = additional_decrease(s)
    exp = ad_oracle(101.0, RTT, RTT, 150.0, 20, 0)
    assert exp["red"] > exp["alpha_new"]
    assert act.performed_additional_decrease
    assert s.cnt_dec == 1
    assert s.cwnd == pytest.approx(100.0 - 100.0 / 19.0)
    assert s.cwnd == pytest.approx(exp["cwnd"])
    assert s.alpha == pytest.approx((150.0 - s.cwnd) / 19.0)
    assert s.alpha == pytest.approx(exp["alpha"])
    assert s.ssthresh == pytest.approx(exp["ssthresh"])


@pytest.mark.parametrize("ss,inc,ratio,n,c", [
    (101, 150, 1.0, 20, 0),
    (80, 300, 0.8, 20, 2),
    (40, 45, 0.9, 10, 5),
    (60, 400, 0.7, 20, 10),
    (30, 31, 0.95, 40, 0),
    (200, 210, 0.5, 20, 17),
])
def test_additional_decrease_matches_oracle(ss, inc, ratio, n, c):
    s = ad_state(float(ss), float(inc), RTT / ratio, n, c)
    additional_decrease(s)
    exp = ad_oracle(ss, RTT, RTT / ratio, inc, n, c)
    assert s.cnt_dec == exp["cnt"]
    assert s.cwnd == pytest.approx(exp["cwnd"])
    assert s.alpha == pytest.approx(exp["alpha"])
    assert s.ssthresh == pytest.approx(exp["ssthresh"])
    assert s.additional_decrease_suppressed == (exp["suppressed"] or exp["cwnd"] <= 2.0)


def test_standing_queue_drives_window_to_minimum():
    s = after_decrease()
    t = 1.0
    for _ in range(40):
        if not can_additional_decrease(s.vec):
            break
        for _ in range(int(s.cwnd)):
            on_ack(s, 1, t)
        t += RTT
        on_rtt_probe_result(s, 1.5 * RTT, t)
    assert s.cwnd == MIN_CWND
    assert s.cnt_dec <= s.num_rtt_effective - 1
    act = on_rtt_probe_result(s, 1.5 * RTT, t)
    assert not act.performed_additional_decrease


def test_additional_decrease_contract():
    s = after_decrease()
    s.cwnd = MIN_CWND
    with pytest.raises(AssertionError):
        additional_decrease(s)


# resolve_num_rtt / initialize --------------------------------------------------


def test_num_ms_long_path():
    assert resolve_num_rtt(SiadConfig(num_ms=4000), 0.2) == 20


def test_num_ms_short_path():
    assert resolve_num_rtt(SiadConfig(num_ms=4000), 0.1) == 40


def test_num_rtt_passthrough():
    assert resolve_num_rtt(SiadConfig(num_rtt=30), 0.037) == 30


def test_num_ms_floor():
    assert resolve_num_rtt(SiadConfig(num_ms=10), 0.1) == 2


def test_config_validation():
    with pytest.raises(ValueError):
        SiadConfig(num_rtt=1)
    with pytest.raises(ValueError):
        SiadConfig(num_rtt=20, num_ms=100)
    with pytest.raises(ValueError):
        SiadConfig(min_cwnd=1)
    assert SiadConfig().num_rtt == 20


def test_initialize_defaults():
    s = initialize(SiadConfig())
    assert s.phase == Phase.SLOW_START
    assert s.cwnd == s.alpha == s.incthresh == s.cwnd_max == 10.0
    assert math.isinf(s.ssthresh)


def test_slow_start_doubles_per_rtt():
    s = siad()
    for rnd in range(4):
        for _ in range(int(s.cwnd)):
            on_ack(s, 1, rnd * RTT)
        assert s.cwnd == pytest.approx(10.0 * 2 ** (rnd + 1))


def test_first_loss_with_valid_incthresh_enters_linear_increment():
    s = siad()
    on_rtt_sample(s, RTT)
    for _ in range(150):
        on_ack(s, 1, 0.5)
    on_rtt_sample(s, 0.12)
    on_rtt_sample(s, 0.12)
    act = on_congestion_event(s, 0.6)
    assert s.incthresh > s.ssthresh
    assert act.phase_after == Phase.LINEAR_INCREMENT
    assert s.alpha == pytest.approx(compute_alpha(s.incthresh, s.ssthresh, 20.0))


def test_slow_start_exit_without_target_enters_fast_increase():
    s = siad()
    on_rtt_sample(s, RTT)
    s.ssthresh = 15.0
    s.incthresh = 12.0
    for _ in range(6):
        on_ack(s, 1, 0.1)
    assert s.phase == Phase.FAST_INCREASE
    assert 1.0 <= s.alpha <= s.cwnd / 2.0


def test_zero_acks_state_unchanged():
    assert siad() == siad()


def test_timeout_reenters_slow_start():
    s = in_phase(Phase.LINEAR_INCREMENT, 100.0, 5.0)
    act = on_timeout(s, 1.0)
    assert act.phase_after == Phase.SLOW_START
    assert s.cwnd == MIN_CWND
    assert s.ssthresh == 50.0
    assert s.incthresh == s.ssthresh
    assert s.alpha == s.cwnd


# state sanity under random input sequences -------------------------------------


def check_state(s, ad_in_epoch):
    assert s.cwnd >= MIN_CWND - 1e-12
    if math.isfinite(s.ssthresh):
        assert s.incthresh >= s.ssthresh - 1e-9
    a = s.alpha
    assert a >= 1.0 - 1e-12
    if s.phase == Phase.SLOW_START:
        assert a <= s.cwnd + 1e-9
    elif s.phase == Phase.FAST_INCREASE:
        assert a <= max(1.0, s.cwnd / 2.0) + 1e-9
    elif ad_in_epoch:
        # an Additional Decrease may raise alpha up to the window itself
        assert a <= s.cwnd + 1e-9
    else:
        assert a < s.ssthresh or a == 1.0
    assert s.cnt_dec <= s.num_rtt_effective - 1
    prev, last = s.rtt_last_two
    assert s.rtt_min <= prev and s.rtt_min <= last


op = st.one_of(
    st.tuples(st.just("ack"), st.integers(1, 3)),
    st.tuples(st.just("rtt"), st.floats(1.0, 3.0)),
    st.tuples(st.just("loss"), st.just(0)),
    st.tuples(st.just("probe"), st.floats(0.9, 2.0)),
    st.tuples(st.just("rto"), st.just(0)),
)


def drive(s, ops, base_rtt):
    """Apply ``ops`` and check the state after each; returns the output sequence."""
    out = []
    t = 0.0
    ad = False
    on_rtt_sample(s, base_rtt, t)
    for kind, x in ops:
        t += 0.001
        if kind == "ack":
            for _ in range(int(x) * 20):
                act = on_ack(s, 1, t)
                ad = ad or act.performed_additional_decrease
        elif kind == "rtt":
            on_rtt_sample(s, base_rtt * x, t)
        elif kind == "loss":
            act = on_congestion_event(s, t)
            ad = False
        elif kind == "probe":
            act = on_rtt_probe_result(s, base_rtt * x, t)
            ad = ad or act.performed_additional_decrease
            if x < 1.0:
                on_rtt_sample(s, base_rtt * x, t)
                base_rtt *= x
        else:
            act = on_timeout(s, t)
            ad = False
        check_state(s, ad)
        out.append(s.vec.copy())
    return out


@given(st.lists(op, max_size=60), st.integers(2, 60), st.floats(0.005, 0.5),
       st.sampled_from([2.0, 10.0, 40.0]))
def test_state_sanity(ops, n, base_rtt, iw):
    drive(initialize(SiadConfig(num_rtt=n, initial_window=iw)), ops, base_rtt)


@given(st.lists(op, max_size=40), st.floats(100, 10000))
def test_state_sanity_num_ms(ops, num_ms):
    drive(initialize(SiadConfig(num_ms=num_ms)), ops, 0.1)


@given(st.lists(op, max_size=40), st.integers(2, 60))
def test_determinism(ops, n):
    a = drive(siad(n), ops, 0.1)
    b = drive(siad(n), ops, 0.1)
    assert len(a) == len(b)
    for x, y in zip(a, b):
        assert np.array_equal(x, y, equal_nan=True)
