"""Packet-level event loop for the dumbbell topology.

Everything here operates on flat numpy arrays so that it compiles under
numba; :mod:`siadsim.netsim.runner` builds the arrays and wraps the results.

Path model: a sender hands a packet to the bottleneck at transmission time.
The bottleneck serves one packet at a time and holds at most ``cap`` waiting
packets (tail drop).  A served packet reaches the receiver one forward
one-way delay later; its ACK returns after the reverse one-way delay.  Both
directions are FIFO per flow.

Packets carry unique packet numbers (``pn``) so ACKs are never ambiguous; a
packet is declared lost once a packet sent at least three transmissions
later has been acknowledged.
"""

import heapq
import math

import numpy as np

from .._jit import njit
from ..cc.common import cc_on_ack, cc_on_congestion, cc_on_rtt, cc_on_timeout
from ..cc.layout import ACT_ADDITIONAL_DECREASE, CWND, LAST_BETA, RTT_MIN

# event kinds
EV_DEPART = 1
EV_RCV = 2
EV_ACK = 3
EV_RTO = 4
EV_DELACK = 5
EV_START = 6
EV_STOP = 7
EV_RTTCHG = 8

# packet-number slot states
PN_FREE = 0
PN_INFLIGHT = 1
PN_ACKED = 2
PN_LOST = 3

DUPTHRESH = 3
DELACK_TIMEOUT = 0.04
RTO_MIN = 0.2
RTO_MAX = 60.0
RTO_INITIAL = 1.0

# drop causes
DROP_TAIL = 0
DROP_RANDOM = 1

# controller log kinds
LOG_CONGESTION = 0
LOG_ADDITIONAL_DECREASE = 1
LOG_TIMEOUT = 2

# per-flow float columns
F_OWD = 0
F_LAST_RCV = 1
F_LAST_ACK = 2
F_SRTT = 3
F_RTO_DEADLINE = 4
F_BACKOFF = 5
F_EVENT_TIME = 6
F_START = 7
F_STOP = 8
F_DONE_TIME = 9
F_OWD_FLOOR = 10
F_RTO_EVENT = 11  # time of the live timer event
F_COLS = 12

# per-flow int columns
I_ACTIVE = 0  # 0 idle, 1 sending, 2 stopped or finished
I_NEXT_PN = 1
I_NEXT_SEQ = 2
I_SND_UNA = 3
I_INFLIGHT = 4
I_LARGEST = 5
I_LOSS_SCAN = 6
I_RECOV_PN = 7
I_SPARE = 8
I_RTQ_HEAD = 9
I_RTQ_TAIL = 10
I_RTO_PENDING = 11
I_RCV_NEXT = 12
I_RCV_HIGH = 13
I_PEND_PN = 14
I_DGEN = 15
I_DELACK = 16
I_LIMIT = 17  # packets to deliver, -1 for a bulk flow
I_TX = 18
I_RCV = 19
I_DROP = 20
I_RETX = 21
I_UNIQ = 22
I_TRACE = 23  # column in the sampled traces, -1 if aggregated as cross traffic
I_RTO_COUNT = 24
I_EVENTS = 25
I_INNET = 26
I_ACKS = 27  # ACKs emitted by the receiver
I_RTO_GEN = 28  # only the newest timer event is live
I_COLS = 29

# global float slots
G_SER = 0
G_T_AREA = 1
G_AREA = 2
G_BUSY_CUM = 3
G_BUSY_SINCE = 4
G_COLS = 5

# global int slots
GI_SEQ = 0
GI_QLEN = 1
GI_QHEAD = 2
GI_BUSY = 3
GI_NARR = 4
GI_DROPIDX = 5
GI_DEPARTED = 6
GI_QMIN = 7
GI_QMAX = 8
GI_QVIOL = 9
GI_WORKVIOL = 10
GI_CAUSVIOL = 11
GI_NDL = 12
GI_NCL = 13
GI_CAP = 14
GI_NEVENTS = 15
GI_CROSS_UNIQ = 16
GI_COLS = 17

DL_COLS = 4  # time, flow, cause, srtt
CL_COLS = 7  # time, flow, kind, cwnd before, cwnd after, beta, rtt_min


@njit
def _push(heap, gi, t, kind, f, a, b, x):
    gi[GI_SEQ] += 1
    heapq.heappush(heap, (t, gi[GI_SEQ], kind, f, a, b, x))


@njit
def _set_qlen(g, gi, t, qlen):
    g[G_AREA] += gi[GI_QLEN] * (t - g[G_T_AREA])
    g[G_T_AREA] = t
    gi[GI_QLEN] = qlen
    if qlen < gi[GI_QMIN]:
        gi[GI_QMIN] = qlen
    if qlen > gi[GI_QMAX]:
        gi[GI_QMAX] = qlen


@njit
def _drop(t, f, cause, F, I, gi, dl):
    n = gi[GI_NDL]
    dl[n, 0] = t
    dl[n, 1] = f
    dl[n, 2] = cause
    dl[n, 3] = F[f, F_SRTT]
    gi[GI_NDL] = n + 1
    I[f, I_DROP] += 1
    I[f, I_INNET] -= 1


@njit
def _arrive(heap, t, f, pn, seq, owd, F, I, g, gi, qf, qpn, qseq, qowd, drop_ords, dl):
    """A packet reaches the bottleneck."""
    k = gi[GI_NARR]
    gi[GI_NARR] = k + 1
    di = gi[GI_DROPIDX]
    if di < drop_ords.shape[0] and drop_ords[di] == k:
        gi[GI_DROPIDX] = di + 1
        _drop(t, f, DROP_RANDOM, F, I, gi, dl)
        return
    if gi[GI_BUSY] == 0:
        gi[GI_BUSY] = 1
        g[G_BUSY_SINCE] = t
        _push(heap, gi, t + g[G_SER], EV_DEPART, f, pn, seq, owd)
        return
    cap = gi[GI_CAP]
    qlen = gi[GI_QLEN]
    if qlen >= cap:
        if qlen != cap:
            gi[GI_QVIOL] += 1
        _drop(t, f, DROP_TAIL, F, I, gi, dl)
        return
    size = qf.shape[0]
    pos = (gi[GI_QHEAD] + qlen) % size
    qf[pos] = f
    qpn[pos] = pn
    qseq[pos] = seq
    qowd[pos] = owd
    _set_qlen(g, gi, t, qlen + 1)


@njit
def _depart(heap, t, f, pn, seq, owd, F, g, gi, qf, qpn, qseq, qowd):
    gi[GI_DEPARTED] += 1
    rcv_t = t + owd
    if rcv_t < F[f, F_LAST_RCV]:
        rcv_t = F[f, F_LAST_RCV]
    F[f, F_LAST_RCV] = rcv_t
    _push(heap, gi, rcv_t, EV_RCV, f, pn, seq, owd)
    qlen = gi[GI_QLEN]
    if qlen > 0:
        h = gi[GI_QHEAD]
        nf = qf[h]
        npn = qpn[h]
        nseq = qseq[h]
        nowd = qowd[h]
        gi[GI_QHEAD] = (h + 1) % qf.shape[0]
        _set_qlen(g, gi, t, qlen - 1)
        _push(heap, gi, t + g[G_SER], EV_DEPART, nf, npn, nseq, nowd)
    else:
        gi[GI_BUSY] = 0
        g[G_BUSY_CUM] += t - g[G_BUSY_SINCE]


@njit
def _send_ack(heap, t, f, pn1, pn2, F, I, gi):
    a_t = t + F[f, F_OWD]
    if a_t < F[f, F_LAST_ACK]:
        a_t = F[f, F_LAST_ACK]
    F[f, F_LAST_ACK] = a_t
    I[f, I_ACKS] += 1
    _push(heap, gi, a_t, EV_ACK, f, pn1, pn2, float(I[f, I_RCV_NEXT]))


@njit
def _receive(heap, t, f, pn, seq, F, I, gi, rcv_seq):
    I[f, I_RCV] += 1
    I[f, I_INNET] -= 1
    mask = rcv_seq.shape[1] - 1
    rn = I[f, I_RCV_NEXT]
    immediate = False
    if seq < rn or rcv_seq[f, seq & mask] == seq:
        immediate = True  # duplicate
    else:
        rcv_seq[f, seq & mask] = seq
        I[f, I_UNIQ] += 1
        if I[f, I_TRACE] < 0:
            gi[GI_CROSS_UNIQ] += 1
        had_gap = I[f, I_RCV_HIGH] > rn
        if seq + 1 > I[f, I_RCV_HIGH]:
            I[f, I_RCV_HIGH] = seq + 1
        if seq == rn:
            while rcv_seq[f, rn & mask] == rn:
                rn += 1
            I[f, I_RCV_NEXT] = rn
            if had_gap:
                immediate = True  # hole filled
        else:
            immediate = True  # out of order
    if I[f, I_DELACK] == 0 or immediate:
        _send_ack(heap, t, f, I[f, I_PEND_PN], pn, F, I, gi)
        I[f, I_PEND_PN] = -1
        return
    if I[f, I_PEND_PN] >= 0:
        _send_ack(heap, t, f, I[f, I_PEND_PN], pn, F, I, gi)
        I[f, I_PEND_PN] = -1
    else:
        I[f, I_PEND_PN] = pn
        I[f, I_DGEN] += 1
        _push(heap, gi, t + DELACK_TIMEOUT, EV_DELACK, f, I[f, I_DGEN], 0, 0.0)


@njit
def _rto_value(F, f):
    srtt = F[f, F_SRTT]
    if srtt > 0.0:
        r = 2.0 * srtt
        if r < RTO_MIN:
            r = RTO_MIN
    else:
        r = RTO_INITIAL
    r *= F[f, F_BACKOFF]
    if r > RTO_MAX:
        r = RTO_MAX
    return r


@njit
def _schedule_rto(heap, f, F, I, gi):
    I[f, I_RTO_GEN] += 1
    I[f, I_RTO_PENDING] = 1
    F[f, F_RTO_EVENT] = F[f, F_RTO_DEADLINE]
    _push(heap, gi, F[f, F_RTO_DEADLINE], EV_RTO, f, I[f, I_RTO_GEN], 0, 0.0)


@njit
def _arm_rto(heap, t, f, F, I, gi):
    F[f, F_RTO_DEADLINE] = t + _rto_value(F, f)
    if I[f, I_RTO_PENDING] == 0:
        _schedule_rto(heap, f, F, I, gi)


@njit
def _seq_done(f, seq, I, seq_acked):
    return seq < I[f, I_SND_UNA] or seq_acked[f, seq & (seq_acked.shape[1] - 1)] == seq


@njit
def _try_send(heap, t, f, F, I, g, gi, st, pn_id, pn_seq, pn_time, pn_owd, pn_state,
              seq_acked, rtq, qf, qpn, qseq, qowd, drop_ords, dl):
    R = pn_id.shape[1]
    mask = R - 1
    while True:
        allowed = I[f, I_INFLIGHT] < math.floor(st[f, CWND])
        h = I[f, I_RTQ_HEAD]
        if h < I[f, I_RTQ_TAIL]:
            seq = rtq[f, h & mask]
            if _seq_done(f, seq, I, seq_acked):
                I[f, I_RTQ_HEAD] = h + 1
                continue
            if not allowed:
                return
            retx = True
        else:
            if I[f, I_ACTIVE] != 1 or not allowed:
                return
            seq = I[f, I_NEXT_SEQ]
            lim = I[f, I_LIMIT]
            if lim >= 0 and seq >= lim:
                return
            if seq - I[f, I_SND_UNA] >= R // 2:
                return
            retx = False
        pn = I[f, I_NEXT_PN]
        slot = pn & mask
        if pn_state[f, slot] == PN_INFLIGHT:
            return
        if retx:
            I[f, I_RTQ_HEAD] = h + 1
            I[f, I_RETX] += 1
        else:
            I[f, I_NEXT_SEQ] = seq + 1
        I[f, I_NEXT_PN] = pn + 1
        pn_id[f, slot] = pn
        pn_seq[f, slot] = seq
        pn_time[f, slot] = t
        owd = F[f, F_OWD]
        pn_owd[f, slot] = owd
        pn_state[f, slot] = PN_INFLIGHT
        I[f, I_INFLIGHT] += 1
        I[f, I_TX] += 1
        I[f, I_INNET] += 1
        if I[f, I_RTO_PENDING] == 0:
            _arm_rto(heap, t, f, F, I, gi)
        _arrive(heap, t, f, pn, seq, owd, F, I, g, gi, qf, qpn, qseq, qowd, drop_ords, dl)


@njit
def _log_cc(cl, gi, t, f, kind, before, st):
    n = gi[GI_NCL]
    cl[n, 0] = t
    cl[n, 1] = f
    cl[n, 2] = kind
    cl[n, 3] = before
    cl[n, 4] = st[f, CWND]
    cl[n, 5] = st[f, LAST_BETA]
    cl[n, 6] = st[f, RTT_MIN]
    gi[GI_NCL] = n + 1


@njit
def _mark_lost(f, slot, I, pn_seq, pn_state, seq_acked, rtq):
    pn_state[f, slot] = PN_LOST
    I[f, I_INFLIGHT] -= 1
    seq = pn_seq[f, slot]
    if not _seq_done(f, seq, I, seq_acked):
        mask = rtq.shape[1] - 1
        rtq[f, I[f, I_RTQ_TAIL] & mask] = seq
        I[f, I_RTQ_TAIL] += 1


@njit
def _on_ack(heap, t, f, pn1, pn2, cum, F, I, g, gi, st, pn_id, pn_seq, pn_time, pn_owd,
            pn_state, seq_acked, rtq, qf, qpn, qseq, qowd, drop_ords, dl, cl, ser):
    mask = pn_id.shape[1] - 1
    acked = 0
    for j in range(2):
        pn = pn1 if j == 0 else pn2
        if pn < 0:
            continue
        slot = pn & mask
        if pn_id[f, slot] != pn:
            continue
        s = pn_state[f, slot]
        if s != PN_INFLIGHT and s != PN_LOST:
            continue
        if s == PN_INFLIGHT:
            I[f, I_INFLIGHT] -= 1
        pn_state[f, slot] = PN_ACKED
        acked += 1
        seq = pn_seq[f, slot]
        seq_acked[f, seq & mask] = seq
        if pn > I[f, I_LARGEST]:
            I[f, I_LARGEST] = pn
        if t < pn_time[f, slot] + ser + pn_owd[f, slot] + F[f, F_OWD_FLOOR] - 1e-9:
            gi[GI_CAUSVIOL] += 1
        rtt = t - pn_time[f, slot]
        if F[f, F_SRTT] > 0.0:
            F[f, F_SRTT] += (rtt - F[f, F_SRTT]) / 8.0
        else:
            F[f, F_SRTT] = rtt
        cc_on_rtt(st[f], rtt, t)
    c = int(cum)
    if c > I[f, I_SND_UNA]:
        I[f, I_SND_UNA] = c
    una = I[f, I_SND_UNA]
    while una < I[f, I_NEXT_SEQ] and seq_acked[f, una & mask] == una:
        una += 1
    I[f, I_SND_UNA] = una

    if I[f, I_ACTIVE] == 2:
        return
    lim = I[f, I_LIMIT]
    if lim >= 0 and una >= lim:
        I[f, I_ACTIVE] = 2
        F[f, F_DONE_TIME] = t
        return

    # loss detection
    largest = I[f, I_LARGEST]
    scan = I[f, I_LOSS_SCAN]
    new_event = False
    while scan + DUPTHRESH <= largest:
        slot = scan & mask
        if pn_id[f, slot] == scan and pn_state[f, slot] == PN_INFLIGHT:
            _mark_lost(f, slot, I, pn_seq, pn_state, seq_acked, rtq)
            if scan >= I[f, I_RECOV_PN] and t - F[f, F_EVENT_TIME] > F[f, F_SRTT]:
                new_event = True
        scan += 1
    I[f, I_LOSS_SCAN] = scan

    if new_event:
        before = st[f, CWND]
        cc_on_congestion(st[f], t)
        I[f, I_RECOV_PN] = I[f, I_NEXT_PN]
        F[f, F_EVENT_TIME] = t
        I[f, I_EVENTS] += 1
        _log_cc(cl, gi, t, f, LOG_CONGESTION, before, st)
    elif acked > 0 and largest >= I[f, I_RECOV_PN]:
        before = st[f, CWND]
        flags = cc_on_ack(st[f], float(acked), 1.0, t)
        if flags & ACT_ADDITIONAL_DECREASE:
            _log_cc(cl, gi, t, f, LOG_ADDITIONAL_DECREASE, before, st)

    if acked > 0:
        F[f, F_BACKOFF] = 1.0
        if I[f, I_INFLIGHT] > 0:
            F[f, F_RTO_DEADLINE] = t + _rto_value(F, f)
            if I[f, I_RTO_PENDING] == 0 or F[f, F_RTO_DEADLINE] < F[f, F_RTO_EVENT]:
                _schedule_rto(heap, f, F, I, gi)
    _try_send(heap, t, f, F, I, g, gi, st, pn_id, pn_seq, pn_time, pn_owd, pn_state,
              seq_acked, rtq, qf, qpn, qseq, qowd, drop_ords, dl)


@njit
def _on_rto(heap, t, f, gen, F, I, g, gi, st, pn_id, pn_seq, pn_time, pn_owd, pn_state,
            seq_acked, rtq, qf, qpn, qseq, qowd, drop_ords, dl, cl):
    if gen != I[f, I_RTO_GEN]:
        return  # superseded by an earlier deadline
    I[f, I_RTO_PENDING] = 0
    if I[f, I_ACTIVE] != 1 or I[f, I_INFLIGHT] == 0:
        return
    if t < F[f, F_RTO_DEADLINE]:
        _schedule_rto(heap, f, F, I, gi)
        return
    R = pn_id.shape[1]
    mask = R - 1
    # everything outstanding is presumed lost, oldest first
    first = I[f, I_NEXT_PN] - R
    if first < I[f, I_LOSS_SCAN] - R:
        first = I[f, I_LOSS_SCAN] - R
    if first < 0:
        first = 0
    for pn in range(first, I[f, I_NEXT_PN]):
        slot = pn & mask
        if pn_id[f, slot] == pn and pn_state[f, slot] == PN_INFLIGHT:
            _mark_lost(f, slot, I, pn_seq, pn_state, seq_acked, rtq)
    before = st[f, CWND]
    cc_on_timeout(st[f], t)
    I[f, I_RECOV_PN] = I[f, I_NEXT_PN]
    F[f, F_EVENT_TIME] = t
    I[f, I_RTO_COUNT] += 1
    _log_cc(cl, gi, t, f, LOG_TIMEOUT, before, st)
    F[f, F_BACKOFF] *= 2.0
    _try_send(heap, t, f, F, I, g, gi, st, pn_id, pn_seq, pn_time, pn_owd, pn_state,
              seq_acked, rtq, qf, qpn, qseq, qowd, drop_ords, dl)
    if I[f, I_INFLIGHT] > 0:
        _arm_rto(heap, t, f, F, I, gi)


@njit
def _grow(a, need):
    n = a.shape[0]
    while n < need:
        n *= 2
    if n == a.shape[0]:
        return a
    b = np.zeros((n, a.shape[1]))
    b[: a.shape[0]] = a
    return b


@njit
def simulate(st, F, I, R, cap, ser, horizon, dt, n_samples, n_traced,
             drop_ords, chg_time, chg_flow, chg_owd, log_hint):
    """Run one simulation.

    ``st`` holds one initialized controller row per flow; ``F``/``I`` hold the
    per-flow parameters (start, stop, delay, limit, delayed-ACK flag, trace
    column).  Returns the sampled traces, the drop and controller logs, the
    per-flow counters and a diagnostics vector.
    """
    nf = st.shape[0]
    mask = R - 1
    pn_id = np.full((nf, R), -1, dtype=np.int64)
    pn_seq = np.zeros((nf, R), dtype=np.int64)
    pn_time = np.zeros((nf, R))
    pn_owd = np.zeros((nf, R))
    pn_state = np.zeros((nf, R), dtype=np.int8)
    seq_acked = np.full((nf, R), -1, dtype=np.int64)
    rcv_seq = np.full((nf, R), -1, dtype=np.int64)
    rtq = np.zeros((nf, R), dtype=np.int64)

    qsize = cap + 1
    qf = np.zeros(qsize, dtype=np.int64)
    qpn = np.zeros(qsize, dtype=np.int64)
    qseq = np.zeros(qsize, dtype=np.int64)
    qowd = np.zeros(qsize)

    g = np.zeros(G_COLS)
    gi = np.zeros(GI_COLS, dtype=np.int64)
    g[G_SER] = ser
    gi[GI_CAP] = cap

    dl = np.zeros((log_hint, DL_COLS))
    cl = np.zeros((log_hint, CL_COLS))

    s_cwnd = np.zeros((n_samples, n_traced))
    s_rttmin = np.zeros((n_samples, n_traced))
    s_deliv = np.zeros((n_samples, n_traced), dtype=np.int64)
    s_sent = np.zeros((n_samples, n_traced), dtype=np.int64)
    s_cross = np.zeros(n_samples, dtype=np.int64)
    s_qlen = np.zeros(n_samples, dtype=np.int64)
    s_qmin = np.zeros(n_samples, dtype=np.int64)
    s_qarea = np.zeros(n_samples)
    s_busy = np.zeros(n_samples)
    s_dep = np.zeros(n_samples, dtype=np.int64)

    heap = [(0.0, 0, 0, 0, 0, 0, 0.0)]
    heap.pop()
    for f in range(nf):
        I[f, I_PEND_PN] = -1
        I[f, I_RECOV_PN] = 0
        F[f, F_EVENT_TIME] = -np.inf
        F[f, F_BACKOFF] = 1.0
        F[f, F_LAST_RCV] = 0.0
        F[f, F_LAST_ACK] = 0.0
        F[f, F_DONE_TIME] = np.inf
        if F[f, F_START] <= horizon:
            _push(heap, gi, F[f, F_START], EV_START, f, 0, 0, 0.0)
        if F[f, F_STOP] <= horizon:
            _push(heap, gi, F[f, F_STOP], EV_STOP, f, 0, 0, 0.0)
    for i in range(chg_time.shape[0]):
        if chg_time[i] <= horizon:
            _push(heap, gi, chg_time[i], EV_RTTCHG, chg_flow[i], 0, 0, chg_owd[i])

    k = 0
    margin = R + 16
    while True:
        if len(heap) > 0:
            t = heap[0][0]
        else:
            t = np.inf
        if t > horizon:
            t = np.inf
        # sample the state as it was before this instant
        while k < n_samples and k * dt <= t:
            ts = k * dt
            for f in range(nf):
                c = I[f, I_TRACE]
                if c >= 0:
                    s_cwnd[k, c] = st[f, CWND]
                    s_rttmin[k, c] = st[f, RTT_MIN]
                    s_deliv[k, c] = I[f, I_UNIQ]
                    s_sent[k, c] = I[f, I_TX]
            s_cross[k] = gi[GI_CROSS_UNIQ]
            s_qlen[k] = gi[GI_QLEN]
            s_qmin[k] = gi[GI_QMIN]
            gi[GI_QMIN] = gi[GI_QLEN]
            s_qarea[k] = g[G_AREA] + gi[GI_QLEN] * (ts - g[G_T_AREA])
            busy = g[G_BUSY_CUM]
            if gi[GI_BUSY] == 1:
                busy += ts - g[G_BUSY_SINCE]
            s_busy[k] = busy
            s_dep[k] = gi[GI_DEPARTED]
            k += 1
        if t == np.inf:
            break

        if gi[GI_NDL] + margin > dl.shape[0]:
            dl = _grow(dl, gi[GI_NDL] + margin)
        if gi[GI_NCL] + 16 > cl.shape[0]:
            cl = _grow(cl, gi[GI_NCL] + 16)

        ev = heapq.heappop(heap)
        t = ev[0]
        kind = ev[2]
        f = ev[3]
        a = ev[4]
        b = ev[5]
        x = ev[6]
        gi[GI_NEVENTS] += 1

        if kind == EV_DEPART:
            _depart(heap, t, f, a, b, x, F, g, gi, qf, qpn, qseq, qowd)
        elif kind == EV_RCV:
            _receive(heap, t, f, a, b, F, I, gi, rcv_seq)
        elif kind == EV_ACK:
            _on_ack(heap, t, f, a, b, x, F, I, g, gi, st, pn_id, pn_seq, pn_time, pn_owd,
                    pn_state, seq_acked, rtq, qf, qpn, qseq, qowd, drop_ords, dl, cl, ser)
        elif kind == EV_RTO:
            _on_rto(heap, t, f, a, F, I, g, gi, st, pn_id, pn_seq, pn_time, pn_owd, pn_state,
                    seq_acked, rtq, qf, qpn, qseq, qowd, drop_ords, dl, cl)
        elif kind == EV_DELACK:
            if a == I[f, I_DGEN] and I[f, I_PEND_PN] >= 0:
                _send_ack(heap, t, f, I[f, I_PEND_PN], -1, F, I, gi)
                I[f, I_PEND_PN] = -1
        elif kind == EV_START:
            if I[f, I_ACTIVE] == 0:
                I[f, I_ACTIVE] = 1
                _try_send(heap, t, f, F, I, g, gi, st, pn_id, pn_seq, pn_time, pn_owd,
                          pn_state, seq_acked, rtq, qf, qpn, qseq, qowd, drop_ords, dl)
        elif kind == EV_STOP:
            I[f, I_ACTIVE] = 2
        elif kind == EV_RTTCHG:
            if f < 0:
                for j in range(nf):
                    F[j, F_OWD] = x
            else:
                F[f, F_OWD] = x

        if gi[GI_BUSY] == 0 and gi[GI_QLEN] > 0:
            gi[GI_WORKVIOL] += 1

    # packets still inside the network, per flow, by direct inspection
    innet = np.zeros(nf, dtype=np.int64)
    for i in range(len(heap)):
        e = heap[i]
        if e[2] == EV_DEPART or e[2] == EV_RCV:
            innet[e[3]] += 1
    for j in range(gi[GI_QLEN]):
        innet[qf[(gi[GI_QHEAD] + j) % qsize]] += 1

    diag = gi.copy()
    return (s_cwnd, s_rttmin, s_deliv, s_sent, s_cross, s_qlen, s_qmin, s_qarea, s_busy,
            s_dep, dl[: gi[GI_NDL]].copy(), cl[: gi[GI_NCL]].copy(), I.copy(), F.copy(),
            innet, diag)
