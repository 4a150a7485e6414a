"""Flat float64 layout of a controller state vector.

Every controller keeps its state in one row of a ``float64`` array so the
simulation kernel can hold all flows in a single 2-D array.  Slots 0-7 are
common to all algorithms; the rest are algorithm specific and may overlap
between algorithms.
"""

import math

STATE_SIZE = 48

INF = math.inf

# algorithm ids
SIAD = 0
NEWRENO = 1
CUBIC = 2
SCALABLE = 3
HIGHSPEED = 4
HTCP = 5

ALGORITHMS = {
    "siad": SIAD,
    "newreno": NEWRENO,
    "cubic": CUBIC,
    "scalable": SCALABLE,
    "highspeed": HIGHSPEED,
    "htcp": HTCP,
}
ALGORITHM_NAMES = {v: k for k, v in ALGORITHMS.items()}

# common slots
ALG = 0
CWND = 1
SSTHRESH = 2
RTT_MIN = 3
RTT_LAST = 4  # most recent RTT sample
RTT_PREV = 5  # the sample before it
INIT_WIN = 6
LAST_BETA = 7  # multiplicative factor applied at the last congestion event

# SIAD
PHASE = 8
INCTHRESH = 9
ALPHA = 10
CWND_MAX = 11
PREV_CWND_MAX = 12
TREND = 13
NUM_RTT = 14  # effective value used in the current epoch
NUM_RTT_CFG = 15  # 0 when the epoch length is given in milliseconds
NUM_MS = 16
CNT_DEC = 17
PROBE_STATE = 18
PROBE_THRESH = 19
PROBE_LEFT = 20  # packets left in the current measurement round
PROBE_MIN = 21  # minimum sample seen in the current round
PROBE_FIRST = 22  # minimum of the first round
PROBE_RTT = 23  # RTT used by the pending Additional Decrease
EPOCH_START = 24
INCREASED = 25  # 1 once cwnd grew since the last reduction
INC_PASS_TIME = 26
AD_SUPPRESSED = 27
EP_RTT_SUM = 28
EP_RTT_CNT = 29
AVG_RTT = 30
PROBE_START = 31  # samples taken before this time predate the reduction
ALPHA_GOAL = 32  # alpha wanted after an Additional Decrease capped it at cwnd
PROBE_ROUNDS = 33  # extra rounds spent waiting for a draining queue

# CUBIC
CU_W_MAX = 8
CU_EPOCH = 9  # < 0 when no epoch is running
CU_K = 10
CU_ORIGIN = 11
CU_W_EST = 12

# HighSpeed
HS_A = 8
HS_B = 9

# H-TCP
HT_LAST_EVENT = 8
HT_BETA = 9

# bit flags returned by the per-event kernels
ACT_ADDITIONAL_DECREASE = 1
ACT_PROBE_ARMED = 2
