"""Compiled vs interpreted kernel speed on the same scenarios.

Each mode runs in its own process because the JIT switch is read at import
time.  Both modes must produce identical traces; the script checks a digest.

    python3 benchmarks/bench_kernels.py [--horizon 60] [--skip-python]
"""

import argparse
import hashlib
import json
import os
import subprocess
import sys
import time

SCENARIOS = {
    "siad_single": dict(bandwidth=10e6, buffer=0.5, flows=[{"algorithm": "siad"}]),
    "siad_vs_cubic": dict(bandwidth=20e6, buffer=1.0,
                          flows=[{"algorithm": "siad"}, {"algorithm": "cubic", "start": 5.0}]),
    "newreno_cross": dict(bandwidth=10e6, buffer=0.5, flows=[{"algorithm": "newreno"}],
                          cross_traffic={"burst_bytes": 300000, "iat": [2.0, 3.0]}),
}

CHILD = r"""
import hashlib, json, sys, time
import numpy as np
from siadsim._jit import JIT_ENABLED
from siadsim.netsim import simulate
from siadsim.scenario import from_dict

spec = json.loads(sys.argv[1])
out = {"jit": JIT_ENABLED}
if JIT_ENABLED:
    t0 = time.perf_counter()
    simulate(from_dict({**spec["scenarios"][0][1], "horizon": 1.0, "warmup": 0.0}))
    out["warm"] = time.perf_counter() - t0
for name, sc in spec["scenarios"]:
    sc = from_dict({**sc, "horizon": spec["horizon"], "warmup": 0.0})
    t0 = time.perf_counter()
    tr = simulate(sc)
    wall = time.perf_counter() - t0
    h = hashlib.sha256()
    for a in (tr.cwnd, tr.qlen, tr.delivered, tr.drops, tr.cc_events):
        h.update(np.ascontiguousarray(a).tobytes())
    out[name] = {"wall": wall, "events": tr.diagnostics["events"], "digest": h.hexdigest()}
print(json.dumps(out))
"""


def run_mode(horizon, disable_jit):
    env = dict(os.environ, SIADSIM_DISABLE_JIT="1" if disable_jit else "0")
    spec = json.dumps({"horizon": horizon, "scenarios": list(SCENARIOS.items())})
    t0 = time.perf_counter()
    r = subprocess.run([sys.executable, "-c", CHILD, spec], env=env,
                       capture_output=True, text=True, check=True)
    res = json.loads(r.stdout)
    res["process"] = time.perf_counter() - t0
    return res


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--horizon", type=float, default=60.0)
    ap.add_argument("--skip-python", action="store_true", help="time the JIT build only")
    args = ap.parse_args()

    jit = run_mode(args.horizon, disable_jit=False)
    py = None if args.skip_python else run_mode(args.horizon, disable_jit=True)
    print(f"horizon {args.horizon:g} s; JIT warm-up {jit.get('warm', 0.0):.2f} s")
    print(f"{'scenario':16} {'events':>9} {'jit s':>8} {'python s':>9} {'speedup':>8} {'ev/s jit':>10}  same")
    ok = True
    for name in SCENARIOS:
        j = jit[name]
        line = f"{name:16} {j['events']:9d} {j['wall']:8.3f}"
        if py is not None:
            p = py[name]
            same = p["digest"] == j["digest"]
            ok &= same
            line += f" {p['wall']:9.2f} {p['wall'] / j['wall']:8.1f}"
        else:
            same = None
            line += f" {'-':>9} {'-':>8}"
        line += f" {j['events'] / j['wall']:10.0f}  {'-' if same is None else ('yes' if same else 'NO')}"
        print(line)
    if not ok:
        print("compiled and interpreted traces differ", file=sys.stderr)
        return 1
    digest = hashlib.sha256(json.dumps({k: jit[k]["digest"] for k in SCENARIOS}).encode())
    print(f"trace digest {digest.hexdigest()[:16]}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
