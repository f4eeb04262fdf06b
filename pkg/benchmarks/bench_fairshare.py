#!/usr/bin/env python3
"""Benchmark the fair-share kernel: numba-compiled vs pure-Python/numpy.

The kernel is the simulator's hot path (rerun on every flow arrival and
departure), so this measures both the raw solver on large random flow
sets and an end-to-end consolidated simulation.  The backend is chosen at
import time from RALP_DISABLE_NUMBA, so each measurement runs in a
subprocess.

Usage: python3 benchmarks/bench_fairshare.py [--flows 2000] [--repeat 50]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys

_WORKER = r"""
import json, sys, time
import numpy as np
from ralp import fairshare

mode = sys.argv[1]
n_flows = int(sys.argv[2])
repeat = int(sys.argv[3])
assert fairshare.backend_name() == mode, fairshare.backend_name()

rng = np.random.default_rng(7)
n_links = 64
cases = []
for _ in range(repeat):
    caps = rng.uniform(1e8, 1e10, size=n_links)
    a = rng.integers(0, n_links, size=n_flows).astype(np.int64)
    b = rng.integers(0, n_links, size=n_flows).astype(np.int64)
    cases.append((a, b, caps))

# warm up (includes jit compilation for the numba backend)
fairshare.solve_rates(*cases[0])

t0 = time.perf_counter()
sink = 0.0
for a, b, caps in cases:
    sink += float(fairshare.solve_rates(a, b, caps)[0])
kernel_s = time.perf_counter() - t0

# end-to-end: eight consolidated comm-bound jobs on the default cluster
from ralp import DEFAULT_CLUSTER, Scenario, catalog_lookup, simulate_consolidation
from ralp.costmodel import JobSpec, Strategy
from ralp.simulator import spread_placement

model = catalog_lookup("lenet")
spec = JobSpec(model=model, strategy=Strategy.baseline(), worker_count=3, ps_count=1)
placement = spread_placement(DEFAULT_CLUSTER, [(3, 1)])[0]
scenario = Scenario(cluster=DEFAULT_CLUSTER, jobs=(("j", spec, placement),), steps=5)
t0 = time.perf_counter()
simulate_consolidation(scenario, copies=8)
sim_s = time.perf_counter() - t0

print(json.dumps({"kernel_s": kernel_s, "sim_s": sim_s, "sink": sink}))
"""


def measure(mode: str, flows: int, repeat: int) -> dict:
    env = dict(os.environ)
    if mode == "numpy":
        env["RALP_DISABLE_NUMBA"] = "1"
    else:
        env.pop("RALP_DISABLE_NUMBA", None)
    proc = subprocess.run(
        [sys.executable, "-c", _WORKER, mode, str(flows), str(repeat)],
        capture_output=True,
        text=True,
        env=env,
        check=True,
    )
    return json.loads(proc.stdout)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--flows", type=int, default=2000, help="flows per solver call")
    parser.add_argument("--repeat", type=int, default=50, help="solver calls to time")
    args = parser.parse_args()

    results = {}
    for mode in ("numpy", "numba"):
        results[mode] = measure(mode, args.flows, args.repeat)
        print(
            f"{mode:6s} kernel: {results[mode]['kernel_s']:8.3f}s "
            f"({args.repeat} solves x {args.flows} flows)   "
            f"8-job consolidation sim: {results[mode]['sim_s']:6.3f}s"
        )
    if results["numba"]["kernel_s"] > 0:
        ratio = results["numpy"]["kernel_s"] / results["numba"]["kernel_s"]
        print(f"kernel speedup (numba over numpy): {ratio:.1f}x")
    assert results["numpy"]["sink"] == results["numba"]["sink"], "backends disagree"


if __name__ == "__main__":
    main()
