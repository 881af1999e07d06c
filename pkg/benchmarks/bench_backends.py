"""Time the numba kernels against the pure-Python fallback.

Each workload runs in a fresh interpreter with OSCNET_NUMBA set, so the
backend choice is made at import time exactly as for users.  The first
numba call includes compilation (or cache load); it is reported separately.

    python3 benchmarks/bench_backends.py --repeat 3
"""

import argparse
import json
import os
import subprocess
import sys

WORKLOAD = r"""
import json, sys, time
from oscnet import backend_name
from oscnet.engine import StopCondition
from oscnet.instances import bundled_rand50, mycielski
from oscnet.sat import ProbSatParams, random_3sat, sequential_probsat, solve_sat_network
from oscnet.coloring import solve_coloring
from oscnet.tsp import random_tsp, sample_tours

cycles, repeat = float(sys.argv[1]), int(sys.argv[2])
_, p = bundled_rand50(1)[0]
g = mycielski(4, 5)
tsp = random_tsp(5, seed=0)
hard = random_3sat(50, 300, seed=0)  # ratio 6: unsatisfiable, so the flip budget is spent

jobs = {
    "probsat_20k_flips": lambda: sequential_probsat(hard, ProbSatParams(max_flips=20000, seed=1)),
    "sat_network": lambda: solve_sat_network(p, stop=StopCondition(cycles, cycles, lambda s: False), seed=1),
    "coloring_network": lambda: solve_coloring(g, stop=StopCondition(cycles, cycles, lambda s: False), seed=1),
    "tsp_2k_tours": lambda: sample_tours(tsp, 2000, seed=1),
}
out = {"backend": backend_name()}
for name, job in jobs.items():
    t = time.perf_counter(); job(); first = time.perf_counter() - t
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter(); job(); best = min(best, time.perf_counter() - t)
    out[name] = {"first": first, "best": best}
print(json.dumps(out))
"""


def run_backend(flag: str, cycles: float, repeat: int) -> dict:
    env = dict(os.environ, OSCNET_NUMBA=flag)
    res = subprocess.run([sys.executable, "-c", WORKLOAD, str(cycles), str(repeat)],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(res.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cycles", type=float, default=50.0,
                    help="simulated cycles per network run (kept small for the Python path)")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", action="store_true", help="print raw JSON")
    args = ap.parse_args()

    fast = run_backend("1", args.cycles, args.repeat)
    slow = run_backend("0", args.cycles, args.repeat)
    if args.json:
        print(json.dumps({"numba": fast, "python": slow}, indent=2))
        return
    print(f"{'workload':<20} {'numba first':>12} {'numba best':>11} {'python best':>12} {'speedup':>8}")
    for name in fast:
        if name == "backend":
            continue
        f, s = fast[name], slow[name]
        print(f"{name:<20} {f['first']:>11.3f}s {f['best']:>10.4f}s {s['best']:>11.4f}s "
              f"{s['best'] / f['best']:>7.1f}x")


if __name__ == "__main__":
    main()
