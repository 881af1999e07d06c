"""The numba kernels and their pure-Python fallback must agree bit for bit."""

import json
import os
import subprocess
import sys

SCRIPT = r"""
import hashlib, json
import numpy as np
from oscnet import backend_name, _kernels as K
from oscnet.engine import ChannelModel, Simulation, StopCondition, draw_frequencies
from oscnet.sat import ProbSatParams, build_sat_network, random_3sat, sequential_probsat, solve_sat_network
from oscnet.coloring import solve_coloring
from oscnet.instances import mycielski
from oscnet.hw import solve_hw_sat
from oscnet.tsp import random_tsp, sample_tours

p = random_3sat(12, 48, seed=3)
sn = build_sat_network(p, [1] * 12)
sim = Simulation(sn.net, draw_frequencies(sn.net.n_nodes, seed=1), ChannelModel.lossy(), seed=2,
                 log_mode=K.LOG_ALL, log_capacity=1 << 14)
sim.advance(25.0)
log = sim.drain_log()
h = hashlib.sha256(b"".join(v.tobytes() for v in log.values())).hexdigest()
out = {
    "backend": backend_name(),
    "log": h,
    "probsat": sequential_probsat(random_3sat(30, 120, seed=1), ProbSatParams(seed=4, max_flips=3000)).flips,
    "net": solve_sat_network(p, ChannelModel.lossy(), StopCondition(200), seed=5).to_dict(),
    "color": solve_coloring(mycielski(3, 4), stop=StopCondition(200, 1), seed=1).to_dict(),
    "hw": solve_hw_sat(p, StopCondition(200), seed=2).to_dict(),
    "tsp": sorted((list(k), v) for k, v in sample_tours(random_tsp(4, seed=0), 200, seed=1).counts.items()),
}
print(json.dumps(out, sort_keys=True))
"""


def _run(flag):
    env = dict(os.environ, OSCNET_NUMBA=flag)
    res = subprocess.run([sys.executable, "-c", SCRIPT], env=env, capture_output=True,
                         text=True, check=True)
    return json.loads(res.stdout)


def test_numba_and_python_agree():
    fast = _run("1")
    slow = _run("0")
    assert fast.pop("backend") == "numba"
    assert slow.pop("backend") == "python"
    assert fast == slow
