"""TSP tour sampling with distance-encoded oscillator frequencies.

Edge node (i, j) stands for the directed edge i -> j (cities are 1-based,
j != 1).  States: 1 deactivated, 2 armed, 3 activated; an activated node
fires at its next oscillator tick and thereby appends its edge to the tour.
Shorter edges get faster oscillators and so tend to win the race within
their row.  A tour-completion node, slightly slower than every edge node,
resets the network once a full oscillation passes without any edge event.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from itertools import permutations

import numpy as np

from . import _kernels as K
from .engine import (ChannelModel, EngineError, Network, OscillatorAssignment,
                     Simulation)
from .node import NodeSpec


class TourError(EngineError):
    """A segment between two resets was not a Hamiltonian path from city 1."""


@dataclass(frozen=True, eq=False)
class TspProblem:
    dist: np.ndarray

    def __post_init__(self):
        d = np.array(self.dist, dtype=np.float64)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ValueError("distance matrix must be square")
        if not np.allclose(d, d.T):
            raise ValueError("only symmetric distance matrices are supported")
        if np.any(np.diag(d) != 0):
            raise ValueError("diagonal must be zero")
        off = d[~np.eye(len(d), dtype=bool)]
        if np.any(off <= 0):
            raise ValueError("off-diagonal distances must be positive")
        d.setflags(write=False)
        object.__setattr__(self, "dist", d)

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    def d(self, i: int, j: int) -> float:
        """Distance between 1-based cities."""
        return float(self.dist[i - 1, j - 1])

    def tour_length(self, tour, closed: bool = True) -> float:
        total = sum(self.d(a, b) for a, b in zip(tour, tour[1:]))
        if closed:
            total += self.d(tour[-1], tour[0])
        return total


def random_tsp(n: int, seed=0, low: float = 1.0, high: float = 10.0) -> TspProblem:
    rng = np.random.default_rng(seed)
    d = np.zeros((n, n))
    iu = np.triu_indices(n, 1)
    d[iu] = rng.uniform(low, high, len(iu[0]))
    return TspProblem(d + d.T)


def all_tours(n: int) -> list[tuple[int, ...]]:
    """Every directed tour starting at city 1: (n-1)! of them."""
    return [(1,) + p for p in permutations(range(2, n + 1))]


def f_edge(i: int, s: int) -> int:
    if i == 4 or (i == 2 and s == 2):
        return 3
    if i == 3:
        return 2
    if i == 1 or (i == 0 and s == 3):
        return 1
    return s


def g_edge(i: int, s: int) -> int:
    return 1 if (i == 0 and s == 3) else 0


def f_tc(i: int, s: int) -> int:
    return 1 if i == 1 else 2


def g_tc(i: int, s: int) -> int:
    return 1 if (i == 0 and s == 2) else 0


EDGE_NODE = NodeSpec.from_functions(4, 1, 3, f_edge, g_edge, s0=1, name="edge")
COMPLETION_NODE = NodeSpec.from_functions(1, 1, 2, f_tc, g_tc, s0=1, name="tour-completion")


@dataclass
class TspNetwork:
    problem: TspProblem
    net: Network
    edge_nodes: dict[tuple[int, int], int]
    completion: int

    @property
    def edge_of(self) -> dict[int, tuple[int, int]]:
        return {v: e for e, v in self.edge_nodes.items()}


def build_tsp_network(p: TspProblem) -> TspNetwork:
    n = p.n
    if n < 3:
        raise ValueError("need at least 3 cities")
    net = Network()
    edges: dict[tuple[int, int], int] = {}
    for i in range(1, n + 1):
        for j in range(2, n + 1):
            if i != j:
                edges[(i, j)] = net.add_node(EDGE_NODE, s0=1, name=f"e{i},{j}")
    tc = net.add_node(COMPLETION_NODE, s0=1, name="tc")
    for (i, j), v in edges.items():
        for (a, b), u in edges.items():
            if a == i or b == j:
                net.connect(v, 1, u, 1)
            elif a == j:
                net.connect(v, 1, u, 2)
        net.connect(v, 1, tc, 1)
    for (a, b), u in edges.items():
        net.connect(tc, 1, u, 4 if a == 1 else 3)
    return TspNetwork(p, net, edges, tc)


def assign_edge_frequencies(p: TspProblem, K_scale: float = 1.0, eta_scale: float = 1e-3,
                            seed=0, tc_factor: float = 0.95,
                            tn: TspNetwork | None = None) -> OscillatorAssignment:
    """Edge (i, j) runs at ``K/d_ij + eta`` with ``eta ~ U[0, eta_scale*K/d_ij]``;
    the completion node at ``tc_factor`` times the slowest edge."""
    if K_scale <= 0:
        raise ValueError("K must be positive")
    tn = tn or build_tsp_network(p)
    rng = np.random.default_rng(seed)
    n_edges = len(tn.edge_nodes)
    freq = np.empty(tn.net.n_nodes)
    base = np.empty(n_edges)
    for (i, j), v in tn.edge_nodes.items():
        base[v] = K_scale / p.d(i, j)
    freq[:n_edges] = base + rng.uniform(0.0, 1.0, n_edges) * eta_scale * base
    freq[tn.completion] = tc_factor * freq[:n_edges].min()
    return OscillatorAssignment(freq, rng.random(tn.net.n_nodes))


@dataclass
class TourSample:
    problem: TspProblem
    counts: Counter = field(default_factory=Counter)
    closed: bool = True

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def length(self, tour) -> float:
        return self.problem.tour_length(tour, self.closed)

    def table(self, include_unseen: bool = True) -> list[tuple[tuple[int, ...], float, int]]:
        tours = all_tours(self.problem.n) if include_unseen else sorted(self.counts)
        return [(t, self.length(t), self.counts.get(t, 0)) for t in tours]

    def spearman(self) -> float:
        from scipy.stats import spearmanr

        rows = self.table()
        rho = spearmanr([r[1] for r in rows], [r[2] for r in rows]).statistic
        return float(rho)


def _validate(segment: list[tuple[int, int]], n: int) -> tuple[int, ...]:
    if len(segment) != n - 1:
        raise TourError(f"segment has {len(segment)} edges, expected {n - 1}: {segment}")
    tour = [1]
    for a, b in segment:
        if a != tour[-1] or b in tour:
            raise TourError(f"invalid tour segment {segment}")
        tour.append(b)
    return tuple(tour)


def sample_tours(p: TspProblem, num_tours: int, K_scale: float = 1.0,
                 eta_scale: float = 1e-3, seed=0, *, closed: bool = True,
                 tc_factor: float = 0.95, channel: ChannelModel | None = None) -> TourSample:
    """Run the network and collect ``num_tours`` completed tours."""
    if num_tours < 1:
        raise ValueError("num_tours must be >= 1")
    tn = build_tsp_network(p)
    s_freq, s_chan = np.random.SeedSequence(seed).spawn(2)
    osc = assign_edge_frequencies(p, K_scale, eta_scale, s_freq, tc_factor, tn)
    sim = Simulation(tn.net, osc, channel, s_chan, log_mode=K.LOG_EMISSIONS,
                     log_capacity=1 << 18)
    sim.inject_emission(0.0, tn.completion, 1)

    edge_of = tn.edge_of
    n = p.n
    sample = TourSample(p, closed=closed)
    tour_time = (n - 1) / float(np.mean(osc.freq)) + 2.0 / osc.freq[tn.completion]
    t = 0.0
    segment: list[tuple[int, int]] = []
    while sample.total < num_tours:
        remaining = num_tours - sample.total
        t += max(remaining, 16) * tour_time * 1.1
        sim.advance(t)
        log = sim.drain_log()
        for v in log["node"].tolist():
            if v == tn.completion:
                sample.counts[_validate(segment, n)] += 1
                segment = []
                if sample.total >= num_tours:
                    break
            else:
                segment.append(edge_of[v])
    return sample


def read_distance_matrix(text: str) -> TspProblem:
    """Plain matrix (``n`` then n rows of n numbers) or a TSPLIB file with an
    explicit FULL_MATRIX / UPPER_ROW / LOWER_DIAG_ROW edge-weight section."""
    if "EDGE_WEIGHT_SECTION" in text.upper():
        return _read_tsplib(text)
    tokens = text.split()
    if not tokens:
        raise ValueError("empty distance matrix")
    n = int(tokens[0])
    vals = [float(x) for x in tokens[1:]]
    if len(vals) != n * n:
        raise ValueError(f"expected {n * n} distances, got {len(vals)}")
    return TspProblem(np.array(vals).reshape(n, n))


def _read_tsplib(text: str) -> TspProblem:
    header: dict[str, str] = {}
    lines = text.splitlines()
    k = 0
    while k < len(lines):
        line = lines[k].strip()
        k += 1
        if line.upper().startswith("EDGE_WEIGHT_SECTION"):
            break
        if ":" in line:
            key, val = line.split(":", 1)
            header[key.strip().upper()] = val.strip().upper()
    n = int(header.get("DIMENSION", "0"))
    if n < 1:
        raise ValueError("TSPLIB file lacks DIMENSION")
    if header.get("EDGE_WEIGHT_TYPE", "EXPLICIT") != "EXPLICIT":
        raise ValueError("only EXPLICIT edge weights are supported")
    fmt = header.get("EDGE_WEIGHT_FORMAT", "FULL_MATRIX")
    nums = []
    for line in lines[k:]:
        if line.strip().upper() in ("EOF", "DISPLAY_DATA_SECTION", "") or line[:1].isalpha():
            if nums and line.strip():
                break
            continue
        nums.extend(float(x) for x in line.split())
    d = np.zeros((n, n))
    if fmt == "FULL_MATRIX":
        d = np.array(nums[: n * n]).reshape(n, n)
    elif fmt in ("UPPER_ROW", "LOWER_ROW", "UPPER_DIAG_ROW", "LOWER_DIAG_ROW"):
        it = iter(nums)
        for i in range(n):
            if fmt == "UPPER_ROW":
                cols = range(i + 1, n)
            elif fmt == "LOWER_ROW":
                cols = range(i)
            elif fmt == "UPPER_DIAG_ROW":
                cols = range(i, n)
            else:
                cols = range(i + 1)
            for j in cols:
                d[i, j] = d[j, i] = next(it)
    else:
        raise ValueError(f"unsupported EDGE_WEIGHT_FORMAT {fmt}")
    return TspProblem(d)


def write_distance_matrix(p: TspProblem) -> str:
    rows = [" ".join(repr(float(x)) for x in row) for row in p.dist]
    return f"{p.n}\n" + "\n".join(rows) + "\n"


def tour_rows(sample: TourSample) -> list[dict]:
    return [{"tour": "-".join(map(str, t)), "length": length, "count": c}
            for t, length, c in sample.table(include_unseen=False)]


def summary(sample: TourSample) -> dict:
    rows = sample.table()
    lengths = np.array([r[1] for r in rows])
    counts = np.array([r[2] for r in rows])
    best = rows[int(np.argmin(lengths))][0]
    return {
        "tours_sampled": int(counts.sum()),
        "distinct_tours": int(np.count_nonzero(counts)),
        "tour_space": len(rows),
        "spearman_length_vs_count": sample.spearman() if counts.sum() else math.nan,
        "shortest_tour": "-".join(map(str, best)),
        "shortest_length": float(lengths.min()),
        "shortest_count": int(counts[int(np.argmin(lengths))]),
        "mean_sampled_length": float(np.sum(lengths * counts) / max(1, counts.sum())),
        "mean_uniform_length": float(lengths.mean()),
    }
