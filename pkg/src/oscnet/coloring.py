"""Graph k-coloring network: one counter-keeping node per vertex.

A vertex node has k inputs and k outputs.  Neighbours' color advertisements
increment per-color counters; at its oscillator tick a vertex whose own
color is in conflict picks a new one, alternating between min-conflict and
"next color" moves, then clears its counters and advertises.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .engine import (ChannelModel, Network, RunReport, StopCondition,
                     draw_frequencies, run)
from .node import KIND_COLOR_VERTEX, NodeError, NodeState


@dataclass(frozen=True)
class ColoringProblem:
    num_vertices: int
    edges: frozenset
    k: int = 3
    name: str = ""

    def __post_init__(self):
        norm = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < self.num_vertices and 0 <= v < self.num_vertices):
                raise ValueError(f"edge ({u}, {v}) out of range")
            norm.add((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", frozenset(norm))
        if self.k < 2 and norm:
            raise ValueError("need k >= 2 for a graph with edges")
        if self.k < 1:
            raise ValueError("k must be positive")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable, k: int, name: str = "") -> "ColoringProblem":
        return cls(n, frozenset(tuple(e) for e in edges), k, name)

    def with_k(self, k: int) -> "ColoringProblem":
        return ColoringProblem(self.num_vertices, self.edges, k, self.name)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def edge_array(self) -> np.ndarray:
        return np.array(sorted(self.edges), dtype=np.int64).reshape(-1, 2)

    def neighbors(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.num_vertices)]
        for u, v in sorted(self.edges):
            adj[u].append(v)
            adj[v].append(u)
        return adj

    def is_proper(self, colors) -> bool:
        colors = np.asarray(colors)
        if np.any(colors < 1) or np.any(colors > self.k):
            return False
        e = self.edge_array()
        return bool(np.all(colors[e[:, 0]] != colors[e[:, 1]]))


def vertex_tick(color: int, counts: Sequence[int], heuristic: bool, k: int) -> int:
    """New color chosen at an oscillator tick.

    A conflict-free vertex keeps its color.  Otherwise, with ``heuristic``
    set, the least-conflicted other color wins (lowest index on ties);
    without it, the cyclic successor is taken.
    """
    if counts[color - 1] == 0:
        return color
    if heuristic:
        return min((c for c in range(1, k + 1) if c != color), key=lambda c: (counts[c - 1], c))
    return color % k + 1


@dataclass(frozen=True, eq=False)
class VertexNodeSpec:
    k: int
    flip_every_tick: bool = True
    heuristic0: bool = True
    kind: int = field(default=KIND_COLOR_VERTEX, init=False)

    @property
    def n_in(self) -> int:
        return self.k

    @property
    def n_out(self) -> int:
        return self.k

    @property
    def n_states(self) -> int:
        return self.k

    def initial_memory(self) -> tuple:
        return (self.k, int(self.heuristic0), int(self.flip_every_tick)) + (0,) * self.k

    def initial_state(self, s0=None) -> NodeState:
        return NodeState(1 if s0 is None else s0, 0, self.initial_memory())

    def on_event(self, st: NodeState, i: int) -> tuple[NodeState, int]:
        if not 0 <= i <= self.k:
            raise NodeError(f"input port {i} out of range 0..{self.k}")
        mem = list(st.memory or self.initial_memory())
        if i > 0:
            mem[2 + i] += 1
            return NodeState(st.s, st.last_emitted, tuple(mem)), 0
        counts = mem[3:]
        conflict = counts[st.s - 1] > 0
        new = vertex_tick(st.s, counts, bool(mem[1]), self.k)
        mem[3:] = [0] * self.k
        if conflict or self.flip_every_tick:
            mem[1] = 1 - mem[1]
        return NodeState(new, new, tuple(mem)), new


@dataclass
class ColoringNetwork:
    problem: ColoringProblem
    net: Network
    vertex_nodes: list[int]


def build_coloring_network(p: ColoringProblem, init_colors: Sequence[int] | None = None,
                           flip_every_tick: bool = True) -> ColoringNetwork:
    if p.k < 2 and p.edges:
        raise ValueError("k must be at least 2")
    spec = VertexNodeSpec(p.k, flip_every_tick)
    net = Network()
    init = [1] * p.num_vertices if init_colors is None else list(init_colors)
    nodes = [net.add_node(spec, s0=int(init[v]), name=f"v{v + 1}") for v in range(p.num_vertices)]
    for u, v in sorted(p.edges):
        for c in range(1, p.k + 1):
            net.connect(nodes[u], c, nodes[v], c)
            net.connect(nodes[v], c, nodes[u], c)
    return ColoringNetwork(p, net, nodes)


def solve_coloring(p: ColoringProblem, channel: ChannelModel | None = None,
                   stop: StopCondition | None = None, seed=0, *,
                   band=(0.9, 1.1), init: str | Sequence[int] = "ones",
                   flip_every_tick: bool = True) -> RunReport:
    """Run until the advertised colors form a proper coloring."""
    s_freq, s_init, s_chan = np.random.SeedSequence(seed).spawn(3)
    if isinstance(init, str):
        if init == "ones":
            init_colors = [1] * p.num_vertices
        elif init == "random":
            init_colors = list(np.random.default_rng(s_init).integers(1, p.k + 1, p.num_vertices))
        else:
            raise ValueError(f"unknown init {init!r}")
    else:
        init_colors = list(init)
    cn = build_coloring_network(p, init_colors, flip_every_tick)
    osc = draw_frequencies(cn.net.n_nodes, band, s_freq)
    e = p.edge_array()
    nodes = np.array(cn.vertex_nodes)

    def proper(sim):
        col = sim.last_emit[nodes]
        return bool(np.all(col > 0)) and bool(np.all(col[e[:, 0]] != col[e[:, 1]]))

    stop = stop or StopCondition()
    stop = StopCondition(stop.max_cycles, stop.check_interval, proper, stop.exact, cn.vertex_nodes)
    rep = run(cn.net, osc, channel, stop, s_chan, flip_nodes=cn.vertex_nodes)
    rep.seed = int(seed)
    rep.final_values = [int(x) for x in rep.sim.last_emit[nodes]]
    rep.extra["colors_used"] = len(set(rep.final_values) - {0})
    return rep
