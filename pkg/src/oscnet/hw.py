"""Emulation of the prototype chip: bitmask-port nodes on a 64x32 array.

An n-valued chip node (n in {2, 4, 6, 8}) has inputs ``1 .. 2**n - 1``; the
set bits of the port index are the states the node may take (bit p, counting
from 1 at the least significant end, allows state p).  It keeps its state if
allowed, otherwise moves to the lowest allowed state, and only emits on
oscillator ticks.  Routing is a free-form table, as on the off-chip router.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .coloring import ColoringProblem
from .engine import (ChannelModel, Network, OscillatorAssignment, RunReport,
                     StopCondition, draw_frequencies, run)
from .node import NodeSpec
from .sat import FALSE, TRUE, CnfProblem, SatChecker

ARRAY_ROWS = 64
ARRAY_COLS = 32
ARITIES = (2, 4, 6, 8)


class CapacityError(ValueError):
    pass


def f_hw(i: int, s: int, n: int) -> int:
    if i < 0 or i >= 1 << n:
        raise ValueError(f"port {i} out of range for a {n}-valued node")
    if i == 0 or (i >> (s - 1)) & 1:
        return s
    return (i & -i).bit_length()


def g_hw(i: int, s: int) -> int:
    return s if i == 0 else 0


@lru_cache(maxsize=None)
def hw_node_spec(n: int) -> NodeSpec:
    if n not in ARITIES:
        raise ValueError(f"chip nodes are 2-, 4-, 6- or 8-valued, not {n}")
    return NodeSpec.from_functions((1 << n) - 1, n, n,
                                   f=lambda i, s: f_hw(i, s, n), g=g_hw, name=f"hw{n}")


def mask(states: Sequence[int]) -> int:
    """Input port allowing exactly ``states``."""
    m = 0
    for s in states:
        m |= 1 << (s - 1)
    return m


@dataclass
class HwArrayConfig:
    """Slot allocation of logical nodes on the binary-node array."""

    rows: int = ARRAY_ROWS
    cols: int = ARRAY_COLS
    slots: dict[int, tuple[int, int, int]] = field(default_factory=dict)  # node -> (row, col, width)
    _row: int = 0
    _col: int = 0

    @property
    def capacity(self) -> int:
        return self.rows * self.cols

    @property
    def used(self) -> int:
        return sum(w for _, _, w in self.slots.values())

    def allocate(self, node: int, arity: int):
        """Merged nodes occupy ``arity/2`` adjacent slots within one row."""
        width = arity // 2
        if self._col + width > self.cols:
            self._row += 1
            self._col = 0
        if self._row >= self.rows:
            raise CapacityError(f"array of {self.rows}x{self.cols} binary nodes is full")
        self.slots[node] = (self._row, self._col, width)
        self._col += width


@dataclass
class HwNetwork:
    net: Network
    array: HwArrayConfig
    var_nodes: list[int]
    aux_nodes: list[int]  # clause nodes, or helper chip nodes for coloring
    groups: list[list[int]] = field(default_factory=list)

    def routing_text(self) -> str:
        return self.net.routing_text()


def _add(net: Network, array: HwArrayConfig, arity: int, s0: int, name: str) -> int:
    v = net.add_node(hw_node_spec(arity), s0=s0, name=name)
    array.allocate(v, arity)
    return v


# --------------------------------------------------------------------------
# 3-SAT


def build_hw_sat(p: CnfProblem, init_values: Sequence[int] | None = None,
                 clause_state: int = 4) -> HwNetwork:
    """Binary variable nodes plus one 4-valued node per clause (state 4 = fulfilled).

    Clauses start fulfilled: their first tick only recycles them to state 3,
    so no variable is flipped before it has advertised its value.
    """
    p.check_3sat()
    for c in p.clauses:
        if len({abs(l) for l in c}) != 3:
            raise ValueError(f"clause {c} repeats a variable")
    need = p.num_vars + 2 * p.num_clauses
    if need > ARRAY_ROWS * ARRAY_COLS:
        raise CapacityError(f"problem needs {need} binary slots, array has {ARRAY_ROWS * ARRAY_COLS}")
    net = Network()
    array = HwArrayConfig()
    init = [FALSE] * p.num_vars if init_values is None else list(init_values)
    xs = [_add(net, array, 2, init[v], f"x{v + 1}") for v in range(p.num_vars)]
    cs = [_add(net, array, 4, clause_state, f"c{ci + 1}") for ci in range(p.num_clauses)]
    # clauses containing each literal
    by_lit: dict[int, list[int]] = {}
    for ci, c in enumerate(p.clauses):
        for lit in c:
            by_lit.setdefault(lit, []).append(ci)
    for ci, c in enumerate(p.clauses):
        node = cs[ci]
        for k, lit in enumerate(c, start=1):
            x = xs[abs(lit) - 1]
            good = TRUE if lit > 0 else FALSE
            bad = FALSE if lit > 0 else TRUE
            net.connect(x, good, node, mask([4]))
            net.connect(x, bad, node, mask([4, k]))
            net.connect(node, k, x, mask([good]))
            for other in by_lit[lit]:
                if other != ci:
                    net.connect(node, k, cs[other], mask([4]))
        net.connect(node, 4, node, mask([3]))
    return HwNetwork(net, array, xs, cs)


def hw_sat_frequencies(n_vars: int, n_clauses: int, band=(0.9, 1.1), seed=0) -> OscillatorAssignment:
    """Draw one pool of frequencies; the slowest go to the clause nodes."""
    rng = np.random.default_rng(seed)
    pool = draw_frequencies(n_vars + n_clauses, band, rng)
    order = np.sort(pool.freq)
    clause_f = rng.permutation(order[:n_clauses])
    var_f = rng.permutation(order[n_clauses:])
    return OscillatorAssignment(np.concatenate([var_f, clause_f]), pool.phase)


def solve_hw_sat(p: CnfProblem, stop: StopCondition | None = None, seed=0, *,
                 band=(0.9, 1.1), init: str | Sequence[int] = "random",
                 channel: ChannelModel | None = None) -> RunReport:
    """Run until the variables' advertised values satisfy every clause."""
    s_freq, s_init, s_chan = np.random.SeedSequence(seed).spawn(3)
    if isinstance(init, str):
        if init == "random":
            init_values = list(np.random.default_rng(s_init).integers(1, 3, p.num_vars))
        elif init == "ones":
            init_values = [FALSE] * p.num_vars
        else:
            raise ValueError(f"unknown init {init!r}")
    else:
        init_values = list(init)
    hn = build_hw_sat(p, init_values)
    osc = hw_sat_frequencies(p.num_vars, p.num_clauses, band, s_freq)
    check = SatChecker(p)
    xs = np.array(hn.var_nodes)
    stop = stop or StopCondition()
    def solved(sim):
        # chip variables flip silently, so also require the flip to be advertised
        adv = sim.last_emit[xs]
        return bool(np.array_equal(adv, sim.state[xs])) and check(adv)

    stop = StopCondition(stop.max_cycles, stop.check_interval, solved, stop.exact, hn.var_nodes)
    rep = run(hn.net, osc, channel, stop, s_chan, flip_nodes=hn.var_nodes)
    rep.seed = int(seed)
    rep.final_values = [int(x) for x in rep.sim.last_emit[xs]]
    return rep


# --------------------------------------------------------------------------
# graph coloring


def color_orders(K: int) -> list[list[int]]:
    """Color carried by each state of the chip nodes forming one vertex.

    ``orders[j][s-1]`` is the color represented by state s of chip node j.
    Node 0 (main) is the identity and node 1 (helper) the reversal, which is
    the pair construction for 4 colors.  Nodes 2q and 2q+1 are the same two
    orders rotated by 2q colors, so on an exclude event (which sends every
    node to its lowest allowed state) the nodes of one vertex propose colors
    from disjoint pairs and together cover every color.
    """
    if K not in ARITIES:
        raise ValueError(f"unsupported vertex arity {K}")
    orders = []
    for q in range(K // 4 + 1):
        up = [(c + 2 * q) % K + 1 for c in range(K)]
        down = [(K - 1 - 2 * q - c) % K + 1 for c in range(K)]
        orders += [up, down]
    return orders[: K // 2]


def exclude_masks(K: int, color: int, odd: bool) -> list[int]:
    """Per chip node of a vertex: input port forbidding ``color`` (and color K when ``odd``)."""
    full = (1 << K) - 1
    out = []
    for order in color_orders(K):
        m = full & ~(1 << order.index(color))
        if odd:
            m &= ~(1 << order.index(K))
        out.append(m)
    return out


def build_hw_coloring(p: ColoringProblem, init_colors: Sequence[int] | None = None) -> HwNetwork:
    """Each vertex is K/2 coupled K-valued chip nodes, K = k rounded up to even."""
    k = p.k
    if k > 8:
        raise ValueError("the chip supports at most 8 colors")
    K = k + (k % 2)
    odd = k % 2 == 1
    orders = color_orders(K)
    per_vertex = len(orders)
    need = p.num_vertices * per_vertex * (K // 2)
    if need > ARRAY_ROWS * ARRAY_COLS:
        raise CapacityError(f"coloring needs {need} binary slots")
    net = Network()
    array = HwArrayConfig()
    init = [1] * p.num_vertices if init_colors is None else list(init_colors)
    groups = []
    for v in range(p.num_vertices):
        c0 = int(init[v])
        if not 1 <= c0 <= k:
            raise ValueError(f"initial color {c0} out of range")
        groups.append([_add(net, array, K, orders[j].index(c0) + 1,
                            f"v{v + 1}" + ("" if j == 0 else f"h{j}"))
                       for j in range(per_vertex)])
    # coupling: any chip node's event pins the others to the same color
    for g in groups:
        for j, src in enumerate(g):
            for s in range(1, K + 1):
                color = orders[j][s - 1]
                for l, dst in enumerate(g):
                    if l != j:
                        net.connect(src, s, dst, mask([orders[l].index(color) + 1]))
    # constraints: main node's color is excluded at every neighbor
    for u, w in sorted(p.edges):
        for a, b in ((u, w), (w, u)):
            main = groups[a][0]
            for color in range(1, K + 1):
                for dst, m in zip(groups[b], exclude_masks(K, color, odd)):
                    net.connect(main, color, dst, m)
    mains = [g[0] for g in groups]
    helpers = [x for g in groups for x in g[1:]]
    return HwNetwork(net, array, mains, helpers, groups)


def solve_hw_coloring(p: ColoringProblem, stop: StopCondition | None = None, seed=0, *,
                      band=(0.9, 1.1), init: str | Sequence[int] = "ones",
                      channel: ChannelModel | None = None) -> RunReport:
    """Run until the main chip nodes advertise a proper coloring."""
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
    hn = build_hw_coloring(p, init_colors)
    osc = draw_frequencies(hn.net.n_nodes, band, s_freq)
    e = p.edge_array()
    mains = np.array(hn.var_nodes)

    def proper(sim):
        col = sim.last_emit[mains]
        return bool(np.all(col > 0)) and bool(np.all(col[e[:, 0]] != col[e[:, 1]]))

    stop = stop or StopCondition()
    stop = StopCondition(stop.max_cycles, stop.check_interval, proper, stop.exact, None)
    rep = run(hn.net, osc, channel, stop, s_chan, flip_nodes=hn.var_nodes)
    rep.seed = int(seed)
    rep.final_values = [int(x) for x in rep.sim.last_emit[mains]]
    rep.extra["colors_used"] = len(set(rep.final_values) - {0})
    return rep
