"""3-SAT: break-only probSAT as an oscillator network, plus sequential probSAT.

Network mapping
---------------
Each variable is a two-state latch node (state 1 = false, 2 = true) that
advertises its value on every oscillator tick and right after a clause sets
it.  Each clause is a computed node with ports::

    in.1..in.6   value advertised by the variable at position k (in.2k+v)
    in.7..in.9   break events for the variable at position k
    out.1..out.3 flip the variable at position k
    out.4..out.6 break events for the variable at position k

A flip event is delivered to the variable's "set to the fulfilling value"
input and, like a break event, to the break inputs of every clause that
contains the variable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._accel import jit
from .engine import (ChannelModel, Network, OscillatorAssignment, RunReport,
                     StopCondition, draw_frequencies, run)
from .node import KIND_SAT_CLAUSE, NodeError, NodeState, make_latch_node

FALSE, TRUE = 1, 2


@dataclass(frozen=True)
class CnfProblem:
    num_vars: int
    clauses: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "clauses", tuple(tuple(int(x) for x in c) for c in self.clauses))
        for c in self.clauses:
            if not c:
                raise ValueError("empty clause")
            for lit in c:
                if lit == 0 or abs(lit) > self.num_vars:
                    raise ValueError(f"literal {lit} out of range 1..{self.num_vars}")

    @property
    def num_clauses(self) -> int:
        return len(self.clauses)

    def check_3sat(self):
        for c in self.clauses:
            if len(c) != 3:
                raise ValueError(f"clause {c} does not have exactly 3 literals")

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(m, 3) arrays of 0-based variable index and required value (1/2)."""
        self.check_3sat()
        c = np.array(self.clauses, dtype=np.int64).reshape(-1, 3)
        return np.abs(c) - 1, np.where(c > 0, TRUE, FALSE)

    def is_satisfied_by(self, values) -> bool:
        """``values[v]`` for v = 0..n-1 is 1 (false), 2 (true) or 0 (unknown)."""
        values = np.asarray(values)
        for c in self.clauses:
            if not any(values[abs(l) - 1] == (TRUE if l > 0 else FALSE) for l in c):
                return False
        return True


class SatChecker:
    """Vectorized "all clauses satisfied" test over advertised values."""

    def __init__(self, p: CnfProblem):
        self.var, self.need = p.arrays()

    def __call__(self, values: np.ndarray) -> bool:
        return bool(np.all(np.any(values[self.var] == self.need, axis=1)))

    def unsatisfied(self, values: np.ndarray) -> int:
        return int(np.sum(~np.any(values[self.var] == self.need, axis=1)))


# --------------------------------------------------------------------------
# clause node


def clause_tick(last_advertised: Sequence[int], fulfilling: Sequence[int],
                break_count: Sequence[int]) -> tuple[str, int] | None:
    """Decision of a clause at its oscillator tick.

    Returns ``("flip", k)`` or ``("break", k)`` with 1-based position ``k``,
    or None when two or more positions are fulfilling.
    """
    ful = [k for k in range(3) if last_advertised[k] == fulfilling[k]]
    if not ful:
        k = min(range(3), key=lambda j: (break_count[j], j))
        return ("flip", k + 1)
    if len(ful) == 1:
        return ("break", ful[0] + 1)
    return None


@dataclass(frozen=True, eq=False)
class ClauseNodeSpec:
    """Computed node; memory = fulfilling values, last advertised, break counts."""

    n_in: int = 9
    n_out: int = 6
    n_states: int = 1
    s0: int = 1
    kind: int = field(default=KIND_SAT_CLAUSE, init=False)

    @staticmethod
    def memory_for(fulfilling: Sequence[int]) -> tuple:
        return tuple(fulfilling) + (0, 0, 0, 0, 0, 0)

    def initial_memory(self) -> tuple:
        return self.memory_for((TRUE, TRUE, TRUE))

    def initial_state(self, s0=None) -> NodeState:
        return NodeState(1, 0, self.initial_memory())

    def on_event(self, st: NodeState, i: int) -> tuple[NodeState, int]:
        if not 0 <= i <= self.n_in:
            raise NodeError(f"input port {i} out of range 0..{self.n_in}")
        mem = list(st.memory or self.initial_memory())
        r = 0
        if i == 0:
            act = clause_tick(mem[3:6], mem[0:3], mem[6:9])
            if act is not None:
                r = act[1] if act[0] == "flip" else act[1] + 3
            mem[6:9] = [0, 0, 0]
        elif i <= 6:
            mem[3 + (i - 1) // 2] = (i - 1) % 2 + 1
        else:
            mem[6 + i - 7] += 1
        return NodeState(st.s, r if r else st.last_emitted, tuple(mem)), r


CLAUSE_NODE = ClauseNodeSpec()
VARIABLE_NODE = make_latch_node(2, name="variable")


@dataclass
class SatNetwork:
    problem: CnfProblem
    net: Network
    var_nodes: list[int]
    clause_nodes: list[int]


def build_sat_network(p: CnfProblem, init_values: Sequence[int] | None = None) -> SatNetwork:
    """Variable and clause nodes wired for break-only probSAT."""
    if not p.clauses:
        raise ValueError("empty clause list")
    p.check_3sat()
    for c in p.clauses:
        if len({abs(l) for l in c}) != 3:
            raise ValueError(f"clause {c} repeats a variable; not supported by the network")
    net = Network()
    init = [FALSE] * p.num_vars if init_values is None else list(init_values)
    var_nodes = [net.add_node(VARIABLE_NODE, s0=init[v], name=f"x{v + 1}")
                 for v in range(p.num_vars)]
    clause_nodes = []
    occ: list[list[tuple[int, int]]] = [[] for _ in range(p.num_vars)]
    for ci, c in enumerate(p.clauses):
        fv = [TRUE if l > 0 else FALSE for l in c]
        node = net.add_node(CLAUSE_NODE, memory=ClauseNodeSpec.memory_for(fv), name=f"c{ci + 1}")
        clause_nodes.append(node)
        for k, l in enumerate(c):
            occ[abs(l) - 1].append((node, k))
    for ci, c in enumerate(p.clauses):
        node = clause_nodes[ci]
        for k, l in enumerate(c):
            x = abs(l) - 1
            xv = var_nodes[x]
            for value in (FALSE, TRUE):
                net.connect(xv, value, node, 2 * k + value)
            net.connect(node, k + 1, xv, TRUE if l > 0 else FALSE)
            for other, pos in occ[x]:
                net.connect(node, k + 1, other, 7 + pos)
                net.connect(node, k + 4, other, 7 + pos)
    return SatNetwork(p, net, var_nodes, clause_nodes)


def _trial_streams(seed):
    ss = np.random.SeedSequence(seed)
    return ss.spawn(3)


def solve_sat_network(p: CnfProblem, channel: ChannelModel | None = None,
                      stop: StopCondition | None = None, seed=0, *,
                      band=(0.9, 1.1), init: str | Sequence[int] = "random",
                      exact: bool = False) -> RunReport:
    """Run the probSAT network until every clause is satisfied by the
    variables' advertised values (checked every ``check_interval`` cycles)."""
    s_freq, s_init, s_chan = _trial_streams(seed)
    if isinstance(init, str):
        if init == "random":
            init_values = list(np.random.default_rng(s_init).integers(1, 3, p.num_vars))
        elif init == "ones":
            init_values = [FALSE] * p.num_vars
        else:
            raise ValueError(f"unknown init {init!r}")
    else:
        init_values = list(init)
    sn = build_sat_network(p, init_values)
    osc = draw_frequencies(sn.net.n_nodes, band, s_freq)
    check = SatChecker(p)
    var_idx = np.array(sn.var_nodes)
    stop = stop or StopCondition()
    stop = StopCondition(stop.max_cycles, stop.check_interval,
                         lambda sim: check(sim.last_emit[var_idx]),
                         exact or stop.exact, sn.var_nodes)
    rep = run(sn.net, osc, channel, stop, s_chan, flip_nodes=sn.var_nodes)
    rep.seed = int(seed)
    rep.final_values = [int(x) for x in rep.sim.last_emit[var_idx]]
    return rep


# --------------------------------------------------------------------------
# sequential probSAT


@dataclass(frozen=True)
class ProbSatParams:
    x: float = 1.0
    y: float = 2.06
    max_flips: int = 10**6
    seed: int = 0

    def __post_init__(self):
        if self.y <= 0:
            raise ValueError("y must be positive")


@dataclass
class SolveReport:
    solved: bool
    flips: int
    assignment: list[int]
    seed: int

    @property
    def cycles(self) -> float:
        # one flip per cycle for the sequential algorithm
        return float(self.flips) if self.solved else math.inf


def probsat_weight(m: int, b: int, x: float = 1.0, y: float = 2.06) -> float:
    return x**m / y**b


def flip_probabilities(weights: Sequence[float]) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    return w / w.sum()


@jit
def _probsat_kernel(lit_var, lit_pos, occ_ptr, occ_clause, n_vars, x, y,
                    use_make, max_flips, rng, assign):
    m = lit_var.shape[0]
    width = lit_var.shape[1]
    for v in range(n_vars):
        assign[v] = 1 if rng.random() < 0.5 else 0
    ntrue = np.zeros(m, np.int64)
    for c in range(m):
        for j in range(width):
            if assign[lit_var[c, j]] == lit_pos[c, j]:
                ntrue[c] += 1
    unsat = np.empty(m, np.int64)
    where = np.full(m, -1, np.int64)
    nunsat = 0
    for c in range(m):
        if ntrue[c] == 0:
            unsat[nunsat] = c
            where[c] = nunsat
            nunsat += 1
    probs = np.empty(width)
    flips = 0
    while nunsat > 0 and flips < max_flips:
        c = unsat[int(rng.random() * nunsat)]
        total = 0.0
        for j in range(width):
            v = lit_var[c, j]
            cur = assign[v]
            # clauses where v's current literal is true
            b = 0
            lo = occ_ptr[2 * v + cur]
            hi = occ_ptr[2 * v + cur + 1]
            for e in range(lo, hi):
                if ntrue[occ_clause[e]] == 1:
                    b += 1
            w = 1.0 / y**b
            if use_make:
                mk = 0
                lo = occ_ptr[2 * v + 1 - cur]
                hi = occ_ptr[2 * v + 2 - cur]
                for e in range(lo, hi):
                    if ntrue[occ_clause[e]] == 0:
                        mk += 1
                w *= x**mk
            probs[j] = w
            total += w
        u = rng.random() * total
        pick = width - 1
        acc = 0.0
        for j in range(width):
            acc += probs[j]
            if u < acc:
                pick = j
                break
        v = lit_var[c, pick]
        cur = assign[v]
        lo = occ_ptr[2 * v + cur]
        hi = occ_ptr[2 * v + cur + 1]
        for e in range(lo, hi):
            cc = occ_clause[e]
            ntrue[cc] -= 1
            if ntrue[cc] == 0:
                unsat[nunsat] = cc
                where[cc] = nunsat
                nunsat += 1
        lo = occ_ptr[2 * v + 1 - cur]
        hi = occ_ptr[2 * v + 2 - cur]
        for e in range(lo, hi):
            cc = occ_clause[e]
            ntrue[cc] += 1
            if ntrue[cc] == 1:
                k = where[cc]
                last = unsat[nunsat - 1]
                unsat[k] = last
                where[last] = k
                where[cc] = -1
                nunsat -= 1
        assign[v] = 1 - cur
        flips += 1
    return flips, nunsat == 0


def _occurrences(lit_var, lit_pos, n_vars):
    """CSR over (variable, polarity): clauses containing each literal."""
    keys = (2 * lit_var + lit_pos).ravel()
    clause_ids = np.repeat(np.arange(lit_var.shape[0]), lit_var.shape[1])
    order = np.argsort(keys, kind="stable")
    counts = np.bincount(keys, minlength=2 * n_vars)
    ptr = np.zeros(2 * n_vars + 1, np.int64)
    ptr[1:] = np.cumsum(counts)
    return ptr, clause_ids[order].astype(np.int64)


def sequential_probsat(p: CnfProblem, params: ProbSatParams | None = None) -> SolveReport:
    """Classic probSAT: repeatedly pick a random unsatisfied clause and flip
    one of its variables with probability proportional to x**make / y**break."""
    params = params or ProbSatParams()
    width = len(p.clauses[0])
    if any(len(c) != width for c in p.clauses):
        raise ValueError("sequential probSAT expects clauses of uniform length")
    c = np.array(p.clauses, dtype=np.int64)
    lit_var = np.abs(c) - 1
    lit_pos = (c > 0).astype(np.int64)
    ptr, occ = _occurrences(lit_var, lit_pos, p.num_vars)
    rng = np.random.default_rng(params.seed)
    assign = np.zeros(p.num_vars, np.int64)
    flips, solved = _probsat_kernel(lit_var, lit_pos, ptr, occ, p.num_vars,
                                    float(params.x), float(params.y), params.x != 1.0,
                                    int(params.max_flips), rng, assign)
    values = [TRUE if a else FALSE for a in assign]
    return SolveReport(bool(solved), int(flips), values, params.seed)


# --------------------------------------------------------------------------
# instance generation


def random_3sat(num_vars: int, num_clauses: int, seed=0) -> CnfProblem:
    """Uniform random 3-SAT: three distinct variables per clause, random signs."""
    rng = np.random.default_rng(seed)
    clauses = []
    for _ in range(num_clauses):
        vs = rng.choice(num_vars, 3, replace=False) + 1
        signs = np.where(rng.random(3) < 0.5, -1, 1)
        clauses.append(tuple(int(a) for a in vs * signs))
    return CnfProblem(num_vars, tuple(clauses))


def random_satisfiable_3sat(num_vars: int, num_clauses: int, seed=0,
                            certify_flips: int = 10**7) -> CnfProblem:
    """Draw uniform random 3-SAT instances until one is certified satisfiable.

    Certification is a sequential probSAT run; a found model proves
    satisfiability.
    """
    ss = np.random.SeedSequence(seed)
    for child in ss.spawn(10_000):
        p = random_3sat(num_vars, num_clauses, child)
        rep = sequential_probsat(p, ProbSatParams(max_flips=certify_flips,
                                                  seed=int(child.generate_state(1)[0])))
        if rep.solved:
            return p
    raise RuntimeError("no satisfiable instance found")
