"""Deterministic discrete-event engine for networks of oscillator nodes.

Every node owns a free-running oscillator that delivers an event to its
``in.0`` port at times ``(phase + k) / frequency``.  Emitted events are fanned
out through a :class:`RoutingTable` and pass through a :class:`ChannelModel`
before delivery.  Events are processed strictly in ``(time, seq)`` order,
``seq`` being a run-wide creation counter, so a run is fully determined by
its network, oscillator assignment and seed.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import _kernels as K
from .node import KIND_TABLE, NodeError, NodeState


class EngineError(RuntimeError):
    pass


class CausalityError(EngineError):
    """Too many events at a single timestamp (zero-delay feedback loop)."""


# --------------------------------------------------------------------------
# oscillators


@dataclass(frozen=True, eq=False)
class OscillatorAssignment:
    freq: np.ndarray
    phase: np.ndarray  # fraction of a period in [0, 1)

    def __post_init__(self):
        freq = np.ascontiguousarray(self.freq, dtype=np.float64)
        phase = np.ascontiguousarray(self.phase, dtype=np.float64)
        if freq.shape != phase.shape or freq.ndim != 1:
            raise ValueError("freq and phase must be 1-d arrays of equal length")
        if np.any(freq <= 0):
            raise ValueError("frequencies must be strictly positive")
        if np.any((phase < 0) | (phase >= 1)):
            raise ValueError("phases must lie in [0, 1)")
        object.__setattr__(self, "freq", freq)
        object.__setattr__(self, "phase", phase)

    def __len__(self):
        return len(self.freq)

    @property
    def mean_period(self) -> float:
        return float(np.mean(1.0 / self.freq))

    def subset(self, order: Sequence[int]) -> "OscillatorAssignment":
        order = np.asarray(order)
        return OscillatorAssignment(self.freq[order], self.phase[order])


def draw_frequencies(n: int, band=(0.9, 1.1), seed=0) -> OscillatorAssignment:
    """Draw ``n`` i.i.d. uniform frequencies in ``band`` and uniform phases.

    Exact collisions are redrawn so that all frequencies are pairwise distinct.
    """
    lo, hi = map(float, band)
    if not (0 < lo < hi):
        raise ValueError(f"invalid frequency band {band!r}")
    if n < 1:
        raise ValueError("need at least one oscillator")
    rng = np.random.default_rng(seed)
    freq = rng.uniform(lo, hi, n)
    while True:
        _, first = np.unique(freq, return_index=True)
        if len(first) == n:
            break
        dup = np.setdiff1d(np.arange(n), first)
        freq[dup] = rng.uniform(lo, hi, len(dup))
    phase = rng.random(n)
    return OscillatorAssignment(freq, phase)


# --------------------------------------------------------------------------
# channel


@dataclass(frozen=True)
class ChannelModel:
    mode: str = "ideal"
    loss_prob: float = 0.0
    max_delay_fraction: float = 0.0
    delay_reference: str = "mean"  # "mean": mean period of all nodes, "target": target's period

    def __post_init__(self):
        if self.mode not in ("ideal", "lossy"):
            raise ValueError(f"unknown channel mode {self.mode!r}")
        if not 0.0 <= self.loss_prob <= 1.0:
            raise ValueError("loss_prob must be in [0, 1]")
        if self.max_delay_fraction < 0:
            raise ValueError("max_delay_fraction must be >= 0")
        if self.mode == "ideal" and (self.loss_prob or self.max_delay_fraction):
            raise ValueError("ideal channel cannot lose or delay events")
        if self.delay_reference not in ("mean", "target"):
            raise ValueError("delay_reference must be 'mean' or 'target'")

    @classmethod
    def ideal(cls) -> "ChannelModel":
        return cls()

    @classmethod
    def lossy(cls, loss_prob=0.1, max_delay_fraction=0.1, delay_reference="mean"):
        return cls("lossy", loss_prob, max_delay_fraction, delay_reference)


@dataclass(frozen=True)
class Event:
    node: int
    port: int
    deliver_at: float
    seq: int = 0


def apply_channel(ev: Event, ch: ChannelModel, rng: np.random.Generator,
                  period: float = 1.0) -> Event | None:
    """Pass one routed event through the channel.

    ``period`` is the reference oscillation period for the delay bound.  The
    event kernel applies the same two draws (loss, then delay) per routed copy.
    """
    if ch.mode == "ideal":
        return ev
    if rng.random() < ch.loss_prob:
        return None
    delay = rng.random() * ch.max_delay_fraction * period
    return Event(ev.node, ev.port, ev.deliver_at + delay, ev.seq)


# --------------------------------------------------------------------------
# network description


class RoutingTable:
    """Fan-out map ``(node, out_port) -> [(node, in_port), ...]``."""

    def __init__(self):
        self._routes: dict[tuple[int, int], list[tuple[int, int]]] = {}

    def add(self, src: int, out_port: int, dst: int, in_port: int):
        targets = self._routes.setdefault((src, out_port), [])
        for node, port in targets:
            if node == dst:
                if port == in_port:
                    return
                raise NodeError(
                    f"out.{out_port} of node {src} already routes to node {dst} "
                    f"(in.{port}); cannot also route to in.{in_port}")
        targets.append((dst, in_port))

    def targets(self, src: int, out_port: int) -> list[tuple[int, int]]:
        return list(self._routes.get((src, out_port), ()))

    def items(self):
        return sorted(self._routes.items())

    def __len__(self):
        return sum(len(t) for t in self._routes.values())

    def __contains__(self, key):
        return key in self._routes


class Network:
    """A set of nodes plus their routing table."""

    def __init__(self):
        self.specs: list = []
        self._spec_ids: dict[int, int] = {}
        self.node_spec: list[int] = []
        self.init_states: list[NodeState] = []
        self.names: list[str] = []
        self.routing = RoutingTable()

    @property
    def n_nodes(self) -> int:
        return len(self.node_spec)

    def spec(self, v: int):
        return self.specs[self.node_spec[v]]

    def add_node(self, spec, s0: int | None = None, memory: tuple | None = None,
                 name: str | None = None) -> int:
        key = id(spec)
        if key not in self._spec_ids:
            self._spec_ids[key] = len(self.specs)
            self.specs.append(spec)
        st = spec.initial_state(s0)
        if not 1 <= st.s <= spec.n_states:
            raise NodeError(f"initial state {st.s} out of range for {spec!r}")
        if memory is not None:
            st = NodeState(st.s, st.last_emitted, tuple(memory))
        self.node_spec.append(self._spec_ids[key])
        self.init_states.append(st)
        self.names.append(name if name is not None else str(len(self.names)))
        return len(self.node_spec) - 1

    def connect(self, src: int, out_port: int, dst: int, in_port: int):
        if not 1 <= out_port <= self.spec(src).n_out:
            raise NodeError(f"node {src} has no output port {out_port}")
        if not 1 <= in_port <= self.spec(dst).n_in:
            raise NodeError(f"node {dst} has no external input port {in_port}")
        self.routing.add(src, out_port, dst, in_port)

    def set_initial_state(self, v: int, s: int):
        spec = self.spec(v)
        if not 1 <= s <= spec.n_states:
            raise NodeError(f"state {s} out of range for node {v}")
        old = self.init_states[v]
        self.init_states[v] = NodeState(s, old.last_emitted, old.memory)

    def routing_text(self) -> str:
        lines = []
        for (src, port), targets in self.routing.items():
            tgt = ", ".join(f"{self.names[n]}.{p}" for n, p in targets)
            lines.append(f"{self.names[src]}.{port} -> [{tgt}]")
        return "\n".join(lines) + ("\n" if lines else "")


# --------------------------------------------------------------------------
# simulation


@dataclass
class StopCondition:
    max_cycles: float = 1e6
    check_interval: float = 20.0
    predicate: Callable[["Simulation"], bool] | None = None
    exact: bool = False
    cycle_nodes: Sequence[int] | None = None  # nodes defining one "cycle"

    def __post_init__(self):
        if self.max_cycles <= 0 or self.check_interval <= 0:
            raise ValueError("max_cycles and check_interval must be positive")


@dataclass
class RunReport:
    converged: bool
    cycles_to_solution: float
    flips: int
    events_processed: int
    final_values: list[int]
    seed: int
    elapsed: float = math.inf
    ticks: int = 0
    delivered: int = 0
    generated: int = 0
    dropped: int = 0
    pending: int = 0
    check_interval: float = 0.0
    cycle_freq: float = 1.0
    extra: dict = field(default_factory=dict)
    sim: "Simulation | None" = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "converged": self.converged,
            "cycles": self.cycles_to_solution if self.converged else None,
            "flips": self.flips,
            "events_processed": self.events_processed,
            "dropped": self.dropped,
            "seed": self.seed,
            "final_values": list(self.final_values),
            **self.extra,
        }


class Simulation:
    """Mutable run state around the compiled event kernel."""

    def __init__(self, net: Network, osc: OscillatorAssignment,
                 channel: ChannelModel | None = None, seed=0,
                 flip_nodes: Iterable[int] | None = None,
                 log_mode: int = K.LOG_OFF, log_nodes: Iterable[int] | None = None,
                 loop_bound: int = 10**6, log_capacity: int = 1 << 16):
        n = net.n_nodes
        if len(osc) != n:
            raise ValueError(f"{len(osc)} oscillators for {n} nodes")
        self.net = net
        self.osc = osc
        self.channel = channel or ChannelModel()
        self.loop_bound = int(loop_bound)
        self.log_mode = int(log_mode)
        self._compile()
        self.flip_mask = np.zeros(n, np.uint8)
        if flip_nodes is not None:
            self.flip_mask[list(flip_nodes)] = 1
        self.log_mask = np.zeros(n, np.uint8)
        if log_nodes is None:
            self.log_mask[:] = 1
        else:
            self.log_mask[list(log_nodes)] = 1
        if self.channel.delay_reference == "target":
            ref = 1.0 / osc.freq
        else:
            ref = np.full(n, osc.mean_period)
        self.delay_scale = ref * self.channel.max_delay_fraction
        self.rng = np.random.default_rng(seed)

        self.tick_count = np.zeros(n, np.int64)
        cap = max(64, 2 * n + 4 * self.max_fanout)
        self.h_time = np.empty(cap, np.float64)
        self.h_seq = np.empty(cap, np.int64)
        self.h_node = np.empty(cap, np.int64)
        self.h_port = np.empty(cap, np.int64)
        self.counters = np.zeros(K.N_COUNTERS, np.int64)
        self.t_last = np.array([-1.0])
        lcap = log_capacity if self.log_mode else 1
        self.l_time = np.empty(lcap, np.float64)
        self.l_node = np.empty(lcap, np.int64)
        self.l_in = np.empty(lcap, np.int64)
        self.l_out = np.empty(lcap, np.int64)
        self._log_chunks: list[tuple] = []
        self.injected = 0
        for v in range(n):
            self._push(osc.phase[v] / osc.freq[v], v, 0)

    def _compile(self):
        net = self.net
        n = net.n_nodes
        tab_off, tab_q, f_parts, g_parts = [], [], [], []
        off = 0
        for spec in net.specs:
            tab_off.append(off)
            tab_q.append(spec.n_states)
            if spec.kind == KIND_TABLE:
                f_parts.append(spec.f.ravel())
                g_parts.append(spec.g.ravel())
                off += spec.f.size
        self.kind = np.array([net.specs[s].kind for s in net.node_spec], np.int64)
        self.spec_id = np.array(net.node_spec, np.int64)
        self.tab_off = np.array(tab_off, np.int64)
        self.tab_q = np.array(tab_q, np.int64)
        self.f_tab = np.concatenate(f_parts).astype(np.int64) if f_parts else np.zeros(1, np.int64)
        self.g_tab = np.concatenate(g_parts).astype(np.int64) if g_parts else np.zeros(1, np.int64)

        self.state = np.array([st.s for st in net.init_states], np.int64)
        self.last_emit = np.array([st.last_emitted for st in net.init_states], np.int64)
        aux_off, aux = [], []
        for v, st in enumerate(net.init_states):
            aux_off.append(len(aux))
            mem = st.memory or net.spec(v).initial_memory()
            aux.extend(int(x) for x in mem)
        self.aux_off = np.array(aux_off, np.int64)
        self.aux = np.array(aux if aux else [0], np.int64)

        n_out = np.array([net.spec(v).n_out for v in range(n)], np.int64)
        self.out_base = np.zeros(n, np.int64)
        self.out_base[1:] = np.cumsum(n_out + 1)[:-1]
        n_slots = int(np.sum(n_out + 1))
        counts = np.zeros(n_slots, np.int64)
        for (src, port), targets in net.routing.items():
            counts[self.out_base[src] + port] = len(targets)
        self.route_ptr = np.zeros(n_slots + 1, np.int64)
        self.route_ptr[1:] = np.cumsum(counts)
        self.rt_node = np.zeros(max(1, int(self.route_ptr[-1])), np.int64)
        self.rt_port = np.zeros_like(self.rt_node)
        for (src, port), targets in net.routing.items():
            b = self.route_ptr[self.out_base[src] + port]
            for k, (dst, p) in enumerate(targets):
                self.rt_node[b + k] = dst
                self.rt_port[b + k] = p
        self.max_fanout = int(counts.max()) if n_slots else 0

    def _push(self, t, node, port):
        if self.counters[K.C_HEAP] + 1 > len(self.h_time):
            self._grow_heap()
        seq = self.counters[K.C_SEQ]
        self.counters[K.C_SEQ] += 1
        K.heap_push(self.h_time, self.h_seq, self.h_node, self.h_port,
                    self.counters, float(t), seq, int(node), int(port))

    def _grow_heap(self):
        n = len(self.h_time) * 2
        for name in ("h_time", "h_seq", "h_node", "h_port"):
            old = getattr(self, name)
            new = np.empty(n, old.dtype)
            new[:len(old)] = old
            setattr(self, name, new)

    def inject(self, t: float, node: int, port: int):
        """Schedule an external event on ``in.port`` of ``node`` at time ``t``."""
        if t < self.time:
            raise EngineError("cannot schedule an event in the past")
        if not 1 <= port <= self.net.spec(node).n_in:
            raise NodeError(f"node {node} has no external input port {port}")
        self._push(t, node, port)
        self.injected += 1

    def inject_emission(self, t: float, node: int, out_port: int):
        """Deliver ``node``'s fan-out for ``out_port`` at ``t`` (no channel)."""
        for dst, port in self.net.routing.targets(node, out_port):
            self.inject(t, dst, port)

    @property
    def time(self) -> float:
        return max(0.0, float(self.t_last[0]))

    def advance(self, t_end: float, max_events: int = 2**62) -> int:
        """Process every event with time <= t_end (or up to max_events)."""
        lossy = 1 if self.channel.mode == "lossy" else 0
        while True:
            done_before = int(self.counters[K.C_PROCESSED])
            code = K.advance(
                float(t_end), int(max_events), self.loop_bound,
                self.kind, self.spec_id, self.tab_off, self.tab_q, self.f_tab,
                self.g_tab, self.aux_off, self.out_base, self.route_ptr,
                self.rt_node, self.rt_port, self.max_fanout,
                self.osc.freq, self.osc.phase, self.delay_scale,
                self.flip_mask, self.log_mask, self.log_mode,
                self.state, self.last_emit, self.aux, self.tick_count,
                self.h_time, self.h_seq, self.h_node, self.h_port,
                self.counters, self.t_last,
                self.l_time, self.l_node, self.l_in, self.l_out,
                lossy, float(self.channel.loss_prob), self.rng)
            max_events -= int(self.counters[K.C_PROCESSED]) - done_before
            if code == K.HEAP_FULL:
                self._grow_heap()
            elif code == K.LOG_FULL:
                self._stash_log()
            elif code == K.CAUSALITY:
                raise CausalityError(
                    f"more than {self.loop_bound} events at t={self.time}")
            else:
                return int(self.counters[K.C_PROCESSED])

    def step(self, n_events: int = 1) -> int:
        return self.advance(math.inf, n_events)

    def _stash_log(self):
        n = int(self.counters[K.C_LOG])
        if n:
            self._log_chunks.append((self.l_time[:n].copy(), self.l_node[:n].copy(),
                                     self.l_in[:n].copy(), self.l_out[:n].copy()))
        self.counters[K.C_LOG] = 0

    def drain_log(self) -> dict[str, np.ndarray]:
        """Return and clear the recorded (time, node, in_port, out_port) log."""
        self._stash_log()
        chunks, self._log_chunks = self._log_chunks, []
        if not chunks:
            empty_i = np.zeros(0, np.int64)
            return {"time": np.zeros(0), "node": empty_i, "in_port": empty_i.copy(),
                    "out_port": empty_i.copy()}
        cols = [np.concatenate(c) for c in zip(*chunks)]
        return dict(zip(("time", "node", "in_port", "out_port"), cols))

    def values(self) -> np.ndarray:
        """Advertised values (index of last emission, 0 if none yet)."""
        return self.last_emit.copy()

    def node_state(self, v: int) -> NodeState:
        o = self.aux_off[v]
        size = len(self.net.init_states[v].memory or self.net.spec(v).initial_memory())
        return NodeState(int(self.state[v]), int(self.last_emit[v]),
                         tuple(int(x) for x in self.aux[o:o + size]))

    @property
    def stats(self) -> dict[str, int]:
        c = self.counters
        return {
            "events_processed": int(c[K.C_PROCESSED]),
            "ticks": int(c[K.C_TICKS]),
            "delivered": int(c[K.C_DELIVERED]),
            "generated": int(c[K.C_GENERATED]),
            "dropped": int(c[K.C_DROPPED]),
            "flips": int(c[K.C_FLIPS]),
            "injected": self.injected,
            # routed or injected events still queued (each node always has one queued tick)
            "pending": int(c[K.C_HEAP]) - self.net.n_nodes,
        }


def write_trace_csv(log: dict, net: Network, path) -> None:
    """Per-event trace: time, source node, out port, targets."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "node", "out_port", "targets"])
        for t, v, r in zip(log["time"], log["node"], log["out_port"]):
            if r <= 0:
                continue
            targets = " ".join(f"{d}.{p}" for d, p in net.routing.targets(int(v), int(r)))
            w.writerow([repr(float(t)), int(v), int(r), targets])


def measure_cycles(report: RunReport, osc: OscillatorAssignment | None = None,
                   nodes: Sequence[int] | None = None) -> float:
    """Elapsed time at convergence in cycles of the (mean) node frequency.

    Rounded up to the convergence check interval the run used.
    """
    if not report.converged:
        return math.inf
    if osc is None:
        f = report.cycle_freq
    else:
        f = float(np.mean(osc.freq if nodes is None else osc.freq[np.asarray(nodes)]))
    c = report.elapsed * f
    if report.check_interval > 0:
        c = math.ceil(c / report.check_interval - 1e-9) * report.check_interval
    return c


def run(net: Network, osc: OscillatorAssignment, channel: ChannelModel | None = None,
        stop: StopCondition | None = None, seed=0, *,
        flip_nodes: Iterable[int] | None = None, sim: Simulation | None = None,
        **sim_kwargs) -> RunReport:
    """Run ``net`` until the stop predicate holds or ``max_cycles`` elapse."""
    stop = stop or StopCondition()
    if sim is None:
        sim = Simulation(net, osc, channel, seed, flip_nodes=flip_nodes, **sim_kwargs)
    cyc_nodes = stop.cycle_nodes
    f_ref = float(np.mean(osc.freq if cyc_nodes is None else osc.freq[np.asarray(cyc_nodes)]))
    t_max = stop.max_cycles / f_ref
    converged = False
    elapsed = math.inf
    pred = stop.predicate
    if stop.exact and pred is not None:
        if pred(sim):
            converged, elapsed = True, 0.0
        while not converged and sim.time <= t_max and sim.counters[K.C_HEAP]:
            sim.step(1)
            if sim.time > t_max:
                break
            if pred(sim):
                converged, elapsed = True, sim.time
    else:
        k = 1
        while True:
            cyc = min(k * stop.check_interval, stop.max_cycles)
            t = cyc / f_ref
            sim.advance(t)
            if pred is not None and pred(sim):
                converged, elapsed = True, t
                break
            if cyc >= stop.max_cycles:
                break
            k += 1
    st = sim.stats
    report = RunReport(
        converged=converged,
        cycles_to_solution=math.inf,
        flips=st["flips"],
        events_processed=st["events_processed"],
        final_values=[int(x) for x in sim.values()],
        seed=int(seed) if np.isscalar(seed) else 0,
        elapsed=elapsed,
        ticks=st["ticks"],
        delivered=st["delivered"],
        generated=st["generated"],
        dropped=st["dropped"],
        pending=st["pending"],
        check_interval=0.0 if stop.exact else stop.check_interval,
        cycle_freq=f_ref,
    )
    report.cycles_to_solution = measure_cycles(report)
    report.sim = sim
    return report
