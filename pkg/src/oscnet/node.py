"""Generic oscillator-driven node: ports, states and the f/g update rule.

Conventions used throughout the package:

* states are 1-indexed (``1..Q``),
* input port 0 is the node's own oscillator, external inputs are ``1..N``,
* output port 0 is the dummy port; routing to it suppresses the event.

On every delivered event the node first computes the output port
``r = g(i, s)`` from the *old* state, then updates ``s = f(i, s)``, then emits
on ``out.r``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

# node kinds understood by the event kernel
KIND_TABLE = 0
KIND_SAT_CLAUSE = 1
KIND_COLOR_VERTEX = 2


class NodeError(ValueError):
    pass


@dataclass(frozen=True)
class NodeState:
    s: int
    last_emitted: int = 0  # 0 means nothing emitted yet
    memory: tuple = ()

    def value(self) -> int | None:
        """The advertised value: index of the last non-dummy emission."""
        return self.last_emitted or None


@dataclass(frozen=True, eq=False)
class NodeSpec:
    """A node whose f and g are dense ``(N+1) x Q`` lookup tables."""

    n_in: int
    n_out: int
    n_states: int
    f: np.ndarray
    g: np.ndarray
    s0: int = 1
    name: str = ""
    kind: int = field(default=KIND_TABLE, init=False)

    def __post_init__(self):
        f = np.asarray(self.f, dtype=np.int64)
        g = np.asarray(self.g, dtype=np.int64)
        shape = (self.n_in + 1, self.n_states)
        if f.shape != shape or g.shape != shape:
            raise NodeError(f"tables must have shape {shape}, got {f.shape} and {g.shape}")
        if f.min() < 1 or f.max() > self.n_states:
            raise NodeError("f must map into 1..Q")
        if g.min() < 0 or g.max() > self.n_out:
            raise NodeError("g must map into 0..M")
        if not 1 <= self.s0 <= self.n_states:
            raise NodeError("initial state out of range")
        f.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "g", g)

    @classmethod
    def from_functions(
        cls,
        n_in: int,
        n_out: int,
        n_states: int,
        f: Callable[[int, int], int],
        g: Callable[[int, int], int],
        s0: int = 1,
        name: str = "",
    ) -> "NodeSpec":
        ft = [[f(i, s) for s in range(1, n_states + 1)] for i in range(n_in + 1)]
        gt = [[g(i, s) for s in range(1, n_states + 1)] for i in range(n_in + 1)]
        return cls(n_in, n_out, n_states, np.array(ft), np.array(gt), s0, name)

    def initial_state(self, s0: int | None = None) -> NodeState:
        return NodeState(self.s0 if s0 is None else s0)

    def initial_memory(self) -> tuple:
        return ()

    def on_event(self, st: NodeState, i: int) -> tuple[NodeState, int]:
        if not 0 <= i <= self.n_in:
            raise NodeError(f"input port {i} out of range 0..{self.n_in}")
        r = int(self.g[i, st.s - 1])
        s_new = int(self.f[i, st.s - 1])
        return NodeState(s_new, r if r else st.last_emitted, st.memory), r


def on_event(spec, st: NodeState, i: int) -> tuple[NodeState, int]:
    """Deliver one event on ``in.i``; returns the new state and output index."""
    return spec.on_event(st, i)


def run_inputs(spec, inputs, st: NodeState | None = None) -> tuple[NodeState, list[int]]:
    """Feed a sequence of input port indices; returns final state and outputs."""
    st = spec.initial_state() if st is None else st
    out = []
    for i in inputs:
        st, r = spec.on_event(st, i)
        out.append(r)
    return st, out


def make_example_binary_node(s0: int = 1) -> NodeSpec:
    """Two-input, two-output, two-state node that latches its last input.

    Oscillator events advertise the current state; external events on
    ``in.1``/``in.2`` silently set the state to the port index.
    """
    return NodeSpec.from_functions(
        2, 2, 2,
        f=lambda i, s: s if i == 0 else i,
        g=lambda i, s: s if i == 0 else 0,
        s0=s0,
        name="example",
    )


def make_latch_node(q: int, s0: int = 1, name: str = "latch") -> NodeSpec:
    """Like the example node but also echoes every external input.

    Used for SAT variable nodes, which advertise on oscillator ticks and
    immediately after being set by a clause.
    """
    return NodeSpec.from_functions(
        q, q, q,
        f=lambda i, s: s if i == 0 else i,
        g=lambda i, s: s if i == 0 else i,
        s0=s0,
        name=name,
    )
