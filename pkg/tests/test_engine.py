import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from _reference import reference_run
from oscnet import _kernels as K
from oscnet.engine import (CausalityError, ChannelModel, EngineError, Event, Network,
                           OscillatorAssignment, RunReport, Simulation, StopCondition,
                           apply_channel, draw_frequencies, measure_cycles, run,
                           write_trace_csv)
from oscnet.node import NodeError, NodeSpec, make_example_binary_node, make_latch_node


def chain(fast=2.0, slow=1.0):
    net = Network()
    a = net.add_node(make_example_binary_node(1), name="A")
    b = net.add_node(make_example_binary_node(2), name="B")
    net.connect(a, 1, b, 1)
    net.connect(a, 2, b, 2)
    return net, OscillatorAssignment(np.array([fast, slow]), np.array([0.0, 0.5]))


def random_network(seed, n=6, lossy=False):
    rng = np.random.default_rng(seed)
    net = Network()
    ex = make_example_binary_node()
    latch = make_latch_node(2)
    for v in range(n):
        net.add_node(ex if v % 2 else latch, s0=int(rng.integers(1, 3)))
    # latches echo inputs, so they only feed silent example nodes (no zero-delay loops)
    silent = np.arange(1, n, 2)
    for v in range(n):
        for out in (1, 2):
            pool = silent if v % 2 == 0 else np.arange(n)
            for dst in rng.choice(pool, 2, replace=False):
                try:
                    net.connect(v, out, int(dst), int(rng.integers(1, 3)))
                except NodeError:
                    pass
    osc = draw_frequencies(n, seed=seed)
    ch = ChannelModel.lossy(0.2, 0.3) if lossy else ChannelModel.ideal()
    return net, osc, ch


# -------------------------------------------------------------- frequencies

def test_single_frequency_in_band():
    osc = draw_frequencies(1, (0.9, 1.1), seed=7)
    assert 0.9 <= osc.freq[0] <= 1.1


def test_frequencies_distinct():
    osc = draw_frequencies(2048, (0.9, 1.1), seed=3)
    assert len(np.unique(osc.freq)) == 2048


def test_frequencies_deterministic():
    a = draw_frequencies(50, seed=11)
    b = draw_frequencies(50, seed=11)
    assert a.freq.tobytes() == b.freq.tobytes() and a.phase.tobytes() == b.phase.tobytes()


@pytest.mark.parametrize("band", [(1.1, 0.9), (0.0, 1.0), (-1, 1)])
def test_bad_band(band):
    with pytest.raises(ValueError):
        draw_frequencies(3, band)


def test_assignment_validation():
    with pytest.raises(ValueError):
        OscillatorAssignment(np.array([1.0, -1.0]), np.array([0.0, 0.0]))
    with pytest.raises(ValueError):
        OscillatorAssignment(np.array([1.0]), np.array([1.0]))


# -------------------------------------------------------------- channel

def test_ideal_channel_identity():
    ev = Event(3, 1, 2.5, 9)
    assert apply_channel(ev, ChannelModel.ideal(), np.random.default_rng(0)) is ev


def test_certain_loss():
    ch = ChannelModel.lossy(1.0, 0.1)
    rng = np.random.default_rng(0)
    assert all(apply_channel(Event(0, 1, 0.0), ch, rng) is None for _ in range(100))


def test_channel_monte_carlo():
    ch = ChannelModel.lossy(0.1, 0.1)
    rng = np.random.default_rng(2024)
    period = 1.25
    n = 100_000
    delays = []
    for _ in range(n):
        out = apply_channel(Event(0, 1, 10.0), ch, rng, period)
        if out is not None:
            delays.append(out.deliver_at - 10.0)
    drop = 1 - len(delays) / n
    assert abs(drop - 0.1) <= 0.01
    p = stats.kstest(delays, stats.uniform(0, 0.1 * period).cdf).pvalue
    assert p > 0.01


def test_kernel_channel_statistics():
    # one source broadcasting to many silent sinks: counts come from the kernel
    net = Network()
    src = net.add_node(make_example_binary_node(1))
    sink = NodeSpec(1, 1, 1, np.ones((2, 1), int), np.zeros((2, 1), int))
    sinks = [net.add_node(sink) for _ in range(50)]
    for s in sinks:
        net.connect(src, 1, s, 1)
    # sinks tick too (silently), so the mean period stays exactly 1
    osc = OscillatorAssignment(np.ones(51), np.concatenate([[0.0], np.full(50, 0.5)]))
    sim = Simulation(net, osc, ChannelModel.lossy(0.1, 0.1), seed=5, log_mode=K.LOG_ALL,
                     log_capacity=1 << 12)
    sim.advance(2000.5)
    s = sim.stats
    frac = s["dropped"] / s["generated"]
    assert abs(frac - 0.1) <= 0.01
    log = sim.drain_log()
    deliveries = log["time"][log["in_port"] == 1]
    lag = deliveries - np.floor(deliveries)  # source ticks at integer times
    p = stats.kstest(lag, stats.uniform(0, 0.1 * osc.mean_period).cdf).pvalue
    assert p > 0.01


def test_channel_validation():
    with pytest.raises(ValueError):
        ChannelModel("ideal", 0.1, 0.0)
    with pytest.raises(ValueError):
        ChannelModel("lossy", 1.5, 0.0)
    with pytest.raises(ValueError):
        ChannelModel("noisy")


# -------------------------------------------------------------- routing

def test_route_to_two_ports_of_one_node_rejected():
    net = Network()
    a = net.add_node(make_example_binary_node())
    b = net.add_node(make_example_binary_node())
    net.connect(a, 1, b, 1)
    net.connect(a, 1, b, 1)  # same edge again is a no-op
    with pytest.raises(NodeError):
        net.connect(a, 1, b, 2)


def test_port_range_checked():
    net = Network()
    a = net.add_node(make_example_binary_node())
    with pytest.raises(NodeError):
        net.connect(a, 3, a, 1)
    with pytest.raises(NodeError):
        net.connect(a, 1, a, 0)


def test_routing_text():
    net, _ = chain()
    assert net.routing_text() == "A.1 -> [B.1]\nA.2 -> [B.2]\n"


# -------------------------------------------------------------- run semantics

def test_isolated_node_advertises_initial_state():
    net = Network()
    net.add_node(make_example_binary_node(2))
    osc = OscillatorAssignment(np.array([1.0]), np.array([0.0]))
    sim = Simulation(net, osc, log_mode=K.LOG_ALL)
    sim.advance(2.5)
    log = sim.drain_log()
    assert log["out_port"].tolist() == [2, 2, 2]
    assert np.allclose(log["time"], [0.0, 1.0, 2.0])


def test_chain_follows_source():
    net, osc = chain()
    sim = Simulation(net, osc, log_mode=K.LOG_ALL)
    sim.advance(20)
    log = sim.drain_log()
    first_a = log["time"][(log["node"] == 0) & (log["out_port"] > 0)].min()
    b_out = log["out_port"][(log["node"] == 1) & (log["out_port"] > 0) & (log["time"] > first_a)]
    assert len(b_out) > 5 and set(b_out.tolist()) == {1}


def test_oscillator_regularity():
    net, osc, ch = random_network(1)
    sim = Simulation(net, osc, ch, log_mode=K.LOG_ALL, log_capacity=1 << 14)
    sim.advance(100)
    log = sim.drain_log()
    for v in range(net.n_nodes):
        t = log["time"][(log["node"] == v) & (log["in_port"] == 0)]
        k = np.arange(len(t))
        assert np.array_equal(t, (osc.phase[v] + k) / osc.freq[v])


@pytest.mark.parametrize("lossy", [False, True])
def test_time_order_and_conservation(lossy):
    net, osc, ch = random_network(4, lossy=lossy)
    sim = Simulation(net, osc, ch, seed=9, log_mode=K.LOG_ALL, log_capacity=256)
    sim.advance(150)
    log = sim.drain_log()
    assert np.all(np.diff(log["time"]) >= 0)
    s = sim.stats
    assert s["events_processed"] == s["ticks"] + s["delivered"] == len(log["time"])
    assert s["dropped"] == s["generated"] - s["delivered"] - s["pending"]
    if not lossy:
        assert s["dropped"] == 0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.booleans())
def test_kernel_matches_reference(seed, lossy):
    net, osc, ch = random_network(seed, n=5, lossy=lossy)
    sim = Simulation(net, osc, ch, seed=seed, log_mode=K.LOG_ALL, log_capacity=64)
    sim.advance(30.0)
    log = sim.drain_log()
    ref, states = reference_run(net, osc, 30.0, ch, seed)
    got = list(zip(log["time"].tolist(), log["node"].tolist(),
                   log["in_port"].tolist(), log["out_port"].tolist()))
    assert got == ref
    assert sim.state.tolist() == [s.s for s in states]


def test_determinism_lossy():
    net, osc, ch = random_network(8, lossy=True)
    logs = []
    for _ in range(2):
        sim = Simulation(net, osc, ch, seed=77, log_mode=K.LOG_ALL)
        sim.advance(60)
        logs.append({k: v.tobytes() for k, v in sim.drain_log().items()})
    assert logs[0] == logs[1]


def test_same_seed_same_report():
    net, osc, ch = random_network(8, lossy=True)
    stop = StopCondition(max_cycles=50, predicate=lambda sim: False)
    a = run(net, osc, ch, stop, seed=3)
    b = run(net, osc, ch, stop, seed=3)
    assert a.to_dict() == b.to_dict()


def test_causality_loop_detected():
    # two echo nodes feeding each other with zero delay
    net = Network()
    a = net.add_node(make_latch_node(1))
    b = net.add_node(make_latch_node(1))
    net.connect(a, 1, b, 1)
    net.connect(b, 1, a, 1)
    sim = Simulation(net, OscillatorAssignment(np.array([1.0, 1.1]), np.array([0.5, 0.5])),
                     loop_bound=1000)
    with pytest.raises(CausalityError):
        sim.advance(5.0)


def test_inject_validation():
    net, osc = chain()
    sim = Simulation(net, osc)
    sim.advance(3.0)
    with pytest.raises(EngineError):
        sim.inject(1.0, 1, 1)
    with pytest.raises(NodeError):
        sim.inject(4.0, 1, 5)
    sim.inject(4.0, 1, 2)
    assert sim.stats["injected"] == 1


def test_heap_grows():
    net = Network()
    hub = net.add_node(make_latch_node(1))
    sink = NodeSpec(1, 1, 1, np.ones((2, 1), int), np.zeros((2, 1), int))
    for _ in range(300):
        net.connect(hub, 1, net.add_node(sink), 1)
    osc = draw_frequencies(net.n_nodes, seed=0)
    sim = Simulation(net, osc, ChannelModel.lossy(0.0, 5.0))
    sim.advance(20)
    assert sim.stats["delivered"] > 300


def test_trace_csv(tmp_path):
    net, osc = chain()
    sim = Simulation(net, osc, log_mode=K.LOG_EMISSIONS)
    sim.advance(3)
    path = tmp_path / "trace.csv"
    write_trace_csv(sim.drain_log(), net, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "time,node,out_port,targets"
    assert any(line.endswith("1.1") for line in lines[1:])


# -------------------------------------------------------------- cycles

def _report(elapsed, converged=True, interval=20.0, f=1.0):
    return RunReport(converged, math.inf, 0, 0, [], 0, elapsed=elapsed,
                     check_interval=interval, cycle_freq=f)


def test_cycles_definition():
    assert measure_cycles(_report(100.0, interval=0.0)) == 100.0


def test_cycles_rounded_to_check():
    assert measure_cycles(_report(3.0)) == 20.0
    assert measure_cycles(_report(20.0)) == 20.0


def test_cycles_not_converged():
    assert measure_cycles(_report(5.0, converged=False)) == math.inf


def test_run_reports_first_check():
    net, osc = chain()
    rep = run(net, osc, stop=StopCondition(100, 20, lambda sim: True))
    assert rep.converged and rep.cycles_to_solution == 20


def test_run_cap():
    net, osc = chain()
    rep = run(net, osc, stop=StopCondition(100, 20, lambda sim: False))
    assert not rep.converged and rep.cycles_to_solution == math.inf
    assert rep.to_dict()["cycles"] is None
