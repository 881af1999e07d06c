import numpy as np
import pytest

from oscnet import _kernels as K
from oscnet.engine import Simulation
from oscnet.tsp import (COMPLETION_NODE, EDGE_NODE, TourError, TspProblem, _validate,
                        all_tours, assign_edge_frequencies, build_tsp_network, f_edge,
                        f_tc, g_edge, g_tc, random_tsp, read_distance_matrix, sample_tours,
                        summary, tour_rows, write_distance_matrix)


def test_edge_tables():
    assert f_edge(4, 1) == 3
    assert f_edge(2, 2) == 3 and f_edge(2, 1) == 1
    assert g_edge(0, 3) == 1 and f_edge(0, 3) == 1
    assert g_tc(0, 2) == 1


def test_edge_table_exhaustive():
    # hand-built: rows i = 0..4, columns s = 1..3
    f = [[1, 2, 1], [1, 1, 1], [1, 3, 3], [2, 2, 2], [3, 3, 3]]
    g = [[0, 0, 1], [0] * 3, [0] * 3, [0] * 3, [0] * 3]
    assert EDGE_NODE.f.tolist() == f and EDGE_NODE.g.tolist() == g
    assert COMPLETION_NODE.f.tolist() == [[2, 2], [1, 1]]
    assert COMPLETION_NODE.g.tolist() == [[0, 1], [0, 0]]
    assert [f_tc(1, s) for s in (1, 2)] == [1, 1]


def test_frequency_formula():
    p = TspProblem(np.array([[0, 1, 2], [1, 0, 1], [2, 1, 0]], float))
    tn = build_tsp_network(p)
    osc = assign_edge_frequencies(p, 1.0, 0.0, tn=tn)
    assert osc.freq[tn.edge_nodes[(1, 2)]] == 1.0
    assert osc.freq[tn.edge_nodes[(1, 3)]] == 0.5
    assert osc.freq[tn.completion] == pytest.approx(0.95 * 0.5)


def test_shorter_edge_faster():
    p = random_tsp(5, seed=1)
    tn = build_tsp_network(p)
    osc = assign_edge_frequencies(p, 2.0, 0.0, tn=tn)
    e = list(tn.edge_nodes.items())
    for a, va in e:
        for b, vb in e:
            if p.d(*a) < p.d(*b):
                assert osc.freq[va] > osc.freq[vb]


def test_tour_space():
    assert len(all_tours(6)) == 120
    assert all(t[0] == 1 for t in all_tours(6))


def test_four_cities_all_tours():
    p = random_tsp(4, seed=3)
    s = sample_tours(p, 10_000, seed=1)
    assert s.total == 10_000
    assert set(s.counts) == set(all_tours(4))


def test_equal_distances_uniform():
    from scipy.stats import chisquare

    p = TspProblem(np.ones((4, 4)) - np.eye(4))
    s = sample_tours(p, 6000, eta_scale=0.05, seed=2)
    obs = [s.counts[t] for t in all_tours(4)]
    assert chisquare(obs).pvalue > 1e-3


def test_reset_and_quiescence():
    p = random_tsp(5, seed=7)
    tn = build_tsp_network(p)
    osc = assign_edge_frequencies(p, seed=2, tn=tn)
    sim = Simulation(tn.net, osc, log_mode=K.LOG_EMISSIONS)
    sim.inject_emission(0.0, tn.completion, 1)
    edge_nodes = np.array(list(tn.edge_nodes.values()))
    completions = 0
    while completions < 30:
        sim.step(1)
        log = sim.drain_log()
        if len(log["node"]) and log["node"][-1] == tn.completion:
            completions += 1
            # no edge node is still activated when the completion node fires
            assert not np.any(sim.state[edge_nodes] == 3)
            # the reset fan-out is stamped with the same instant
            t = sim.time
            while sim.h_time[0] == t:
                sim.step(1)
            for (i, _), v in tn.edge_nodes.items():
                assert sim.state[v] == (3 if i == 1 else 2)


def test_validate_rejects_bad_segments():
    with pytest.raises(TourError):
        _validate([(1, 2), (2, 1)], 3)
    with pytest.raises(TourError):
        _validate([(1, 2)], 3)
    assert _validate([(1, 3), (3, 2)], 3) == (1, 3, 2)


def test_sample_reproducible():
    p = random_tsp(5, seed=4)
    a = sample_tours(p, 500, seed=9)
    b = sample_tours(p, 500, seed=9)
    assert a.counts == b.counts


def test_closed_vs_open_length():
    p = random_tsp(4, seed=0)
    t = (1, 2, 3, 4)
    assert p.tour_length(t, closed=True) == pytest.approx(
        p.tour_length(t, closed=False) + p.d(4, 1))


def test_matrix_io_roundtrip():
    p = random_tsp(5, seed=2)
    q = read_distance_matrix(write_distance_matrix(p))
    assert np.array_equal(p.dist, q.dist)


TSPLIB_FULL = """NAME: t
TYPE: TSP
DIMENSION: 3
EDGE_WEIGHT_TYPE: EXPLICIT
EDGE_WEIGHT_FORMAT: FULL_MATRIX
EDGE_WEIGHT_SECTION
0 1 2
1 0 3
2 3 0
EOF
"""


def test_tsplib_formats():
    body = "0 1 2\n1 0 3\n2 3 0"
    upper = TSPLIB_FULL.replace("FULL_MATRIX", "UPPER_ROW").replace(body, "1 2\n3")
    lower = TSPLIB_FULL.replace("FULL_MATRIX", "LOWER_DIAG_ROW").replace(body, "0\n1 0\n2 3 0")
    for text in (TSPLIB_FULL, upper, lower):
        assert read_distance_matrix(text).dist.tolist() == [[0, 1, 2], [1, 0, 3], [2, 3, 0]]


def test_tsplib_rejects_coordinates():
    with pytest.raises(ValueError):
        read_distance_matrix(TSPLIB_FULL.replace("EXPLICIT", "EUC_2D"))


@pytest.mark.parametrize("mat", [
    [[0, 1], [2, 0]],          # asymmetric
    [[1, 1], [1, 0]],          # nonzero diagonal
    [[0, 0], [0, 0]],          # zero distance
])
def test_problem_validation(mat):
    with pytest.raises(ValueError):
        TspProblem(np.array(mat, float))


def test_summary_fields():
    p = random_tsp(5, seed=1)
    s = sample_tours(p, 2000, seed=0)
    out = summary(s)
    assert out["tours_sampled"] == 2000 and out["tour_space"] == 24
    assert sum(r["count"] for r in tour_rows(s)) == 2000
    assert out["distinct_tours"] == len(tour_rows(s))
