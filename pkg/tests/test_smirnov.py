import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import dict_excess
from riesztrace.errors import PreconditionError
from riesztrace.measures import is_solenoidal, total_variation
from riesztrace.smirnov import (FlowGraph, check_balance, decompose, diameter_tv_ratio, grid_edges, grid_flow,
                                loops_to_measures, node_excess, random_grid_flow, reconstruct_flows)


def triangle(w=1):
    return FlowGraph.from_edges([[0, 0], [1, 0], [0, 1]], [(0, 1, w), (1, 2, w), (2, 0, w)])


def test_single_cycle():
    L = decompose(triangle(3))
    assert len(L) == 1 and L.loops[0].weight == 3
    assert L.loops[0].nodes == (0, 1, 2)


def test_figure_eight_two_loops():
    nodes = [[0, 0], [1, 0], [1, 1], [-1, 0], [-1, -1]]
    G = FlowGraph.from_edges(nodes, [(0, 1, 1), (1, 2, 1), (2, 0, 1), (0, 3, 2), (3, 4, 2), (4, 0, 2)])
    L = decompose(G)
    assert sorted(l.weight for l in L) == [1, 2]
    assert np.array_equal(reconstruct_flows(G, L), G.flows)


def test_negative_flows_reverse_edges():
    G = FlowGraph.from_edges([[0, 0], [1, 0], [0, 1]], [(1, 0, -1), (1, 2, 1), (2, 0, 1)])
    assert check_balance(G)


def test_unbalanced_rejected():
    G = FlowGraph.from_edges([[0, 0], [1, 0]], [(0, 1, 1)])
    with pytest.raises(PreconditionError):
        decompose(G)


def test_bad_graphs():
    with pytest.raises(PreconditionError):
        FlowGraph.from_edges([[0, 0], [1, 0]], [(0, 0, 1)])
    with pytest.raises(PreconditionError):
        FlowGraph.from_edges([[0, 0], [1, 0]], [(0, 5, 1)])


def test_real_flows_balance_tolerance():
    G = FlowGraph.from_edges([[0, 0], [1, 0], [0, 1]], [(0, 1, 0.3), (1, 2, 0.3), (2, 0, 0.3 + 1e-15)])
    assert check_balance(G)
    L = decompose(G)
    assert np.allclose(reconstruct_flows(G, L), G.flows, atol=1e-14)


def test_grid_edges_count():
    t, h, a = grid_edges((3, 4))
    assert len(t) == 2 * 4 + 3 * 3
    assert np.all(h > t)


def test_zero_flow_is_empty():
    tails, _, _ = grid_edges((4, 4))
    G = grid_flow((4, 4), np.zeros(len(tails), dtype=np.int64))
    assert len(decompose(G)) == 0


@settings(max_examples=40)
@given(st.integers(2, 12), st.integers(2, 12), st.integers(0, 2**31))
def test_random_grid_exact_reconstruction(n0, n1, seed):
    rng = np.random.default_rng(seed)
    G = random_grid_flow((n0, n1), rng)
    ex = dict_excess(len(G.nodes), G.tails, G.heads, G.flows)
    assert all(v == 0 for v in ex.values())
    assert np.all(node_excess(G) == 0)
    L = decompose(G)
    assert np.array_equal(reconstruct_flows(G, L), G.flows)
    for loop in L:
        assert len(set(loop.nodes)) == len(loop.nodes) == len(loop.edges)
    mass = sum(total_variation(F) for F in loops_to_measures(G, L))
    assert mass == pytest.approx(G.total_variation(), rel=1e-12)
    for F in loops_to_measures(G, L):
        assert is_solenoidal(F)
        assert diameter_tv_ratio(F) <= 0.5 + 1e-12


def test_three_dimensional_grid(rng):
    G = random_grid_flow((4, 4, 4), rng)
    L = decompose(G)
    assert np.array_equal(reconstruct_flows(G, L), G.flows)


def test_deterministic(rng):
    G = random_grid_flow((10, 10), rng)
    assert decompose(G) == decompose(G)
