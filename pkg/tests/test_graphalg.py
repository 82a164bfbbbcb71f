"""Max-flow with min-cut certificates; general matching."""

import pytest
from hypothesis import given, settings, strategies as st

from typedmatch.core import normalize_with_dummies
from typedmatch.graphalg import (FlowNetwork, SimpleGraph,
                                 exhaustive_max_matching, has_perfect_matching,
                                 max_flow, max_matching, min_cut_partition)
from typedmatch.typed import build_flow_network, max_realising_smti


def test_two_arc_chain_bottleneck():
    net = FlowNetwork()
    net.add_arc("s", "a", 2)
    net.add_arc("a", "t", 1)
    value, flow = max_flow(net)
    assert value == 1
    assert flow[("s", "a")] == 1 and flow[("a", "t")] == 1


def test_realization_network_saturates_at_size_three(paper_example):
    # all men held to their top tie-class, every woman may stay unmatched
    inst = normalize_with_dummies(paper_example)
    worst = {1: 2, 2: 5, 3: 5, 4: 5}
    value, _ = max_flow(build_flow_network(inst, worst, 3))
    assert value == 7 + 3 - 3
    assert max_realising_smti(inst, worst) == 3


def test_disconnected_terminals_carry_nothing():
    net = FlowNetwork()
    net.add_arc("s", "a", 2)
    net.add_arc("b", "t", 1)
    assert max_flow(net)[0] == 0


def test_parallel_arcs_accumulate():
    net = FlowNetwork()
    net.add_arc("s", "a", 1)
    net.add_arc("s", "a", 1)
    net.add_arc("a", "t", 5)
    assert max_flow(net)[0] == 2


def test_network_shape_validation():
    net = FlowNetwork()
    with pytest.raises(ValueError):
        net.add_arc("a", "s", 1)
    with pytest.raises(ValueError):
        net.add_arc("t", "a", 1)
    with pytest.raises(ValueError):
        net.add_arc("a", "a", 1)
    with pytest.raises(ValueError):
        net.add_arc("a", "b", -1)


def test_min_cut_partition_separates_terminals():
    net = FlowNetwork()
    net.add_arc("s", "a", 2)
    net.add_arc("a", "t", 1)
    value, reach = min_cut_partition(net)
    assert value == 1
    assert "s" in reach and "t" not in reach


def _complete_graph(n):
    g = SimpleGraph()
    for u in range(n):
        for v in range(u + 1, n):
            g.add_edge(u, v)
    return g


def test_triangle_has_no_perfect_matching():
    g = _complete_graph(3)
    assert len(max_matching(g)) == 1
    assert not has_perfect_matching(g)


def test_k4_is_perfectly_matchable():
    assert has_perfect_matching(_complete_graph(4))


def _petersen():
    g = SimpleGraph()
    for i in range(5):
        g.add_edge(("o", i), ("o", (i + 1) % 5))
        g.add_edge(("i", i), ("i", (i + 2) % 5))
        g.add_edge(("o", i), ("i", i))
    return g


def test_petersen_graph_is_perfectly_matchable():
    g = _petersen()
    assert has_perfect_matching(g)
    assert len(exhaustive_max_matching(g)) == 5


def test_self_loop_rejected():
    with pytest.raises(ValueError):
        SimpleGraph().add_edge("a", "a")


def test_exhaustive_matcher_refuses_large_graphs():
    with pytest.raises(ValueError):
        exhaustive_max_matching(_complete_graph(13))


@st.composite
def small_graphs(draw):
    n = draw(st.integers(1, 8))
    g = SimpleGraph()
    for v in range(n):
        g.add_vertex(v)
    for u in range(n):
        for v in range(u + 1, n):
            if draw(st.booleans()):
                g.add_edge(u, v)
    return g


@settings(deadline=None, max_examples=120)
@given(small_graphs())
def test_blossom_matching_agrees_with_exhaustive_search(g):
    assert len(max_matching(g)) == len(exhaustive_max_matching(g))


@settings(deadline=None, max_examples=60)
@given(small_graphs(), st.integers(0, 100))
def test_random_networks_pass_their_own_certificate(g, seed):
    # orient each edge low->high and overlay random terminal arcs
    import random
    rng = random.Random(seed)
    net = FlowNetwork()
    for e in sorted((tuple(sorted(e)) for e in g.edges)):
        net.add_arc(e[0], e[1], rng.randint(1, 4))
    for v in sorted(g.vertices):
        if rng.random() < 0.5:
            net.add_arc("s", v, rng.randint(1, 4))
        if rng.random() < 0.5:
            net.add_arc(v, "t", rng.randint(1, 4))
    value, flow = max_flow(net)
    assert value == sum(flow[a] for a in net.cap if a[0] == "s")
