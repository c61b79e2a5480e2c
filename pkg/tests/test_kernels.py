import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tripack.kernels import UNMATCHED, FlowInfeasible, hopcroft_karp, min_cost_flow

pairs = st.integers(1, 8).flatmap(
    lambda m: st.tuples(st.just(m), st.sets(st.tuples(st.integers(0, m - 1), st.integers(0, m - 1))))
)


@settings(max_examples=80, deadline=None)
@given(pairs)
def test_matching_size_matches_networkx(case):
    m, edges = case
    adj = [[] for _ in range(m)]
    for a, b in sorted(edges):
        adj[a].append(b)
    match_left, match_right = hopcroft_karp(adj, m)
    size = sum(1 for j in match_left if j != UNMATCHED)
    for i, j in enumerate(match_left):
        if j != UNMATCHED:
            assert (i, j) in edges and match_right[j] == i

    B = nx.Graph()
    B.add_nodes_from(("L", i) for i in range(m))
    B.add_nodes_from(("R", j) for j in range(m))
    B.add_edges_from((("L", a), ("R", b)) for a, b in edges)
    ref = nx.bipartite.maximum_matching(B, top_nodes=[("L", i) for i in range(m)])
    assert size == len(ref) // 2


@settings(max_examples=60, deadline=None)
@given(pairs, st.data())
def test_assignment_cost_matches_networkx(case, data):
    m, edges = case
    edges = sorted(edges)
    costs = data.draw(st.lists(st.integers(0, 9), min_size=len(edges), max_size=len(edges)))
    adj = [[] for _ in range(m)]
    for a, b in edges:
        adj[a].append(b)
    size = sum(1 for j in hopcroft_karp(adj, m)[0] if j != UNMATCHED)
    source, sink = 2 * m, 2 * m + 1
    arcs = [(source, i, 1, 0) for i in range(m)] + [(m + j, sink, 1, 0) for j in range(m)]
    arcs += [(a, m + b, 1, w) for (a, b), w in zip(edges, costs)]
    flow, total = min_cost_flow(2 * m + 2, arcs, source, sink, size)

    G = nx.DiGraph()
    G.add_node(source, demand=-size)
    G.add_node(sink, demand=size)
    for u, v, c, w in arcs:
        G.add_edge(u, v, capacity=c, weight=w)
    assert total == nx.min_cost_flow_cost(G)
    assert sum(f for f, (u, _, _, _) in zip(flow, arcs) if u == source) == size


def test_flow_beyond_capacity_is_infeasible():
    with pytest.raises(FlowInfeasible):
        min_cost_flow(2, [(0, 1, 1, 0)], 0, 1, 2)
