from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tripack.digraph import Digraph, cycle_edges
from tripack.generators import blowup_c3, complete_tripartite_digraph, gen_gbeta
from tripack.hamiltonicity import (
    ClosingError,
    HamiltonNotFound,
    PreconditionViolated,
    bipartite_perfect_matching,
    close_c3,
    close_gbeta,
    find_hamilton,
    ghouila_houri_hamilton,
    gh_threshold,
    is_hamilton_cycle,
    splice_merge,
)
from tripack.oracle import is_hamiltonian


def complete_digraph(m):
    return Digraph(m, ((u, v) for u in range(m) for v in range(m) if u != v))


def random_digraph(N, p, rng):
    A = rng.random((N, N)) < p
    return Digraph(N, ((u, v) for u in range(N) for v in range(N) if u != v and A[u, v]))


def exact_semidegree_digraph(m, rng):
    # circulant with shifts 1..ceil(m/2), relabeled
    k = gh_threshold(m)
    perm = rng.permutation(m)
    return Digraph(m, ((int(perm[i]), int(perm[(i + s) % m])) for i in range(m) for s in range(1, k + 1)))


def test_complete_digraph_on_four():
    cycle = ghouila_houri_hamilton(complete_digraph(4))
    assert sorted(cycle) == [0, 1, 2, 3] and cycle[0] == 0


def test_precondition_and_override():
    G = Digraph(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
    with pytest.raises(PreconditionViolated) as info:
        find_hamilton(G)
    assert info.value.audit["required"] == 2
    assert find_hamilton(G, override=True).cycle == [0, 1, 2, 3]


def test_disconnected_is_not_found_exhaustively():
    left = [(u, v) for u in range(3) for v in range(3) if u != v]
    right = [(u + 3, v + 3) for u, v in left]
    with pytest.raises(HamiltonNotFound) as info:
        find_hamilton(Digraph(6, left + right), override=True)
    assert info.value.exhaustive


def test_exact_semidegree_instances_match_oracle():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        G = exact_semidegree_digraph(8, rng)
        assert G.min_semidegree() == 4
        cycle = ghouila_houri_hamilton(G)
        assert is_hamilton_cycle(G, cycle) and is_hamiltonian(G)


def test_large_dense_digraphs_use_factor_merge():
    rng = np.random.default_rng(1)
    for m in (20, 40, 64):
        G = exact_semidegree_digraph(m, rng)
        found = find_hamilton(G, seed=m)
        assert is_hamilton_cycle(G, found.cycle)
        assert found.method in ("factor-merge", "budgeted-dfs")


def test_splice_merge_joins_cycles():
    G = complete_digraph(6)
    succ = splice_merge(G, [1, 0, 3, 2, 5, 4])
    cyc = [0]
    while succ[cyc[-1]] != 0:
        cyc.append(succ[cyc[-1]])
    assert len(cyc) == 6 and is_hamilton_cycle(G, cyc)


def test_virtual_edges_count_as_edges():
    G = Digraph(3, [(0, 1), (1, 2)])
    assert not is_hamilton_cycle(G, [0, 1, 2])
    assert is_hamilton_cycle(G, [0, 1, 2], virtual=[(2, 0)])


def test_bipartite_matching_examples():
    m = 5
    full = bipartite_perfect_matching(list(range(m)), list("abcde"), [(a, b) for a in range(m) for b in "abcde"])
    assert full.perfect and full.size == m
    star = bipartite_perfect_matching([0, 1, 2], ["x", "y", "z"], [(0, "x"), (1, "x"), (2, "x")])
    assert star.size == 1 and not star.perfect
    assert star.hall_violator is not None and len(star.hall_violator) >= 2
    with pytest.raises(ValueError):
        bipartite_perfect_matching([0], [], [])


def test_dense_bipartite_graphs_are_perfect():
    rng = np.random.default_rng(3)
    for _ in range(1000):
        m = 10
        edges = {(a, int(b)) for a in range(m) for b in rng.choice(m, size=5, replace=False)}
        for j in range(m):
            missing = [a for a in range(m) if (a, j) not in edges]
            for a in rng.permutation(missing)[: max(0, 5 - (m - len(missing)))]:
                edges.add((int(a), j))
        result = bipartite_perfect_matching(list(range(m)), list(range(m)), edges)
        assert result.hall_guaranteed and result.perfect


def follows(cycle, M):
    nxt = {cycle[i]: cycle[(i + 1) % len(cycle)] for i in range(len(cycle))}
    return all(nxt[a] == b for a, b in M)


def test_close_gbeta_without_matching():
    n = 24
    model, T = gen_gbeta(n, Fraction(1, 2), 0)
    eps = Fraction(1, 16)
    rep = close_gbeta(T.graph, model.forward_v1, model.backward_v1, model.v2, model.v3, [], eps)
    assert rep.audit["ok"]
    assert is_hamilton_cycle(T.graph, rep.cycle)


def test_close_gbeta_follows_matching():
    n = 24
    model, T = gen_gbeta(n, Fraction(1, 2), 1)
    M = [(2 * n, n + 3)]
    rep = close_gbeta(T.graph, model.forward_v1, model.backward_v1, model.v2, model.v3, M, Fraction(1, 16))
    assert is_hamilton_cycle(T.graph, rep.cycle, virtual=M) and follows(rep.cycle, M)


def test_close_gbeta_empty_backward_side():
    n = 12
    model, T = gen_gbeta(n, 0, 0)
    rep = close_gbeta(T.graph, model.forward_v1, [], model.v2, model.v3, [], Fraction(1, 12), strict=False)
    assert not rep.audit["sizes_ok"]
    assert is_hamilton_cycle(T.graph, rep.cycle)


def test_close_gbeta_audit_failure_is_hard_when_strict():
    model, T = gen_gbeta(8, Fraction(1, 4), 0)
    with pytest.raises(PreconditionViolated):
        close_gbeta(T.graph, model.forward_v1, model.backward_v1, model.v2, model.v3, [], Fraction(1, 10))
    with pytest.raises(PreconditionViolated):
        close_gbeta(T.graph, model.forward_v1, model.backward_v1, model.v2, model.v3, [(8, 16)], Fraction(1, 10), strict=False)


def test_close_c3_complete_tripartite():
    n = 4
    G = complete_tripartite_digraph(n).graph
    rep = close_c3(G, range(n), range(n, 2 * n), range(2 * n, 3 * n))
    assert is_hamilton_cycle(G, rep.cycle)


def test_close_c3_pipeline_shape():
    n = 20
    T = blowup_c3(n)
    M = [(40, 20), (41, 21), (42, 22)]
    rep = close_c3(T.graph, range(3, 20), range(20, 40), range(40, 60), M, Fraction(1, 5))
    assert sorted(rep.cycle) == list(range(3, 60))
    assert all(T.has_edge(u, v) or (u, v) in M for u, v in cycle_edges(rep.cycle))
    assert follows(rep.cycle, M)


def test_close_c3_needs_exact_matching_size():
    n = 20
    T = blowup_c3(n)
    with pytest.raises(PreconditionViolated):
        close_c3(T.graph, range(3, 20), range(20, 40), range(40, 60), [(40, 20), (41, 21)], Fraction(1, 5))


def test_closing_error_carries_stage():
    err = ClosingError("g1", "boom", {"x": 1})
    assert err.stage == "g1" and "[g1]" in str(err)


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 9), st.floats(0.05, 1.0), st.integers(0, 10**6))
def test_finder_agrees_with_oracle(N, p, seed):
    G = random_digraph(N, p, np.random.default_rng(seed))
    try:
        found = is_hamilton_cycle(G, find_hamilton(G, override=True).cycle)
    except HamiltonNotFound as exc:
        assert exc.exhaustive
        found = False
    assert found == is_hamiltonian(G)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 64), st.integers(0, 10**6))
def test_dense_always_succeeds(m, seed):
    G = exact_semidegree_digraph(m, np.random.default_rng(seed))
    assert is_hamilton_cycle(G, ghouila_houri_hamilton(G, seed=seed))
