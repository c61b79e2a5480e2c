import json
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tripack.decomposer import (
    PackingCertificate,
    PipelineTrace,
    approx_decompose_oriented,
    decompose_directed,
    max_packing_search,
    pipeline_gbeta,
    verify_packing,
)
from tripack.digraph import EdgeClass, GraphError, classify_edge, cycle_edges
from tripack.forests import PipelineParams
from tripack.generators import (
    blowup_c3,
    complete_tripartite_digraph,
    disconnected_example,
    gen_gbeta,
    gen_random_regular_tournament,
    gen_random_regular_tripartite_digraph,
    gen_t_triangle,
    perturb,
)
from tripack.oracle import max_hamilton_packing_exact
from tripack.structure import nearest_gbeta


def test_complete_tripartite_full_decomposition():
    G = complete_tripartite_digraph(3)
    cert = decompose_directed(G, seed=0)
    report = verify_packing(G, cert)
    assert cert.count == 6 and report["valid"]
    assert report["edges_used"] == 54 and report["leftover_edges"] == 0


def test_random_digraphs_decompose():
    full = sum(decompose_directed(gen_random_regular_tripartite_digraph(4, 5, s), seed=s).count == 5 for s in range(10))
    assert full >= 9


def test_disconnected_host_stalls_immediately():
    cert = decompose_directed(disconnected_example(4), seed=0, time_limit=5)
    assert cert.count == 0
    assert "strongly connected" in cert.audit["stall"]


def test_exact_mode_on_blowups():
    assert approx_decompose_oriented(blowup_c3(3), delta=0).count == 3
    cert = approx_decompose_oriented(blowup_c3(2), delta=0)
    assert cert.count == 1 and not cert.audit["target_met"]


def test_reversed_triangle_certificates_avoid_reversed_edges():
    for n in (2, 3, 5, 8):
        T = gen_t_triangle(n)
        cert = approx_decompose_oriented(T, seed=1)
        assert cert.valid and cert.count <= n - 1
        assert all(classify_edge(T, e) is EdgeClass.CLOCKWISE for c in cert.cycles for e in cycle_edges(c))


def test_non_regular_tournament_is_rejected():
    with pytest.raises(GraphError):
        approx_decompose_oriented(perturb(blowup_c3(5), 1, 0))


def test_pipeline_on_member():
    model, T = gen_gbeta(12, Fraction(1, 4), 0)
    trace = PipelineTrace()
    cert = pipeline_gbeta(T, nearest_gbeta(T), delta=Fraction(1, 3), trace=trace)
    assert cert.valid and cert.count >= 8 and cert.label == "pipeline"
    assert all(b["balanced"] for b in cert.verification["balance"])
    stages = [s["stage"] for s in trace.as_list()]
    assert stages[:4] == ["regime", "exceptional_cover", "clean", "partition"]
    assert cert.audit["regime"] == "gbeta"


def test_pipeline_on_reversed_triangle_takes_clockwise_route():
    T = gen_t_triangle(12)
    cert = pipeline_gbeta(T, nearest_gbeta(T), delta=Fraction(1, 3))
    assert cert.valid and cert.audit["regime"] == "c3"
    assert cert.audit["counterclockwise_edges_used"] == 0


def test_exact_search_matches_oracle():
    for T in (blowup_c3(2), blowup_c3(3), gen_t_triangle(3), gen_random_regular_tournament(3, 4)):
        assert len(max_packing_search(T.graph)) == max_hamilton_packing_exact(T)[0]


def test_verify_detects_tampering():
    G = complete_tripartite_digraph(2)
    cert = decompose_directed(G, seed=1)
    assert verify_packing(G, cert)["valid"]
    dup = verify_packing(G, [cert.cycles[0], cert.cycles[0]])
    assert not dup["valid"]
    first = next(p for p in dup["problems"] if p["kind"] == "edge_reused")
    assert first["cycle"] == 1 and first["first_cycle"] == 0
    short = verify_packing(G, [cert.cycles[0][:-1]])
    assert {p["kind"] for p in short["problems"]} >= {"length", "vertex_missing"}
    other = verify_packing(blowup_c3(2), cert)
    assert any(p["kind"] == "host_hash" for p in other["problems"])


def test_certificate_round_trip():
    T = blowup_c3(3)
    cert = approx_decompose_oriented(T, delta=0)
    back = PackingCertificate.from_dict(json.loads(cert.dumps()))
    assert back.cycles == cert.cycles and back.host_hash == cert.host_hash
    assert verify_packing(T, back)["valid"]
    with pytest.raises(GraphError):
        PackingCertificate.from_dict({"cycles": []})


def test_regime_threshold_override():
    model, T = gen_gbeta(12, Fraction(1, 4), 1)
    T = perturb(T, 2, 1)
    low = pipeline_gbeta(T, nearest_gbeta(T), params=PipelineParams(regime_threshold=Fraction(0)), seed=1)
    assert low.audit["regime"] == "gbeta"
    high = pipeline_gbeta(T, nearest_gbeta(T), params=PipelineParams(regime_threshold=Fraction(1)), seed=1)
    assert high.audit["regime"] == "c3"
    assert low.valid and high.valid


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 4), st.integers(0, 10**6))
def test_every_certificate_verifies(n, seed):
    G = gen_random_regular_tripartite_digraph(n, n + seed % (n + 1), seed)
    cert = decompose_directed(G, seed=seed, time_limit=10)
    report = verify_packing(G, cert)
    assert report["valid"] and cert.valid
    assert report["edges_used"] == cert.count * 3 * n
