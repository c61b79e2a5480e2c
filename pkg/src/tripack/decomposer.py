"""Hamilton decompositions and packings with verifiable certificates.

Three routes produce cycles:

* ``exact``: exhaustive maximum packing for hosts of at most 12 vertices;
* ``extraction``: repeated Hamilton-cycle extraction with bounded backtracking,
  finishing exhaustively once the residual degree is small;
* ``pipeline``: forests covering the awkward vertices of a host close to
  G_beta, each extended and closed into a Hamilton cycle.

Every certificate is re-verified edge by edge before it is returned.
"""

from __future__ import annotations

import json
import math
import time
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

import numpy as np

from .digraph import (
    Digraph,
    Edge,
    GraphError,
    LinearForest,
    TripartiteDigraph,
    TripartiteTournament,
    count_pairs,
    cycle_edges,
    host_hash,
    is_clockwise,
    rational,
)
from .expansion import ExpansionParams, find_non_expansion_witness, is_robust_outexpander_exact
from .forests import (
    ForestError,
    ForestFamily,
    PipelineParams,
    balanced_covers,
    clean_forests,
    cover_exceptional_c3,
    cover_exceptional_gbeta,
    partition_host,
)
from .generators import GBetaModel, c3_model, relabel_to_roles
from .hamiltonicity import (
    ClosingError,
    HamiltonNotFound,
    PreconditionViolated,
    _strongly_connected,
    close_c3,
    close_gbeta,
    find_hamilton,
)
from .structure import ClosenessReport, nearest_gbeta

EXACT_VERTEX_LIMIT = 12
EXHAUSTIVE_DEGREE = 3
EXHAUSTIVE_VERTICES = 15
CYCLE_CAP = 50_000
DEFAULT_EXPANSION = ExpansionParams(Fraction(1, 50), Fraction(1, 4))


@dataclass
class PipelineTrace:
    """Append-only record of stages with wall-clock timings."""

    stages: list[dict] = field(default_factory=list)

    def record(self, name: str, **data) -> dict:
        entry = {"stage": name, **data}
        self.stages.append(entry)
        return entry

    @contextmanager
    def timed(self, name: str, **data):
        entry = self.record(name, **data)
        start = time.perf_counter()
        try:
            yield entry
        finally:
            entry["seconds"] = round(time.perf_counter() - start, 4)

    def as_list(self) -> list[dict]:
        return [dict(s) for s in self.stages]


@dataclass
class PackingCertificate:
    host_hash: str
    vertex_count: int
    cycles: list[list[int]]
    claimed_count: int
    label: str
    verification: dict
    trace: PipelineTrace = field(default_factory=PipelineTrace)
    audit: dict = field(default_factory=dict)

    @property
    def count(self) -> int:
        return len(self.cycles)

    @property
    def valid(self) -> bool:
        return self.verification.get("valid", False) and self.claimed_count == len(self.cycles)

    def as_dict(self) -> dict:
        return {
            "host_hash": self.host_hash,
            "vertex_count": self.vertex_count,
            "label": self.label,
            "claimed_count": self.claimed_count,
            "cycles": [list(c) for c in self.cycles],
            "verified": self.valid,
            "balance": self.verification.get("balance", []),
            "verification": self.verification,
            "audit": self.audit,
            "trace": self.trace.as_list(),
        }

    def dumps(self) -> str:
        return json.dumps(self.as_dict(), default=_jsonable)

    @classmethod
    def from_dict(cls, obj: dict) -> PackingCertificate:
        for key in ("host_hash", "vertex_count", "cycles", "claimed_count", "label"):
            if key not in obj:
                raise GraphError("certificate", f"missing field {key!r}")
        return cls(
            obj["host_hash"],
            int(obj["vertex_count"]),
            [list(map(int, c)) for c in obj["cycles"]],
            int(obj["claimed_count"]),
            str(obj["label"]),
            dict(obj.get("verification", {})),
            PipelineTrace(list(obj.get("trace", []))),
            dict(obj.get("audit", {})),
        )


def _jsonable(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (set, frozenset)):
        return sorted(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    raise TypeError(f"not serializable: {type(x).__name__}")


def _graph(G) -> Digraph:
    return G.graph if isinstance(G, TripartiteDigraph) else G


def verify_packing(G, cert: PackingCertificate | Sequence[Sequence[int]]) -> dict:
    """Check each cycle is Hamiltonian in G and the cycles are edge-disjoint.

    Accepts a certificate (whose host hash must match) or a bare cycle list.
    Problems name the cycle index and the offending vertex or edge; for
    tripartite hosts each cycle's class-pair profile is reported as well.
    """
    g = _graph(G)
    N = g.vertex_count
    problems = []
    if isinstance(cert, PackingCertificate):
        if isinstance(G, TripartiteDigraph) and cert.host_hash != host_hash(G):
            problems.append({"cycle": None, "kind": "host_hash", "expected": host_hash(G), "value": cert.host_hash})
        if cert.claimed_count != len(cert.cycles):
            problems.append({"cycle": None, "kind": "claimed_count", "value": cert.claimed_count, "expected": len(cert.cycles)})
        cycles = cert.cycles
    else:
        cycles = cert
    owner: dict[Edge, int] = {}
    for i, cyc in enumerate(cycles):
        if len(cyc) != N:
            problems.append({"cycle": i, "kind": "length", "value": len(cyc), "expected": N})
        seen = set()
        for v in cyc:
            if not 0 <= v < N:
                problems.append({"cycle": i, "kind": "vertex_out_of_range", "vertex": v})
            elif v in seen:
                problems.append({"cycle": i, "kind": "vertex_repeated", "vertex": v})
            seen.add(v)
        for v in sorted(set(range(N)) - seen):
            problems.append({"cycle": i, "kind": "vertex_missing", "vertex": v})
        for u, v in cycle_edges(list(cyc)) if cyc else []:
            if not (0 <= u < N and 0 <= v < N) or not g.has_edge(u, v):
                problems.append({"cycle": i, "kind": "edge_missing", "edge": [u, v]})
            elif (u, v) in owner:
                problems.append({"cycle": i, "kind": "edge_reused", "edge": [u, v], "first_cycle": owner[(u, v)]})
            else:
                owner[(u, v)] = i
    report = {
        "valid": not problems,
        "count": len(cycles),
        "problems": problems,
        "edges_used": len(owner),
        "leftover_edges": g.edge_count - len(owner),
    }
    if isinstance(G, TripartiteDigraph):
        report["balance"] = [_balance_profile(G, cyc) for cyc in cycles]
    return report


def _balance_profile(G: TripartiteDigraph, cycle) -> dict:
    counts = count_pairs(G.parts, cycle_edges(list(cycle)))
    return {"balanced": counts.balanced, **counts.as_dict()}


def _certificate(G, cycles, label, trace, audit=None) -> PackingCertificate:
    cycles = [_rotate(c) for c in cycles]
    report = verify_packing(G, cycles)
    if not report["valid"]:
        raise AssertionError(f"internal packing failed verification: {report['problems'][:3]}")
    return PackingCertificate(
        host_hash(G) if isinstance(G, TripartiteDigraph) else "",
        _graph(G).vertex_count,
        cycles,
        len(cycles),
        label,
        report,
        trace,
        audit or {},
    )


def _rotate(cycle: Sequence[int]) -> list[int]:
    cycle = list(cycle)
    k = cycle.index(min(cycle))
    return cycle[k:] + cycle[:k]


# ---- exhaustive search ---------------------------------------------------


def _cycles_through(g: Digraph, u: int, v: int, cap: int = CYCLE_CAP) -> list[list[int]]:
    """All Hamilton cycles of g using the edge u -> v (at most ``cap``)."""
    N = g.vertex_count
    full = (1 << N) - 1
    out = []
    path = [u, v]

    def go(cur: int, visited: int) -> bool:
        if visited == full:
            if g.has_edge(cur, u):
                out.append(list(path))
            return len(out) >= cap
        for w in g.out_neighbors(cur):
            if not visited >> w & 1:
                path.append(w)
                if go(w, visited | 1 << w):
                    return True
                path.pop()
        return False

    if g.has_edge(u, v) and u != v:
        go(v, (1 << u) | (1 << v))
    return out


def _edge_ids(g: Digraph) -> dict[Edge, int]:
    return {e: i for i, e in enumerate(sorted(g.edges))}


def max_packing_search(g: Digraph, deadline: float | None = None) -> list[list[int]]:
    """Maximum set of edge-disjoint Hamilton cycles by branch and bound.

    Every cycle uses exactly one out-edge of vertex 0, so the search walks
    those out-edges in order, either skipping one or choosing a cycle through
    it that avoids the edges already taken.
    """
    N = g.vertex_count
    if N < 2:
        return []
    ids = _edge_ids(g)
    firsts = list(g.out_neighbors(0))
    pools = []
    for v in firsts:
        pools.append([(c, sum(1 << ids[e] for e in cycle_edges(c))) for c in _cycles_through(g, 0, v)])
    bound_total = g.min_semidegree()
    best: list = []

    def go(j: int, used: int, chosen: list):
        nonlocal best
        if len(chosen) > len(best):
            best = list(chosen)
        if len(best) == bound_total or j == len(pools):
            return
        if len(chosen) + (len(pools) - j) <= len(best):
            return
        if deadline is not None and time.monotonic() > deadline:
            return
        for c, mask in pools[j]:
            if not mask & used:
                chosen.append(c)
                go(j + 1, used | mask, chosen)
                chosen.pop()
                if len(best) == bound_total:
                    return
        go(j + 1, used, chosen)

    go(0, 0, [])
    return best


# ---- extraction with backtracking ----------------------------------------


def _random_hamilton(g: Digraph, rng: np.random.Generator, budget: int) -> list[int] | None:
    """A Hamilton cycle of a random relabelling, mapped back; None if none exists."""
    N = g.vertex_count
    perm = rng.permutation(N)
    inv = np.argsort(perm)
    h = Digraph(N, ((int(perm[u]), int(perm[v])) for u, v in g.edges), g.mode)
    try:
        found = find_hamilton(h, override=True, budget=budget, seed=int(rng.integers(1 << 31)))
    except HamiltonNotFound:
        return None
    return [int(inv[v]) for v in found.cycle]


def _pack(
    g: Digraph,
    target: int,
    rng: np.random.Generator,
    deadline: float,
    branching: int = 3,
    budget: int = 200_000,
    stats: dict | None = None,
) -> list[list[int]]:
    """Up to ``target`` edge-disjoint Hamilton cycles; returns the best partial packing found."""
    stats = stats if stats is not None else {}
    stats.setdefault("nodes", 0)
    stats.setdefault("stall", None)
    best: list = []

    def candidates(res: Digraph, remaining: int) -> list[list[int]]:
        N = res.vertex_count
        d = res.regular_degree()
        if d is not None and d <= EXHAUSTIVE_DEGREE and N <= EXHAUSTIVE_VERTICES:
            u = 0
            outs = res.out_neighbors(u)
            if remaining >= d:
                return _cycles_through(res, u, outs[0])
            found = []
            for v in outs:
                found += _cycles_through(res, u, v)
            return found
        found, keys = [], set()
        for _ in range(2 * branching):
            c = _random_hamilton(res, rng, budget)
            if c is None:
                break
            key = frozenset(cycle_edges(c))
            if key not in keys:
                keys.add(key)
                found.append(c)
            if len(found) == branching:
                break
        return found

    def go(res: Digraph, chosen: list) -> bool:
        nonlocal best
        stats["nodes"] += 1
        if len(chosen) > len(best):
            best = list(chosen)
        if len(chosen) == target:
            return True
        if time.monotonic() > deadline:
            stats["stall"] = stats["stall"] or "deadline"
            return False
        remaining = target - len(chosen)
        if res.min_semidegree() < remaining and res.min_semidegree() == 0:
            stats["stall"] = stats["stall"] or "residual has a vertex of degree 0"
            return False
        if not _strongly_connected(res):
            stats["stall"] = stats["stall"] or "residual not strongly connected"
            return False
        for c in candidates(res, remaining):
            if go(res.without(cycle_edges(c)), chosen + [c]):
                return True
        return False

    go(g, [])
    return best


def decompose_directed(
    G: TripartiteDigraph,
    eps=Fraction(1, 10),
    seed: int = 0,
    time_limit: float = 60.0,
    branching: int = 3,
    expansion: ExpansionParams | None = DEFAULT_EXPANSION,
) -> PackingCertificate:
    """Hamilton decomposition of a regular balanced tripartite digraph.

    The degree condition d >= (1 + eps) n and (for small hosts) robust
    expansion are audited, not enforced. A residual that is not strongly
    connected stalls the search at once; the certificate then carries the
    partial packing and ``claimed_count`` is the number of cycles found.
    """
    trace = PipelineTrace()
    g = G.graph
    d = g.regular_degree()
    if d is None:
        raise GraphError("regular", "decomposition needs a regular digraph")
    n = G.n
    eps = rational(eps)
    audit = {"degree": d, "required": str((1 + eps) * n), "degree_ok": d >= (1 + eps) * n, "target": d}
    if expansion is not None and g.vertex_count <= 15:
        with trace.timed("expansion_check") as entry:
            dec = is_robust_outexpander_exact(g, expansion)
            entry["expander"] = dec.expander
        audit["expander"] = dec.expander
    stats: dict = {}
    with trace.timed("extraction", target=d) as entry:
        cycles = _pack(g, d, np.random.default_rng(seed), time.monotonic() + time_limit, branching, stats=stats)
        entry.update(found=len(cycles), nodes=stats["nodes"])
        if len(cycles) < d:
            entry["stall"] = stats["stall"]
    audit["complete"] = len(cycles) == d
    if not audit["complete"]:
        audit["stall"] = stats["stall"]
    return _certificate(G, cycles, "extraction", trace, audit)


# ---- the G_beta pipeline ---------------------------------------------------


def _relabel_back(cycles, perm):
    inv = [0] * len(perm)
    for old, new in enumerate(perm):
        inv[new] = old
    return [[inv[v] for v in c] for c in cycles]


def _regime(beta: Fraction, eps: Fraction, override: Fraction | None) -> tuple[str, float]:
    """``gbeta`` when beta reaches the threshold (default 8 eps^(1/4)), else the beta = 0 route."""
    threshold = float(override) if override is not None else 8 * float(eps) ** 0.25
    return ("gbeta" if beta > 0 and float(beta) >= threshold else "c3"), threshold


def _extend_path(
    H: Digraph,
    model_edges: set[Edge],
    start: int,
    outward: bool,
    goal: set[int],
    blocked: set[int],
    parts,
    max_edges: int = 10,
) -> list[int] | None:
    """Shortest-first path of at most ``max_edges`` edges from ``start`` into ``goal``.

    Uses edges of H that lie in the model; a clockwise-only path is preferred,
    then one whose first three edges share an orientation.
    """

    def nbrs(v):
        return H.out_neighbors(v) if outward else H.in_neighbors(v)

    def edge(a, b):
        return (a, b) if outward else (b, a)

    for clockwise_only in (True, False):
        # breadth-first over simple paths, state = path
        frontier = [[start]]
        for _ in range(max_edges):
            nxt = []
            for p in frontier:
                tail = p[-1]
                for w in nbrs(tail):
                    if w in blocked or w in p:
                        continue
                    e = edge(tail, w)
                    if e not in model_edges:
                        continue
                    cw = is_clockwise(parts, *e)
                    if clockwise_only and not cw:
                        continue
                    if not clockwise_only and len(p) <= 3 and len(p) > 1:
                        if cw != is_clockwise(parts, *edge(p[0], p[1])):
                            continue
                    q = p + [w]
                    if w in goal:
                        return q
                    nxt.append(q)
            frontier = nxt[:2000]
            if not frontier:
                break
    return None


@dataclass
class _Closing:
    cycle: list[int]
    extension_edges: int
    audit: dict


def _close_round(
    T: TripartiteDigraph,
    H: Digraph,
    model: GBetaModel,
    regime: str,
    forest: LinearForest,
    W: frozenset[int],
    params: PipelineParams,
    seed: int,
) -> _Closing:
    """Extend the forest's paths into W and close them into a Hamilton cycle of T."""
    parts = T.parts
    N = T.vertex_count
    model_edges = set(model.edges())
    V1, V2, V3 = set(model.v1), set(model.v2), set(model.v3)
    W2, W3 = V2 & W, V3 & W
    paths = [p for p in forest.paths() if len(p) > 1]
    used = set(forest.vertices())
    isolated = [v for v in range(N) if v not in W and v not in used]
    ext_edges = 0
    full_paths = []
    for p in paths + [[v] for v in isolated]:
        head, tail = p[0], p[-1]
        if tail not in W2:
            q = _extend_path(H, model_edges, tail, True, W2 - used, used - {tail}, parts)
            if q is None:
                raise ForestError("extension", f"no path from {tail} into W2", {"vertex": tail})
            used |= set(q)
            p = p + q[1:]
            ext_edges += len(q) - 1
        if head not in W3:
            q = _extend_path(H, model_edges, head, False, W3 - used, used - {head}, parts)
            if q is None:
                raise ForestError("extension", f"no path into {head} from W3", {"vertex": head})
            used |= set(q)
            p = q[::-1][:-1] + p
            ext_edges += len(q) - 1
        full_paths.append(p)
    system = [(p[i], p[i + 1]) for p in full_paths for i in range(len(p) - 1)]
    forest_audit = {
        "linear": _is_linear(N, system),
        "endpoint_classes": all(p[0] in W3 and p[-1] in W2 for p in full_paths),
        "avoids_other_forests": all(H.has_edge(*e) or e in set(forest.edges) for e in system),
        "balance": count_pairs(parts, system).as_dict(),
    }
    if not (forest_audit["linear"] and forest_audit["endpoint_classes"] and forest_audit["avoids_other_forests"]):
        raise ForestError("pre_closing", "extended path system failed a hard audit", forest_audit)
    internal = {v for p in full_paths for v in p[1:-1]}
    Wstar = [v for v in range(N) if v not in internal]
    ws = set(Wstar)
    M = [(p[0], p[-1]) for p in full_paths]
    host = H.restricted({(u, v) for u, v in H.edges if u in ws and v in ws})
    eps = max(params.epsilon, Fraction(1, 10))
    if regime == "gbeta":
        fwd = sorted(model.forward_v1 & ws)
        bwd = sorted(model.backward_v1 & ws)
        report = close_gbeta(host, fwd, bwd, sorted(V2 & ws), sorted(V3 & ws), M, eps, strict=False, seed=seed)
    else:
        report = close_c3(host, sorted(V1 & ws), sorted(V2 & ws), sorted(V3 & ws), M, eps, strict=False, seed=seed)
    by_head = {p[0]: p for p in full_paths}
    cycle = []
    cyc = report.cycle
    i = 0
    while i < len(cyc):
        v = cyc[i]
        if v in by_head:
            cycle.extend(by_head[v][:-1])
        else:
            cycle.append(v)
        i += 1
    if sorted(cycle) != list(range(N)):
        raise ClosingError("splice", "spliced cycle does not cover every vertex once")
    for u, v in cycle_edges(cycle):
        if not T.has_edge(u, v):
            raise ClosingError("splice", f"spliced cycle uses non-edge ({u},{v})")
    return _Closing(
        cycle, ext_edges, {"closing": report.audit, "paths": len(full_paths), "W_star": len(Wstar), "forest": forest_audit}
    )


def _is_linear(N: int, edges: list[Edge]) -> bool:
    try:
        LinearForest(N, edges)
    except GraphError:
        return False
    return True


def pipeline_gbeta(
    T: TripartiteTournament,
    report: ClosenessReport | GBetaModel,
    delta=None,
    params: PipelineParams | None = None,
    seed: int = 0,
    trace: PipelineTrace | None = None,
    attempts: int = 3,
) -> PackingCertificate:
    """Edge-disjoint Hamilton cycles of a tournament close to the reported model.

    Runs at desk scale with K = 1 by default: the single host is T itself and
    every forest is completed inside it. With K >= 2 the host partition and
    balanced covers are used as well. Forests that cannot be extended or
    closed are skipped and recorded in the trace; every cycle is checked
    against T before it is kept.
    """
    model = report.model if isinstance(report, ClosenessReport) else report
    params = params or PipelineParams(seed=seed)
    if delta is not None:
        params = replace(params, delta=rational(delta))
    trace = trace if trace is not None else PipelineTrace()
    T2, m2, perm = relabel_to_roles(T, model)
    n = T.n
    ell = params.forest_count(n)
    measured = Fraction(len(set(T2.edges) - set(m2.edges())), 9 * n * n)
    regime, threshold = _regime(m2.beta, measured, params.regime_threshold)
    working = m2 if regime == "gbeta" else c3_model(T2.parts)
    trace.record("regime", regime=regime, beta=str(m2.beta), epsilon=str(measured),
                 threshold=threshold, forests_wanted=ell)
    with trace.timed("exceptional_cover") as entry:
        cover = cover_exceptional_gbeta if regime == "gbeta" else cover_exceptional_c3
        family = cover(T2, working, params)
        entry.update(forests=len(family), shortfall=family.shortfall, covered=sorted(family.covered),
                     discarded=len(family.discarded), hard_pass=all(a["hard_pass"] for a in family.audit))
    with trace.timed("clean") as entry:
        while True:
            try:
                family, ustar = clean_forests(T2, working, family, params)
                break
            except ForestError as exc:
                drop = exc.detail["forest"]
                family = ForestFamily(
                    [F for i, F in enumerate(family.forests) if i != drop],
                    [a for i, a in enumerate(family.audit) if i != drop],
                    family.covered,
                    family.discarded + [{"forest": drop, "reason": str(exc)}],
                    family.shortfall + 1,
                )
        entry.update(forests=len(family), heavy=sorted(ustar),
                     hard_pass=all(a.get("hard_pass", True) for a in family.audit))
    with trace.timed("partition", K=params.K) as entry:
        hp = partition_host(T2, params, seed)
        entry.update(hosts=len(hp.hosts), leftover=len(hp.leftover))
    forests = list(family.forests)
    hosts = [i % len(hp.hosts) for i in range(len(forests))]
    joined: list[LinearForest] = []
    for i, F in enumerate(forests):
        h = hosts[i]
        X = hp.X[h]
        if X:
            others = [j for j in range(len(forests)) if hosts[j] == h]
            L = balanced_covers(
                hp.hosts[h], T2, working, params, [forests[j].vertices() for j in others], vertices=X, seed=seed + h
            ).forests[others.index(i)]
            joined.append(F.with_edges(L.edges))
        else:
            joined.append(F)
    forest_edges = {e for F in joined for e in F.edges}
    cycles: list[list[int]] = []
    used_edges: set[Edge] = set()
    rounds = [(i, joined[i]) for i in range(len(joined))]
    rounds += [(None, LinearForest(T.vertex_count)) for _ in range(max(0, ell - len(joined)))]
    for idx, F in rounds:
        if len(cycles) >= ell:
            break
        h = hosts[idx] if idx is not None else 0
        own = set(F.edges)
        H = hp.hosts[h].without(used_edges | (forest_edges - own))
        with trace.timed("close", forest=idx) as entry:
            done = None
            for attempt in range(attempts):
                try:
                    done = _close_round(T2, H, working, regime, F, hp.W[h], params, seed + 101 * attempt)
                    break
                except (ForestError, ClosingError, PreconditionViolated, GraphError) as exc:
                    entry.setdefault("failures", []).append(f"{type(exc).__name__}: {exc}")
            if done is None:
                entry["status"] = "skipped"
                continue
            entry.update(status="closed", extension_edges=done.extension_edges, paths=done.audit["paths"],
                         closing_audit_ok=done.audit["closing"].get("ok"), forest_audit=done.audit["forest"])
        cycles.append(done.cycle)
        used_edges |= set(cycle_edges(done.cycle))
    cycles = _relabel_back(cycles, perm)
    audit = {"target": ell, "regime": regime, "target_met": len(cycles) >= ell}
    audit.update(_orientation_audit(T, cycles))
    return _certificate(T, cycles, "pipeline", trace, audit)


def approx_decompose_oriented(
    T: TripartiteTournament,
    delta=Fraction(1, 3),
    seed: int = 0,
    params: PipelineParams | None = None,
    expansion: ExpansionParams = DEFAULT_EXPANSION,
    time_limit: float = 120.0,
) -> PackingCertificate:
    """At least (1 - delta) n edge-disjoint Hamilton cycles when they can be found.

    Hosts with at most 12 vertices get an exact maximum packing. Larger hosts
    use the pipeline when a non-expansion witness exists and extraction
    otherwise; if the first route falls short, the other is tried and the
    larger packing wins.
    """
    if not isinstance(T, TripartiteTournament):
        raise GraphError("tournament", "oriented decomposition needs a tripartite tournament")
    if not T.is_regular:
        raise GraphError("regular", "oriented decomposition needs a regular tripartite tournament")
    delta = rational(delta)
    n = T.n
    target = math.ceil((1 - delta) * n)
    trace = PipelineTrace()
    audit: dict = {"target": target, "delta": str(delta)}
    if T.vertex_count <= EXACT_VERTEX_LIMIT:
        with trace.timed("exact_packing") as entry:
            cycles = max_packing_search(T.graph)
            entry["found"] = len(cycles)
        audit.update(_orientation_audit(T, cycles), target_met=len(cycles) >= target)
        return _certificate(T, cycles, "exact", trace, audit)
    with trace.timed("witness_search") as entry:
        witness = find_non_expansion_witness(T, expansion, seed=seed)
        entry["found"] = witness is not None
    deadline = time.monotonic() + time_limit
    results = {}

    def run_pipeline():
        report = nearest_gbeta(T)
        p = params or PipelineParams(epsilon=max(report.epsilon, Fraction(1, 10**6)), delta=delta, seed=seed)
        trace.record("nearest_gbeta", distance=report.distance, epsilon=str(report.epsilon), roles=list(report.role_assignment))
        with trace.timed("pipeline") as entry:
            cert = pipeline_gbeta(T, report, delta, p, seed=seed, trace=trace)
            entry["found"] = cert.count
        return cert.cycles

    def run_extraction():
        with trace.timed("extraction", target=target) as entry:
            stats: dict = {}
            remaining = max(1.0, deadline - time.monotonic())
            cyc = _pack(T.graph, target, np.random.default_rng(seed), time.monotonic() + remaining, stats=stats)
            entry["found"] = len(cyc)
            if len(cyc) < target:
                entry["stall"] = stats.get("stall")
        return cyc

    order = [("pipeline", run_pipeline), ("extraction", run_extraction)]
    if witness is None:
        order.reverse()
    for label, fn in order:
        results[label] = fn()
        if len(results[label]) >= target:
            break
    label = max(results, key=lambda k: (len(results[k]), k == order[0][0]))
    cycles = results[label]
    audit.update(_orientation_audit(T, cycles), target_met=len(cycles) >= target)
    audit["routes"] = {k: len(v) for k, v in results.items()}
    return _certificate(T, cycles, label, trace, audit)


def _orientation_audit(T: TripartiteDigraph, cycles) -> dict:
    ccw = sum(1 for c in cycles for e in cycle_edges(c) if not is_clockwise(T.parts, *e))
    return {"counterclockwise_edges_used": ccw}
