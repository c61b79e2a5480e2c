"""Linear-forest machinery for the G_beta pipeline.

Covers of the exceptional vertices (both beta regimes), the forest cleaner,
the randomized host partition, path covers and balanced near-spanning covers.
Hard structural postconditions (degree saturation, balance equalities,
forbidden-set avoidance, subgraph containment) are checked on every run;
asymptotic size bounds are reported as soft audits with their slack.

All routines expect the model's roles to be the class blocks (roles
``(1, 2, 3)``); ``generators.relabel_to_roles`` produces that form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .digraph import (
    ABSENT,
    Digraph,
    Edge,
    GraphError,
    LinearForest,
    TripartiteDigraph,
    count_pairs,
    is_clockwise,
    rational,
)
from .factorization import merge_into_few_cycles
from .generators import GBetaModel, rng_for
from .kernels import UNMATCHED, hopcroft_karp
from .structure import exceptional_vertices

CLOCKWISE_PAIRS = ((1, 2), (2, 3), (3, 1))
COUNTER_PAIRS = ((3, 2), (2, 1), (1, 3))


class ForestError(RuntimeError):
    def __init__(self, stage: str, message: str, detail: dict | None = None):
        super().__init__(f"{stage}: {message}")
        self.stage = stage
        self.detail = detail or {}


TOLERANCE_NAMES = ("bad_factor", "E1", "P1", "U1", "U3", "busy", "P2", "P3", "P4", "F1", "F4", "boost", "heavy")


@dataclass(frozen=True)
class PipelineParams:
    """Desk-scale parameters.

    Every asymptotic bound is its exact expression times a multiplier:
    ``tolerances[name]`` when present, else ``slack``. Names are listed in
    ``TOLERANCE_NAMES``. ``regime_threshold`` overrides the default
    8 eps^(1/4) beta threshold of the pipeline.
    """

    epsilon: Fraction = Fraction(1, 1000)
    gamma: Fraction = Fraction(1, 10)
    beta: Fraction | None = None
    delta: Fraction = Fraction(1, 3)
    eta: Fraction = Fraction(1, 10)
    K: int = 1
    ell: int | None = None
    slack: float = 1.0
    tolerances: dict = field(default_factory=dict)
    regime_threshold: Fraction | None = None
    seed: int = 0

    def __post_init__(self):
        for name in ("epsilon", "gamma", "delta", "eta"):
            value = rational(getattr(self, name))
            object.__setattr__(self, name, value)
            if not 0 <= value <= 1:
                raise ValueError(f"{name} = {value} outside [0, 1]")
        for name in ("beta", "regime_threshold"):
            if getattr(self, name) is not None:
                object.__setattr__(self, name, rational(getattr(self, name)))
        unknown = set(self.tolerances) - set(TOLERANCE_NAMES)
        if unknown:
            raise ValueError(f"unknown tolerance names {sorted(unknown)}")
        if self.K < 1:
            raise ValueError("K must be positive")
        if self.ell is not None and self.ell < 0:
            raise ValueError("ell must be non-negative")

    def forest_count(self, n: int) -> int:
        return self.ell if self.ell is not None else math.ceil((1 - self.delta) * n)

    def bound(self, value: float, name: str | None = None) -> float:
        return value * self.tolerances.get(name, self.slack)

    @classmethod
    def from_dict(cls, data: dict) -> PipelineParams:
        known = {k: data[k] for k in cls.__dataclass_fields__ if k in data and data[k] is not None}
        if "tolerances" in known:
            known["tolerances"] = {k: float(v) for k, v in known["tolerances"].items()}
        return cls(**known)

    def as_dict(self) -> dict:
        return {
            "epsilon": str(self.epsilon),
            "gamma": str(self.gamma),
            "beta": None if self.beta is None else str(self.beta),
            "delta": str(self.delta),
            "eta": str(self.eta),
            "K": self.K,
            "ell": self.ell,
            "slack": self.slack,
            "tolerances": dict(self.tolerances),
            "regime_threshold": None if self.regime_threshold is None else str(self.regime_threshold),
            "seed": self.seed,
        }


@dataclass
class ForestFamily:
    forests: list[LinearForest]
    audit: list[dict] = field(default_factory=list)
    covered: frozenset[int] = frozenset()
    discarded: list[dict] = field(default_factory=list)
    shortfall: int = 0

    def __len__(self) -> int:
        return len(self.forests)

    @property
    def disjoint(self) -> bool:
        seen: set = set()
        for F in self.forests:
            edges = set(F.edges)
            if seen & edges:
                return False
            seen |= edges
        return True

    def edges(self) -> set[Edge]:
        return {e for F in self.forests for e in F.edges}

    def as_dict(self) -> dict:
        return {
            "forests": [[list(e) for e in F.edges] for F in self.forests],
            "edge_counts": [F.edge_count for F in self.forests],
            "disjoint": self.disjoint,
            "covered": sorted(self.covered),
            "audit": self.audit,
            "discarded": self.discarded,
            "shortfall": self.shortfall,
        }


def _require_block_roles(model: GBetaModel) -> None:
    if model.roles != (1, 2, 3):
        raise GraphError("roles", "forest routines need the model roles to be the class blocks; relabel first")


def _class(n: int, v: int) -> int:
    return v // n + 1


def _soft(value, bound) -> dict:
    return {"value": value, "bound": bound, "slack": bound - value, "pass": value <= bound}


def _factor_stream(graph: Digraph, count: int, seed: int):
    """Edge-disjoint cycle factors with few long cycles, removed one after another."""
    residual = graph
    for i in range(count):
        if residual.regular_degree() in (None, 0):
            return
        cover = merge_into_few_cycles(residual, seed=seed + i, restarts=2)
        F = cover.factor()
        yield F
        residual = residual.without(F.edges)


def _bad_edges(G: TripartiteDigraph, model: GBetaModel) -> set[Edge]:
    return set(G.edges) - set(model.edges())


def cover_exceptional_gbeta(G: TripartiteDigraph, model: GBetaModel, params: PipelineParams) -> ForestFamily:
    """Small forests covering the gamma-exceptional vertices when beta is large.

    Cycle factors with more than eps^(2/3) n edges outside the model are
    discarded; each kept factor is pruned in three steps: V2-V3 edges away
    from U, then V2 -> V1 -> V3 two-paths away from U, then U-free components
    of at most two edges.
    """
    _require_block_roles(model)
    n = G.n
    eps = float(params.epsilon)
    ell = params.forest_count(n)
    U = exceptional_vertices(G, model, params.gamma, params.epsilon).vertices
    bad = _bad_edges(G, model)
    budget = max(ell, math.floor((1 - eps ** (1 / 3)) * n))
    limit = params.bound(eps ** (2 / 3) * n, "bad_factor")
    family = ForestFamily([], covered=U)
    for idx, factor in enumerate(_factor_stream(G.graph, budget, params.seed)):
        if len(family.forests) == ell:
            break
        nbad = sum(1 for e in factor.edges if e in bad)
        if nbad > limit:
            family.discarded.append({"factor": idx, "reason": "bad_edges", "value": nbad, "bound": limit})
            continue
        succ = list(factor.succ)
        pred = [0] * len(succ)
        for u, v in enumerate(succ):
            pred[v] = u
        keep = set(enumerate(succ))
        # step 1: V2-V3 edges away from U
        for u, v in list(keep):
            if {_class(n, u), _class(n, v)} == {2, 3} and u not in U and v not in U:
                keep.discard((u, v))
        # step 2: V2 -> V1 -> V3 two-paths away from U
        for u1 in range(n):
            u2, u3 = pred[u1], succ[u1]
            if (
                _class(n, u2) == 2 and _class(n, u3) == 3
                and not {u1, u2, u3} & U
                and (u2, u1) in keep and (u1, u3) in keep
            ):
                keep -= {(u2, u1), (u1, u3)}
        # step 3: U-free components with at most two edges
        comps = _components(len(succ), keep)
        for comp_vertices, comp_edges in comps:
            if len(comp_edges) <= 2 and not comp_vertices & U:
                keep -= comp_edges
        try:
            F = LinearForest(G.vertex_count, keep)
        except GraphError as exc:
            family.discarded.append({"factor": idx, "reason": "cycle_survived", "detail": str(exc)})
            continue
        audit = _audit_gbeta_cover(G, F, U, params)
        if not audit["hard_pass"]:
            family.discarded.append({"factor": idx, "reason": "hard_audit", "audit": audit})
            continue
        family.forests.append(F)
        family.audit.append(audit)
    family.shortfall = ell - len(family.forests)
    assert family.disjoint
    return family


def _components(N: int, edges: set[Edge]) -> list[tuple[set[int], set[Edge]]]:
    parent = list(range(N))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in edges:
        parent[find(u)] = find(v)
    groups: dict[int, tuple[set, set]] = {}
    for u, v in edges:
        g = groups.setdefault(find(u), (set(), set()))
        g[0].update((u, v))
        g[1].add((u, v))
    return list(groups.values())


def _audit_gbeta_cover(G, F: LinearForest, U, params) -> dict:
    n = G.n
    c = count_pairs(G.parts, F.edges).counts
    e1 = _soft(F.edge_count, params.bound(float(params.epsilon) ** (1 / 3) * n, "E1"))
    e2 = all(F.out_degree(v) == 1 and F.in_degree(v) == 1 for v in U)
    e3 = c[(3, 1)] == c[(1, 2)] and c[(2, 1)] == c[(1, 3)]
    e4 = all(_class(n, p[0]) == 3 and _class(n, p[-1]) == 2 for p in F.paths())
    return {"E1": e1, "E2": e2, "E3": e3, "E4": e4, "hard_pass": e2 and e3 and e4}


def cover_exceptional_c3(G: TripartiteDigraph, model: GBetaModel, params: PipelineParams) -> ForestFamily:
    """Counterclockwise-balanced small forests covering U^gamma when beta = 0.

    Factors with at least eps^(2/3) n counterclockwise edges are dropped; in the
    others every clockwise edge away from U is removed, so U stays internal.
    A cycle with no removable clockwise edge discards its factor.
    """
    _require_block_roles(model)
    if model.beta != 0:
        raise GraphError("beta", "the cyclic-triangle cover needs the beta = 0 model")
    n = G.n
    parts = G.parts
    eps = float(params.epsilon)
    ell = params.forest_count(n)
    U = exceptional_vertices(G, model, params.gamma, params.epsilon).vertices
    budget = max(ell, math.floor((1 - eps ** (1 / 3)) * n))
    limit = params.bound(eps ** (2 / 3) * n, "bad_factor")
    family = ForestFamily([], covered=U)
    for idx, factor in enumerate(_factor_stream(G.graph, budget, params.seed)):
        if len(family.forests) == ell:
            break
        edges = factor.edges
        ccw = [e for e in edges if not is_clockwise(parts, *e)]
        if ccw and len(ccw) >= limit:
            family.discarded.append({"factor": idx, "reason": "counterclockwise_edges", "value": len(ccw), "bound": limit})
            continue
        keep = set(edges)
        stuck = None
        for cyc in factor.cycles():
            cyc_edges = [(cyc[i], cyc[(i + 1) % len(cyc)]) for i in range(len(cyc))]
            removable = [e for e in cyc_edges if is_clockwise(parts, *e) and e[0] not in U and e[1] not in U]
            if not removable:
                stuck = cyc
                break
            keep -= set(removable)
        if stuck is not None:
            family.discarded.append({"factor": idx, "reason": "no_removable_clockwise_edge", "cycle": stuck})
            continue
        before = count_pairs(parts, edges).counterclockwise
        F = LinearForest(G.vertex_count, keep)
        after = count_pairs(parts, F.edges).counterclockwise
        assert before == after, "removing clockwise edges changed counterclockwise counts"
        p2 = all(F.out_degree(v) == 1 and F.in_degree(v) == 1 for v in U)
        balanced = len(set(after)) == 1
        audit = {
            "P1": _soft(F.edge_count, params.bound(float(params.gamma) * n, "P1")),
            "P2": p2,
            "counterclockwise_balanced": balanced,
            "hard_pass": p2 and balanced,
        }
        if not audit["hard_pass"]:
            family.discarded.append({"factor": idx, "reason": "hard_audit", "audit": audit})
            continue
        family.forests.append(F)
        family.audit.append(audit)
    family.shortfall = ell - len(family.forests)
    assert family.disjoint
    return family


def _step(n: int, v: int, clockwise: bool) -> int:
    """Class reached from v's class by one clockwise or counterclockwise step."""
    c = _class(n, v)
    return c % 3 + 1 if clockwise else (c - 2) % 3 + 1


def _extend(
    n: int,
    start: int,
    outward: bool,
    good_out,
    good_in,
    free,
    avoid: set[int],
    used: set[Edge],
) -> list[int] | None:
    """A 3-edge path leaving (or entering) ``start`` through unused good edges.

    The first edge picks the direction; the next two keep it. Vertices must be
    in ``free`` and outside ``avoid``. Returns the vertex list ordered away
    from ``start``.
    """
    nbrs = good_out if outward else good_in

    def edge(a, b):
        return (a, b) if outward else (b, a)

    for x1 in nbrs[start]:
        if x1 in avoid or not free(x1) or edge(start, x1) in used:
            continue
        cw = is_clockwise_pair(n, *edge(start, x1))
        for x2 in nbrs[x1]:
            if x2 in avoid or x2 == start or not free(x2) or edge(x1, x2) in used:
                continue
            if is_clockwise_pair(n, *edge(x1, x2)) != cw:
                continue
            for x3 in nbrs[x2]:
                if x3 in avoid or x3 in (start, x1) or not free(x3) or edge(x2, x3) in used:
                    continue
                if is_clockwise_pair(n, *edge(x2, x3)) != cw:
                    continue
                return [start, x1, x2, x3]
    return None


def is_clockwise_pair(n: int, u: int, v: int) -> bool:
    return (v // n - u // n) % 3 == 1


def clean_forests(
    G: TripartiteDigraph, model: GBetaModel, family: ForestFamily, params: PipelineParams
) -> tuple[ForestFamily, frozenset[int]]:
    """Saturate the heavy set U* in every forest with short balanced paths.

    U* holds the covered exceptional vertices and every vertex of union degree
    at least level^(1/3) n (level = gamma). For each forest and each U* vertex
    missing an in- or out-edge, a 3-edge clockwise or counterclockwise path
    of unused edges of G ∩ G' is attached on each missing side, avoiding the
    forest, U*, earlier paths and (when possible) the busy set Y.
    """
    _require_block_roles(model)
    n = G.n
    N = G.vertex_count
    level = float(params.gamma)
    forests = list(family.forests)
    if not forests:
        return ForestFamily([], [], family.covered, list(family.discarded), family.shortfall), frozenset(family.covered)
    dout = [0] * N
    din = [0] * N
    for F in forests:
        for u, v in F.edges:
            dout[u] += 1
            din[v] += 1
    heavy = params.bound(level ** (1 / 3) * n, "heavy")
    ustar = frozenset(v for v in range(N) if max(dout[v], din[v]) >= heavy) | family.covered
    good = set(G.edges) & set(model.edges())
    good_out = [sorted(u for u in G.graph.out_neighbors(v) if (v, u) in good) for v in range(N)]
    good_in = [sorted(u for u in G.graph.in_neighbors(v) if (u, v) in good) for v in range(N)]
    used = {e for F in forests for e in F.edges}
    appearances = [0] * N
    busy_limit = params.bound(level ** (1 / 4) * n, "busy") - 1
    cleaned: list[LinearForest] = []
    audits = []
    relaxed = 0
    for m, F in enumerate(forests):
        Y = {v for v in range(N) if appearances[v] >= busy_limit}
        X = set(F.vertices()) | set(ustar)
        added: list[Edge] = []
        for v in sorted(ustar):
            need_out = F.succ[v] == ABSENT
            need_in = F.pred[v] == ABSENT
            parts_of_path = []
            for outward, needed in ((True, need_out), (False, need_in)):
                if not needed:
                    continue
                path = None
                for avoid_busy in (True, False):
                    avoid = (X | Y) if avoid_busy else X
                    path = _extend(n, v, outward, good_out, good_in, lambda x: True, avoid - {v}, used)
                    if path is not None:
                        relaxed += not avoid_busy
                        break
                if path is None:
                    raise ForestError(
                        "clean", f"no balanced extension at vertex {v} in forest {m}", {"vertex": v, "forest": m}
                    )
                X |= set(path)
                edges = [(path[i], path[i + 1]) if outward else (path[i + 1], path[i]) for i in range(3)]
                used |= set(edges)
                parts_of_path += edges
            added += parts_of_path
        Fp = F.with_edges(added)
        cleaned.append(Fp)
        for v in Fp.vertices():
            appearances[v] += 1
        counts = count_pairs(G.parts, added)
        audits.append(
            {
                "U1": _soft(Fp.edge_count, params.bound(level ** 0.5 * n, "U1")),
                "U2": {"in_model": all(e in good for e in added), "balanced": counts.balanced},
                "added": len(added),
            }
        )
    union_out = [0] * N
    union_in = [0] * N
    for Fp in cleaned:
        for u, v in Fp.edges:
            union_out[u] += 1
            union_in[v] += 1
    ell = len(cleaned)
    saturated = all(union_out[v] == ell and union_in[v] == ell for v in ustar)
    light = max((max(union_out[v], union_in[v]) for v in range(N) if v not in ustar), default=0)
    for a in audits:
        a["U3"] = {
            "saturated": saturated,
            "light_max": light,
            "light_bound": params.bound(level ** (1 / 4) * n, "U3"),
            "light_pass": light <= params.bound(level ** (1 / 4) * n, "U3"),
        }
        a["hard_pass"] = saturated and a["U2"]["in_model"] and a["U2"]["balanced"]
    out = ForestFamily(cleaned, audits, family.covered, list(family.discarded), family.shortfall)
    assert out.disjoint
    assert saturated, "U* must be saturated in every forest"
    out.discarded.append({"relaxed_busy_avoidance": relaxed})
    return out, ustar


@dataclass
class HostPartition:
    hosts: list[Digraph]
    W: list[frozenset[int]]
    X: list[frozenset[int]]
    r: list[int]
    leftover: frozenset[Edge]
    audit: dict

    @property
    def K3(self) -> int:
        return len(self.hosts)

    def as_dict(self) -> dict:
        return {
            "count": len(self.hosts),
            "edge_counts": [h.edge_count for h in self.hosts],
            "W": [sorted(w) for w in self.W],
            "r": self.r,
            "leftover": len(self.leftover),
            "audit": self.audit,
        }


def partition_host(G: TripartiteDigraph, params: PipelineParams, seed: int | None = None) -> HostPartition:
    """K^3 edge-disjoint spanning subgraphs H_l = E_l ∪ D_l ∪ Q_l.

    K independent partitions of every class into K^2 slices give the sets
    S_ij; Q_ij is G[S_ij] minus edges lying inside a slice of another
    partition. Edges inside no slice form L and are assigned at random: to
    E_l with probability eta/2K when l is a slice of an endpoint, otherwise to
    D_l with probability (1 - eta)/(K^3 - 2K). Edges inside slices of two
    different partitions belong to no subgraph and are returned as
    ``leftover``. With K = 1 the single host is G itself with W = V.
    """
    seed = params.seed if seed is None else seed
    n = G.n
    N = G.vertex_count
    K = params.K
    if K == 1:
        everything = frozenset(range(N))
        d = G.graph.regular_degree()
        return HostPartition(
            [G.graph], [everything], [frozenset()], [0], frozenset(), {"single_host": True, "regular_degree": d}
        )
    if K**3 <= 2 * K:
        raise ValueError("K must be at least 2")
    if n < K**3:
        raise GraphError("class_size", f"n = {n} is below K^3 = {K**3}")
    rng = rng_for(seed)
    slices = K * K
    # slice_of[i][v] = j with v in S_{i,j}
    slice_of = np.zeros((K, N), dtype=np.int64)
    for i in range(K):
        for c in range(3):
            perm = rng.permutation(n)
            for pos, x in enumerate(perm):
                slice_of[i, c * n + int(x)] = pos % slices
    host_index = lambda i, j: i * slices + j  # noqa: E731
    count = K * slices
    q_edges: list[set] = [set() for _ in range(count)]
    e_edges: list[set] = [set() for _ in range(count)]
    d_edges: list[set] = [set() for _ in range(count)]
    leftover = set()
    p_e = float(params.eta) / (2 * K)
    p_d = (1 - float(params.eta)) / (count - 2 * K)
    for u, v in sorted(G.edges):
        inside = [i for i in range(K) if slice_of[i, u] == slice_of[i, v]]
        if len(inside) == 1:
            i = inside[0]
            q_edges[host_index(i, int(slice_of[i, u]))].add((u, v))
        elif len(inside) > 1:
            leftover.add((u, v))
        else:
            mine = {host_index(i, int(slice_of[i, u])) for i in range(K)} | {
                host_index(i, int(slice_of[i, v])) for i in range(K)
            }
            weights = np.array([p_e if h in mine else p_d for h in range(count)])
            h = int(rng.choice(count, p=weights / weights.sum()))
            (e_edges if h in mine else d_edges)[h].add((u, v))
    hosts, Ws, Xs, rs = [], [], [], []
    for i in range(K):
        for j in range(slices):
            h = host_index(i, j)
            W = frozenset(v for v in range(N) if slice_of[i, v] == j)
            hosts.append(Digraph(N, q_edges[h] | e_edges[h] | d_edges[h], G.graph.mode))
            Ws.append(W)
            Xs.append(frozenset(range(N)) - W)
    for H, X in zip(hosts, Xs):
        degs = [_deg_in(H, v, X) for v in X] + [_deg_out(H, v, X) for v in X]
        rs.append(int(round(sum(degs) / len(degs))) if degs else 0)
    total = sum(h.edge_count for h in hosts) + len(leftover)
    assert total == G.graph.edge_count, "every edge is assigned exactly once"
    audit = _audit_partition(G, hosts, Ws, Xs, rs, params)
    audit["leftover_edges"] = len(leftover)
    return HostPartition(hosts, Ws, Xs, rs, frozenset(leftover), audit)


def _deg_out(H: Digraph, v: int, S) -> int:
    return sum(1 for u in H.out_neighbors(v) if u in S)


def _deg_in(H: Digraph, v: int, S) -> int:
    return sum(1 for u in H.in_neighbors(v) if u in S)


def _audit_partition(G, hosts, Ws, Xs, rs, params) -> dict:
    n = G.n
    K = params.K
    eta = float(params.eta)
    p1 = []
    p2 = p3 = p4 = True
    worst = {"P2": 0.0, "P3": 0.0, "P4": math.inf}
    for H, W, X, r in zip(hosts, Ws, Xs, rs):
        sizes = [len([v for v in W if _class(n, v) == c]) for c in (1, 2, 3)]
        p1.append(max(sizes) - min(sizes) <= 1 and all(abs(s - n / K**2) <= 1 for s in sizes))
        blocks = [frozenset(v for v in W if _class(n, v) == c) for c in (1, 2, 3)]
        for v in W:
            for c, Wk in zip((1, 2, 3), blocks):
                if not Wk or c == _class(n, v):
                    continue
                block = G.parts.block(c)
                for got, full in (
                    (_deg_out(H, v, Wk), _deg_out(G.graph, v, block)),
                    (_deg_in(H, v, Wk), _deg_in(G.graph, v, block)),
                ):
                    dev = abs(got / len(Wk) - full / n)
                    worst["P2"] = max(worst["P2"], dev)
                    p2 &= dev <= params.bound(13 / K, "P2")
        for v in X:
            for got in (_deg_out(H, v, X), _deg_in(H, v, X)):
                dev = abs(got - r)
                worst["P3"] = max(worst["P3"], dev)
                p3 &= dev <= params.bound(n ** (4 / 7), "P3")
            need = eta * len(W) / (30 * K)
            low = min(_deg_out(H, v, W), _deg_in(H, v, W))
            worst["P4"] = min(worst["P4"], low - need)
            p4 &= low >= need / params.tolerances.get("P4", params.slack)
    return {
        "P1": all(p1),
        "P2": {"pass": p2, "worst_deviation": worst["P2"], "bound": params.bound(13 / K, "P2")},
        "P2_weak": {"pass": worst["P2"] <= params.bound(18 / K, "P2"), "bound": params.bound(18 / K, "P2")},
        "P3": {"pass": p3, "worst_deviation": worst["P3"], "bound": params.bound(n ** (4 / 7), "P3")},
        "P4": {"pass": p4, "worst_slack": worst["P4"]},
    }


def _near_factor(vertices: Sequence[int], edges: set[Edge], N: int, rng) -> list[Edge]:
    """Maximum 1-in/1-out subgraph via the split-graph matching, cycles broken once each."""
    index = {v: i for i, v in enumerate(vertices)}
    adj: list[list[int]] = [[] for _ in vertices]
    for u, v in edges:
        adj[index[u]].append(index[v])
    for a in adj:
        a.sort()
        if rng is not None:
            rng.shuffle(a)
    match_left, _ = hopcroft_karp(adj, len(vertices))
    succ = {vertices[i]: vertices[j] for i, j in enumerate(match_left) if j != UNMATCHED}
    heads = set(succ) - set(succ.values())
    out = []
    seen = set()
    for s in sorted(heads):
        x = s
        while x in succ:
            seen.add(x)
            out.append((x, succ[x]))
            x = succ[x]
    for s in sorted(succ):
        if s in seen:
            continue
        cycle = []
        x = s
        while x not in seen:
            seen.add(x)
            cycle.append((x, succ[x]))
            x = succ[x]
        out += cycle[:-1]  # one deletion per cycle
    return out


def path_cover(
    H: Digraph, r: int, count: int, vertices: Iterable[int] | None = None, seed: int | None = None
) -> ForestFamily:
    """``count`` edge-disjoint linear forests of H by repeated near-1-factor extraction."""
    verts = sorted(set(vertices) if vertices is not None else range(H.vertex_count))
    vs = set(verts)
    remaining = {(u, v) for u, v in H.edges if u in vs and v in vs}
    m = len(verts)
    rng = np.random.default_rng(seed) if seed is not None else None
    degs = [H.out_degree(v) for v in verts] + [H.in_degree(v) for v in verts]
    tol = r ** 0.6 if r > 0 else 0
    pre = {
        "min_semidegree": min(degs) if degs else 0,
        "max_semidegree": max(degs) if degs else 0,
        "window": [r - tol, r + tol],
        "pass": bool(degs) and r - tol <= min(degs) and max(degs) <= r + tol,
    }
    target = m - m / math.log(m) ** 4 if m > 2 else 0
    family = ForestFamily([])
    for _ in range(count):
        edges = _near_factor(verts, remaining, H.vertex_count, rng)
        if not edges:
            break
        F = LinearForest(H.vertex_count, edges)
        remaining -= set(edges)
        family.forests.append(F)
        family.audit.append({"edges": F.edge_count, "target": target, "pass": F.edge_count >= target})
    family.shortfall = count - len(family.forests)
    family.discarded.append({"precondition": pre})
    assert family.disjoint
    return family


def balanced_covers(
    H: Digraph,
    G: TripartiteDigraph,
    model: GBetaModel,
    params: PipelineParams,
    forbidden: Sequence[Iterable[int]],
    R: Digraph | Iterable[Edge] = (),
    vertices: Iterable[int] | None = None,
    seed: int | None = None,
) -> ForestFamily:
    """Bidirectionally balanced near-spanning forests of H avoiding the sets S_i.

    A path cover of H is filtered (edges meeting S_i or outside (H ∩ G') \\ R
    are dropped), then low-degree vertices are boosted by greedy matchings
    M+ and M- from the unused graph D, and finally each direction is balanced
    by deleting edges from the two denser class pairs. Discarded edges go to
    the leftover graphs L and L~. ``params.epsilon`` is the closeness
    bound of G to its model.
    """
    _require_block_roles(model)
    n = G.n
    N = G.vertex_count
    seed = params.seed if seed is None else seed
    eps = float(params.epsilon)
    S = [frozenset(s) for s in forbidden]
    ell = len(S)
    verts = sorted(set(vertices) if vertices is not None else range(N))
    vs = set(verts)
    R_edges = set(R.edges) if isinstance(R, Digraph) else set(R)
    model_edges = set(model.edges())
    allowed = {(u, v) for u, v in H.edges if u in vs and v in vs and (u, v) in model_edges and (u, v) not in R_edges}
    core = frozenset.intersection(*S) if S else frozenset()
    if ell == 0:
        return ForestFamily([])
    if not allowed:
        return ForestFamily([LinearForest(N) for _ in range(ell)], [_final_audit(G, model, LinearForest(N), s, params) for s in S], shortfall=0)
    degs = [H.out_degree(v) for v in verts]
    r = int(round(sum(degs) / len(degs)))
    extra = max(1, math.ceil(ell / 4))
    cover = path_cover(H.restricted({e for e in H.edges if e[0] in vs and e[1] in vs}), r, ell + extra, verts, seed)
    bad_mass = [sum(1 for e in F.edges if e not in allowed) for F in cover.forests]
    order = sorted(range(len(cover.forests)), key=lambda i: (bad_mass[i], i))[:ell]
    base = [cover.forests[i] for i in order]
    while len(base) < ell:
        base.append(LinearForest(N))
    # (A): drop edges meeting S_i and edges outside (H ∩ G') \ R
    forests = []
    for F, s in zip(base, S):
        forests.append(LinearForest(N, [e for e in F.edges if e in allowed and e[0] not in s and e[1] not in s]))
    # step 1: boost semidegrees
    union_out = [0] * N
    union_in = [0] * N
    for F in forests:
        for u, v in F.edges:
            union_out[u] += 1
            union_in[v] += 1
    low = ell - params.bound(eps ** 0.25 * n, "boost")
    X_plus = {v for v in verts if v not in core and union_out[v] <= low}
    X_minus = {v for v in verts if v not in core and union_in[v] <= low}
    L: set[Edge] = set()
    in_forest = {e for F in forests for e in F.edges}
    y_limit = params.bound(eps ** 0.125 * n, "busy") - 1
    residue = {"X+": [], "X-": []}
    boosted = []
    for idx, (F, s) in enumerate(zip(forests, S)):
        Lout, Lin = _degrees(L, N)
        Y = {v for v in verts if max(Lout[v], Lin[v]) >= y_limit}
        succ, pred = list(F.succ), list(F.pred)
        T = set(Y) | X_plus | X_minus
        T |= {succ[v] for v in Y | X_plus if succ[v] != ABSENT}
        T |= {pred[v] for v in Y | X_minus if pred[v] != ABSENT}
        D_out = {v: [u for u in verts if (v, u) in allowed and (v, u) not in in_forest and (v, u) not in L] for v in verts}
        D_in = {v: [u for u in verts if (u, v) in allowed and (u, v) not in in_forest and (u, v) not in L] for v in verts}
        matched: set[int] = set()
        edges = set(F.edges)

        def clear(y):
            for e in [e for e in edges if y in e]:
                edges.discard(e)
                in_forest.discard(e)
                L.add(e)

        for x in sorted(v for v in X_plus if succ[v] == ABSENT and v not in s):
            y = next((u for u in D_out[x] if u not in s and u not in T and u not in matched and u != x), None)
            if y is None:
                residue["X+"].append([idx, x])
                continue
            matched.add(y)
            clear(y)
            edges.add((x, y))
            in_forest.add((x, y))
        for x in sorted(v for v in X_minus if pred[v] == ABSENT and v not in s):
            y = next((u for u in D_in[x] if u not in s and u not in T and u not in matched and u != x), None)
            if y is None:
                residue["X-"].append([idx, x])
                continue
            matched.add(y)
            clear(y)
            edges.add((y, x))
            in_forest.add((y, x))
        boosted.append(LinearForest(N, edges))
    # step 2: exact balancing per direction
    L_tilde: set[Edge] = set()
    yt_limit = params.bound(eps ** (1 / 16) * n, "busy") - 1
    final = []
    touched_busy = 0
    for F in boosted:
        Lout, Lin = _degrees(L_tilde, N)
        Yt = {v for v in verts if max(Lout[v], Lin[v]) >= yt_limit}
        edges = set(F.edges)
        for pairs in (CLOCKWISE_PAIRS, COUNTER_PAIRS):
            groups = {p: sorted(e for e in edges if (_class(n, e[0]), _class(n, e[1])) == p) for p in pairs}
            target = min(len(g) for g in groups.values())
            for p, g in groups.items():
                excess = len(g) - target
                if not excess:
                    continue
                calm = [e for e in g if e[0] not in Yt and e[1] not in Yt]
                busy = [e for e in g if e[0] in Yt or e[1] in Yt]
                drop = (calm + busy)[:excess]
                touched_busy += sum(1 for e in drop if e in busy)
                edges -= set(drop)
                L_tilde |= set(drop)
        final.append(LinearForest(N, edges))
    family = ForestFamily(final)
    union_out = [0] * N
    union_in = [0] * N
    for F in final:
        for u, v in F.edges:
            union_out[u] += 1
            union_in[v] += 1
    f4_low = min((min(union_out[v], union_in[v]) for v in verts if v not in core), default=ell)
    for F, s in zip(final, S):
        audit = _final_audit(G, model, F, s, params, vertex_count=len(verts), R_edges=R_edges, host=H)
        audit["F4"] = _soft(ell - f4_low, params.bound(2 * eps ** (1 / 16) * n, "F4"))
        family.audit.append(audit)
    family.discarded.append({"residue": residue, "balancing_touched_busy": touched_busy, "leftover": len(L), "leftover_balance": len(L_tilde)})
    assert family.disjoint
    return family


def _degrees(edges: Iterable[Edge], N: int) -> tuple[list[int], list[int]]:
    out, inn = [0] * N, [0] * N
    for u, v in edges:
        out[u] += 1
        inn[v] += 1
    return out, inn


def _final_audit(G, model, F: LinearForest, s, params, vertex_count=None, R_edges=frozenset(), host=None) -> dict:
    n = G.n
    eps = float(params.epsilon)
    counts = count_pairs(G.parts, F.edges)
    model_edges = set(model.edges())
    f2 = all(e in model_edges and e not in R_edges and (host is None or host.has_edge(*e)) for e in F.edges)
    f3 = not (F.vertices() & set(s))
    prof = endpoint_profile(G, F, model)
    vc = vertex_count if vertex_count is not None else 0
    f1 = vc - params.bound(5 * eps ** 0.125 * n, "F1")
    assert counts.balanced, "balanced cover must be bidirectionally balanced"
    assert f2 and f3, "balanced cover left (H ∩ G') \\ R or met its forbidden set"
    return {
        "F1": {"value": F.edge_count, "bound": f1, "pass": F.edge_count >= f1},
        "F2": f2,
        "F3": f3,
        "balanced": counts.balanced,
        "endpoints_equal": prof["classes_equal"] and prof["v1_sides_equal"],
    }


def endpoint_profile(T: TripartiteDigraph, F: LinearForest, model: GBetaModel | None = None) -> dict:
    """Counts of vertices with no out-edge (V_i^+) and no in-edge (V_i^-) per class."""
    n = T.n
    plus = [0, 0, 0]
    minus = [0, 0, 0]
    for v in range(T.vertex_count):
        c = v // n
        plus[c] += F.succ[v] == ABSENT
        minus[c] += F.pred[v] == ABSENT
    out = {
        "plus": plus,
        "minus": minus,
        "classes_equal": len(set(plus + minus)) == 1,
    }
    if model is not None:
        for name, side in (("forward", model.forward_v1), ("backward", model.backward_v1)):
            out[f"{name}_plus"] = sum(1 for v in side if F.succ[v] == ABSENT)
            out[f"{name}_minus"] = sum(1 for v in side if F.pred[v] == ABSENT)
        out["v1_sides_equal"] = out["forward_plus"] == out["forward_minus"] and out["backward_plus"] == out["backward_minus"]
    else:
        out["v1_sides_equal"] = True
    return out
