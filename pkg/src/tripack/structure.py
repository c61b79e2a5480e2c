"""Distance to the G_beta families, the bipartite regularizer, editing a
non-expanding tournament into a G_beta member, and exceptional vertices."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations
from typing import Iterable

from .digraph import Edge, GraphError, TripartiteTournament, edit_distance, rational
from .expansion import Partition4
from .generators import GBetaModel
from .kernels import max_agreement_regular_subgraph


@dataclass(frozen=True)
class EditScript:
    additions: tuple[Edge, ...] = ()
    removals: tuple[Edge, ...] = ()

    def __post_init__(self):
        if set(self.additions) & set(self.removals):
            raise GraphError("edit_script", "an edge is both added and removed")

    @property
    def size(self) -> int:
        return len(self.additions) + len(self.removals)

    def apply(self, edges: Iterable[Edge]) -> set[Edge]:
        out = set(edges)
        missing = set(self.removals) - out
        if missing:
            raise GraphError("edit_script", f"removal of absent edge {min(missing)}")
        present = set(self.additions) & out
        if present:
            raise GraphError("edit_script", f"addition of present edge {min(present)}")
        return (out - set(self.removals)) | set(self.additions)

    def as_dict(self) -> dict:
        return {"additions": [list(e) for e in self.additions], "removals": [list(e) for e in self.removals]}


@dataclass(frozen=True)
class BipartiteGraph:
    """Undirected bipartite graph on sides A = B = range(m); edges are (a, b)."""

    m: int
    edges: frozenset[tuple[int, int]]

    def degrees(self) -> tuple[list[int], list[int]]:
        da, db = [0] * self.m, [0] * self.m
        for a, b in self.edges:
            da[a] += 1
            db[b] += 1
        return da, db


def bipartite_excess(H: BipartiteGraph, d: int) -> int:
    """t = max over the sides of the total deviation from degree d."""
    da, db = H.degrees()
    return max(sum(abs(x - d) for x in da), sum(abs(x - d) for x in db))


def regularize_bipartite(H: BipartiteGraph, d: int) -> EditScript:
    """Edit H into a d-regular bipartite graph with at most 9t edge changes.

    Phase one adds or removes edges until there are exactly dm of them; phase
    two moves edges a'x -> ax from an over-full to an under-full vertex of the
    same side, first on A and then on B. Every move keeps the opposite side's
    degrees.
    """
    m = H.m
    if not 0 <= d <= m:
        raise GraphError("regular_target", f"target degree {d} infeasible on sides of size {m}")
    adj_a = [set() for _ in range(m)]
    adj_b = [set() for _ in range(m)]
    for a, b in H.edges:
        adj_a[a].add(b)
        adj_b[b].add(a)
    added: set = set()
    removed: set = set()

    def add(a, b):
        adj_a[a].add(b)
        adj_b[b].add(a)
        if (a, b) in removed:
            removed.discard((a, b))
        else:
            added.add((a, b))

    def drop(a, b):
        adj_a[a].discard(b)
        adj_b[b].discard(a)
        if (a, b) in added:
            added.discard((a, b))
        else:
            removed.add((a, b))

    total = len(H.edges)
    while total > d * m:
        a = max(range(m), key=lambda v: (len(adj_a[v]), -v))
        b = max(adj_a[a], key=lambda v: (len(adj_b[v]), -v))
        drop(a, b)
        total -= 1
    while total < d * m:
        a = min(range(m), key=lambda v: (len(adj_a[v]), v))
        b = min((v for v in range(m) if v not in adj_a[a]), key=lambda v: (len(adj_b[v]), v))
        add(a, b)
        total += 1
    for adj, other, orient in ((adj_a, adj_b, lambda x, y: (x, y)), (adj_b, adj_a, lambda x, y: (y, x))):
        while True:
            low = [v for v in range(m) if len(adj[v]) < d]
            if not low:
                break
            high = [v for v in range(m) if len(adj[v]) > d]
            lo, hi = low[0], high[0]
            x = min(adj[hi] - adj[lo])
            drop(*orient(hi, x))
            add(*orient(lo, x))
    return EditScript(tuple(sorted(added)), tuple(sorted(removed)))


@dataclass
class ClosenessReport:
    model: GBetaModel
    distance: int
    epsilon: Fraction
    role_assignment: tuple[int, int, int]
    v1_split: tuple[frozenset[int], frozenset[int]]
    candidates: list = field(default_factory=list)

    def nonexpanding_sets(self) -> list[frozenset[int]]:
        """V2 with backward V1, and V3 with forward V1: the sets that fail to expand in the model."""
        m = self.model
        return [frozenset(m.v2) | m.backward_v1, frozenset(m.v3) | m.forward_v1]

    def as_dict(self) -> dict:
        return {
            "distance": self.distance,
            "epsilon": str(self.epsilon),
            "epsilon_float": float(self.epsilon),
            "beta": str(self.model.beta),
            "role_assignment": list(self.role_assignment),
            "v1_split": {"forward": sorted(self.v1_split[0]), "backward": sorted(self.v1_split[1])},
            "model": self.model.as_dict(),
            "candidates": self.candidates,
        }


def _models_for_roles(T: TripartiteTournament, roles: tuple[int, int, int]) -> list[GBetaModel]:
    """The closest model with |backward V1| = k, for every k <= n/2."""
    parts = T.parts
    n = parts.n
    V1, V2, V3 = (parts.block(c) for c in roles)
    # V1 costs separate per vertex once k is fixed: take the k cheapest backward moves
    gain = []
    for v in V1:
        agree_forward = sum(1 for x in V3 if T.has_edge(x, v)) + sum(1 for y in V2 if T.has_edge(v, y))
        gain.append((agree_forward, v))
    gain.sort()
    out = []
    for k in range(n // 2 + 1):
        backward = frozenset(v for _, v in gain[:k])
        forward = frozenset(V1) - backward
        ccw = max_agreement_regular_subgraph(list(V3), list(V2), k, T.has_edge)
        out.append(GBetaModel(parts, forward, backward, Fraction(k, n), frozenset(ccw), roles))
    return out


def nearest_gbeta(T: TripartiteTournament) -> ClosenessReport:
    """Closest G_beta member over the six role assignments and every beta.

    For a fixed size k of backward V1 the V1 part of the distance is a sum of
    per-vertex terms, so the k vertices agreeing least with the forward side
    go backward; the counterclockwise graph is the k-regular V3 -> V2 graph
    agreeing with T as often as possible. Regularity is not required, so
    perturbed instances can be measured too.
    """
    if not isinstance(T, TripartiteTournament):
        raise GraphError("tournament", "nearest_gbeta needs an orientation-complete tripartite tournament")
    best = None
    candidates = []
    for roles in permutations((1, 2, 3)):
        for model in _models_for_roles(T, roles):
            dist = edit_distance(T, model.tournament())
            candidates.append({"roles": list(roles), "beta": str(model.beta), "distance": dist})
            if best is None or dist < best[0]:
                best = (dist, model)
    dist, model = best
    n = T.n
    return ClosenessReport(
        model, dist, Fraction(dist, 9 * n * n), model.roles, (model.forward_v1, model.backward_v1), candidates
    )


@dataclass
class AlmostRegularResult:
    model: GBetaModel
    script: EditScript
    eps1: Fraction
    eps2: Fraction
    bound: Fraction
    relocated: int
    orientation_fixes: int
    regularizer_changes: int

    @property
    def within_bound(self) -> bool:
        return self.script.size <= self.bound

    def as_dict(self) -> dict:
        return {
            "script_size": self.script.size,
            "eps1": str(self.eps1),
            "eps2": str(self.eps2),
            "bound": float(self.bound),
            "within_bound": self.within_bound,
            "relocated": self.relocated,
            "orientation_fixes": self.orientation_fixes,
            "regularizer_changes": self.regularizer_changes,
            "model": self.model.as_dict(),
        }


def _count(T: TripartiteTournament, A: Iterable[int], B: Iterable[int]) -> int:
    B = set(B)
    return sum(1 for a in A for b in T.graph.out_neighbors(a) if b in B)


def infer_roles(T: TripartiteTournament, P: Partition4) -> tuple[int, int, int]:
    """Classes (A, B, C) best matching V11 ∪ V22, V12 and V21."""
    parts = T.parts
    overlap = lambda S, c: len(S & set(parts.block(c)))  # noqa: E731
    b = max((1, 2, 3), key=lambda c: (overlap(P.V12, c), -c))
    c = max((x for x in (1, 2, 3) if x != b), key=lambda x: (overlap(P.V21, x), -x))
    a = 6 - b - c
    return a, b, c


def to_gbeta_member(T: TripartiteTournament, P: Partition4, roles: tuple[int, int, int] | None = None) -> AlmostRegularResult:
    """Edit T into a G_beta member guided by the partition.

    Classes A, B, C should approximate V11 ∪ V22, V12 and V21. Vertices of A
    outside V11 ∪ V22 are relocated by majority, indices are swapped when
    |V22| < |V11|, cross edges at V1 are reoriented to the model, and the
    V3 -> V2 graph is regularized to degree |backward V1|.
    """
    parts = T.parts
    n = parts.n
    if not P.covers(T.vertex_count):
        raise GraphError("partition4", "parts do not cover the vertex set")
    if roles is None:
        roles = infer_roles(T, P)
    if sorted(roles) != [1, 2, 3]:
        raise GraphError("partition4", f"roles {roles} is not a permutation of the classes")
    A, B, C = (frozenset(parts.block(c)) for c in roles)
    bad = _count(T, P.row1, P.col2) + _count(T, P.row2, P.col1)
    eps1 = Fraction(bad, n * n)
    eps2 = Fraction(max(len(A ^ (P.V11 | P.V22)), len(B ^ P.V12), len(C ^ P.V21)), n)
    v11 = set(P.V11 & A)
    v22 = set(P.V22 & A)
    relocated = 0
    for a in sorted(A - v11 - v22):
        forward = sum(1 for x in C if T.has_edge(x, a)) + sum(1 for y in B if T.has_edge(a, y))
        (v22 if forward >= n else v11).add(a)
        relocated += 1
    relocated += len(B - P.V12) + len(C - P.V21)
    v2, v3 = B, C
    role_b, role_c = roles[1], roles[2]
    if len(v22) < len(v11):
        v11, v22 = v22, v11
        v2, v3 = v3, v2
        role_b, role_c = role_c, role_b
    k = len(v11)
    model_roles = (roles[0], role_b, role_c)
    # orient-fix: count cross edges at V1 disagreeing with the model
    fixes = 0
    for v in A:
        if v in v22:
            fixes += sum(1 for x in v3 if T.has_edge(v, x)) + sum(1 for y in v2 if T.has_edge(y, v))
        else:
            fixes += sum(1 for x in v3 if T.has_edge(x, v)) + sum(1 for y in v2 if T.has_edge(v, y))
    # regularize the V3 -> V2 graph to degree k
    l3, l2 = sorted(v3), sorted(v2)
    i3 = {x: i for i, x in enumerate(l3)}
    i2 = {y: i for i, y in enumerate(l2)}
    H = BipartiteGraph(n, frozenset((i3[x], i2[y]) for x in l3 for y in l2 if T.has_edge(x, y)))
    reg = regularize_bipartite(H, k)
    ccw = set(H.edges)
    ccw = reg_apply = (ccw - set(reg.removals)) | set(reg.additions)
    model = GBetaModel(
        parts,
        frozenset(v22),
        frozenset(v11),
        Fraction(k, n),
        frozenset((l3[a], l2[b]) for a, b in reg_apply),
        model_roles,
    )
    target = set(model.edges())
    script = EditScript(tuple(sorted(target - T.edges)), tuple(sorted(T.edges - target)))
    assert script.size == 2 * (fixes + reg.size), "script must be reversals of fixed and regularized edges"
    bound = (10 * eps1 + 90 * eps2) * n * n
    return AlmostRegularResult(model, script, eps1, eps2, bound, relocated, fixes, reg.size)


@dataclass
class ExceptionalSet:
    gamma: Fraction
    vertices: frozenset[int]
    bad_edges: int
    certificate: dict

    def as_dict(self) -> dict:
        return {"gamma": str(self.gamma), "vertices": sorted(self.vertices), "bad_edges": self.bad_edges, **self.certificate}


def exceptional_vertices(G, model: GBetaModel, gamma, epsilon=None) -> ExceptionalSet:
    """Vertices meeting at least gamma * 3n edges of G outside the model."""
    gamma = rational(gamma)
    n = G.n
    if model.parts != G.parts:
        raise GraphError("partition_mismatch", "model and graph use different partitions")
    target = set(model.edges())
    bad = [e for e in G.edges if e not in target]
    deg = [0] * G.vertex_count
    for u, v in bad:
        deg[u] += 1
        deg[v] += 1
    U = frozenset(v for v in range(G.vertex_count) if deg[v] >= gamma * 3 * n)
    if epsilon is None:
        epsilon = Fraction(len(set(G.edges) ^ target), 9 * n * n)
    epsilon = rational(epsilon)
    double_count = len(U) * gamma * 3 * n / 2
    size_bound = math.sqrt(epsilon) * 3 * n
    # the size bound is only promised once gamma >= 18 sqrt(eps)
    applicable = float(gamma) >= 18 * math.sqrt(epsilon)
    cert = {
        "double_count": {"lhs": float(double_count), "rhs": len(bad), "pass": double_count <= len(bad)},
        "size_bound": {
            "value": len(U),
            "bound": size_bound,
            "applicable": applicable,
            "pass": not applicable or len(U) <= size_bound + 1e-9,
        },
        "epsilon": str(epsilon),
    }
    return ExceptionalSet(gamma, U, len(bad), cert)
