"""Hamilton cycles in dense digraphs, bipartite perfect matchings, and the two
contraction-based closers that route a Hamilton cycle through a prescribed
V3 -> V2 matching."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Iterable, Sequence

import numpy as np

from .digraph import Digraph, Edge, ceil_frac, cycle_edges, iter_bits, rational
from .kernels import UNMATCHED, hall_violator, hopcroft_karp

EXACT_LIMIT = 14
DEFAULT_BUDGET = 10**6


class PreconditionViolated(ValueError):
    def __init__(self, message: str, audit: dict | None = None):
        super().__init__(message)
        self.audit = audit or {}


class HamiltonNotFound(RuntimeError):
    """No Hamilton cycle was produced.

    ``exhaustive`` is True when the search proves none exists, False when it
    gave up (budget exhausted or heuristics failed).
    """

    def __init__(self, message: str, exhaustive: bool):
        super().__init__(message)
        self.exhaustive = exhaustive


class ClosingError(RuntimeError):
    def __init__(self, stage: str, message: str, detail: dict | None = None):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
        self.detail = detail or {}


def gh_threshold(vertex_count: int) -> int:
    return (vertex_count + 1) // 2


def _strongly_connected(G: Digraph) -> bool:
    full = (1 << G.vertex_count) - 1
    for nbr_bits in (G.out_bits, G.in_bits):
        seen = 1
        frontier = 1
        while frontier:
            nxt = 0
            for v in iter_bits(frontier):
                nxt |= nbr_bits[v]
            frontier = nxt & ~seen
            seen |= nxt
        if seen != full:
            return False
    return True


class _Budget(Exception):
    pass


def _dfs_cycle(G: Digraph, budget: int | None) -> list[int] | None:
    """Hamilton cycle through vertex 0 by DFS with failed-state memo; None if none exists.

    Raises _Budget when more than ``budget`` states are expanded.
    """
    N = G.vertex_count
    out_bits, in_bits = G.out_bits, G.in_bits
    full = (1 << N) - 1
    failed: set[tuple[int, int]] = set()
    path = [0]
    expanded = 0

    def alive(cur: int, visited: int) -> bool:
        rest = full & ~visited
        enter = rest | (1 << cur)
        leave = rest | 1
        for w in iter_bits(rest):
            if not in_bits[w] & enter or not out_bits[w] & leave:
                return False
        return True

    def go(cur: int, visited: int) -> bool:
        nonlocal expanded
        if visited == full:
            return bool(out_bits[cur] & 1)
        key = (cur, visited)
        if key in failed:
            return False
        expanded += 1
        if budget is not None and expanded > budget:
            raise _Budget
        if alive(cur, visited):
            rest = full & ~visited
            cands = sorted(iter_bits(out_bits[cur] & rest), key=lambda w: (out_bits[w] & rest).bit_count())
            for w in cands:
                path.append(w)
                if go(w, visited | (1 << w)):
                    return True
                path.pop()
        failed.add(key)
        return False

    return list(path) if go(0, 1) else None


def _one_factor(G: Digraph, rng: np.random.Generator | None) -> list[int] | None:
    adj = [list(G.out_neighbors(v)) for v in range(G.vertex_count)]
    if rng is not None:
        for a in adj:
            rng.shuffle(a)
    match_left, _ = hopcroft_karp(adj, G.vertex_count)
    if UNMATCHED in match_left:
        return None
    return match_left


def splice_merge(G: Digraph, succ: list[int], allowed=None) -> list[int]:
    """Greedily merge the cycles of the 1-factor ``succ`` by 2-edge exchanges.

    Replacing u->su and x->sx (different cycles) by u->sx and x->su joins the
    two cycles. ``allowed(u, v)`` restricts which new edges may be used.
    Mutates and returns ``succ``.
    """
    N = len(succ)
    cid = [-1] * N
    members: dict[int, list[int]] = {}
    for s in range(N):
        if cid[s] < 0:
            v = s
            cyc = []
            while cid[v] < 0:
                cid[v] = s
                cyc.append(v)
                v = succ[v]
            members[s] = cyc
    while len(members) > 1:
        merged = False
        # smallest cycles first: they are the hardest to absorb later
        for key in sorted(members, key=lambda k: (len(members[k]), k)):
            for u in members[key]:
                su = succ[u]
                for x in G.in_neighbors(su):
                    if cid[x] == key:
                        continue
                    sx = succ[x]
                    if G.has_edge(u, sx) and (allowed is None or (allowed(u, sx) and allowed(x, su))):
                        succ[u], succ[x] = sx, su
                        other = cid[x]
                        small, big = (key, other) if len(members[key]) < len(members[other]) else (other, key)
                        for v in members[small]:
                            cid[v] = big
                        members[big] += members.pop(small)
                        merged = True
                        break
                if merged:
                    break
            if merged:
                break
        if not merged:
            break
    return succ


def _cycle_from_succ(succ: Sequence[int]) -> list[int]:
    cyc = [0]
    while succ[cyc[-1]] != 0:
        cyc.append(succ[cyc[-1]])
    return cyc


@dataclass
class HamiltonSearch:
    cycle: list[int]
    method: str
    expansions: int = 0


def ghouila_houri_hamilton(
    G: Digraph, override: bool = False, budget: int = DEFAULT_BUDGET, seed: int = 0, restarts: int = 8
) -> list[int]:
    """Hamilton cycle of ``G`` as a vertex sequence starting at 0.

    The minimum semidegree condition is audited first; with ``override`` the
    search runs anyway. Up to EXACT_LIMIT vertices the answer is exact.
    Beyond that, random 1-factors are splice-merged and a budgeted DFS is the
    last resort.
    """
    return find_hamilton(G, override, budget, seed, restarts).cycle


def find_hamilton(
    G: Digraph, override: bool = False, budget: int = DEFAULT_BUDGET, seed: int = 0, restarts: int = 8
) -> HamiltonSearch:
    N = G.vertex_count
    delta = G.min_semidegree()
    if delta < gh_threshold(N) and not override:
        raise PreconditionViolated(
            f"minimum semidegree {delta} < {gh_threshold(N)}",
            {"min_semidegree": delta, "required": gh_threshold(N)},
        )
    if N == 1:
        raise HamiltonNotFound("a single vertex carries no cycle", exhaustive=True)
    if delta == 0 or not _strongly_connected(G):
        raise HamiltonNotFound("not strongly connected", exhaustive=True)
    if N <= EXACT_LIMIT:
        cyc = _dfs_cycle(G, None)
        if cyc is None:
            raise HamiltonNotFound("exhaustive search found no Hamilton cycle", exhaustive=True)
        return HamiltonSearch(cyc, "exact-dfs")
    rng = np.random.default_rng(seed)
    for attempt in range(restarts):
        succ = _one_factor(G, rng if attempt else None)
        if succ is None:
            raise HamiltonNotFound("no 1-factor, hence no Hamilton cycle", exhaustive=True)
        splice_merge(G, succ)
        cyc = _cycle_from_succ(succ)
        if len(cyc) == N:
            return HamiltonSearch(cyc, "factor-merge", attempt)
    try:
        cyc = _dfs_cycle(G, budget)
    except _Budget:
        raise HamiltonNotFound(f"budget of {budget} expansions exhausted", exhaustive=False) from None
    if cyc is None:
        raise HamiltonNotFound("exhaustive search found no Hamilton cycle", exhaustive=True)
    return HamiltonSearch(cyc, "budgeted-dfs")


def is_hamilton_cycle(G: Digraph, cycle: Sequence[int], virtual: Iterable[Edge] = ()) -> bool:
    virtual = set(virtual)
    if len(cycle) != G.vertex_count or len(set(cycle)) != len(cycle):
        return False
    return all(G.has_edge(u, v) or (u, v) in virtual for u, v in cycle_edges(cycle))


def _dense(vertices: Sequence[int], edges: Iterable[Edge]) -> tuple[Digraph, list[int]]:
    index = {v: i for i, v in enumerate(vertices)}
    return Digraph(len(vertices), ((index[u], index[v]) for u, v in edges)), list(vertices)


@dataclass
class BipartiteMatching:
    pairs: dict
    size: int
    side: int
    perfect: bool
    min_degree: int
    hall_violator: list | None = None

    @property
    def hall_guaranteed(self) -> bool:
        return 2 * self.min_degree >= self.side


def bipartite_perfect_matching(left: Sequence[Hashable], right: Sequence[Hashable], edges: Iterable[tuple]) -> BipartiteMatching:
    """Maximum matching between equal-size sides; perfect iff it saturates ``left``.

    When every vertex has degree at least half the side size a perfect
    matching must exist, and that guarantee is asserted.
    """
    if len(left) != len(right):
        raise ValueError("sides must have equal size")
    li = {a: i for i, a in enumerate(left)}
    ri = {b: i for i, b in enumerate(right)}
    adj: list[list[int]] = [[] for _ in left]
    rdeg = [0] * len(right)
    for a, b in edges:
        if a in li and b in ri:
            adj[li[a]].append(ri[b])
            rdeg[ri[b]] += 1
    match_left, match_right = hopcroft_karp(adj, len(right))
    pairs = {left[i]: right[j] for i, j in enumerate(match_left) if j != UNMATCHED}
    m = len(left)
    min_deg = min([len(a) for a in adj] + rdeg) if m else 0
    perfect = len(pairs) == m
    result = BipartiteMatching(pairs, len(pairs), m, perfect, min_deg)
    if not perfect:
        viol = hall_violator(adj, match_left, match_right)
        result.hall_violator = sorted((left[i] for i in viol), key=repr) if viol else None
    assert perfect or not result.hall_guaranteed, "degree condition violated Hall's guarantee"
    return result


# ---------------------------------------------------------------------------
# closers


@dataclass
class ClosingReport:
    cycle: list[int]
    audit: dict = field(default_factory=dict)
    stages: list = field(default_factory=list)


def _inner_cycle(H: Digraph, stage: str, seed: int, budget: int) -> tuple[list[int], dict]:
    meets = H.min_semidegree() >= gh_threshold(H.vertex_count)
    try:
        found = find_hamilton(H, override=True, budget=budget, seed=seed)
    except HamiltonNotFound as exc:
        raise ClosingError(stage, str(exc), {"exhaustive": exc.exhaustive, "gh_condition": meets}) from None
    return found.cycle, {
        "stage": stage,
        "vertices": H.vertex_count,
        "min_semidegree": H.min_semidegree(),
        "gh_condition": meets,
        "method": found.method,
    }


def _check_matching(M: Sequence[Edge], V3: set, V2: set) -> None:
    tails = [a for a, _ in M]
    heads = [b for _, b in M]
    if len(set(tails)) != len(M) or len(set(heads)) != len(M):
        raise PreconditionViolated("M is not a matching")
    if not set(tails) <= V3 or not set(heads) <= V2:
        raise PreconditionViolated("M must run from V3 to V2")


def gbeta_closing_audit(G: Digraph, fwd, bwd, V2, V3, M, eps) -> dict:
    """Degree conditions (D1)-(D4), part sizes and |M| at level ``eps``."""
    eps = rational(eps)
    n = len(V2)
    need = ceil_frac((1 - eps) * n)
    cap = (1 - 8 * eps) * n
    sets = {k: set(v) for k, v in (("fwd", fwd), ("bwd", bwd), ("v2", V2), ("v3", V3))}

    def dout(v, target):
        return sum(1 for u in G.out_neighbors(v) if u in target)

    def din(v, target):
        return sum(1 for u in G.in_neighbors(v) if u in target)

    worst = {}
    rules = {
        "D1": (sets["fwd"], sets["v2"], sets["v3"]),
        "D2": (sets["bwd"], sets["v3"], sets["v2"]),
        "D3": (sets["v2"], sets["bwd"] | sets["v3"], sets["fwd"] | sets["v3"]),
        "D4": (sets["v3"], sets["fwd"] | sets["v2"], sets["bwd"] | sets["v2"]),
    }
    for name, (group, outs, ins) in rules.items():
        vals = [min(dout(v, outs), din(v, ins)) for v in group]
        worst[name] = min(vals) if vals else None
    audit = {
        "n": n,
        "required_degree": need,
        "worst_degree": worst,
        "degree_ok": all(w is None or w >= need for w in worst.values()),
        "sizes_ok": len(fwd) <= cap and len(bwd) <= cap and len(V3) == n,
        "matching_ok": len(M) <= eps * n,
    }
    audit["ok"] = audit["degree_ok"] and audit["sizes_ok"] and audit["matching_ok"]
    return audit


def close_gbeta(
    G: Digraph,
    forward_v1: Iterable[int],
    backward_v1: Iterable[int],
    V2: Iterable[int],
    V3: Iterable[int],
    M: Sequence[Edge] = (),
    eps=Fraction(1, 10),
    strict: bool = True,
    seed: int = 0,
    budget: int = DEFAULT_BUDGET,
) -> ClosingReport:
    """Hamilton cycle on the four parts containing every pair of ``M``.

    Pairs of ``M`` need not be edges of ``G``; they are followed as prescribed
    (the assembly later replaces them by paths). With ``strict`` the degree
    audit must pass; otherwise a failing audit is recorded and the closing is
    attempted anyway.
    """
    fwd, bwd = sorted(forward_v1), sorted(backward_v1)
    V2, V3 = sorted(V2), sorted(V3)
    M = [tuple(e) for e in M]
    n = len(V2)
    if len(V3) != n or n == 0:
        raise PreconditionViolated("|V2| and |V3| must be equal and positive")
    set2, set3, setf, setb = set(V2), set(V3), set(fwd), set(bwd)
    _check_matching(M, set3, set2)
    if len(M) >= n:
        raise PreconditionViolated("M must leave a vertex of V3 unmatched")
    audit = gbeta_closing_audit(G, fwd, bwd, V2, V3, M, eps)
    if strict and not audit["ok"]:
        raise PreconditionViolated("closing audit failed", audit)
    report = ClosingReport([], audit)

    # back-matching V2 -> V3, acyclic together with M: chain a1 b1 a2 b2 ... ap bp r1
    mtail = {a: b for a, b in M}
    order3 = [a for a, _ in M] + [v for v in V3 if v not in mtail]
    back = {b: order3[i + 1] for i, (_, b) in enumerate(M)}
    spare3 = [order3[0]] + order3[len(M) + 1:]
    for b, a in zip([v for v in V2 if v not in back], spare3):
        back[b] = a
    back_inv = {a: b for b, a in back.items()}

    # G1 on fwd ∪ V3: contract the forward graph along the back-matching
    g1_vertices = fwd + V3
    g1_edges = set()
    for v in V3:
        for u in G.out_neighbors(v):
            if u in setf:
                g1_edges.add((v, u))
            elif u in set2 and back[u] != v:
                g1_edges.add((v, back[u]))
    for v in fwd:
        for u in G.out_neighbors(v):
            if u in set2:
                g1_edges.add((v, back[u]))
    # M1: images of M, a linear forest inside V3
    m1_succ = {a: back[b] for a, b in M}
    m1_pred = {w: a for a, w in m1_succ.items()}
    starts = [a for a in m1_succ if a not in m1_pred]
    paths = []
    for s in starts:
        p = [s]
        while p[-1] in m1_succ:
            p.append(m1_succ[p[-1]])
        paths.append(p)
    assert sum(len(p) - 1 for p in paths) == len(M), "M1 must be a linear forest"
    removed = {v for p in paths for v in p[:-1]}
    head_of = {p[-1]: p[0] for p in paths}  # y_i -> x_i
    g1p_vertices = [v for v in g1_vertices if v not in removed]
    keep = set(g1p_vertices)
    g1_in: dict[int, set] = {}
    for a, b in g1_edges:
        g1_in.setdefault(b, set()).add(a)
    g1p_edges = set()
    for u in g1p_vertices:
        source = head_of.get(u, u)
        for v in g1_in.get(source, ()):
            if v in keep and v != u:
                g1p_edges.add((v, u))
    H1, labels1 = _dense(g1p_vertices, g1p_edges)
    c1p, stage1 = _inner_cycle(H1, "G1'", seed, budget)
    report.stages.append(stage1)
    c1 = []
    for i in c1p:
        v = labels1[i]
        if v in head_of:
            path = next(p for p in paths if p[-1] == v)
            c1.extend(path)
        else:
            c1.append(v)
    assert len(c1) == len(g1_vertices)
    for a, b in cycle_edges(c1):
        assert (a, b) in g1_edges or m1_succ.get(a) == b, "de-contraction left G1"

    # F: forward forest of <=2-edge paths from V3 to V2
    f_succ = {}
    for a, b in cycle_edges(c1):
        f_succ[a] = back_inv[b] if b in set3 else b
    assert all(f_succ[a] == b for a, b in M), "F must contain M"
    fmap = {}  # w in V3 -> its path
    for w in V3:
        p = [w]
        while p[-1] in f_succ and p[-1] not in set2:
            p.append(f_succ[p[-1]])
        fmap[w] = p
    fwd_match = {w: p[-1] for w, p in fmap.items()}
    fwd_inv = {z: w for w, z in fwd_match.items()}
    assert len(fwd_inv) == n and sum(len(p) for p in fmap.values()) == n * 2 + len(fwd)

    # G2 on bwd ∪ V2: contract the backward graph along the forward matching
    g2_vertices = bwd + V2
    g2_edges = set()
    for v in V2:
        for u in G.out_neighbors(v):
            if u in setb:
                g2_edges.add((v, u))
            elif u in set3 and fwd_match[u] != v:
                g2_edges.add((v, fwd_match[u]))
    for v in bwd:
        for u in G.out_neighbors(v):
            if u in set3:
                g2_edges.add((v, fwd_match[u]))
    H2, labels2 = _dense(g2_vertices, g2_edges)
    c2, stage2 = _inner_cycle(H2, "G2", seed + 1, budget)
    report.stages.append(stage2)
    cycle = []
    for i in c2:
        v = labels2[i]
        if v in set2:
            cycle.extend(fmap[fwd_inv[v]])
        else:
            cycle.append(v)
    # rotate to start at the smallest vertex for a stable encoding
    k = cycle.index(min(cycle))
    cycle = cycle[k:] + cycle[:k]
    _verify_closing(G, cycle, fwd + bwd + V2 + V3, M)
    report.cycle = cycle
    return report


def _verify_closing(G: Digraph, cycle: Sequence[int], vertices: Sequence[int], M: Sequence[Edge]) -> None:
    if sorted(cycle) != sorted(vertices):
        raise ClosingError("verify", "cycle does not cover the vertex set exactly once")
    edges = set(cycle_edges(cycle))
    mset = set(M)
    for u, v in edges:
        if not G.has_edge(u, v) and (u, v) not in mset:
            raise ClosingError("verify", f"edge ({u},{v}) not in host")
    if not mset <= edges:
        raise ClosingError("verify", "cycle misses a prescribed pair")


def c3_closing_audit(G: Digraph, V1, V2, V3, M, eps) -> dict:
    eps = rational(eps)
    n = len(V2)
    need = ceil_frac((1 - eps) * n)
    classes = [set(V1), set(V2), set(V3)]
    worst = []
    for i in range(3):
        nxt, prv = classes[(i + 1) % 3], classes[(i - 1) % 3]
        vals = [
            min(sum(1 for u in G.out_neighbors(v) if u in nxt), sum(1 for u in G.in_neighbors(v) if u in prv))
            for v in classes[i]
        ]
        worst.append(min(vals) if vals else None)
    audit = {
        "n": n,
        "required_degree": need,
        "worst_degree": worst,
        "degree_ok": all(w is None or w >= need for w in worst),
        "sizes_ok": (1 - eps) * n <= len(V1) <= n and len(V3) == n,
    }
    audit["ok"] = audit["degree_ok"] and audit["sizes_ok"]
    return audit


def close_c3(
    G: Digraph,
    V1: Iterable[int],
    V2: Iterable[int],
    V3: Iterable[int],
    M: Sequence[Edge] = (),
    eps=Fraction(1, 10),
    strict: bool = True,
    seed: int = 0,
    budget: int = DEFAULT_BUDGET,
) -> ClosingReport:
    """Hamilton cycle through the prescribed V3 -> V2 pairs when |M| = |V2| - |V1|."""
    V1, V2, V3 = sorted(V1), sorted(V2), sorted(V3)
    M = [tuple(e) for e in M]
    n = len(V2)
    if len(V3) != n:
        raise PreconditionViolated("|V2| and |V3| must be equal")
    if len(M) != n - len(V1):
        raise PreconditionViolated(f"|M| = {len(M)} but n - |V1| = {n - len(V1)}")
    set2, set3 = set(V2), set(V3)
    _check_matching(M, set3, set2)
    audit = c3_closing_audit(G, V1, V2, V3, M, eps)
    if strict and not audit["ok"]:
        raise PreconditionViolated("closing audit failed", audit)
    report = ClosingReport([], audit)
    used3 = {a for a, _ in M}
    used2 = {b for _, b in M}
    free3 = [v for v in V3 if v not in used3]
    free2 = [v for v in V2 if v not in used2]
    set1 = set(V1)
    m1 = bipartite_perfect_matching(
        free3, V1, ((a, b) for a in free3 for b in G.out_neighbors(a) if b in set1)
    )
    if not m1.perfect:
        raise ClosingError("M1", "no perfect matching V3 -> V1", {"hall_violator": m1.hall_violator})
    m2 = bipartite_perfect_matching(
        V1, free2, ((a, b) for a in V1 for b in G.out_neighbors(a) if b in set2)
    )
    if not m2.perfect:
        raise ClosingError("M2", "no perfect matching V1 -> V2", {"hall_violator": m2.hall_violator})
    paths = {a: [a, b] for a, b in M}
    for a in free3:
        mid = m1.pairs[a]
        paths[a] = [a, mid, m2.pairs[mid]]
    ends = {p[-1]: a for a, p in paths.items()}  # y -> x
    tilde = {a: p[-1] for a, p in paths.items()}  # x -> y
    g_edges = set()
    for u in V2:
        for v in G.out_neighbors(u):
            if v in set3 and tilde[v] != u:
                g_edges.add((u, tilde[v]))
    H, labels = _dense(V2, g_edges)
    ct, stage = _inner_cycle(H, "G~", seed, budget)
    report.stages.append(stage)
    cycle = []
    for i in ct:
        cycle.extend(paths[ends[labels[i]]])
    k = cycle.index(min(cycle))
    cycle = cycle[k:] + cycle[:k]
    _verify_closing(G, cycle, V1 + V2 + V3, M)
    report.cycle = cycle
    return report
