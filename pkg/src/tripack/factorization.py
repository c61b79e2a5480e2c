"""1-factors of regular digraphs, full 1-factorizations, and merging a cycle
factor into few long cycles."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .digraph import CycleFactor, Digraph, GraphError, TripartiteDigraph, count_pairs
from .kernels import UNMATCHED, hopcroft_karp


def _graph(G) -> Digraph:
    return G.graph if isinstance(G, TripartiteDigraph) else G


def _regular(g: Digraph) -> int:
    d = g.regular_degree()
    if d is None:
        raise GraphError("regular", "input digraph is not regular")
    if d < 1:
        raise GraphError("regular", "input digraph has degree 0")
    return d


def _factor(g: Digraph, rng: np.random.Generator | None = None) -> CycleFactor:
    # perfect matching of the split graph v_out -> v_in
    adj = [list(g.out_neighbors(v)) for v in range(g.vertex_count)]
    if rng is not None:
        for a in adj:
            rng.shuffle(a)
    match_left, _ = hopcroft_karp(adj, g.vertex_count)
    if UNMATCHED in match_left:
        raise GraphError("regular", "split graph has no perfect matching")
    return CycleFactor(match_left)


def extract_one_factor(G, seed: int | None = None) -> CycleFactor:
    """A spanning 1-regular subgraph; deterministic unless a seed shuffles the neighbour order."""
    g = _graph(G)
    _regular(g)
    return _factor(g, np.random.default_rng(seed) if seed is not None else None)


def one_factorization(G, seed: int | None = None) -> list[CycleFactor]:
    """d edge-disjoint 1-factors whose union is E(G)."""
    g = _graph(G)
    d = _regular(g)
    rng = np.random.default_rng(seed) if seed is not None else None
    factors = []
    for _ in range(d):
        F = _factor(g, rng)
        factors.append(F)
        g = g.without(F.edges)
    assert g.edge_count == 0
    return factors


@dataclass(frozen=True)
class FactorTargets:
    """Soft targets for a cycle cover of a d-regular digraph on N vertices."""

    max_cycles: int
    min_length: float
    oriented: bool

    @classmethod
    def for_graph(cls, g: Digraph) -> FactorTargets:
        d = _regular(g)
        N = g.vertex_count
        oriented = g.mode == "oriented"
        count = N // (2 * d + 1) if oriented else N // (d + 1)
        return cls(max(count, 1), d / 2, oriented)


@dataclass
class CycleCover:
    cycles: list[list[int]]
    targets: FactorTargets
    attempts: int = 1
    warnings: list[str] = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.cycles)

    @property
    def min_length(self) -> int:
        return min(len(c) for c in self.cycles)

    @property
    def count_ok(self) -> bool:
        return self.count <= self.targets.max_cycles

    @property
    def length_ok(self) -> bool:
        return self.min_length >= self.targets.min_length

    @property
    def targets_met(self) -> bool:
        return self.count_ok and self.length_ok

    def factor(self) -> CycleFactor:
        N = sum(len(c) for c in self.cycles)
        succ = [0] * N
        for c in self.cycles:
            for i, v in enumerate(c):
                succ[v] = c[(i + 1) % len(c)]
        return CycleFactor(succ)

    def as_dict(self) -> dict:
        return {
            "cycles": self.cycles,
            "count": self.count,
            "min_length": self.min_length,
            "targets": {
                "max_cycles": self.targets.max_cycles,
                "min_length": self.targets.min_length,
                "oriented": self.targets.oriented,
            },
            "count_ok": self.count_ok,
            "length_ok": self.length_ok,
            "attempts": self.attempts,
            "warnings": self.warnings,
        }


def _splice_pass(g: Digraph, succ: list[int]) -> bool:
    """Perform the first feasible splice over cycle pairs by decreasing combined length."""
    cycles = CycleFactor(succ).cycles()
    if len(cycles) < 2:
        return False
    pairs = sorted(
        ((i, j) for i in range(len(cycles)) for j in range(i + 1, len(cycles))),
        key=lambda p: (-(len(cycles[p[0]]) + len(cycles[p[1]])), p),
    )
    for i, j in pairs:
        target = set(cycles[j])
        for u in cycles[i]:
            v = succ[u]
            # x -> y on cycle j with u -> y and x -> v both in g
            for x in g.in_neighbors(v):
                if x in target and g.has_edge(u, succ[x]):
                    y = succ[x]
                    succ[u], succ[x] = y, v
                    return True
    return False


def merge_into_few_cycles(G, seed: int = 0, restarts: int = 8, targets: FactorTargets | None = None) -> CycleCover:
    """Cycle cover from a 1-factor by repeated 2-edge exchanges.

    A splice replaces u->v (cycle C1) and x->y (cycle C2) by u->y and x->v,
    joining C1 and C2. When the soft targets are missed, randomized restarts
    draw fresh 1-factors; the best cover (fewest cycles, then longest
    shortest cycle) is returned with a warning listing the misses.
    """
    g = _graph(G)
    if targets is None:
        targets = FactorTargets.for_graph(g)
    rng = np.random.default_rng(seed)
    best = None
    attempts = 0
    for attempt in range(restarts + 1):
        attempts += 1
        F = _factor(g, rng if attempt else None)
        succ = list(F.succ)
        while _splice_pass(g, succ):
            CycleFactor(succ)  # 1-regularity after every splice
        cover = CycleCover(CycleFactor(succ).cycles(), targets)
        if best is None or (cover.count, -cover.min_length) < (best.count, -best.min_length):
            best = cover
        if best.targets_met:
            break
    best.attempts = attempts
    if not best.count_ok:
        best.warnings.append(f"cycle count {best.count} above target {best.targets.max_cycles}")
    if not best.length_ok:
        best.warnings.append(f"shortest cycle {best.min_length} below target {best.targets.min_length}")
    return best


def factor_balance(G: TripartiteDigraph, F: CycleFactor) -> bool:
    """Bidirectional balance of a spanning factor of a balanced tripartite digraph."""
    return count_pairs(G.parts, F.edges).balanced
