"""Graph families: the C3 blow-up, the G_beta models, the reversed-triangle
obstruction, and seeded random regular instances."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator

import numpy as np

from .digraph import (
    Digraph,
    Edge,
    GraphError,
    Tripartition,
    TripartiteDigraph,
    TripartiteTournament,
    rational,
)


def rng_for(seed: int) -> np.random.Generator:
    if seed is None or seed < 0 or seed >= 1 << 64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class GBetaModel:
    """A member of G_beta.

    ``roles`` names the classes playing V1, V2 and V3 (identity by default).
    ``forward_v1`` receives from V3 and sends to V2; ``backward_v1`` receives
    from V2 and sends to V3. ``ccw_graph`` holds the pairs (x, y), x in V3,
    y in V2, oriented x -> y; every other V2-V3 pair is oriented V2 -> V3.
    """

    parts: Tripartition
    forward_v1: frozenset[int]
    backward_v1: frozenset[int]
    beta: Fraction
    ccw_graph: frozenset[Edge]
    roles: tuple[int, int, int] = (1, 2, 3)

    def __post_init__(self):
        n = self.parts.n
        if sorted(self.roles) != [1, 2, 3]:
            raise GraphError("roles", f"roles {self.roles} is not a permutation of the classes")
        if self.forward_v1 | self.backward_v1 != set(self.v1) or self.forward_v1 & self.backward_v1:
            raise GraphError("v1_split", "forward and backward V1 must partition V1")
        if self.beta * n != len(self.backward_v1):
            raise GraphError("beta", f"|backward V1| = {len(self.backward_v1)} but beta*n = {self.beta * n}")
        if not 0 <= self.beta <= Fraction(1, 2):
            raise GraphError("beta", f"beta = {self.beta} outside [0, 1/2]")
        k = len(self.backward_v1)
        out_deg = {x: 0 for x in self.v3}
        in_deg = {y: 0 for y in self.v2}
        for x, y in self.ccw_graph:
            if x not in out_deg or y not in in_deg:
                raise GraphError("ccw_graph", f"pair ({x},{y}) is not V3 -> V2")
            out_deg[x] += 1
            in_deg[y] += 1
        if any(d != k for d in out_deg.values()) or any(d != k for d in in_deg.values()):
            raise GraphError("ccw_graph", f"counterclockwise graph is not {k}-regular")

    @property
    def v1(self) -> range:
        return self.parts.block(self.roles[0])

    @property
    def v2(self) -> range:
        return self.parts.block(self.roles[1])

    @property
    def v3(self) -> range:
        return self.parts.block(self.roles[2])

    def edges(self) -> list[Edge]:
        out = []
        for v in self.v1:
            if v in self.forward_v1:
                out += [(x, v) for x in self.v3] + [(v, y) for y in self.v2]
            else:
                out += [(y, v) for y in self.v2] + [(v, x) for x in self.v3]
        for x in self.v3:
            for y in self.v2:
                out.append((x, y) if (x, y) in self.ccw_graph else (y, x))
        return out

    def tournament(self) -> TripartiteTournament:
        return TripartiteTournament(Digraph(self.parts.vertex_count, self.edges(), "oriented"), self.parts)

    def as_dict(self) -> dict:
        return {
            "n": self.parts.n,
            "roles": list(self.roles),
            "beta": str(self.beta),
            "forward_v1": sorted(self.forward_v1),
            "backward_v1": sorted(self.backward_v1),
            "ccw_graph": [list(e) for e in sorted(self.ccw_graph)],
        }


def role_permutation(parts: Tripartition, roles: tuple[int, int, int]) -> list[int]:
    """Vertex map sending the class playing role i onto block i, order kept within classes."""
    n = parts.n
    perm = [0] * parts.vertex_count
    for i, c in enumerate(roles):
        for j, v in enumerate(parts.block(c)):
            perm[v] = i * n + j
    return perm


def relabel_to_roles(T: TripartiteDigraph, model: GBetaModel):
    """Isomorphic copies of T and the model in which the roles are the class blocks.

    Returns ``(T', model', perm)`` with ``perm[old] = new``.
    """
    perm = role_permutation(T.parts, model.roles)
    graph = Digraph(T.vertex_count, ((perm[u], perm[v]) for u, v in T.edges), T.graph.mode)
    T2 = type(T)(graph, T.parts)
    m2 = GBetaModel(
        T.parts,
        frozenset(perm[v] for v in model.forward_v1),
        frozenset(perm[v] for v in model.backward_v1),
        model.beta,
        frozenset((perm[x], perm[y]) for x, y in model.ccw_graph),
    )
    return T2, m2, perm


def blowup_edges(n: int) -> list[Edge]:
    return [(c * n + i, ((c + 1) % 3) * n + j) for c in range(3) for i in range(n) for j in range(n)]


def blowup_c3(n: int) -> TripartiteTournament:
    return TripartiteTournament(Digraph(3 * n, blowup_edges(n), "oriented"), Tripartition(n))


def c3_model(parts: Tripartition) -> GBetaModel:
    """The unique member of G_0."""
    return GBetaModel(parts, frozenset(parts.block(1)), frozenset(), Fraction(0), frozenset())


def gen_t_triangle(n: int) -> TripartiteTournament:
    """C3(n) with the triangle on the first vertex of each class reversed."""
    return blowup_c3(n).reversed([(0, n), (n, 2 * n), (2 * n, 0)])


def random_regular_bipartite(n: int, k: int, rng: np.random.Generator, switches: int | None = None) -> set[Edge]:
    """k-regular bipartite graph on [0, n) x [0, n): circulant then random 2-switches."""
    edges = {(i, (i + s) % n) for i in range(n) for s in range(k)}
    if 0 < k < n:
        lst = sorted(edges)
        for _ in range(switches if switches is not None else 10 * n * k):
            i, j = rng.integers(len(lst), size=2)
            (a, b), (c, d) = lst[i], lst[j]
            if a == c or b == d or (a, d) in edges or (c, b) in edges:
                continue
            edges -= {(a, b), (c, d)}
            edges |= {(a, d), (c, b)}
            lst[i], lst[j] = (a, d), (c, b)
    return edges


def gen_gbeta(n: int, beta, seed: int) -> tuple[GBetaModel, TripartiteTournament]:
    beta = rational(beta)
    if not 0 <= beta <= Fraction(1, 2):
        raise GraphError("beta", f"beta = {beta} outside [0, 1/2]")
    if (beta * n).denominator != 1:
        raise GraphError("beta", f"beta*n = {beta * n} is not an integer")
    k = int(beta * n)
    rng = rng_for(seed)
    parts = Tripartition(n)
    back = frozenset(int(v) for v in rng.choice(n, size=k, replace=False)) if k else frozenset()
    ccw = random_regular_bipartite(n, k, rng)
    model = GBetaModel(
        parts,
        frozenset(parts.block(1)) - back,
        back,
        beta,
        frozenset((2 * n + x, n + y) for x, y in ccw),
    )
    return model, model.tournament()


def _find_short_cycle(out: list[list[int]], out_sets: list[set[int]], N: int, rng) -> list[int] | None:
    v = int(rng.integers(N))
    u = out[v][rng.integers(len(out[v]))]
    w = out[u][rng.integers(len(out[u]))]
    if v in out_sets[w]:
        return [v, u, w]
    if not out[w]:
        return None
    x = out[w][rng.integers(len(out[w]))]
    if x not in (v, u) and v in out_sets[x]:
        return [v, u, w, x]
    return None


def reverse_random_cycles(
    T: TripartiteTournament, steps: int, seed: int, every: int = 1
) -> Iterator[TripartiteTournament]:
    """Reverse ``steps`` random directed 3- or 4-cycles, yielding the tournament every ``every`` steps.

    Reversing a directed cycle in an oriented graph keeps every in- and
    out-degree, so regularity is invariant along the chain.
    """
    rng = rng_for(seed)
    N = T.vertex_count
    out = [list(T.graph.out_neighbors(v)) for v in range(N)]
    out_sets = [set(o) for o in out]
    done = 0
    while done < steps:
        cyc = _find_short_cycle(out, out_sets, N, rng)
        if cyc is None:
            continue
        for i in range(len(cyc)):
            a, b = cyc[i], cyc[(i + 1) % len(cyc)]
            out_sets[a].discard(b)
            out[a].remove(b)
            out_sets[b].add(a)
            out[b].append(a)
        done += 1
        if done % every and done != steps:
            continue
        yield TripartiteTournament(
            Digraph(N, ((a, b) for a in range(N) for b in out[a]), "oriented"), T.parts
        )


def gen_random_regular_tournament(n: int, seed: int, steps: int | None = None) -> TripartiteTournament:
    if steps is None:
        steps = 20 * n * n
    T = blowup_c3(n)
    for T in reverse_random_cycles(T, steps, seed, every=steps or 1):
        pass
    return T


def gen_random_regular_tripartite_digraph(n: int, d: int, seed: int, switches: int | None = None) -> TripartiteDigraph:
    """d-regular tripartite digraph (n <= d <= 2n) in general mode.

    Built from d edge-disjoint cycle factors of the complete tripartite digraph:
    the shift permutations i -> i+s on each clockwise class pair for s < n and
    on each counterclockwise class pair for the remaining d - n factors, under
    random relabelings of the classes; then degree-preserving 2-switches.
    """
    if not n <= d <= 2 * n:
        raise GraphError("degree", f"need n <= d <= 2n, got n={n}, d={d}")
    rng = rng_for(seed)
    labels = [rng.permutation(n) for _ in range(3)]

    def vid(c, i):
        return c * n + int(labels[c][i % n])

    edges = set()
    for s in range(n):
        for c in range(3):
            for i in range(n):
                edges.add((vid(c, i), vid((c + 1) % 3, i + s)))
    for s in range(d - n):
        for c in range(3):
            for i in range(n):
                edges.add((vid(c, i), vid((c + 2) % 3, i + s)))
    lst = sorted(edges)
    for _ in range(switches if switches is not None else 10 * len(lst)):
        i, j = rng.integers(len(lst), size=2)
        (a, b), (c, e) = lst[i], lst[j]
        if a == c or b == e or a // n != c // n or b // n != e // n:
            continue
        if (a, e) in edges or (c, b) in edges:
            continue
        edges -= {(a, b), (c, e)}
        edges |= {(a, e), (c, b)}
        lst[i], lst[j] = (a, e), (c, b)
    return TripartiteDigraph(Digraph(3 * n, edges, "general"), Tripartition(n))


def complete_tripartite_digraph(n: int) -> TripartiteDigraph:
    N = 3 * n
    return TripartiteDigraph(
        Digraph(N, ((u, v) for u in range(N) for v in range(N) if u // n != v // n)), Tripartition(n)
    )


def disconnected_example(n: int) -> TripartiteDigraph:
    """Two vertex-disjoint complete tripartite digraphs on halves of each class: n-regular, not strongly connected."""
    if n % 2:
        raise GraphError("class_size", "n must be even")
    h = n // 2
    edges = []
    for u in range(3 * n):
        for v in range(3 * n):
            if u // n != v // n and (u % n < h) == (v % n < h):
                edges.append((u, v))
    return TripartiteDigraph(Digraph(3 * n, edges), Tripartition(n))


def perturb(T: TripartiteTournament, k: int, seed: int, edges: Iterable[Edge] | None = None) -> TripartiteTournament:
    """Reverse k distinct edges, uniformly chosen unless ``edges`` forces them."""
    if edges is not None:
        chosen = list(edges)
        if len(chosen) != k or len(set(chosen)) != k:
            raise GraphError("perturb", "forced edge list must hold k distinct edges")
        return T.reversed(chosen)
    if not 0 <= k <= T.graph.edge_count:
        raise GraphError("perturb", f"k = {k} outside [0, {T.graph.edge_count}]")
    rng = rng_for(seed)
    pool = sorted(T.edges)
    picks = rng.choice(len(pool), size=k, replace=False) if k else []
    return T.reversed(pool[i] for i in picks)
