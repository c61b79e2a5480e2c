"""Immutable digraphs on dense vertex ids, tripartitions and degree-one edge structures.

Vertices are integers ``0 .. N-1``. A balanced tripartition with class size ``n``
puts class ``c`` (1, 2 or 3) on the block ``[(c-1)n, cn)``, so membership is
arithmetic. Adjacency is held twice: as per-vertex Python-int bitsets for O(1)
edge queries and fast set algebra, and as sorted neighbour tuples for iteration.
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

import numpy as np

ABSENT = -1

Edge = tuple[int, int]


class GraphError(ValueError):
    """Raised when an input violates a structural invariant.

    ``invariant`` names the violated rule so callers (and the CLI) can report it
    without parsing the message.
    """

    def __init__(self, invariant: str, message: str):
        super().__init__(f"{invariant}: {message}")
        self.invariant = invariant


def rational(x) -> Fraction:
    """Exact rational from int, Fraction, decimal string or float (via its repr)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(str(x))


def ceil_frac(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


def bits(vertices: Iterable[int]) -> int:
    mask = 0
    for v in vertices:
        mask |= 1 << v
    return mask


def iter_bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


class Digraph:
    """Immutable simple digraph. ``mode='oriented'`` forbids 2-cycles."""

    __slots__ = ("vertex_count", "mode", "edges", "out_bits", "in_bits", "_out", "_in")

    def __init__(self, vertex_count: int, edges: Iterable[Edge], mode: str = "general"):
        if vertex_count < 1:
            raise GraphError("vertex_count", f"need at least one vertex, got {vertex_count}")
        if mode not in ("general", "oriented"):
            raise GraphError("mode", f"unknown mode {mode!r}")
        edge_set = frozenset((int(u), int(v)) for u, v in edges)
        out_bits = [0] * vertex_count
        in_bits = [0] * vertex_count
        for u, v in edge_set:
            if not (0 <= u < vertex_count and 0 <= v < vertex_count):
                raise GraphError("vertex_range", f"edge ({u},{v}) leaves 0..{vertex_count - 1}")
            if u == v:
                raise GraphError("no_loops", f"loop at {u}")
            out_bits[u] |= 1 << v
            in_bits[v] |= 1 << u
        if mode == "oriented":
            for u, v in edge_set:
                if (out_bits[v] >> u) & 1:
                    raise GraphError("oriented", f"both ({u},{v}) and ({v},{u}) present")
        self.vertex_count = vertex_count
        self.mode = mode
        self.edges = edge_set
        self.out_bits = tuple(out_bits)
        self.in_bits = tuple(in_bits)
        self._out = tuple(tuple(iter_bits(b)) for b in out_bits)
        self._in = tuple(tuple(iter_bits(b)) for b in in_bits)

    def __repr__(self) -> str:
        return f"Digraph(vertex_count={self.vertex_count}, edges={len(self.edges)}, mode={self.mode!r})"

    def __eq__(self, other) -> bool:
        return isinstance(other, Digraph) and self.vertex_count == other.vertex_count and self.edges == other.edges

    def __hash__(self) -> int:
        return hash((self.vertex_count, self.edges))

    def has_edge(self, u: int, v: int) -> bool:
        return bool((self.out_bits[u] >> v) & 1)

    def out_neighbors(self, v: int) -> tuple[int, ...]:
        return self._out[v]

    def in_neighbors(self, v: int) -> tuple[int, ...]:
        return self._in[v]

    def out_degree(self, v: int) -> int:
        return len(self._out[v])

    def in_degree(self, v: int) -> int:
        return len(self._in[v])

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def min_semidegree(self) -> int:
        return min(min(len(a), len(b)) for a, b in zip(self._out, self._in))

    def regular_degree(self) -> int | None:
        """Common in/out degree if the digraph is regular, else None."""
        d = len(self._out[0])
        for a, b in zip(self._out, self._in):
            if len(a) != d or len(b) != d:
                return None
        return d

    def adjacency_matrix(self) -> np.ndarray:
        m = np.zeros((self.vertex_count, self.vertex_count), dtype=bool)
        for u, v in self.edges:
            m[u, v] = True
        return m

    def without(self, edges: Iterable[Edge]) -> Digraph:
        drop = set(edges)
        return Digraph(self.vertex_count, (e for e in self.edges if e not in drop), self.mode)

    def with_edges(self, edges: Iterable[Edge]) -> Digraph:
        return Digraph(self.vertex_count, self.edges | set(edges), self.mode)

    def restricted(self, keep: Iterable[Edge]) -> Digraph:
        """Spanning subgraph on the given edges, which must belong to this digraph."""
        keep = frozenset(keep)
        missing = keep - self.edges
        if missing:
            raise GraphError("subgraph", f"edge {min(missing)} not in host")
        return Digraph(self.vertex_count, keep, self.mode)

    def induced_bits(self, mask: int) -> Digraph:
        return Digraph(self.vertex_count, ((u, v) for u, v in self.edges if (mask >> u) & 1 and (mask >> v) & 1), self.mode)


def degrees(G: Digraph, v: int) -> tuple[int, int]:
    if not 0 <= v < G.vertex_count:
        raise GraphError("vertex_range", f"vertex {v} out of range")
    return G.out_degree(v), G.in_degree(v)


@dataclass(frozen=True)
class Tripartition:
    """Balanced tripartition into blocks of size ``n``."""

    n: int

    def __post_init__(self):
        if self.n < 1:
            raise GraphError("class_size", f"class size must be positive, got {self.n}")

    @property
    def vertex_count(self) -> int:
        return 3 * self.n

    def class_of(self, v: int) -> int:
        return v // self.n + 1

    def block(self, c: int) -> range:
        return range((c - 1) * self.n, c * self.n)

    def block_bits(self, c: int) -> int:
        return ((1 << self.n) - 1) << ((c - 1) * self.n)


class EdgeClass(enum.Enum):
    CLOCKWISE = "clockwise"
    COUNTERCLOCKWISE = "counterclockwise"


def edge_class(parts: Tripartition, u: int, v: int) -> EdgeClass:
    step = (parts.class_of(v) - parts.class_of(u)) % 3
    if step == 1:
        return EdgeClass.CLOCKWISE
    if step == 2:
        return EdgeClass.COUNTERCLOCKWISE
    raise GraphError("cross_class", f"edge ({u},{v}) lies inside a class")


def is_clockwise(parts: Tripartition, u: int, v: int) -> bool:
    return (v // parts.n - u // parts.n) % 3 == 1


class TripartiteDigraph:
    """A digraph whose edges all cross a balanced tripartition."""

    def __init__(self, graph: Digraph, parts: Tripartition):
        if graph.vertex_count != parts.vertex_count:
            raise GraphError("balanced", f"{graph.vertex_count} vertices but class size {parts.n}")
        n = parts.n
        for u, v in graph.edges:
            if u // n == v // n:
                raise GraphError("cross_class", f"edge ({u},{v}) lies inside class {u // n + 1}")
        self.graph = graph
        self.parts = parts

    @property
    def n(self) -> int:
        return self.parts.n

    @property
    def edges(self) -> frozenset[Edge]:
        return self.graph.edges

    @property
    def vertex_count(self) -> int:
        return self.graph.vertex_count

    def has_edge(self, u: int, v: int) -> bool:
        return self.graph.has_edge(u, v)

    def regular_degree(self) -> int | None:
        return self.graph.regular_degree()

    def with_graph(self, graph: Digraph) -> TripartiteDigraph:
        return TripartiteDigraph(graph, self.parts)

    def __repr__(self) -> str:
        return f"{type(self).__name__}(n={self.n}, edges={self.graph.edge_count})"


class TripartiteTournament(TripartiteDigraph):
    """Orientation of the complete tripartite graph K_3(n)."""

    def __init__(self, graph: Digraph, parts: Tripartition):
        if graph.mode != "oriented":
            graph = Digraph(graph.vertex_count, graph.edges, "oriented")
        super().__init__(graph, parts)
        if graph.edge_count != 3 * parts.n * parts.n:
            raise GraphError("orientation_complete", f"{graph.edge_count} edges, expected {3 * parts.n ** 2}")

    @property
    def is_regular(self) -> bool:
        return self.graph.regular_degree() == self.n

    def reversed(self, edges: Iterable[Edge]) -> TripartiteTournament:
        flip = set(edges)
        missing = flip - self.graph.edges
        if missing:
            raise GraphError("edge_absent", f"cannot reverse absent edge {min(missing)}")
        new = [(v, u) if (u, v) in flip else (u, v) for u, v in self.graph.edges]
        return TripartiteTournament(Digraph(self.vertex_count, new, "oriented"), self.parts)


def classify_edge(T: TripartiteDigraph, e: Edge) -> EdgeClass:
    u, v = e
    if not T.has_edge(u, v):
        raise GraphError("edge_absent", f"edge {e} not present")
    return edge_class(T.parts, u, v)


PAIRS = ((1, 2), (2, 3), (3, 1), (3, 2), (2, 1), (1, 3))


@dataclass(frozen=True)
class BipartiteCounts:
    """Census e(V_i, V_j) over the six ordered class pairs."""

    counts: dict

    @property
    def clockwise(self) -> tuple[int, int, int]:
        c = self.counts
        return c[(1, 2)], c[(2, 3)], c[(3, 1)]

    @property
    def counterclockwise(self) -> tuple[int, int, int]:
        c = self.counts
        return c[(3, 2)], c[(2, 1)], c[(1, 3)]

    @property
    def clockwise_balanced(self) -> bool:
        return len(set(self.clockwise)) == 1

    @property
    def counterclockwise_balanced(self) -> bool:
        return len(set(self.counterclockwise)) == 1

    @property
    def balanced(self) -> bool:
        return self.clockwise_balanced and self.counterclockwise_balanced

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def as_dict(self) -> dict:
        return {
            "counts": {f"{i}{j}": self.counts[(i, j)] for i, j in PAIRS},
            "clockwise_balanced": self.clockwise_balanced,
            "counterclockwise_balanced": self.counterclockwise_balanced,
        }


def count_pairs(parts: Tripartition, edges: Iterable[Edge]) -> BipartiteCounts:
    counts = {p: 0 for p in PAIRS}
    n = parts.n
    for u, v in edges:
        counts[(u // n + 1, v // n + 1)] += 1
    return BipartiteCounts(counts)


def bipartite_counts(T: TripartiteDigraph, F: Iterable[Edge]) -> BipartiteCounts:
    F = list(F)
    for u, v in F:
        if not T.has_edge(u, v):
            raise GraphError("subgraph", f"edge ({u},{v}) not in host")
    return count_pairs(T.parts, F)


def edit_distance(G: TripartiteDigraph, H: TripartiteDigraph) -> int:
    if G.parts != H.parts:
        raise GraphError("partition_mismatch", f"class sizes {G.n} and {H.n}")
    return len(G.edges ^ H.edges)


class LinearForest:
    """Vertex-disjoint directed paths stored as successor/predecessor arrays."""

    __slots__ = ("vertex_count", "succ", "pred")

    def __init__(self, vertex_count: int, edges: Iterable[Edge] = ()):
        succ = [ABSENT] * vertex_count
        pred = [ABSENT] * vertex_count
        for u, v in edges:
            if u == v:
                raise GraphError("no_loops", f"loop at {u}")
            if succ[u] != ABSENT:
                raise GraphError("out_degree", f"vertex {u} has two out-edges")
            if pred[v] != ABSENT:
                raise GraphError("in_degree", f"vertex {v} has two in-edges")
            succ[u] = v
            pred[v] = u
        # every vertex on a cycle has a predecessor, so walking back from path
        # starts visits exactly the acyclic part
        seen = 0
        for v in range(vertex_count):
            if pred[v] == ABSENT:
                while v != ABSENT:
                    seen += 1
                    v = succ[v]
        if seen != vertex_count:
            cyc = next(v for v in range(vertex_count) if _on_cycle(succ, pred, v))
            raise GraphError("acyclic", f"directed cycle through {cyc}")
        self.vertex_count = vertex_count
        self.succ = succ
        self.pred = pred

    @classmethod
    def empty(cls, vertex_count: int) -> LinearForest:
        return cls(vertex_count)

    @property
    def edges(self) -> list[Edge]:
        return [(u, v) for u, v in enumerate(self.succ) if v != ABSENT]

    @property
    def edge_count(self) -> int:
        return sum(1 for v in self.succ if v != ABSENT)

    def vertices(self) -> set[int]:
        """Vertices incident with at least one edge."""
        return {v for v in range(self.vertex_count) if self.succ[v] != ABSENT or self.pred[v] != ABSENT}

    def paths(self) -> list[list[int]]:
        """Non-trivial paths, each listed from its start."""
        out = []
        for v in range(self.vertex_count):
            if self.pred[v] == ABSENT and self.succ[v] != ABSENT:
                p = [v]
                while self.succ[p[-1]] != ABSENT:
                    p.append(self.succ[p[-1]])
                out.append(p)
        return out

    def out_degree(self, v: int) -> int:
        return int(self.succ[v] != ABSENT)

    def in_degree(self, v: int) -> int:
        return int(self.pred[v] != ABSENT)

    def without(self, edges: Iterable[Edge]) -> LinearForest:
        drop = set(edges)
        return LinearForest(self.vertex_count, (e for e in self.edges if e not in drop))

    def with_edges(self, edges: Iterable[Edge]) -> LinearForest:
        return LinearForest(self.vertex_count, self.edges + list(edges))

    def __repr__(self) -> str:
        return f"LinearForest(vertex_count={self.vertex_count}, edges={self.edge_count})"


def _on_cycle(succ: Sequence[int], pred: Sequence[int], v: int) -> bool:
    if succ[v] == ABSENT:
        return False
    u = succ[v]
    for _ in range(len(succ)):
        if u == v:
            return True
        if u == ABSENT:
            return False
        u = succ[u]
    return False


class CycleFactor:
    """Spanning 1-regular subdigraph given by a fixed-point-free successor permutation."""

    __slots__ = ("succ",)

    def __init__(self, succ: Sequence[int]):
        succ = list(succ)
        if sorted(succ) != list(range(len(succ))):
            raise GraphError("one_regular", "successor map is not a permutation")
        if any(s == v for v, s in enumerate(succ)):
            raise GraphError("no_loops", "fixed point in successor map")
        self.succ = succ

    @classmethod
    def from_edges(cls, vertex_count: int, edges: Iterable[Edge]) -> CycleFactor:
        succ = [ABSENT] * vertex_count
        for u, v in edges:
            if succ[u] != ABSENT:
                raise GraphError("one_regular", f"vertex {u} has two out-edges")
            succ[u] = v
        if ABSENT in succ:
            raise GraphError("one_regular", f"vertex {succ.index(ABSENT)} has no out-edge")
        return cls(succ)

    @property
    def vertex_count(self) -> int:
        return len(self.succ)

    @property
    def edges(self) -> list[Edge]:
        return list(enumerate(self.succ))

    def cycles(self) -> list[list[int]]:
        seen = [False] * len(self.succ)
        out = []
        for s in range(len(self.succ)):
            if not seen[s]:
                cyc = []
                v = s
                while not seen[v]:
                    seen[v] = True
                    cyc.append(v)
                    v = self.succ[v]
                out.append(cyc)
        return out

    def __repr__(self) -> str:
        return f"CycleFactor(vertex_count={len(self.succ)}, cycles={len(self.cycles())})"


def cycle_edges(cycle: Sequence[int]) -> list[Edge]:
    return [(cycle[i], cycle[(i + 1) % len(cycle)]) for i in range(len(cycle))]


# JSON graph format: {"n": class size, "mode": ..., "edges": [[u, v], ...]}


def graph_to_json(T: TripartiteDigraph) -> dict:
    return {"n": T.n, "mode": T.graph.mode, "edges": [list(e) for e in sorted(T.edges)]}


def graph_from_json(obj) -> TripartiteDigraph:
    """Parse and validate the JSON graph format.

    Returns a TripartiteTournament when the edge set orients every cross-class
    pair exactly once, otherwise a TripartiteDigraph.
    """
    if not isinstance(obj, dict):
        raise GraphError("format", "graph must be a JSON object")
    for key in ("n", "mode", "edges"):
        if key not in obj:
            raise GraphError("format", f"missing key {key!r}")
    n = obj["n"]
    if not isinstance(n, int) or isinstance(n, bool):
        raise GraphError("class_size", "n must be an integer")
    edges = obj["edges"]
    if not isinstance(edges, list):
        raise GraphError("format", "edges must be a list")
    pairs = []
    for e in edges:
        if not (isinstance(e, list) and len(e) == 2 and all(isinstance(x, int) and not isinstance(x, bool) for x in e)):
            raise GraphError("format", f"malformed edge {e!r}")
        pairs.append((e[0], e[1]))
    if len(set(pairs)) != len(pairs):
        raise GraphError("simple", "duplicate edge")
    parts = Tripartition(n)
    graph = Digraph(3 * n, pairs, obj["mode"])
    if graph.mode == "oriented" and graph.edge_count == 3 * n * n:
        return TripartiteTournament(graph, parts)
    return TripartiteDigraph(graph, parts)


def dumps_graph(T: TripartiteDigraph) -> str:
    return json.dumps(graph_to_json(T), separators=(",", ":"))


def host_hash(T: TripartiteDigraph) -> str:
    """Content hash of the canonical JSON serialization."""
    return hashlib.sha256(dumps_graph(T).encode()).hexdigest()
