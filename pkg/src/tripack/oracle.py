"""Brute-force referees for tiny instances.

Nothing here imports the modules it referees: adjacency is rebuilt from the raw
edge list, cycles are encoded as edge bitmasks over a private edge index, and
thresholds are compared as exact fractions instead of ceilings.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations, permutations

HAMILTON_CAP = 15
PACKING_CAP = 12
GBETA_CAP = 3
EXPANSION_CAP = 12


class OracleCapError(ValueError):
    pass


def _raw(G):
    graph = getattr(G, "graph", G)
    return graph.vertex_count, sorted(graph.edges)


def _frac(x) -> Fraction:
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x) if not isinstance(x, str) else Fraction(x)


def enumerate_hamilton_cycles(G, limit: int | None = None) -> list[tuple[int, ...]]:
    """All directed Hamilton cycles, each rotated to start at vertex 0.

    With ``limit`` the enumeration stops after that many cycles.
    """
    count, edges = _raw(G)
    if count > HAMILTON_CAP:
        raise OracleCapError(f"{count} vertices exceeds cap {HAMILTON_CAP}")
    if count < 2:
        return []
    succ = {v: set() for v in range(count)}
    pred = {v: set() for v in range(count)}
    for u, v in edges:
        succ[u].add(v)
        pred[v].add(u)
    found = []
    path = [0]
    left = set(range(1, count))

    def dead_end(tail):
        # some unvisited vertex can no longer be entered or left
        for w in left:
            if not (pred[w] & (left | {tail})):
                return True
            if not (succ[w] & (left | {0})):
                return True
        return False

    def go(tail):
        if limit is not None and len(found) >= limit:
            return
        if not left:
            if 0 in succ[tail]:
                found.append(tuple(path))
            return
        if dead_end(tail):
            return
        for w in sorted(succ[tail] & left):
            left.discard(w)
            path.append(w)
            go(w)
            path.pop()
            left.add(w)

    go(0)
    return sorted(found)


def is_hamiltonian(G) -> bool:
    return bool(enumerate_hamilton_cycles(G, limit=1))


def max_hamilton_packing_exact(G, cap: int = PACKING_CAP) -> tuple[int, list[tuple[int, ...]]]:
    """Maximum number of pairwise edge-disjoint Hamilton cycles.

    Every Hamilton cycle leaves vertex 0 along exactly one edge, so a packing
    picks at most one cycle per out-edge of 0; the search walks those groups in
    order and bounds by the number of groups that still have a compatible cycle.
    """
    count, edges = _raw(G)
    if count > min(cap, PACKING_CAP):
        raise OracleCapError(f"{count} vertices exceeds cap {min(cap, PACKING_CAP)}")
    index = {e: i for i, e in enumerate(edges)}
    cycles = enumerate_hamilton_cycles(G)
    groups: dict[int, list[tuple[int, tuple]]] = {}
    for c in cycles:
        mask = 0
        for i in range(len(c)):
            mask |= 1 << index[(c[i], c[(i + 1) % len(c)])]
        groups.setdefault(c[1], []).append((mask, c))
    order = [groups[k] for k in sorted(groups)]
    best: list = []
    chosen: list = []

    def go(i, used, lists):
        nonlocal best
        if len(chosen) > len(best):
            best = list(chosen)
        if i == len(lists):
            return
        live = sum(1 for lst in lists[i:] if lst)
        if len(chosen) + live <= len(best):
            return
        for mask, c in lists[i]:
            rest = [[(m, cc) for m, cc in lst if not m & mask] for lst in lists[i + 1:]]
            chosen.append(c)
            go(i + 1, used | mask, lists[: i + 1] + rest)
            chosen.pop()
        go(i + 1, used, lists)

    go(0, 0, order)
    return len(best), best


def exact_nearest_gbeta(T) -> int:
    """Minimum |E(T) symmetric-difference E(G')| over every member G' of every 𝒢_β family."""
    count, edges = _raw(T)
    if count % 3:
        raise ValueError("vertex count must be divisible by 3")
    n = count // 3
    if n > GBETA_CAP:
        raise OracleCapError(f"class size {n} exceeds cap {GBETA_CAP}")
    have = set(edges)
    blocks = [list(range(c * n, (c + 1) * n)) for c in range(3)]
    best = None
    for a, b, c in permutations(range(3)):
        one, two, three = blocks[a], blocks[b], blocks[c]
        cross = [(x, y) for x in three for y in two]
        for k in range(0, n // 2 + 1):
            bipartites = []
            for chosen in combinations(range(len(cross)), k * n):
                sel = [cross[i] for i in chosen]
                if all(sum(1 for x, _ in sel if x == t) == k for t in three) and all(
                    sum(1 for _, y in sel if y == t) == k for t in two
                ):
                    bipartites.append(set(sel))
            for back in combinations(one, k):
                back = set(back)
                fixed = set()
                for v in one:
                    if v in back:
                        fixed |= {(w, v) for w in two} | {(v, w) for w in three}
                    else:
                        fixed |= {(w, v) for w in three} | {(v, w) for w in two}
                for ccw in bipartites:
                    model = fixed | ccw | {(y, x) for x in three for y in two if (x, y) not in ccw}
                    dist = len(have ^ model)
                    if best is None or dist < best:
                        best = dist
    return best


def exact_expansion_check(G, nu, tau) -> bool:
    """Naive robust (nu, tau)-outexpander decision over every admissible subset."""
    count, edges = _raw(G)
    if count > EXPANSION_CAP:
        raise OracleCapError(f"{count} vertices exceeds cap {EXPANSION_CAP}")
    nu, tau = _frac(nu), _frac(tau)
    into = {v: [] for v in range(count)}
    for u, v in edges:
        into[v].append(u)
    for size in range(count + 1):
        if not (tau * count <= size <= (1 - tau) * count):
            continue
        for S in combinations(range(count), size):
            members = set(S)
            robust = [v for v in range(count) if sum(1 for u in into[v] if u in members) >= nu * count]
            if len(robust) < size + nu * count:
                return False
    return True
