"""Bipartite matching and min-cost flow kernels shared by the structural modules."""

from __future__ import annotations

import heapq
from collections import deque
from typing import Sequence

UNMATCHED = -1
INF = float("inf")


def hopcroft_karp(adj: Sequence[Sequence[int]], right_size: int) -> tuple[list[int], list[int]]:
    """Maximum matching of the bipartite graph with left vertex ``a`` adjacent to ``adj[a]``.

    Returns ``(match_left, match_right)`` with ``UNMATCHED`` for free vertices.
    Neighbour lists are scanned in the given order, so the result is
    deterministic for a fixed input.
    """
    left_size = len(adj)
    match_left = [UNMATCHED] * left_size
    match_right = [UNMATCHED] * right_size
    # cheap greedy start
    for a in range(left_size):
        for b in adj[a]:
            if match_right[b] == UNMATCHED:
                match_left[a] = b
                match_right[b] = a
                break
    dist = [0] * left_size
    while True:
        queue = deque()
        for a in range(left_size):
            if match_left[a] == UNMATCHED:
                dist[a] = 0
                queue.append(a)
            else:
                dist[a] = -1
        found = False
        while queue:
            a = queue.popleft()
            for b in adj[a]:
                a2 = match_right[b]
                if a2 == UNMATCHED:
                    found = True
                elif dist[a2] < 0:
                    dist[a2] = dist[a] + 1
                    queue.append(a2)
        if not found:
            return match_left, match_right
        pos = [0] * left_size
        for root in range(left_size):
            if match_left[root] != UNMATCHED:
                continue
            # iterative layered DFS from a free left vertex
            stack = [root]
            while stack:
                a = stack[-1]
                nbrs = adj[a]
                advanced = False
                while pos[a] < len(nbrs):
                    b = nbrs[pos[a]]
                    pos[a] += 1
                    a2 = match_right[b]
                    if a2 == UNMATCHED:
                        # augment along the stack
                        for i in range(len(stack) - 1, -1, -1):
                            u = stack[i]
                            nxt = match_left[u]
                            match_left[u] = b
                            match_right[b] = u
                            b = nxt
                        stack = []
                        advanced = True
                        break
                    if dist[a2] == dist[a] + 1:
                        stack.append(a2)
                        advanced = True
                        break
                if not advanced:
                    dist[a] = -1
                    stack.pop()


def hall_violator(adj: Sequence[Sequence[int]], match_left: Sequence[int], match_right: Sequence[int]) -> set[int] | None:
    """A left set S with |N(S)| < |S|, read off a maximum matching, or None if the matching is left-perfect."""
    free = [a for a, b in enumerate(match_left) if b == UNMATCHED]
    if not free:
        return None
    seen_left = {free[0]}
    seen_right = set()
    queue = deque([free[0]])
    while queue:
        a = queue.popleft()
        for b in adj[a]:
            if b not in seen_right:
                seen_right.add(b)
                a2 = match_right[b]
                if a2 != UNMATCHED and a2 not in seen_left:
                    seen_left.add(a2)
                    queue.append(a2)
    return seen_left


class FlowInfeasible(ValueError):
    pass


def min_cost_flow(node_count: int, arcs: Sequence[tuple[int, int, int, int]], source: int, sink: int, amount: int) -> tuple[list[int], int]:
    """Send ``amount`` units from source to sink at minimum cost.

    ``arcs`` are ``(tail, head, capacity, cost)`` with non-negative costs.
    Successive shortest paths with Dijkstra on reduced costs. Returns the flow
    on each arc (input order) and the total cost.
    """
    head, cap, cost, nxt = [], [], [], []
    first = [-1] * node_count
    for u, v, c, w in arcs:
        if w < 0:
            raise ValueError("negative arc cost")
        for a, b, cc, ww in ((u, v, c, w), (v, u, 0, -w)):
            head.append(b)
            cap.append(cc)
            cost.append(ww)
            nxt.append(first[a])
            first[a] = len(head) - 1
    potential = [0] * node_count
    sent = 0
    total = 0
    while sent < amount:
        dist = [INF] * node_count
        via = [-1] * node_count
        dist[source] = 0
        heap = [(0, source)]
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist[u]:
                continue
            e = first[u]
            while e != -1:
                if cap[e] > 0:
                    v = head[e]
                    nd = d + cost[e] + potential[u] - potential[v]
                    if nd < dist[v]:
                        dist[v] = nd
                        via[v] = e
                        heapq.heappush(heap, (nd, v))
                e = nxt[e]
        if dist[sink] == INF:
            raise FlowInfeasible(f"only {sent} of {amount} units can be routed")
        for v in range(node_count):
            if dist[v] < INF:
                potential[v] += dist[v]
        push = amount - sent
        v = sink
        while v != source:
            e = via[v]
            push = min(push, cap[e])
            v = head[e ^ 1]
        v = sink
        while v != source:
            e = via[v]
            cap[e] -= push
            cap[e ^ 1] += push
            total += push * cost[e]
            v = head[e ^ 1]
        sent += push
    flows = [cap[2 * i + 1] for i in range(len(arcs))]
    return flows, total


def max_agreement_regular_subgraph(left: Sequence[int], right: Sequence[int], k: int, prefer) -> set[tuple[int, int]]:
    """k-regular bipartite subgraph of the complete bipartite graph left x right
    containing as many pairs with ``prefer(a, b)`` true as possible."""
    m = len(left)
    if len(right) != m or not 0 <= k <= m:
        raise ValueError("need equal sides and 0 <= k <= side size")
    if k == 0:
        return set()
    source, sink = 2 * m, 2 * m + 1
    arcs = [(source, i, k, 0) for i in range(m)]
    arcs += [(m + j, sink, k, 0) for j in range(m)]
    pair_arcs = []
    for i, a in enumerate(left):
        for j, b in enumerate(right):
            pair_arcs.append((a, b))
            arcs.append((i, m + j, 1, 0 if prefer(a, b) else 1))
    flows, _ = min_cost_flow(2 * m + 2, arcs, source, sink, k * m)
    return {pair_arcs[i] for i, f in enumerate(flows[2 * m:]) if f}
