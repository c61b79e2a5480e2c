"""Robust outneighbourhoods, exact and heuristic robust-outexpander checks, and
the four-part structure read off a non-expanding set."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import numpy as np

from .digraph import Digraph, GraphError, TripartiteDigraph, TripartiteTournament, bits, ceil_frac, iter_bits, rational

EXACT_CUTOFF = 24
CHUNK = 1 << 16


@dataclass(frozen=True)
class ExpansionParams:
    nu: Fraction
    tau: Fraction

    def __post_init__(self):
        object.__setattr__(self, "nu", rational(self.nu))
        object.__setattr__(self, "tau", rational(self.tau))
        if not (0 < self.nu <= self.tau < Fraction(1, 2)):
            raise ValueError(f"need 0 < nu <= tau < 1/2, got nu={self.nu}, tau={self.tau}")

    def window(self, N: int) -> tuple[int, int]:
        """Admissible |S| range [ceil(tau N), floor((1 - tau) N)]."""
        return ceil_frac(self.tau * N), math.floor((1 - self.tau) * N)

    def threshold(self, N: int) -> int:
        return ceil_frac(self.nu * N)


@dataclass(frozen=True)
class ExpansionWitness:
    S: frozenset[int]
    rn_size: int
    deficiency: int

    def as_dict(self) -> dict:
        return {"S": sorted(self.S), "size": len(self.S), "rn_size": self.rn_size, "deficiency": self.deficiency}


@dataclass(frozen=True)
class ExpansionDecision:
    expander: bool
    witness: ExpansionWitness | None
    exact: bool
    subsets_checked: int = 0

    def as_dict(self) -> dict:
        return {
            "decision": "expander" if self.expander else "non-expander",
            "exact": self.exact,
            "witness": self.witness.as_dict() if self.witness else None,
            "subsets_checked": self.subsets_checked,
        }


def _graph(G) -> Digraph:
    return G.graph if isinstance(G, TripartiteDigraph) else G


def robust_outneighbourhood(G, S: Iterable[int], nu) -> set[int]:
    g = _graph(G)
    thr = ceil_frac(rational(nu) * g.vertex_count)
    mask = bits(S)
    return {v for v in range(g.vertex_count) if (g.in_bits[v] & mask).bit_count() >= thr}


def _deficiency(g: Digraph, mask: int, thr: int) -> tuple[int, int]:
    rn = sum(1 for b in g.in_bits if (b & mask).bit_count() >= thr)
    return mask.bit_count() + thr - rn, rn


def validate_witness(G, S: Iterable[int], p: ExpansionParams) -> ExpansionWitness:
    """Recompute RN from scratch and return the witness, or raise if S does not witness non-expansion."""
    g = _graph(G)
    S = frozenset(S)
    N = g.vertex_count
    lo, hi = p.window(N)
    if not lo <= len(S) <= hi:
        raise GraphError("witness", f"|S| = {len(S)} outside [{lo}, {hi}]")
    rn = robust_outneighbourhood(g, S, p.nu)
    deficiency = len(S) + p.threshold(N) - len(rn)
    if deficiency < 1:
        raise GraphError("witness", f"S expands (deficiency {deficiency})")
    return ExpansionWitness(S, len(rn), deficiency)


def _scan(adj: np.ndarray, N: int, start: int, stop: int, lo: int, hi: int, thr: int):
    shifts = np.arange(N, dtype=np.int64)
    masks = np.arange(start, stop, dtype=np.int64)
    pop = np.bitwise_count(masks)
    keep = (pop >= lo) & (pop <= hi)
    masks, pop = masks[keep], pop[keep].astype(np.int64)
    if masks.size == 0:
        return None, 0
    member = ((masks[:, None] >> shifts) & 1).astype(np.float32)
    indeg = member @ adj
    rn = (indeg >= thr).sum(axis=1)
    deficiency = pop + thr - rn
    i = int(np.argmax(deficiency))
    return (int(deficiency[i]), int(masks[i]), int(rn[i])), int(masks.size)


def is_robust_outexpander_exact(G, p: ExpansionParams, cutoff: int = EXACT_CUTOFF, threads: int = 1) -> ExpansionDecision:
    """Exhaustive decision over every admissible S.

    On failure the witness has the largest deficiency (the most violating set),
    ties going to the smallest bitmask.
    """
    g = _graph(G)
    N = g.vertex_count
    if N > cutoff:
        raise GraphError("exact_cutoff", f"{N} vertices exceeds the exhaustive cutoff {cutoff}; use find_non_expansion_witness")
    lo, hi = p.window(N)
    thr = p.threshold(N)
    adj = g.adjacency_matrix().astype(np.float32)
    ranges = [(s, min(s + CHUNK, 1 << N)) for s in range(0, 1 << N, CHUNK)]
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(lambda r: _scan(adj, N, r[0], r[1], lo, hi, thr), ranges))
    else:
        results = [_scan(adj, N, a, b, lo, hi, thr) for a, b in ranges]
    best = None
    checked = 0
    for res, count in results:
        checked += count
        if res is not None and (best is None or res[0] > best[0] or (res[0] == best[0] and res[1] < best[1])):
            best = res
    if best is None or best[0] < 1:
        return ExpansionDecision(True, None, True, checked)
    witness = validate_witness(g, iter_bits(best[1]), p)
    return ExpansionDecision(False, witness, True, checked)


def _seed_sets(G, hints) -> list[int]:
    seeds = [bits(h) for h in hints]
    if isinstance(G, TripartiteDigraph):
        parts = G.parts
        blocks = [parts.block_bits(c) for c in (1, 2, 3)]
        seeds += blocks + [blocks[0] | blocks[1], blocks[1] | blocks[2], blocks[0] | blocks[2]]
        if isinstance(G, TripartiteTournament) and G.is_regular:
            from .structure import nearest_gbeta

            report = nearest_gbeta(G)
            seeds += [bits(s) for s in report.nonexpanding_sets()]
    return seeds


def find_non_expansion_witness(
    G, p: ExpansionParams, budget: int = 10_000, seed: int = 0, hints: Iterable[Iterable[int]] = ()
) -> ExpansionWitness | None:
    """Local search for a set S with deficiency >= 1; never returns an unverified set.

    Starts from the hint sets, the class unions and (for regular tournaments)
    the non-expanding sets of the nearest G_beta model, then from
    ``budget // 1000`` random sets. Each step takes the best add/remove move
    (largest deficiency, smallest vertex on ties) while it improves.
    ``budget`` caps the number of deficiency evaluations.
    """
    g = _graph(G)
    N = g.vertex_count
    lo, hi = p.window(N)
    thr = p.threshold(N)
    if lo > hi:
        return None
    rng = np.random.default_rng(seed)
    starts = _seed_sets(G, hints)
    for _ in range(max(1, budget // 1000)):
        size = int(rng.integers(lo, hi + 1))
        starts.append(bits(int(v) for v in rng.choice(N, size=size, replace=False)))
    # score every start before climbing, so a direct hit survives a small budget
    scored = []
    for mask in starts:
        if lo <= mask.bit_count() <= hi:
            scored.append((_deficiency(g, mask, thr)[0], mask))
    used = len(scored)
    best: tuple[int, int] | None = None

    def keep(d, mask):
        nonlocal best
        if d >= 1 and (best is None or d > best[0] or (d == best[0] and mask < best[1])):
            best = (d, mask)

    for cur, mask in scored:
        keep(cur, mask)
    for cur, mask in sorted(scored, key=lambda t: (-t[0], t[1])):
        while used < budget:
            move = None
            for v in range(N):
                cand = mask ^ (1 << v)
                if not lo <= cand.bit_count() <= hi:
                    continue
                d, _ = _deficiency(g, cand, thr)
                used += 1
                if d > cur and (move is None or d > move[0]):
                    move = (d, cand)
            if move is None:
                break
            cur, mask = move
        keep(cur, mask)
        if used >= budget:
            break
    if best is None:
        return None
    return validate_witness(g, iter_bits(best[1]), p)


@dataclass(frozen=True)
class Partition4:
    V11: frozenset[int]
    V12: frozenset[int]
    V21: frozenset[int]
    V22: frozenset[int]

    def __post_init__(self):
        parts = (self.V11, self.V12, self.V21, self.V22)
        if sum(len(x) for x in parts) != len(frozenset().union(*parts)):
            raise GraphError("partition4", "parts are not disjoint")

    @property
    def row1(self) -> frozenset[int]:
        return self.V11 | self.V12

    @property
    def row2(self) -> frozenset[int]:
        return self.V21 | self.V22

    @property
    def col1(self) -> frozenset[int]:
        return self.V11 | self.V21

    @property
    def col2(self) -> frozenset[int]:
        return self.V12 | self.V22

    def covers(self, N: int) -> bool:
        return self.row1 | self.row2 == frozenset(range(N))

    def as_dict(self) -> dict:
        return {k: sorted(getattr(self, k)) for k in ("V11", "V12", "V21", "V22")}


def extract_partition4(G, w: ExpansionWitness, p: ExpansionParams) -> Partition4:
    """Rows split by membership in S, columns by membership in RN(S)."""
    g = _graph(G)
    w = validate_witness(g, w.S, p)
    rn = frozenset(robust_outneighbourhood(g, w.S, p.nu))
    everything = frozenset(range(g.vertex_count))
    P = Partition4(w.S & rn, w.S - rn, rn - w.S, everything - w.S - rn)
    for name in ("row1", "row2", "col1", "col2"):
        if not getattr(P, name):
            raise GraphError("degenerate_witness", f"{name} of the partition is empty")
    return P


def _edges_between(g: Digraph, A: frozenset[int], B: frozenset[int]) -> int:
    mask = bits(B)
    return sum((g.out_bits[u] & mask).bit_count() for u in A)


def verify_partition4(G, P: Partition4, nu, alpha=None) -> dict:
    """Evaluate properties (i)-(iii) of the non-expander partition with slacks."""
    g = _graph(G)
    d = g.regular_degree()
    if d is None:
        raise GraphError("regular", "partition audit needs a regular digraph")
    N = g.vertex_count
    if not P.covers(N):
        raise GraphError("partition4", "parts do not cover the vertex set")
    nu = rational(nu)
    alpha = rational(alpha) if alpha is not None else Fraction(d, N)
    root = math.sqrt(nu)
    sizes = {"V1*": len(P.row1), "V*1": len(P.col1), "V2*": len(P.row2), "V*2": len(P.col2)}
    smallest = min(sizes.values())
    bound_i = d - root * N
    bound_i_loose = d - 3 * root * N
    cross = _edges_between(g, P.row1, P.col2) + _edges_between(g, P.row2, P.col1)
    bound_ii = 4 * nu * N * N
    gap = abs(len(P.V12) - len(P.V21))
    bound_iii = 4 * nu / alpha * N
    return {
        "degree": d,
        "alpha": str(alpha),
        "i": {"sizes": sizes, "bound": bound_i, "slack": smallest - bound_i, "pass": smallest >= bound_i},
        "i_loose": {"bound": bound_i_loose, "slack": smallest - bound_i_loose, "pass": smallest >= bound_i_loose},
        "ii": {"value": cross, "bound": float(bound_ii), "slack": float(bound_ii - cross), "pass": cross <= bound_ii},
        "iii": {"value": gap, "bound": float(bound_iii), "slack": float(bound_iii - gap), "pass": gap <= bound_iii},
        "pass": smallest >= bound_i and cross <= bound_ii and gap <= bound_iii,
    }
