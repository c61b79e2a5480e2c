"""Command-line interface: graphs travel as JSON on stdin/stdout, reports go to
stdout as JSON and a one-line summary goes to stderr.

Exit status: 0 success, 1 soft audit failure or shortfall, 2 hard error,
64 usage error. Randomized commands require an explicit ``--seed``.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from fractions import Fraction

import numpy as np

from . import __version__
from .decomposer import PackingCertificate, approx_decompose_oriented, decompose_directed, verify_packing
from .digraph import Digraph, GraphError, LinearForest, TripartiteTournament, dumps_graph, graph_from_json
from .expansion import ExpansionParams, extract_partition4, find_non_expansion_witness, is_robust_outexpander_exact, verify_partition4
from .factorization import merge_into_few_cycles, one_factorization
from .forests import (
    PipelineParams,
    balanced_covers,
    clean_forests,
    cover_exceptional_c3,
    cover_exceptional_gbeta,
    endpoint_profile,
    partition_host,
    path_cover,
)
from .generators import (
    blowup_c3,
    c3_model,
    gen_gbeta,
    gen_random_regular_tournament,
    gen_random_regular_tripartite_digraph,
    gen_t_triangle,
    relabel_to_roles,
)
from .hamiltonicity import bipartite_perfect_matching, ghouila_houri_hamilton
from .kernels import min_cost_flow
from .structure import nearest_gbeta

OK, SOFT_FAIL, HARD_ERROR, USAGE = 0, 1, 2, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _emit(obj) -> None:
    json.dump(obj, sys.stdout, default=_jsonable, separators=(",", ":"))
    sys.stdout.write("\n")


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


def _say(message: str) -> None:
    print(message, file=sys.stderr)


def _load_graph(path: str | None):
    text = open(path).read() if path and path != "-" else sys.stdin.read()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphError("json", f"input is not JSON: {exc}") from None
    return graph_from_json(obj)


def _need_seed(args) -> int:
    if args.seed is None:
        raise UsageError(f"{args.command} is randomized; pass --seed explicitly")
    return args.seed


def _tournament(T):
    if not isinstance(T, TripartiteTournament):
        raise GraphError("tournament", "this command needs a tripartite tournament")
    return T


# ---- gen -----------------------------------------------------------------


def cmd_gen(args) -> int:
    kind = args.family
    if kind == "c3":
        T = blowup_c3(args.n)
    elif kind == "ttriangle":
        T = gen_t_triangle(args.n)
    elif kind == "gbeta":
        _, T = gen_gbeta(args.n, args.beta, _need_seed(args))
    elif kind == "random-tournament":
        T = gen_random_regular_tournament(args.n, _need_seed(args), args.steps)
    else:
        if args.d is None:
            raise UsageError("random-digraph needs --d")
        T = gen_random_regular_tripartite_digraph(args.n, args.d, _need_seed(args))
    sys.stdout.write(dumps_graph(T) + "\n")
    _say(f"generated {kind}: n={T.n}, {T.graph.edge_count} edges")
    return OK


# ---- analyze ---------------------------------------------------------------


def cmd_analyze(args) -> int:
    G = _load_graph(args.graph)
    if args.what == "structure":
        report = nearest_gbeta(_tournament(G))
        _emit(report.as_dict())
        _say(f"nearest G_beta: beta={report.model.beta}, distance={report.distance}, epsilon={report.epsilon}")
        return OK
    p = ExpansionParams(args.nu, args.tau)
    if args.exact:
        dec = is_robust_outexpander_exact(G, p, threads=args.threads)
        out = dec.as_dict()
        witness = dec.witness
    else:
        witness = find_non_expansion_witness(G, p, budget=args.budget, seed=_need_seed(args))
        out = {"decision": "non-expander" if witness else "no-witness-found", "exact": False,
               "witness": witness.as_dict() if witness else None}
    if witness is not None:
        out["slack"] = -witness.deficiency
        if G.regular_degree() is not None:
            try:
                P = extract_partition4(G, witness, p)
                out["partition4"] = P.as_dict()
                out["partition4_audit"] = verify_partition4(G, P, p.nu)
            except GraphError as exc:
                out["partition4_error"] = str(exc)
    _emit(out)
    _say(f"expansion: {out['decision']}")
    return OK


# ---- factorize ---------------------------------------------------------------


def cmd_factorize(args) -> int:
    G = _load_graph(args.graph)
    if args.merge:
        cover = merge_into_few_cycles(G, seed=_need_seed(args), restarts=args.restarts)
        _emit(cover.as_dict())
        _say(f"cycle cover with {cover.count} cycles, shortest {cover.min_length}")
        return OK if cover.targets_met else SOFT_FAIL
    factors = one_factorization(G, seed=args.seed)
    _emit({"factors": [F.cycles() for F in factors], "count": len(factors)})
    _say(f"1-factorization into {len(factors)} factors")
    return OK


# ---- forests -------------------------------------------------------------------


def _params(args, **overrides) -> PipelineParams:
    data = {}
    if getattr(args, "params", None):
        with open(args.params) as fh:
            data = json.load(fh)
    for key in ("epsilon", "gamma", "delta", "eta", "K", "ell", "slack"):
        value = getattr(args, key, None)
        if value is not None:
            data[key] = value
    data.update(overrides)
    return PipelineParams.from_dict(data)


def _forest_json(F: LinearForest, inverse=None) -> list:
    if inverse is None:
        return [list(e) for e in F.edges]
    return sorted([inverse[u], inverse[v]] for u, v in F.edges)


def _inverse(perm):
    inv = [0] * len(perm)
    for old, new in enumerate(perm):
        inv[new] = old
    return inv


def _family_report(family, inverse) -> dict:
    out = family.as_dict()
    out["forests"] = [_forest_json(F, inverse) for F in family.forests]
    return out


def cmd_forests(args) -> int:
    G = _load_graph(args.graph)
    seed = _need_seed(args) if args.op in ("cover", "clean", "partition", "path-cover", "balanced") else args.seed
    params = _params(args, seed=seed) if seed is not None else _params(args)
    if args.op == "path-cover":
        count = args.count or 1
        d = G.regular_degree() or G.graph.min_semidegree()
        family = path_cover(G.graph, d, count, seed=seed)
        _emit(family.as_dict())
        _say(f"path cover: {len(family)} forests, shortfall {family.shortfall}")
        return OK if family.shortfall == 0 else SOFT_FAIL
    if args.op == "partition":
        hp = partition_host(G, params, seed)
        _emit(hp.as_dict())
        soft = all(v if isinstance(v, bool) else v.get("pass", True) for k, v in hp.audit.items() if k.startswith("P"))
        _say(f"host partition: {len(hp.hosts)} hosts, leftover {len(hp.leftover)}")
        return OK if soft else SOFT_FAIL
    T = _tournament(G)
    report = nearest_gbeta(T)
    T2, model, perm = relabel_to_roles(T, report.model)
    inverse = _inverse(perm)
    if args.op == "endpoints":
        if not args.forest:
            raise UsageError("endpoints needs --forest FILE holding an edge list")
        with open(args.forest) as fh:
            edges = [tuple(e) for e in json.load(fh)]
        F = LinearForest(T.vertex_count, edges)
        _emit(endpoint_profile(T, F))
        return OK
    if args.op == "balanced":
        count = args.count or 1
        family = balanced_covers(T2.graph, T2, model, params, [frozenset()] * count, seed=seed)
        _emit(_family_report(family, inverse))
        _say(f"balanced covers: {len(family)} forests")
        return OK
    working = model if model.beta > 0 else c3_model(T2.parts)
    cover = cover_exceptional_gbeta if model.beta > 0 else cover_exceptional_c3
    family = cover(T2, working, params)
    if args.op == "clean":
        family, heavy = clean_forests(T2, working, family, params)
        out = _family_report(family, inverse)
        out["heavy"] = sorted(inverse[v] for v in heavy)
    else:
        out = _family_report(family, inverse)
    out["covered"] = sorted(inverse[v] for v in family.covered)
    _emit(out)
    _say(f"{args.op}: {len(family)} forests, shortfall {family.shortfall}")
    return OK if family.shortfall == 0 else SOFT_FAIL


# ---- decompose / verify ------------------------------------------------------------


def cmd_decompose(args) -> int:
    G = _load_graph(args.graph)
    seed = _need_seed(args)
    if args.mode == "directed":
        cert = decompose_directed(G, eps=args.eps, seed=seed, time_limit=args.time_limit)
        complete = cert.audit.get("complete", False)
    else:
        params = _params(args, seed=seed, delta=args.delta) if args.params else None
        cert = approx_decompose_oriented(_tournament(G), args.delta, seed=seed, params=params, time_limit=args.time_limit)
        complete = cert.audit.get("target_met", False)
    if args.trace:
        with open(args.trace, "w") as fh:
            json.dump(cert.trace.as_list(), fh, default=_jsonable, indent=1)
    _emit(cert.as_dict())
    _say(f"{cert.label}: {cert.count} verified Hamilton cycles" + ("" if complete else " (shortfall)"))
    return OK if complete else SOFT_FAIL


def cmd_verify(args) -> int:
    G = _load_graph(args.graph)
    with open(args.cert) as fh:
        cert = PackingCertificate.from_dict(json.load(fh))
    report = verify_packing(G, cert)
    _emit(report)
    if report["valid"]:
        _say(f"certificate valid: {report['count']} cycles")
        return OK
    first = report["problems"][0]
    _say(f"certificate invalid: {first}")
    return HARD_ERROR


# ---- oracle ------------------------------------------------------------------------


def cmd_oracle(args) -> int:
    from . import oracle

    G = _load_graph(args.graph)
    if args.op == "hamilton-cycles":
        cycles = oracle.enumerate_hamilton_cycles(G.graph)
        _emit({"count": len(cycles), "cycles": [list(c) for c in cycles]})
    elif args.op == "max-packing":
        k, cycles = oracle.max_hamilton_packing_exact(G.graph)
        _emit({"k": k, "cycles": [list(c) for c in cycles]})
    elif args.op == "nearest-gbeta":
        _emit({"distance": oracle.exact_nearest_gbeta(_tournament(G))})
    else:
        _emit({"expander": oracle.exact_expansion_check(G.graph, args.nu, args.tau)})
    return OK


# ---- bench -------------------------------------------------------------------------


def _time(fn) -> float:
    start = time.perf_counter()
    fn()
    return time.perf_counter() - start


def cmd_bench(args) -> int:
    seed = _need_seed(args)
    rng = np.random.default_rng(seed)
    writer = csv.writer(sys.stdout)
    writer.writerow(["kernel", "size", "seconds"])
    for m in args.sizes:
        # dense random digraph above the Ghouila-Houri threshold
        edges = [(u, v) for u in range(m) for v in range(m) if u != v and rng.random() < 0.75]
        g = Digraph(m, edges)
        if 2 * g.min_semidegree() >= m:
            writer.writerow(["ghouila_houri", m, f"{_time(lambda: ghouila_houri_hamilton(g, seed=seed)):.6f}"])
        pairs = [(i, j) for i in range(m) for j in range(m) if rng.random() < 0.5]
        writer.writerow(["matching", m, f"{_time(lambda: bipartite_perfect_matching(range(m), range(m), pairs)):.6f}"])
        arcs = [(0, 1 + i, 1, 0) for i in range(m)] + [(1 + m + j, 2 * m + 1, 1, 0) for j in range(m)]
        arcs += [(1 + i, 1 + m + j, 1, int(rng.integers(10))) for i, j in pairs]
        size = len(bipartite_perfect_matching(range(m), range(m), pairs).pairs)
        writer.writerow(["min_cost_flow", m, f"{_time(lambda: min_cost_flow(2 * m + 2, arcs, 0, 2 * m + 1, size)):.6f}"])
    return OK


# ---- parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tripack", description="Hamilton packings of regular tripartite tournaments and digraphs.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def graph_arg(p):
        p.add_argument("--graph", default="-", help="graph JSON file (default: stdin)")

    p = sub.add_parser("gen", help="generate a graph")
    p.add_argument("family", choices=["c3", "gbeta", "ttriangle", "random-tournament", "random-digraph"])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--beta", type=_fraction, default=Fraction(0))
    p.add_argument("--d", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--seed", type=_seed)
    p.set_defaults(run=cmd_gen)

    p = sub.add_parser("analyze", help="expansion or structure analysis")
    p.add_argument("what", choices=["expansion", "structure"])
    graph_arg(p)
    p.add_argument("--nu", type=_fraction, default=Fraction(1, 50))
    p.add_argument("--tau", type=_fraction, default=Fraction(1, 4))
    p.add_argument("--exact", action="store_true")
    p.add_argument("--budget", type=int, default=10_000)
    p.add_argument("--seed", type=_seed)
    p.set_defaults(run=cmd_analyze)

    p = sub.add_parser("factorize", help="1-factorization or a merged cycle cover")
    graph_arg(p)
    p.add_argument("--merge", action="store_true")
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--seed", type=_seed)
    p.set_defaults(run=cmd_factorize)

    p = sub.add_parser("forests", help="linear-forest operations")
    p.add_argument("op", choices=["cover", "clean", "partition", "path-cover", "balanced", "endpoints"])
    graph_arg(p)
    p.add_argument("--params")
    p.add_argument("--epsilon", type=_fraction)
    p.add_argument("--gamma", type=_fraction)
    p.add_argument("--delta", type=_fraction)
    p.add_argument("--eta", type=_fraction)
    p.add_argument("--K", type=int)
    p.add_argument("--ell", type=int)
    p.add_argument("--slack", type=float)
    p.add_argument("--count", type=int)
    p.add_argument("--forest")
    p.add_argument("--seed", type=_seed)
    p.set_defaults(run=cmd_forests)

    p = sub.add_parser("decompose", help="Hamilton decomposition or packing with a certificate")
    graph_arg(p)
    p.add_argument("--mode", choices=["directed", "oriented"], required=True)
    p.add_argument("--delta", type=_fraction, default=Fraction(1, 3))
    p.add_argument("--eps", type=_fraction, default=Fraction(1, 10))
    p.add_argument("--params")
    p.add_argument("--trace")
    p.add_argument("--time-limit", type=float, default=120.0)
    p.add_argument("--seed", type=_seed)
    p.set_defaults(run=cmd_decompose)

    p = sub.add_parser("verify", help="re-check a packing certificate")
    p.add_argument("--graph", required=True)
    p.add_argument("--cert", required=True)
    p.set_defaults(run=cmd_verify)

    p = sub.add_parser("oracle", help="exact brute-force referees")
    p.add_argument("op", choices=["hamilton-cycles", "max-packing", "nearest-gbeta", "expansion"])
    graph_arg(p)
    p.add_argument("--nu", type=_fraction, default=Fraction(1, 50))
    p.add_argument("--tau", type=_fraction, default=Fraction(1, 4))
    p.set_defaults(run=cmd_oracle)

    p = sub.add_parser("bench", help="time the search, matching and flow kernels; CSV on stdout")
    p.add_argument("--sizes", type=int, nargs="+", default=[8, 16, 32])
    p.add_argument("--seed", type=_seed)
    p.set_defaults(run=cmd_bench)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.run(args)
    except UsageError as exc:
        _say(f"usage error: {exc}")
        return USAGE
    except (GraphError, ValueError, OSError) as exc:
        _emit({"error": type(exc).__name__, "invariant": getattr(exc, "invariant", None), "message": str(exc)})
        _say(f"error: {exc}")
        return HARD_ERROR


def main() -> None:
    sys.exit(run())
