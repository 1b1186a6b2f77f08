"""Command-line interface: ``liftfg gen|compress|ground|check|query|bench``."""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path

from . import bench
from .colour_passing import MODES, run_colour_passing
from .exchangeability import approx_collinear, detect_exchangeable, permuted_table
from .factor_graph import FactorGraphError
from .inference import Query, lve_query, ve_ground
from .io import format_rational, load_fg, parse_evidence_arg, read_evidence, read_fg, save_fg
from .pfg import construct_pfg, ground_pfg, read_pfg, write_pfg

log = logging.getLogger("liftfg")


def _factor_ref(ref: str):
    path, sep, name = ref.rpartition("#")
    if not sep or not path or not name:
        raise FactorGraphError(f"factor reference {ref!r} must look like file.json#factor")
    graph = load_fg(path)
    if name not in graph.factor_by_name:
        raise FactorGraphError(f"{path} has no factor {name!r}")
    return graph.factor_by_name[name]


def _load_model(path: str):
    data = Path(path).read_bytes()
    doc = json.loads(data)
    if isinstance(doc, dict) and "parfactors" in doc:
        return read_pfg(data)
    return read_fg(data)


def cmd_gen(args) -> int:
    config = bench.GenConfig(args.d, args.p, args.alpha_max, args.seed)
    graph = bench.generate_fg(config)
    save_fg(graph, args.out)
    print(f"rvs={len(graph.rvs)} factors={len(graph.factors)}")
    return 0


def cmd_compress(args) -> int:
    graph = load_fg(args.input)
    evidence = dict(graph.evidence)
    if args.evidence:
        evidence.update(read_evidence(Path(args.evidence).read_bytes()))
    partition = run_colour_passing(graph, evidence, args.mode)
    pfg = construct_pfg(graph, partition)
    Path(args.out).write_bytes(write_pfg(pfg))
    print(f"groups: rv={len(partition.rv_groups)} factor={len(partition.factor_groups)}")
    return 0


def cmd_ground(args) -> int:
    pfg = read_pfg(Path(args.input).read_bytes())
    save_fg(ground_pfg(pfg, preserve_scale=args.preserve_scale), args.out)
    return 0


def cmd_check(args) -> int:
    phi1, phi2 = _factor_ref(args.phi1), _factor_ref(args.phi2)
    result = {"exchangeable": False, "alpha": None, "permutation": None}
    if args.epsilon is None:
        w = detect_exchangeable(phi1, phi2)
        if w is not None:
            result = {
                "exchangeable": True,
                "alpha": format_rational(w.alpha),
                "permutation": list(w.permutation),
            }
    elif phi1.arity == phi2.arity:
        eps = Fraction(args.epsilon)
        for perm in itertools.permutations(range(phi1.arity)):
            if any(phi2.args[j].range != phi1.args[i].range for j, i in enumerate(perm)):
                continue
            table = permuted_table(phi1, phi2, perm)
            if approx_collinear(phi1.table, table, eps):
                result = {
                    "exchangeable": True,
                    "alpha": format_rational(phi1.table[0] / table[0]),
                    "permutation": list(perm),
                }
                break
    print(json.dumps(result))
    return 0


def cmd_query(args) -> int:
    model = _load_model(args.model)
    query = Query.parse(args.term, parse_evidence_arg(args.evidence))
    if args.engine == "ve":
        graph = model if hasattr(model, "factors") else ground_pfg(model)
        marginal = ve_ground(graph, query)
    else:
        if hasattr(model, "factors"):
            evidence = {**model.evidence, **query.evidence}
            model = construct_pfg(model, run_colour_passing(model, evidence))
        marginal = lve_query(model, query)
    if query.value is not None:
        marginal = {query.value: marginal[query.value]}
    print(json.dumps({k: format_rational(v) for k, v in marginal.items()}))
    return 0


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x]


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x]


def cmd_bench(args) -> int:
    configs = bench.sweep(args.d, args.p, args.alpha_max, args.seeds)
    records = bench.run_benchmark(configs, args.queries, repeats=args.repeats)
    Path(args.csv).write_text(bench.records_to_csv(records))
    if args.svg:
        bench.write_svg(records, args.svg)
    failed = [r for r in records if r.error]
    for r in failed:
        log.error("d=%s p=%s seed=%s: %s", r.config.d, r.config.p, r.config.seed, r.error)
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="liftfg", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a benchmark factor graph")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--p", type=float, default=0.1)
    p.add_argument("--alpha-max", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("compress", help="build a parametric factor graph")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--mode", choices=MODES, default="alpha-acp")
    p.add_argument("--evidence")
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("ground", help="ground a parametric factor graph")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--preserve-scale", action="store_true")
    p.set_defaults(func=cmd_ground)

    p = sub.add_parser("check", help="test two factors for exchangeability")
    p.add_argument("--phi1", required=True)
    p.add_argument("--phi2", required=True)
    p.add_argument("--epsilon")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("query", help="answer a marginal query")
    p.add_argument("--model", required=True)
    p.add_argument("--term", required=True)
    p.add_argument("--evidence")
    p.add_argument("--engine", choices=("ve", "lve"), default="lve")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("bench", help="run the ACP vs alpha-ACP benchmark")
    p.add_argument("--d", type=_int_list, default=list(bench.DEFAULT_DS))
    p.add_argument("--p", type=_float_list, default=list(bench.DEFAULT_PS))
    p.add_argument("--alpha-max", type=int, default=10)
    p.add_argument("--queries", type=int, default=4)
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--csv", required=True)
    p.add_argument("--svg")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (FactorGraphError, OSError, ValueError) as exc:
        print(f"liftfg: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
