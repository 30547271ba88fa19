"""Command-line entry point: ``kgnotable {context,findnc,eval,generate}``.

Exit codes: 0 success, 2 input error, 3 unresolved query.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from contextlib import contextmanager

from .context import (
    MetapathSet,
    NoMetapathsError,
    WalkConfig,
    context_rw,
    mine_metapaths,
    random_walk_context,
)
from .graph import INVERSE_SUFFIX, LoadOptions, TripleFormatError, UnknownLabelError, load_tsv
from .pipeline import RunConfig, UnresolvedQueryError, context_to_dict, find_notable, resolve_query
from .synth import (
    GridSpec,
    GroundTruth,
    SyntheticSpec,
    generate,
    read_truth_file,
    rows_to_csv,
    run_grid,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_UNRESOLVED = 3

log = logging.getLogger("kgnotable")


@contextmanager
def _output(path: str):
    if path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _graph_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph", required=True, help="TSV file of subject/predicate/object triples")
    p.add_argument("--type-predicate", default=None,
                   help="predicate whose objects become node labels (e.g. 'type')")
    p.add_argument("--inverse-suffix", default=INVERSE_SUFFIX,
                   help="suffix for synthesized reverse labels (default: %(default)s)")
    p.add_argument("--no-inverses", action="store_true",
                   help="do not synthesize reverse edges; input must already contain them")


def _walk_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--walks", type=int, default=1_000_000, help="random walks for metapath mining")
    p.add_argument("--max-path-len", type=int, default=5)
    p.add_argument("--num-metapaths", type=int, default=5)
    p.add_argument("--damping", type=float, default=0.8)
    p.add_argument("--iterations", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1, help="threads for walk blocks")
    p.add_argument("--any-type", action="store_true",
                   help="rank all non-query nodes even on typed graphs")


def _query_args(p: argparse.ArgumentParser, required: bool = True) -> None:
    p.add_argument("--query", action="append", required=required, metavar="NAME",
                   help="query entity; repeat for each node")
    p.add_argument("--k", type=int, default=100, help="context size")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kgnotable", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("context", help="rank the nodes most similar to a query")
    _graph_args(p)
    _query_args(p)
    _walk_args(p)
    p.add_argument("--algo", choices=("contextrw", "randomwalk"), default="contextrw")
    p.add_argument("--out", default="-")

    p = sub.add_parser("findnc", help="find notable characteristics of a query")
    _graph_args(p)
    _query_args(p)
    _walk_args(p)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--algo", choices=("findnc", "rwmult"), default="findnc")
    p.add_argument("--format", choices=("json", "tsv"), default="json")
    p.add_argument("--mc-samples", type=int, default=100_000)
    p.add_argument("--timings", action="store_true", help="include wall-clock timings")
    p.add_argument("--save-metapaths", metavar="FILE")
    p.add_argument("--load-metapaths", metavar="FILE")
    p.add_argument("--out", default="-")

    p = sub.add_parser("eval", help="context-quality grid on a synthetic or real graph")
    p.add_argument("--spec", help="synthetic spec JSON (omit to use --graph)")
    p.add_argument("--grid", required=True, help="grid JSON")
    p.add_argument("--graph", help="real graph TSV")
    p.add_argument("--query", action="append", metavar="NAME")
    p.add_argument("--truth", help="relevant entities, one name per line")
    p.add_argument("--type-predicate", default=None)
    p.add_argument("--out", default="-")

    p = sub.add_parser("generate", help="write a synthetic graph and its ground truth")
    p.add_argument("--spec", help="synthetic spec JSON (defaults if omitted)")
    p.add_argument("--seed", type=int, default=None, help="override the spec seed")
    p.add_argument("--out", required=True, help="triples TSV")
    p.add_argument("--truth-out", help="write relevant entity names here")
    return parser


def _load(args):
    opts = LoadOptions(synthesize_inverses=not args.no_inverses,
                       inverse_suffix=args.inverse_suffix,
                       type_predicate=args.type_predicate)
    return load_tsv(args.graph, opts)


def _walk_config(args) -> WalkConfig:
    return WalkConfig(damping=args.damping, iterations=args.iterations,
                      num_walk_samples=args.walks, max_metapath_len=args.max_path_len,
                      num_metapaths=args.num_metapaths, rng_seed=args.seed,
                      same_type=not args.any_type, workers=args.workers)


def cmd_context(args) -> int:
    g = _load(args)
    q, _ = resolve_query(g, args.query)
    cfg = _walk_config(args)
    metapaths = None
    if args.algo == "randomwalk":
        ctx = random_walk_context(g, q, args.k, cfg)
    else:
        metapaths = mine_metapaths(g, q, cfg)
        try:
            ctx = context_rw(g, q, args.k, cfg, metapaths)
        except NoMetapathsError:
            log.warning("no metapaths found; fell back to randomwalk")
            ctx = random_walk_context(g, q, args.k, cfg)
    with _output(args.out) as fh:
        fh.write(json.dumps(context_to_dict(g, q, ctx, metapaths), ensure_ascii=False, indent=2) + "\n")
    return EXIT_OK


def cmd_findnc(args) -> int:
    g = _load(args)
    q, warnings = resolve_query(g, args.query)
    cfg = RunConfig(walk=_walk_config(args), k=args.k, alpha=args.alpha, algorithm=args.algo,
                    output_format=args.format, mc_samples=args.mc_samples, timings=args.timings)
    metapaths = None
    if args.load_metapaths:
        with open(args.load_metapaths, encoding="utf-8") as fh:
            metapaths = MetapathSet.from_json(g, json.load(fh))
    report = find_notable(g, q, cfg, metapaths)
    report.warnings[:0] = warnings
    if args.save_metapaths and report.metapaths is not None:
        with _output(args.save_metapaths) as fh:
            json.dump(report.metapaths.to_json(g), fh, ensure_ascii=False, indent=2)
            fh.write("\n")
    with _output(args.out) as fh:
        fh.write(report.to_json() if args.format == "json" else report.to_tsv())
    return EXIT_OK


def cmd_eval(args) -> int:
    with open(args.grid, encoding="utf-8") as fh:
        grid = GridSpec.from_dict(json.load(fh))
    if args.spec:
        with open(args.spec, encoding="utf-8") as fh:
            ds = generate(SyntheticSpec.from_json(fh.read()))
        g = ds.load()
        truth = ds.truth
    else:
        if not (args.graph and args.query and args.truth):
            raise ValueError("eval needs --spec, or --graph with --query and --truth")
        g = load_tsv(args.graph, LoadOptions(type_predicate=args.type_predicate))
        names = list(dict.fromkeys(args.query))
        resolve_query(g, names)
        truth = GroundTruth(tuple(names), read_truth_file(args.truth) - set(names))
    rows = run_grid(g, [truth.query], [truth], grid)
    with _output(args.out) as fh:
        fh.write(rows_to_csv(rows))
    return EXIT_OK


def cmd_generate(args) -> int:
    spec = SyntheticSpec()
    if args.spec:
        with open(args.spec, encoding="utf-8") as fh:
            spec = SyntheticSpec.from_json(fh.read())
    if args.seed is not None:
        spec = SyntheticSpec.from_dict({**json.loads(spec.to_json()), "seed": args.seed})
    ds = generate(spec)
    ds.write_tsv(args.out)
    if args.truth_out:
        with _output(args.truth_out) as fh:
            fh.write("".join(f"# query\t{n}\n" for n in ds.truth.query))
            fh.write("".join(f"{n}\n" for n in sorted(ds.truth.relevant)))
    return EXIT_OK


COMMANDS = {"context": cmd_context, "findnc": cmd_findnc, "eval": cmd_eval, "generate": cmd_generate}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UnresolvedQueryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNRESOLVED
    except (OSError, TripleFormatError, UnknownLabelError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
