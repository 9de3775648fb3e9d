"""Command-line interface: ``reldsep <command> [options]``.

Exit codes: 0 success, 1 domain error (code printed on stderr), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import secrets
import sys
from pathlib import Path

from .agg import build_agg, build_simple_agg, required_hop_threshold
from .dsep import (
    DSepQuery,
    cached_agg,
    minimal_separating_set,
    relational_d_connecting_path,
    relational_d_separated,
)
from .errors import RelDSepError
from .grounding import ground_graph, to_dot, to_edge_list
from .model import RelationalModel, validate_model
from .schema import Schema, Skeleton, validate_schema, validate_skeleton


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"USAGE: {message}", file=sys.stderr)
        raise SystemExit(2)


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise RelDSepError("IO_ERROR", f"{path}: {exc.strerror}") from None


def _load_schema(path: str) -> Schema:
    return Schema.from_json(_read(path))


def _load_model(args) -> RelationalModel:
    if not args.model:
        raise RelDSepError("MISSING_INPUT", "--model is required")
    data = json.loads(_read(args.model))
    schema = _load_schema(args.schema) if getattr(args, "schema", None) else None
    ref = data.get("schema")
    if isinstance(ref, str):
        data = dict(data)
        data["schema"] = json.loads(_read(str(Path(args.model).parent / ref)))
    return RelationalModel.from_dict(data, schema)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_validate(args) -> int:
    if args.model:
        model = _load_model(args)
        schema = model.schema
        report = validate_model(model)
    elif args.schema:
        schema = _load_schema(args.schema)
        report = validate_schema(schema)
    else:
        raise RelDSepError("MISSING_INPUT", "give --schema and/or --model")
    if args.skeleton and not report:
        report = validate_skeleton(schema, Skeleton.from_json(_read(args.skeleton)))
    if report:
        for v in report:
            print(v)
        return 1
    print("valid")
    return 0


def _agg_text(agg, fmt: str) -> str:
    if fmt == "dot":
        return agg.to_dot()
    if fmt == "csv":
        lines = ["from,to"]
        for u, v in sorted((str(u), str(v)) for u, v in agg.graph.edges()):
            lines.append(f'"{u}","{v}"')
        return "\n".join(lines) + "\n"
    return agg.to_json() + "\n"


def cmd_agg(args) -> int:
    model = _load_model(args)
    if args.hops is None:
        raise RelDSepError("MISSING_INPUT", "--hops is required")
    _emit(_agg_text(build_agg(model, args.perspective, args.hops), args.format), args.out)
    return 0


def cmd_simple_agg(args) -> int:
    model = _load_model(args)
    _emit(_agg_text(build_simple_agg(model, args.perspective), args.format), args.out)
    return 0


def cmd_ground(args) -> int:
    model = _load_model(args)
    if not args.skeleton:
        raise RelDSepError("MISSING_INPUT", "--skeleton is required")
    skeleton = Skeleton.from_json(_read(args.skeleton))
    report = validate_skeleton(model.schema, skeleton)
    if report:
        for v in report:
            print(v, file=sys.stderr)
        raise RelDSepError("INVALID_SKELETON", f"{len(report)} violation(s)")
    g = ground_graph(model, skeleton)
    _emit(to_dot(g) if args.format == "dot" else to_edge_list(g), args.out)
    return 0


def _load_query(args, model) -> DSepQuery:
    if not args.query:
        raise RelDSepError("MISSING_INPUT", "--query is required")
    q = DSepQuery.from_json(_read(args.query), model.schema)
    if args.hops is not None:
        q = DSepQuery(q.perspective, q.x, q.y, q.z, args.hops)
    return q


def cmd_dsep(args) -> int:
    model = _load_model(args)
    q = _load_query(args, model)
    sep = relational_d_separated(model, q)
    lines = ["SEPARATED" if sep else "CONNECTED"]
    if args.explain and not sep:
        path = relational_d_connecting_path(model, q)
        lines += [f"  {n}" for n in path or []]
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_sepset(args) -> int:
    model = _load_model(args)
    q = _load_query(args, model)
    if len(q.x) != 1 or len(q.y) != 1:
        raise RelDSepError("SET_SIZE", "sepset needs exactly one variable in x and in y")
    h_a = required_hop_threshold(q.query_hops, model.max_hops)
    agg = cached_agg(model, q.perspective, h_a)
    z = minimal_separating_set(agg, q.x[0], q.y[0])
    if z is None:
        text = "NONE\n"
    else:
        text = "".join(f"{v}\n" for v in z) or "EMPTY\n"
    _emit(text, args.out)
    return 0


def _int_list(text: str) -> list[int]:
    try:
        if "-" in text and "," not in text:
            lo, hi = text.split("-")
            return list(range(int(lo), int(hi) + 1))
        return [int(t) for t in text.split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers like '1,2,3' or '1-4', got {text!r}")


def cmd_experiment(args) -> int:
    from .experiments import generators, naive, output, sepset, sizes, validity

    seed = args.seed
    if seed is None:
        seed = secrets.randbelow(2**31)
        print(f"seed: {seed}", file=sys.stderr)
    ents = args.entities or [1, 2, 3, 4]
    if args.kind == "naive":
        gp = generators.GenParams(trials=args.trials, seed=seed, agg_hops=args.hops or 8)
        rows = naive.run_naive_equivalence(gp, ents, args.dependencies or range(1, 11))
        cols = naive.COLUMNS
    elif args.kind == "aggsize":
        gp = generators.GenParams(trials=args.trials, seed=seed, agg_hops=args.hops or 6)
        rows = sizes.run_agg_size(
            gp, ents, args.relationships or range(0, 5), args.dependencies or range(1, 16)
        )
        cols = sizes.COLUMNS
    elif args.kind == "sepset":
        gp = generators.GenParams(trials=args.trials, seed=seed, agg_hops=args.hops or 8)
        rows = sepset.run_sepset_size(gp, ents, args.dependencies or range(1, 11))
        cols = sepset.COLUMNS
    else:
        gp = generators.GenParams(
            trials=args.trials, seed=seed, num_dependencies=10, query_hops=args.query_hops
        )
        lp = generators.LinearParams(entities_per_class=args.instances)
        rows = validity.run_empirical_validity(
            gp, lp, ents, replicates=args.replicates, per_kind=args.queries
        )
        cols = validity.COLUMNS
    _emit(output.rows_to_csv(rows, cols), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="reldsep", description="Relational d-separation with abstract ground graphs")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def common(sp, *flags):
        if "schema" in flags:
            sp.add_argument("--schema", help="schema JSON file")
        if "model" in flags:
            sp.add_argument("--model", help="model JSON file")
        if "skeleton" in flags:
            sp.add_argument("--skeleton", help="skeleton JSON file")
        if "query" in flags:
            sp.add_argument("--query", help="query JSON file")
        if "perspective" in flags:
            sp.add_argument("--perspective", required=True)
        if "hops" in flags:
            sp.add_argument("--hops", type=int)
        sp.add_argument("--out", help="write output here instead of stdout")

    sp = sub.add_parser("validate", help="validate schema, model and skeleton files")
    common(sp, "schema", "model", "skeleton")
    sp.set_defaults(func=cmd_validate)

    for name, func, flags in (
        ("agg", cmd_agg, ("schema", "model", "perspective", "hops")),
        ("simple-agg", cmd_simple_agg, ("schema", "model", "perspective")),
    ):
        sp = sub.add_parser(name, help=f"build a{'' if name == 'agg' else ' simple'} abstract ground graph")
        common(sp, *flags)
        sp.add_argument("--format", choices=("json", "csv", "dot"), default="json")
        sp.set_defaults(func=func)

    sp = sub.add_parser("ground", help="ground a model on a skeleton")
    common(sp, "schema", "model", "skeleton")
    sp.add_argument("--format", choices=("json", "csv", "dot"), default="csv",
                    help="csv/json print the sorted edge list; dot prints graphviz")
    sp.set_defaults(func=cmd_ground)

    sp = sub.add_parser("dsep", help="answer a relational d-separation query")
    common(sp, "schema", "model", "query", "hops")
    sp.add_argument("--explain", action="store_true", help="print a d-connecting AGG path")
    sp.set_defaults(func=cmd_dsep)

    sp = sub.add_parser("sepset", help="find a minimal separating set for x and y")
    common(sp, "schema", "model", "query", "hops")
    sp.set_defaults(func=cmd_sepset)

    sp = sub.add_parser("experiment", help="run a synthetic experiment, CSV output")
    sp.add_argument("kind", choices=("naive", "aggsize", "sepset", "validity"))
    sp.add_argument("--seed", type=int)
    sp.add_argument("--trials", type=int, default=20)
    sp.add_argument("--hops", type=int, help="AGG hop threshold")
    sp.add_argument("--entities", type=_int_list)
    sp.add_argument("--relationships", type=_int_list)
    sp.add_argument("--dependencies", type=_int_list)
    sp.add_argument("--instances", type=int, default=200, help="entities per class (validity)")
    sp.add_argument("--replicates", type=int, default=10, help="datasets per model (validity)")
    sp.add_argument("--queries", type=int, default=100, help="true and false queries per model")
    sp.add_argument("--query-hops", type=int, default=4)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except RelDSepError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except json.JSONDecodeError as exc:
        print(f"PARSE_ERROR: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
