"""Command-line entry points: generate, build, estimate, bench.

Exit codes: 0 success, 2 usage or parse error, 3 missing artifact, 4 I/O.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from typing import Optional, Sequence

from . import benchmark, persist, suite
from .estimators import METHODS, BuildConfig, MissingArtifact, build_relation, estimate_cardinality, relation_seed
from .estimators import ModelStore
from .generator import GeneratorSpecError, generate_correlated, load_specs
from .query import QueryError, UnknownRelation, parse_query
from .relation import ParseFailure, Relation, SchemaError, bernoulli_sample, ingest_csv, load_schema, write_csv

EXIT_OK, EXIT_USAGE, EXIT_MISSING, EXIT_IO = 0, 2, 3, 4
SCHEMA_SUFFIX = ".schema.json"


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _rate(text: str) -> float:
    try:
        r = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 < r <= 1.0:
        raise argparse.ArgumentTypeError(f"sample rate must lie in (0, 1], got {text}")
    return r


def _rates(text: str) -> list[float]:
    return [_rate(t) for t in text.split(",") if t.strip()]


def _count(minimum: int):
    def parse(text: str) -> int:
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
        if v < minimum:
            raise argparse.ArgumentTypeError(f"must be at least {minimum}, got {v}")
        return v
    return parse


def load_database(data_dir, schema_dir=None) -> dict[str, Relation]:
    """Every ``<name>.csv`` in ``data_dir`` paired with ``<name>.schema.json``."""
    schema_dir = schema_dir or data_dir
    if not os.path.isdir(data_dir):
        raise CliError(f"data directory not found: {data_dir}", EXIT_IO)
    names = sorted(f[:-4] for f in os.listdir(data_dir) if f.endswith(".csv"))
    if not names:
        raise CliError(f"no CSV files in {data_dir}", EXIT_IO)
    db = {}
    for name in names:
        schema = load_schema(os.path.join(schema_dir, name + SCHEMA_SUFFIX))
        if schema.relation != name:
            raise SchemaError(f"schema for {name}.csv names relation {schema.relation!r}")
        db[name] = ingest_csv(os.path.join(data_dir, name + ".csv"), schema)
    return db


def cmd_generate(args) -> int:
    specs = load_specs(args.spec) if args.spec else suite.default_specs()
    os.makedirs(args.out, exist_ok=True)
    for spec in specs:
        rel = generate_correlated(spec).relation
        write_csv(rel, os.path.join(args.out, rel.name + ".csv"))
        with open(os.path.join(args.out, rel.name + SCHEMA_SUFFIX), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(persist.dumps(rel.schema.to_dict()))
        print(f"{rel.name}: {rel.row_count} rows")
    if not args.spec:
        with open(os.path.join(args.out, "workload.txt"), "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(suite.default_workload()) + "\n")
    return EXIT_OK


def cmd_build(args) -> int:
    db = load_database(args.data, args.schema_dir)
    config = BuildConfig(args.k, args.j, args.sample_rate, args.seed)
    store = ModelStore(config)
    for name, rel in db.items():
        t = time.perf_counter()
        store.relations[name] = build_relation(rel, config, keep_sample=False)
        print(f"{name}: {rel.row_count} rows, built in {(time.perf_counter() - t) * 1e3:.1f} ms")
    persist.save_model(store, args.out)
    return EXIT_OK


def _query_text(args) -> str:
    if args.query is not None:
        return args.query
    with open(args.query_file, encoding="utf-8") as fh:
        return fh.read()


def cmd_estimate(args) -> int:
    if not os.path.exists(args.model):
        raise CliError(f"model file not found: {args.model}", EXIT_MISSING)
    store = persist.load_model(args.model)
    query = parse_query(_query_text(args), store.schemas)
    if args.method == "sampling":
        if not args.data:
            raise CliError("the sampling method needs --data to redraw the samples", EXIT_MISSING)
        db = load_database(args.data, args.schema_dir)
        for name in query.relations:
            if name not in db:
                raise MissingArtifact(f"no data for relation {name!r}")
            art = store.get(name)
            art.sample = bernoulli_sample(db[name], store.config.sample_rate,
                                          relation_seed(store.config.seed, name))
    est = estimate_cardinality(query, args.method, store)
    out = {"method": args.method, "rows": float(est.rows), "join_selectivity": float(est.join_selectivity),
           "selectivities": {k: float(v) for k, v in sorted(est.selectivities.items())}}
    print(json.dumps(out, sort_keys=True))
    return EXIT_OK


def cmd_bench(args) -> int:
    db = load_database(args.data, args.schema_dir)
    if args.workload:
        with open(args.workload, encoding="utf-8") as fh:
            texts = suite.parse_workload(fh.read())
    else:
        texts = suite.default_workload()
    schemas = [r.schema for r in db.values()]
    queries = [(f"q{i + 1}", parse_query(t, schemas)) for i, t in enumerate(texts)]
    truth = benchmark.load_truth_cache(args.truth_cache)
    config = benchmark.BenchConfig(rates=args.rates, seeds=[args.seed + i for i in range(args.seeds)],
                                   k=args.k, j=args.j, methods=args.methods, timings=not args.no_timings)
    report = benchmark.run_workload(queries, db, config, truth)
    if args.truth_cache:
        benchmark.save_truth_cache(args.truth_cache, truth)
    os.makedirs(args.out, exist_ok=True)
    report.write(os.path.join(args.out, "detail.csv"), os.path.join(args.out, "summary.csv"))
    for row in benchmark.summarize(report):
        print(f"{row['method']:>9} rate={row['sample_rate']:<6g} mean q-error {row['mean_q']:.3f} "
              f"(sd over seeds {row['std_q']:.3f})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="chowcard", description="Chow-Liu tree selectivity estimation")
    sub = p.add_subparsers(dest="command", required=True)

    def data_flags(sp, required=True):
        sp.add_argument("--data", required=required, help="directory of <relation>.csv files")
        sp.add_argument("--schema-dir", help="directory of <relation>.schema.json (default: --data)")

    def synopsis_flags(sp):
        sp.add_argument("--k", type=_count(1), default=30, help="most common values per histogram")
        sp.add_argument("--j", type=_count(0), default=30, help="buckets per histogram")

    g = sub.add_parser("generate", help="write synthetic relations as CSV plus schema files")
    g.add_argument("--spec", help="generator spec JSON (default: the built-in suite)")
    g.add_argument("--out", required=True, help="output directory")
    g.set_defaults(func=cmd_generate)

    b = sub.add_parser("build", help="build the model file")
    data_flags(b)
    synopsis_flags(b)
    b.add_argument("--sample-rate", type=_rate, default=0.05)
    b.add_argument("--seed", type=int, default=42)
    b.add_argument("--out", required=True, help="model file to write")
    b.set_defaults(func=cmd_build)

    e = sub.add_parser("estimate", help="estimate the cardinality of one query")
    e.add_argument("--model", required=True, help="model file written by build")
    data_flags(e, required=False)
    e.add_argument("--method", choices=METHODS, default="bn")
    q = e.add_mutually_exclusive_group(required=True)
    q.add_argument("--query", help="query text")
    q.add_argument("--query-file", help="file holding the query")
    e.set_defaults(func=cmd_estimate)

    r = sub.add_parser("bench", help="run a workload over sample rates and seeds")
    data_flags(r)
    synopsis_flags(r)
    r.add_argument("--workload", help="queries, one per line (default: the built-in workload)")
    r.add_argument("--rates", type=_rates, default=[0.05], help="comma-separated sample rates")
    r.add_argument("--seeds", type=_count(1), default=10, help="number of seeds")
    r.add_argument("--seed", type=int, default=0, help="first seed")
    r.add_argument("--methods", type=lambda s: [m for m in s.split(",") if m], default=list(METHODS))
    r.add_argument("--truth-cache", help="CSV cache of true cardinalities (query hash -> rows)")
    r.add_argument("--no-timings", action="store_true", help="write 0 for all timing columns")
    r.add_argument("--out", required=True, help="directory for detail.csv and summary.csv")
    r.set_defaults(func=cmd_bench)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "methods", None):
        bad = [m for m in args.methods if m not in METHODS]
        if bad:
            print(f"chowcard: unknown method(s) {', '.join(bad)}", file=sys.stderr)
            return EXIT_USAGE
    try:
        return args.func(args)
    except CliError as exc:
        print(f"chowcard: {exc}", file=sys.stderr)
        return exc.code
    except (UnknownRelation, MissingArtifact) as exc:
        print(f"chowcard: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except (QueryError, GeneratorSpecError) as exc:
        print(f"chowcard: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, SchemaError, ParseFailure, persist.ModelFileError, json.JSONDecodeError) as exc:
        print(f"chowcard: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
