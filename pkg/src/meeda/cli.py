"""Command-line entry point: ``meeda <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict
from pathlib import Path

from meeda.codec import Permutation, canonicalize, graph_qos
from meeda.discovery import UnsolvableTaskError, discover
from meeda.eda import ALGORITHMS, RunConfig, evolve, prepare
from meeda.evaluate import Evaluator, FitnessWeights
from meeda.harness.experiment import (
    TRACE_COLUMNS,
    ExperimentError,
    ExperimentSpec,
    build_table,
    read_runs_csv,
    run_experiment,
)
from meeda.harness.oracle import OracleTooLargeError, brute_force_optimum
from meeda.harness.synthetic import generate_synthetic, synthetic_instance
from meeda.ingest import IngestError, load_any
from meeda.ontology import OntologyError


def _load(ref: str):
    """A dataset directory or ``synthetic:N:DEPTH:SEED``."""
    if ref.startswith("synthetic:"):
        try:
            n, d, s = (int(x) for x in ref.split(":")[1:])
        except ValueError:
            raise SystemExit(f"bad synthetic reference {ref!r}; expected synthetic:N:DEPTH:SEED") from None
        return synthetic_instance(n, d, s)
    return load_any(ref)


def _weights(text: str) -> FitnessWeights:
    try:
        return FitnessWeights.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _add_fitness_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--weights", type=_weights, default=FitnessWeights(),
                   help="w1,...,w6 for MT, SIM, A, R, T, CT (default 0.25,0.25,0.125,0.125,0.125,0.125)")
    p.add_argument("--p", type=float, default=0.75, help="plugin match score")
    p.add_argument("--score-boundary-links", dest="boundary_links", action=argparse.BooleanOptionalAction,
                   default=True, help="include Start/End links in the match-quality terms")


def _config(args, algorithm: str, seed: int) -> RunConfig:
    return RunConfig(
        algorithm=algorithm,
        pop_size=args.pop_size,
        generations=args.generations,
        b_ratio=args.b_ratio,
        n_set=args.n_set,
        n_nb=args.n_nb,
        p=args.p,
        weights=tuple(args.weights),
        seed=seed,
        ls_replace=args.ls_replace,
        epsilon_abs=args.epsilon_abs,
        boundary_links=args.boundary_links,
    )


def _dump(obj, out=None) -> None:
    text = json.dumps(obj, indent=1, sort_keys=True)
    if out is None:
        print(text)
    else:
        Path(out).write_text(text + "\n")


def cmd_run(args) -> int:
    repo, task = _load(args.dataset)
    inst = prepare(repo, task, args.p)
    out = Path(args.out) if args.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
    summary = []
    trace_rows = []
    for i in range(args.runs):
        res = evolve(_config(args, args.algorithm, args.seed + i), instance=inst)
        record = {
            "run": i,
            "seed": args.seed + i,
            "algorithm": args.algorithm,
            "fitness": res.fitness,
            "evaluations": res.evaluations,
            "elapsed_ms": res.elapsed_ms,
            "permutation": [inst.layers.relevant[k] for k in res.best.order],
            "boundary": res.best.boundary,
            "graph": res.graph.to_json(inst.layers),
        }
        summary.append(record)
        trace_rows += [{"run": i, **asdict(t)} for t in res.trace]
        if out:
            _dump(record, out / f"run-{i}.json")
        print(f"run {i} seed {args.seed + i}: fitness {res.fitness:.6f} "
              f"({res.evaluations} evaluations, {res.elapsed_ms:.0f} ms)", file=sys.stderr)
    if out:
        cols = ["run"] + [c for c in TRACE_COLUMNS if c not in ("task", "variant", "run")]
        with open(out / "trace.csv", "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=cols, lineterminator="\n")
            w.writeheader()
            for r in trace_rows:
                w.writerow({k: "" if r[k] is None else r[k] for k in cols})
    else:
        _dump(summary)
    return 0


def cmd_bench(args) -> int:
    spec = ExperimentSpec.load(args.spec)
    if args.out:
        spec.out = args.out
    if args.workers:
        spec.workers = args.workers
    table, _, _ = run_experiment(spec)
    print(table.render(), end="")
    return 0


def cmd_gen_synthetic(args) -> int:
    path = generate_synthetic(args.n_services, args.depth, args.seed, args.out)
    print(path)
    return 0


def cmd_oracle(args) -> int:
    repo, task = _load(args.dataset)
    f, graph = brute_force_optimum(repo, task, args.weights, args.p, boundary_links=args.boundary_links)
    layers = discover(repo, task, args.p)
    _dump({"fitness": f, "graph": graph.to_json(layers)})
    return 0


def cmd_stats(args) -> int:
    table = build_table(read_runs_csv(args.csv), alpha=args.alpha)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        table.write_csv(out / "comparison.csv")
        (out / "table.txt").write_text(table.render())
    print(table.render(), end="")
    return 0


def cmd_discover(args) -> int:
    repo, task = _load(args.dataset)
    _dump(discover(repo, task, args.p).to_json())
    return 0


def cmd_decode(args) -> int:
    repo, task = _load(args.dataset)
    inst = prepare(repo, task, args.p)
    text = args.permutation
    if Path(text).is_file():
        text = Path(text).read_text()
    try:
        ids = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SystemExit(f"permutation is not JSON: {exc}") from None
    if isinstance(ids, dict):
        ids = ids.get("permutation")
    if not isinstance(ids, list) or not all(isinstance(x, int) for x in ids):
        raise SystemExit("permutation must be a JSON list of service ids")
    unknown = [x for x in ids if x not in inst.layers.layer_of]
    if unknown or sorted(ids) != sorted(inst.layers.relevant):
        raise SystemExit(f"permutation must list each relevant service id once: {list(inst.layers.relevant)}")
    dense = [inst.layers.dense(x) for x in ids]
    enc, graph = canonicalize(Permutation(tuple(dense)), inst)
    ev = Evaluator(inst, args.weights, args.boundary_links)
    q = graph_qos(graph, inst)
    _dump({
        "graph": graph.to_json(inst.layers),
        "qos": q.as_dict(),
        "encoded": [inst.layers.relevant[k] for k in enc.order],
        "boundary": enc.boundary,
        "fitness": ev.graph_fitness(graph),
        "terms": ev.breakdown(graph),
    })
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="meeda", description="Memetic EDA for QoS-aware semantic service composition")
    sub = ap.add_subparsers(dest="command", required=True)
    data_help = "dataset directory (canonical JSON or WSC XML) or synthetic:N:DEPTH:SEED"

    p = sub.add_parser("run", help="seeded runs of one algorithm on one dataset")
    p.add_argument("dataset", help=data_help)
    p.add_argument("--algorithm", choices=sorted(ALGORITHMS), default="meeda-lop")
    p.add_argument("--pop-size", type=int, default=200)
    p.add_argument("--generations", type=int, default=100)
    p.add_argument("--b-ratio", type=float, default=0.0002)
    p.add_argument("--n-set", type=int, default=6)
    p.add_argument("--n-nb", type=int, default=20)
    p.add_argument("--seed", type=int, default=0, help="seed of run 0; run i uses seed + i")
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--ls-replace", choices=["always", "if-better"], default="if-better")
    p.add_argument("--epsilon-abs", type=float, default=None, help="fixed histogram bias instead of the computed one")
    p.add_argument("--out", help="directory for run-<i>.json and trace.csv (default: JSON on stdout)")
    _add_fitness_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bench", help="run an experiment spec (JSON or TOML)")
    p.add_argument("spec")
    p.add_argument("--out", help="override the spec's output directory")
    p.add_argument("--workers", type=int, default=0, help="override the spec's worker count")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("gen-synthetic", help="write a seeded synthetic instance as canonical JSON")
    p.add_argument("--n-services", type=int, required=True)
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_synthetic)

    p = sub.add_parser("oracle", help="exhaustive optimum of a small instance")
    p.add_argument("dataset", help=data_help)
    _add_fitness_flags(p)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("stats", help="comparison table from per-run CSVs")
    p.add_argument("csv", nargs="+", help="runs.csv files or external results with task,variant,fitness columns")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--out", help="directory for comparison.csv and table.txt")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("discover", help="relevant services and layers as JSON")
    p.add_argument("dataset", help=data_help)
    p.add_argument("--p", type=float, default=0.75)
    p.set_defaults(func=cmd_discover)

    p = sub.add_parser("decode", help="decode a permutation of service ids into a DAG")
    p.add_argument("dataset", help=data_help)
    p.add_argument("permutation", help="JSON list of service ids, or a file holding one")
    _add_fitness_flags(p)
    p.set_defaults(func=cmd_decode)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (IngestError, OntologyError, UnsolvableTaskError, OracleTooLargeError, ExperimentError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
