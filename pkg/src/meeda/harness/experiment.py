"""Multi-run experiments: seeded runs, raw CSVs and the comparison table."""

from __future__ import annotations

import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

from meeda.codec import Instance
from meeda.eda import ALGORITHMS, RunConfig, evolve, prepare
from meeda.harness.stats import ALPHA, compare, mean_std
from meeda.harness.synthetic import SUITE, synthetic_instance
from meeda.ingest import load_any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

RUN_COLUMNS = ["task", "variant", "run", "seed", "fitness", "evaluations", "elapsed_ms", "services"]
TRACE_COLUMNS = [
    "task", "variant", "run", "generation", "evaluations",
    "best_fitness", "mean_fitness", "elapsed_ms", "better_neighbor_rate",
]
# wall-clock columns; everything else in the CSVs is a function of the spec
TIMING_COLUMNS = ("elapsed_ms", "time_mean", "time_std")


class ExperimentError(RuntimeError):
    pass


class RunFailedError(ExperimentError):
    def __init__(self, task: str, variant: str, seed: int, cause: BaseException):
        super().__init__(f"run failed: task={task} variant={variant} seed={seed}: {cause!r}")
        self.task, self.variant, self.seed = task, variant, seed


@dataclass
class ExperimentSpec:
    """What to run.

    ``datasets`` entries are directories (canonical JSON or WSC XML),
    ``synthetic:N:DEPTH:SEED`` references, or ``suite`` for the fixed
    synthetic suite. ``config`` holds RunConfig overrides shared by all
    variants.
    """

    datasets: list[str]
    variants: list[str] = field(default_factory=lambda: ["meeda-lop", "eda"])
    runs: int = 30
    config: dict = field(default_factory=dict)
    out: str | None = None
    seed_base: int = 0
    workers: int = 1

    def __post_init__(self):
        if not self.datasets:
            raise ExperimentError("no datasets given")
        unknown = [v for v in self.variants if v not in ALGORITHMS]
        if unknown:
            raise ExperimentError(f"unknown variants {unknown}; choose from {sorted(ALGORITHMS)}")
        if self.runs < 1:
            raise ExperimentError("runs must be >= 1")
        if self.runs < 2 and len(self.variants) > 1:
            raise ExperimentError("statistical comparison needs runs >= 2")
        bad = {"algorithm", "seed"} & set(self.config)
        if bad:
            raise ExperimentError(f"config may not override {sorted(bad)}; use variants and seed_base")
        RunConfig(**self.config)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentSpec":
        data = dict(data)
        if isinstance(data.get("datasets"), str):
            data["datasets"] = [data["datasets"]]
        try:
            return cls(**data)
        except TypeError as exc:
            raise ExperimentError(f"bad experiment spec: {exc}") from None

    @classmethod
    def load(cls, path) -> "ExperimentSpec":
        path = Path(path)
        raw = path.read_bytes()
        try:
            if path.suffix.lower() == ".toml":
                data = tomllib.loads(raw.decode("utf-8"))
            else:
                data = json.loads(raw)
        except (ValueError, UnicodeDecodeError) as exc:
            raise ExperimentError(f"{path}: {exc}") from None
        return cls.from_dict(data)


def resolve_datasets(refs: Iterable[str]) -> list[tuple[str, str]]:
    """Expand dataset references into ``(task name, ref)`` pairs."""
    out = []
    for ref in refs:
        if ref == "suite":
            out.extend((f"syn-{n}-{d}-{s}", f"synthetic:{n}:{d}:{s}") for n, d, s in SUITE)
        elif ref.startswith("synthetic:"):
            n, d, s = (int(x) for x in ref.split(":")[1:])
            out.append((f"syn-{n}-{d}-{s}", ref))
        else:
            out.append((Path(ref).name or ref, ref))
    names = [name for name, _ in out]
    if len(set(names)) != len(names):
        raise ExperimentError(f"duplicate task names in {names}")
    return out


@lru_cache(maxsize=32)
def _instance(ref: str, p: float) -> Instance:
    if ref.startswith("synthetic:"):
        n, d, s = (int(x) for x in ref.split(":")[1:])
        repo, task = synthetic_instance(n, d, s)
    else:
        repo, task = load_any(ref)
    return prepare(repo, task, p)


def _one_run(task: str, ref: str, variant: str, run: int, seed: int, overrides: dict):
    config = RunConfig(algorithm=variant, seed=seed, **overrides)
    try:
        res = evolve(config, instance=_instance(ref, config.p))
    except Exception as exc:
        raise RunFailedError(task, variant, seed, exc) from exc
    row = {
        "task": task, "variant": variant, "run": run, "seed": seed,
        "fitness": res.fitness, "evaluations": res.evaluations,
        "elapsed_ms": res.elapsed_ms,
        "services": " ".join(str(res.layers.relevant[k]) for k in sorted(res.graph.nodes)),
    }
    trace = [
        {"task": task, "variant": variant, "run": run, **asdict(t)}
        for t in res.trace
    ]
    return row, trace


@dataclass
class ComparisonTable:
    # rows[(task, variant)] = {"fitness_mean", "fitness_std", "time_mean", "time_std", "runs"}
    rows: dict[tuple[str, str], dict[str, float]]
    # scores[(a, b)] = {"win", "draw", "loss"} of a against b over tasks
    scores: dict[tuple[str, str], dict[str, int]]
    tasks: list[str]
    variants: list[str]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["task", "variant", "runs", "fitness_mean", "fitness_std", "time_mean", "time_std"])
            for (task, variant), r in self.rows.items():
                w.writerow([task, variant, r["runs"], repr(r["fitness_mean"]), repr(r["fitness_std"]),
                            repr(r["time_mean"]), repr(r["time_std"])])
            w.writerow([])
            w.writerow(["variant", "against", "win", "draw", "loss"])
            for (a, b), s in self.scores.items():
                w.writerow([a, b, s["win"], s["draw"], s["loss"]])

    def render(self) -> str:
        """Mean ± std per task and variant, then win/draw/loss per pair."""
        head = ["task"] + self.variants
        lines = []
        for task in self.tasks:
            cells = [task]
            for v in self.variants:
                r = self.rows.get((task, v))
                cells.append("-" if r is None else f"{r['fitness_mean']:.6f} ± {r['fitness_std']:.6f}")
            lines.append(cells)
        time_lines = []
        for task in self.tasks:
            cells = [task]
            for v in self.variants:
                r = self.rows.get((task, v))
                cells.append("-" if r is None else f"{r['time_mean']:.1f} ± {r['time_std']:.1f}")
            time_lines.append(cells)

        def table(rows: list[list[str]]) -> list[str]:
            widths = [max(len(row[k]) for row in [head, *rows]) for k in range(len(head))]
            fmt = lambda row: "  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip()
            return [fmt(head), fmt(["-" * w for w in widths]), *(fmt(r) for r in rows)]

        out = ["Mean fitness ± std", *table(lines), "", "Mean time (ms) ± std", *table(time_lines), "",
               "Win/draw/loss (row vs column, t-test at 5%)"]
        pair_head = ["variant"] + self.variants
        pair_rows = []
        for a in self.variants:
            cells = [a]
            for b in self.variants:
                s = self.scores.get((a, b))
                cells.append("-" if s is None else f"{s['win']}/{s['draw']}/{s['loss']}")
            pair_rows.append(cells)
        widths = [max(len(r[k]) for r in [pair_head, *pair_rows]) for k in range(len(pair_head))]
        for row in [pair_head, *pair_rows]:
            out.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
        return "\n".join(out) + "\n"


def build_table(runs: Sequence[dict], alpha: float = ALPHA) -> ComparisonTable:
    """Aggregate per-run rows (``task``, ``variant``, ``fitness``, optional ``elapsed_ms``)."""
    tasks: list[str] = []
    variants: list[str] = []
    fit: dict[tuple[str, str], list[float]] = {}
    time_ms: dict[tuple[str, str], list[float]] = {}
    for r in runs:
        task, variant = str(r["task"]), str(r["variant"])
        if task not in tasks:
            tasks.append(task)
        if variant not in variants:
            variants.append(variant)
        fit.setdefault((task, variant), []).append(float(r["fitness"]))
        t = r.get("elapsed_ms")
        time_ms.setdefault((task, variant), []).append(float(t) if t not in (None, "") else float("nan"))
    rows = {}
    for task in tasks:
        for v in variants:
            if (task, v) not in fit:
                continue
            fm, fs = mean_std(fit[(task, v)])
            tm, ts = mean_std(time_ms[(task, v)])
            rows[(task, v)] = {"runs": len(fit[(task, v)]), "fitness_mean": fm, "fitness_std": fs,
                               "time_mean": tm, "time_std": ts}
    scores = {}
    for a, b in (pair for pair in combinations(variants, 2)):
        for x, y in ((a, b), (b, a)):
            s = {"win": 0, "draw": 0, "loss": 0}
            for task in tasks:
                xs, ys = fit.get((task, x)), fit.get((task, y))
                if xs is None or ys is None:
                    continue
                if len(xs) < 2 or len(ys) < 2:
                    raise ExperimentError(f"task {task}: comparison needs >= 2 runs per variant")
                s[compare(xs, ys, alpha)] += 1
            scores[(x, y)] = s
    return ComparisonTable(rows, scores, tasks, variants)


def _write_rows(path: Path, columns: list[str], rows: Iterable[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: ("" if r.get(k) is None else (repr(r[k]) if isinstance(r[k], float) else r[k]))
                        for k in columns})


def read_runs_csv(paths: Iterable) -> list[dict]:
    """Per-run rows from our runs.csv or an external result file.

    External files need ``task``, ``variant`` and ``fitness`` columns;
    ``elapsed_ms`` is optional.
    """
    rows: list[dict] = []
    for path in paths:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            missing = {"task", "variant", "fitness"} - set(reader.fieldnames or [])
            if missing:
                raise ExperimentError(f"{path}: missing columns {sorted(missing)}")
            for k, r in enumerate(reader, start=2):
                try:
                    float(r["fitness"])
                except ValueError:
                    raise ExperimentError(f"{path}:{k}: fitness {r['fitness']!r} is not a number") from None
                rows.append(r)
    return rows


def run_experiment(spec: ExperimentSpec) -> tuple[ComparisonTable, list[dict], list[dict]]:
    """Run every (task, variant, run) and aggregate.

    Run ``i`` of every variant uses seed ``seed_base + i``. With
    ``workers > 1`` runs go to a process pool; results are collected in
    submission order so the output does not depend on scheduling. When
    ``spec.out`` is set, runs.csv, traces.csv, comparison.csv and
    table.txt are written there.
    """
    jobs = [
        (task, ref, variant, i, spec.seed_base + i, dict(spec.config))
        for task, ref in resolve_datasets(spec.datasets)
        for variant in spec.variants
        for i in range(spec.runs)
    ]
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            futures = [pool.submit(_one_run, *job) for job in jobs]
            results = [f.result() for f in futures]
    else:
        results = [_one_run(*job) for job in jobs]
    runs = [row for row, _ in results]
    traces = [t for _, trace in results for t in trace]
    table = build_table(runs)
    if spec.out is not None:
        out = Path(spec.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_rows(out / "runs.csv", RUN_COLUMNS, runs)
        _write_rows(out / "traces.csv", TRACE_COLUMNS, traces)
        table.write_csv(out / "comparison.csv")
        (out / "table.txt").write_text(table.render())
    return table, runs, traces
