"""Node-histogram EDA with optional memetic local search."""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace as dc_replace
from typing import Sequence

import numpy as np

from meeda.codec import CompositionGraph, Instance, Permutation, decode, encode, is_permutation
from meeda.discovery import LayerSet, discover
from meeda.evaluate import DEFAULT_WEIGHTS, Evaluator, FitnessWeights
from meeda.ingest import Repository
from meeda.localsearch import Replace, SwapOperator, better_neighbor_rate, improve, select_for_ls
from meeda.model import CompositionTask

ALGORITHMS = {
    "eda": None,
    "meeda-op": SwapOperator.ONE_POINT,
    "meeda-tp": SwapOperator.TWO_POINT,
    "meeda-ob": SwapOperator.ONE_BLOCK,
    "meeda-lop": SwapOperator.LAYER_ONE_POINT,
}


@dataclass
class NodeHistogramMatrix:
    # entries[position][service]
    entries: np.ndarray
    epsilon: float

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def counts(self) -> np.ndarray:
        return np.rint(self.entries - self.epsilon).astype(int)


def bias(m: int, n: int, b_ratio: float) -> float:
    """Additive bias ``m / (n - 1) * b_ratio``; a single-service space uses ``m * b_ratio``."""
    return m / (n - 1) * b_ratio if n > 1 else m * b_ratio


def learn_nhm(
    individuals: Sequence[Permutation | Sequence[int]],
    b_ratio: float,
    epsilon_abs: float | None = None,
) -> NodeHistogramMatrix:
    """Count how often each service sits at each position, plus a uniform bias.

    ``epsilon_abs`` replaces the computed bias with a fixed value.
    """
    orders = [ind.order if isinstance(ind, Permutation) else tuple(ind) for ind in individuals]
    if not orders:
        raise ValueError("learn_nhm needs at least one individual")
    n = len(orders[0])
    if any(len(o) != n for o in orders):
        raise ValueError("individuals have mixed dimensions")
    eps = bias(len(orders), n, b_ratio) if epsilon_abs is None else float(epsilon_abs)
    arr = np.asarray(orders, dtype=np.intp)
    entries = np.zeros((n, n))
    positions = np.broadcast_to(np.arange(n), arr.shape)
    np.add.at(entries, (positions, arr), 1.0)
    return NodeHistogramMatrix(entries + eps, eps)


def sample(nhm: NodeHistogramMatrix, rng: np.random.Generator) -> Permutation:
    """Node-histogram-based sampling.

    Positions are filled in a random order; each draws one of the still
    unused services with probability proportional to its entry in that
    position's row. A row with no weight left falls back to a uniform draw.
    """
    n = nhm.n
    order = np.empty(n, dtype=np.intp)
    free = np.ones(n, dtype=bool)
    for pos in rng.permutation(n):
        w = np.where(free, nhm.entries[pos], 0.0)
        total = w.sum()
        if total <= 0:
            w = free.astype(float)
            total = w.sum()
        k = int(np.searchsorted(np.cumsum(w), rng.random() * total, side="right"))
        k = min(k, n - 1)
        while not free[k]:
            k -= 1
        order[pos] = k
        free[k] = False
    return Permutation(tuple(order.tolist()))


@dataclass
class RunConfig:
    algorithm: str = "meeda-lop"
    pop_size: int = 200
    generations: int = 100
    b_ratio: float = 0.0002
    n_set: int = 6
    n_nb: int = 20
    p: float = 0.75
    weights: tuple[float, ...] = DEFAULT_WEIGHTS
    seed: int = 0
    ls_replace: str = "if-better"
    epsilon_abs: float | None = None
    boundary_links: bool = True

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; choose from {sorted(ALGORITHMS)}")
        if self.pop_size < 2 or self.pop_size % 2:
            raise ValueError("population size must be even and >= 2")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")
        if self.n_set < 2:
            raise ValueError("n_set must be >= 2")
        if self.n_nb < 1:
            raise ValueError("n_nb must be >= 1")
        Replace(self.ls_replace)
        FitnessWeights(tuple(self.weights))

    @property
    def operator(self) -> SwapOperator | None:
        return ALGORITHMS[self.algorithm]

    def with_(self, **kw) -> "RunConfig":
        return dc_replace(self, **kw)


@dataclass
class TraceRow:
    generation: int
    evaluations: int
    best_fitness: float
    mean_fitness: float
    elapsed_ms: float
    better_neighbor_rate: float | None = None


@dataclass
class RunResult:
    best: Permutation
    graph: CompositionGraph
    fitness: float
    trace: list[TraceRow]
    evaluations: int
    elapsed_ms: float
    layers: LayerSet
    instance: Instance = field(repr=False)


class Archive:
    """Elite store plus the evaluation cache of one run.

    ``seen`` maps canonical (encoded) orders to fitness; ``aliases`` maps
    every order met so far to its canonical order, so a repeated order is
    neither decoded nor evaluated again.
    """

    def __init__(self, capacity: int, evaluator: Evaluator):
        self.capacity = capacity
        self.evaluator = evaluator
        self.elites: list[Permutation] = []
        self.seen: dict[tuple[int, ...], float] = {}
        self.boundary: dict[tuple[int, ...], int] = {}
        self.aliases: dict[tuple[int, ...], tuple[int, ...]] = {}
        self.decodes = 0
        self.evaluations = 0
        self.best: Permutation | None = None
        self.best_graph: CompositionGraph | None = None

    def _cached(self, key: tuple[int, ...]) -> Permutation:
        return Permutation(key, self.boundary[key], self.seen[key], encoded=True)

    def evaluate(self, order: Sequence[int]) -> Permutation:
        order = tuple(order)
        key = self.aliases.get(order)
        if key is not None:
            return self._cached(key)
        self.decodes += 1
        graph = decode(order, self.evaluator.inst)
        enc = encode(graph, order)
        key = enc.order
        self.aliases[order] = key
        self.aliases[key] = key
        if key in self.seen:
            return self._cached(key)
        enc.fitness = self.evaluator.graph_fitness(graph)
        self.evaluations += 1
        self.seen[key] = enc.fitness
        self.boundary[key] = enc.boundary
        if self.best is None or enc.fitness > self.best.fitness:
            self.best, self.best_graph = enc, graph
        return enc.copy()

    def update(self, candidates: Sequence[Permutation]) -> None:
        """Keep the top ``capacity`` distinct candidates as the new elites."""
        uniq: dict[tuple[int, ...], Permutation] = {}
        for c in candidates:
            uniq.setdefault(c.order, c)
        ranked = sorted(uniq.values(), key=lambda c: (-c.fitness, c.order))
        self.elites = ranked[: self.capacity]


def prepare(repo: Repository, task: CompositionTask, p: float = 0.75) -> Instance:
    return Instance(repo, task, discover(repo, task, p), p)


def evolve(config: RunConfig, repo: Repository | None = None, task: CompositionTask | None = None,
           instance: Instance | None = None) -> RunResult:
    """One seeded run.

    Each generation merges the population into the archive's elites, runs
    local search on a fitness-uniform selection (memetic variants only),
    keeps the top half as the new elites, learns a node histogram from
    them and samples a fresh population.
    """
    t0 = time.perf_counter()
    inst = instance if instance is not None else prepare(repo, task, config.p)
    evaluator = Evaluator(inst, FitnessWeights(tuple(config.weights)), config.boundary_links)
    rng = np.random.default_rng(config.seed)
    m, n = config.pop_size, inst.n
    archive = Archive(m // 2, evaluator)
    op = config.operator
    replace = Replace(config.ls_replace)
    layer_index = inst.layers.layer_index
    trace: list[TraceRow] = []

    def record(g: int, pop: list[Permutation], rates: list[float] | None):
        trace.append(
            TraceRow(
                generation=g,
                evaluations=archive.evaluations,
                best_fitness=archive.best.fitness,
                mean_fitness=float(np.mean([p.fitness for p in pop])),
                elapsed_ms=(time.perf_counter() - t0) * 1000.0,
                better_neighbor_rate=better_neighbor_rate(rates) if rates is not None else None,
            )
        )

    pop = [archive.evaluate(rng.permutation(n).tolist()) for _ in range(m)]
    record(0, pop, None)
    for g in range(1, config.generations + 1):
        merged: dict[tuple[int, ...], Permutation] = {}
        for p in pop + archive.elites:
            merged.setdefault(p.order, p)
        candidates = list(merged.values())
        rates = None
        if op is not None and n > 1:
            rates = []
            for chosen in select_for_ls(candidates, config.n_set, rng):
                new, rate = improve(chosen, op, config.n_nb, layer_index, archive.evaluate, rng, replace)
                rates.append(rate)
                if new is not chosen:
                    candidates[candidates.index(chosen)] = new
        archive.update(candidates)
        nhm = learn_nhm(archive.elites, config.b_ratio, config.epsilon_abs)
        pop = [archive.evaluate(sample(nhm, rng).order) for _ in range(m)]
        record(g, pop, rates)

    best = archive.best
    assert is_permutation(best.order, n)
    return RunResult(
        best=best.copy(),
        graph=archive.best_graph,
        fitness=best.fitness,
        trace=trace,
        evaluations=archive.evaluations,
        elapsed_ms=(time.perf_counter() - t0) * 1000.0,
        layers=inst.layers,
        instance=inst,
    )
