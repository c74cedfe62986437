"""Exhaustive optimum over admitted-service subsets, for small instances."""

from __future__ import annotations

from itertools import combinations

from meeda.codec import CompositionGraph, Instance, build_graph
from meeda.discovery import discover
from meeda.evaluate import DEFAULT_WEIGHTS, Evaluator, FitnessWeights
from meeda.ingest import Repository
from meeda.model import CompositionTask

MAX_ORACLE_SERVICES = 12


class OracleTooLargeError(ValueError):
    pass


def closed(subset: frozenset[int], inst: Instance) -> bool:
    """Every member is reachable from Start within the subset, and End is satisfiable."""
    avail = set(inst.start_provides)
    pending = set(subset)
    while pending:
        fresh = [s for s in pending if inst.inputs[s] <= avail]
        if not fresh:
            return False
        for s in fresh:
            avail |= inst.provides[s]
        pending.difference_update(fresh)
    return inst.end_inputs <= avail


def brute_force_optimum(
    target: Evaluator | Repository,
    task: CompositionTask | None = None,
    weights=DEFAULT_WEIGHTS,
    p: float = 0.75,
    limit: int = MAX_ORACLE_SERVICES,
    boundary_links: bool = True,
) -> tuple[float, CompositionGraph]:
    """Best fitness over the graphs of every feasible subset of relevant services.

    ``target`` is either a ready :class:`Evaluator` or a repository, in
    which case ``task`` is required and discovery runs first (an
    unsolvable task raises from there). Subsets are tried in increasing
    size; the first subset reaching the best fitness wins ties.
    """
    if isinstance(target, Evaluator):
        evaluator = target
    else:
        if task is None:
            raise TypeError("brute_force_optimum(repo, ...) needs a task")
        inst = Instance(target, task, discover(target, task, p), p)
        w = weights if isinstance(weights, FitnessWeights) else FitnessWeights(tuple(weights))
        evaluator = Evaluator(inst, w, boundary_links)
    inst = evaluator.inst
    if inst.n > limit:
        raise OracleTooLargeError(f"{inst.n} relevant services exceed the oracle limit of {limit}")
    best: tuple[float, CompositionGraph] | None = None
    for size in range(inst.n + 1):
        for combo in combinations(range(inst.n), size):
            subset = frozenset(combo)
            if not closed(subset, inst):
                continue
            graph = build_graph(subset, inst)
            f = evaluator.graph_fitness(graph)
            if best is None or f > best[0]:
                best = (f, graph)
    assert best is not None, "discovery guarantees the full relevant set is feasible"
    return best
