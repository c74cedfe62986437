"""Fitness-uniform selection, swap neighbourhoods and the joint local-search step."""

from __future__ import annotations

import enum
from typing import Callable, Sequence

import numpy as np

from meeda.codec import Permutation


class SwapOperator(enum.Enum):
    ONE_POINT = "one-point"
    TWO_POINT = "two-point"
    ONE_BLOCK = "one-block"
    LAYER_ONE_POINT = "layer-one-point"


class Replace(enum.Enum):
    ALWAYS = "always"
    IF_BETTER = "if-better"


def select_for_ls(pop: Sequence[Permutation], n_set: int, rng: np.random.Generator) -> list[Permutation]:
    """Pick the best individual plus one random member of each non-empty fitness bin.

    The fitness range of ``pop`` is cut into ``n_set - 1`` equal intervals.
    The best individual is taken out before drawing, so the result holds
    distinct individuals and may be shorter than ``n_set``. A population
    with zero fitness range forms a single bin.
    """
    if n_set < 2:
        raise ValueError("n_set must be >= 2")
    if not pop:
        return []
    ranked = sorted(pop, key=lambda p: p.fitness, reverse=True)
    best, rest = ranked[0], ranked[1:]
    lo, hi = ranked[-1].fitness, best.fitness
    groups = n_set - 1
    width = (hi - lo) / groups
    bins: list[list[Permutation]] = [[] for _ in range(groups)]
    for p in rest:
        k = 0 if width == 0 else min(int((p.fitness - lo) / width), groups - 1)
        bins[k].append(p)
    chosen = [best]
    for members in reversed(bins):
        if members:
            chosen.append(members[int(rng.integers(len(members)))])
    return chosen


def _pick_two(rng: np.random.Generator, lo: int, hi: int) -> tuple[int, int]:
    a, b = rng.choice(np.arange(lo, hi + 1), size=2, replace=False)
    return int(a), int(b)


def apply_operator(
    op: SwapOperator,
    perm: Permutation,
    layer_index: Sequence[int],
    rng: np.random.Generator,
) -> tuple[tuple[int, ...], bool]:
    """One neighbour of an encoded permutation.

    Returns ``(order, changed)``; ``changed`` is false when the operator
    is infeasible on ``perm`` and the order comes back untouched.
    ``layer_index[s]`` is the layer of service ``s`` (used by the
    layer-based swap only).
    """
    if not perm.encoded:
        raise ValueError("swap operators act on encoded permutations")
    order = list(perm.order)
    n, t = len(order), perm.boundary
    n_used, n_unused = t + 1, n - t - 1

    if op is SwapOperator.ONE_POINT:
        if n_used < 1 or n_unused < 1:
            return perm.order, False
        a = int(rng.integers(0, t + 1))
        b = int(rng.integers(t + 1, n))
        order[a], order[b] = order[b], order[a]
        return tuple(order), True

    if op is SwapOperator.TWO_POINT:
        if n_used < 2 or n_unused < 2:
            return perm.order, False
        a1, a2 = _pick_two(rng, 0, t)
        b1, b2 = _pick_two(rng, t + 1, n - 1)
        order[a1], order[b1] = order[b1], order[a1]
        order[a2], order[b2] = order[b2], order[a2]
        return tuple(order), True

    if op is SwapOperator.ONE_BLOCK:
        # block starts a in [0, t) and b in [t+1, n-1)
        if t < 1 or t + 1 >= n - 1:
            return perm.order, False
        a = int(rng.integers(0, t))
        b = int(rng.integers(t + 1, n - 1))
        spliced = order[:a] + order[b:] + order[t + 1 : b] + order[a : t + 1]
        return tuple(spliced), True

    if op is SwapOperator.LAYER_ONE_POINT:
        if n_used < 1 or n_unused < 1:
            return perm.order, False
        for _ in range(n):
            a = int(rng.integers(0, t + 1))
            layer = layer_index[order[a]]
            same = [b for b in range(t + 1, n) if layer_index[order[b]] == layer]
            if same:
                b = same[int(rng.integers(len(same)))]
                order[a], order[b] = order[b], order[a]
                return tuple(order), True
        return perm.order, False

    raise ValueError(f"unknown operator {op!r}")


def improve(
    perm: Permutation,
    op: SwapOperator,
    n_nb: int,
    layer_index: Sequence[int],
    evaluate: Callable[[tuple[int, ...]], Permutation],
    rng: np.random.Generator,
    replace: Replace = Replace.IF_BETTER,
) -> tuple[Permutation, float]:
    """Explore ``n_nb`` random neighbours of ``perm``.

    ``evaluate`` maps an order to its encoded, scored permutation.
    Returns the replacement for ``perm`` and the fraction of the
    ``n_nb`` neighbours strictly fitter than it. Infeasible (unchanged)
    neighbours are not evaluated and count as not better.
    """
    if perm.fitness is None:
        raise ValueError("improve needs an evaluated permutation")
    best: Permutation | None = None
    better = 0
    for _ in range(n_nb):
        order, changed = apply_operator(op, perm, layer_index, rng)
        if not changed:
            continue
        nb = evaluate(order)
        if nb.fitness > perm.fitness:
            better += 1
        if best is None or nb.fitness > best.fitness:
            best = nb
    rate = better / n_nb if n_nb else 0.0
    if best is None:
        return perm, rate
    if replace is Replace.ALWAYS or best.fitness > perm.fitness:
        return best, rate
    return perm, rate


def better_neighbor_rate(rates: Sequence[float]) -> float:
    """Mean better-neighbour fraction over the local-search calls of one generation."""
    return float(np.mean(rates)) if len(rates) else 0.0
