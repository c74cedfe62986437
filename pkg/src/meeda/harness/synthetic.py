"""Seeded synthetic composition instances in the canonical JSON format."""

from __future__ import annotations

import random
from pathlib import Path

from meeda.discovery import UnsolvableTaskError, discover
from meeda.ingest import Repository, build, dump_canonical
from meeda.model import CompositionTask, QosVector, Service
from meeda.ontology import Taxonomy

ROOT = "thing"
MAX_TRIES = 200


class GenerationError(RuntimeError):
    pass


def _family(name: str, depth: int, edges: list[tuple[str, str]]) -> dict[int, list[str]]:
    """Base concept under the root plus specialisations down to ``depth``; concepts by level."""
    edges.append((ROOT, name))
    by_level = {1: [name]}
    for lvl in range(2, depth + 1):
        by_level[lvl] = []
        for k, parent in enumerate(by_level[lvl - 1]):
            # two children under the base, one below that, to keep the tree small
            fan = 2 if lvl == 2 else 1
            for j in range(fan):
                child = f"{parent}.{j + 1}"
                edges.append((parent, child))
                by_level[lvl].append(child)
    return by_level


def _qos(rng: random.Random, good: bool) -> QosVector:
    if good:
        return QosVector(
            t=round(rng.uniform(1.0, 4.0), 3),
            ct=round(rng.uniform(1.0, 4.0), 3),
            r=round(rng.uniform(0.95, 1.0), 3),
            a=round(rng.uniform(0.95, 1.0), 3),
        )
    return QosVector(
        t=round(rng.uniform(4.0, 20.0), 3),
        ct=round(rng.uniform(4.0, 20.0), 3),
        r=round(rng.uniform(0.7, 0.95), 3),
        a=round(rng.uniform(0.7, 0.95), 3),
    )


def _minimal() -> tuple[Repository, CompositionTask]:
    tax = Taxonomy(ROOT, [(ROOT, "a"), (ROOT, "b"), (ROOT, "c")])
    services = [
        Service(0, frozenset({"a"}), frozenset({"b"}), QosVector(1.0, 1.0, 0.9, 0.9), "X"),
        Service(1, frozenset({"b"}), frozenset({"c"}), QosVector(1.0, 1.0, 0.9, 0.9), "Y"),
    ]
    return build(services, tax, CompositionTask({"a"}, {"c"}))


def _attempt(n_services: int, depth: int, rng: random.Random) -> tuple[Repository, CompositionTask]:
    n_irrelevant = max(0, n_services - 10) if n_services > 10 else (1 if n_services >= 6 else 0)
    n_relevant = n_services - n_irrelevant
    length = 3 if n_relevant >= 7 else 2
    stages = [f"x{k}" for k in range(1, length)]
    edges: list[tuple[str, str]] = []
    fam = {name: _family(name, depth, edges) for name in ["in", *stages, "out", "junk", "ext"]}
    tax = Taxonomy(ROOT, edges)
    chain = ["in", *stages, "out"]

    def plugin(name: str) -> str:
        deeper = [c for lvl in sorted(fam[name]) if lvl > 1 for c in fam[name][lvl]]
        return rng.choice(deeper) if deeper else name

    # (inputs, outputs, good qos)
    specs: list[tuple[set[str], set[str], bool]] = []
    for k in range(length):
        specs.append(({chain[k]}, {chain[k + 1]}, True))
    rest = n_relevant - length
    for k in range(rest):
        kind = rng.random()
        if kind < 0.5:
            # shortcut: skips ahead with a plugin match on a later concept
            src = rng.randrange(0, length)
            dst = rng.randrange(src + 1, length + 1)
            specs.append(({chain[src]}, {plugin(chain[dst])}, False))
        elif kind < 0.8:
            # alternative for one backbone step
            k2 = rng.randrange(length)
            out = chain[k2 + 1] if rng.random() < 0.5 else plugin(chain[k2 + 1])
            specs.append(({chain[k2]}, {out}, False))
        else:
            specs.append(({rng.choice(chain[:-1])}, {plugin("junk")}, False))
    for _ in range(n_irrelevant):
        specs.append(({"in", "ext"}, {rng.choice(chain[1:])}, False))
    rng.shuffle(specs)
    services = [
        Service(i, frozenset(ins), frozenset(outs), _qos(rng, good), f"s{i}")
        for i, (ins, outs, good) in enumerate(specs)
    ]
    return build(services, tax, CompositionTask({"in"}, {"out"}))


def synthetic_instance(n_services: int, depth: int, seed: int) -> tuple[Repository, CompositionTask]:
    """Random instance built around a cheap, reliable backbone chain.

    ``depth`` bounds the taxonomy depth. The remaining relevant services
    are costlier shortcuts that skip backbone steps with a plugin match,
    alternatives for single steps, and dead ends; one service per
    instance (for n >= 6) is never satisfiable. Two services always give
    the minimal chain ``a -> b -> c``.
    """
    if n_services < 2:
        raise ValueError("n_services must be >= 2")
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if n_services == 2:
        return _minimal()
    rng = random.Random(f"meeda-synthetic:{n_services}:{depth}:{seed}")
    for _ in range(MAX_TRIES):
        repo, task = _attempt(n_services, depth, rng)
        try:
            discover(repo, task)
        except UnsolvableTaskError:
            continue
        return repo, task
    raise GenerationError(f"no solvable instance after {MAX_TRIES} tries")


def generate_synthetic(n_services: int, depth: int, seed: int, out_dir) -> Path:
    repo, task = synthetic_instance(n_services, depth, seed)
    return dump_canonical(repo, task, out_dir)


# the fixed desk-scale suite: (n_services, depth, seed)
SUITE = [(8 + (k % 5), 3, k) for k in range(10)]


def suite_instances():
    for n, d, s in SUITE:
        repo, task = synthetic_instance(n, d, s)
        yield f"syn-{n}-{d}-{s}", repo, task
