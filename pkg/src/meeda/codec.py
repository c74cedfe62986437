"""Permutation <-> DAG mapping.

Decoding scans a permutation and admits every service whose inputs are
already matched, repeating the scan until End is satisfiable. The DAG is
then built backwards from End: each input is bound to the admitted
producer with the smallest (level, index), where level is the
forward-chaining layer inside the admitted set and Start ranks first.
Services that End does not reach are dropped.

Encoding lists the DAG's services by longest distance from Start,
ascending index within a distance, followed by the unused services in
their previous relative order. With this binding rule,
``decode(encode(decode(p)))`` rebuilds exactly ``decode(p)``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from meeda.discovery import LayerSet
from meeda.ingest import Repository
from meeda.model import END, START, CompositionTask, QosVector, aggregate_dag
from meeda.ontology import DEFAULT_PLUGIN_SCORE, link_quality, match_type, similarity


class UndecodableError(ValueError):
    pass


class CodecError(ValueError):
    pass


@dataclass
class Permutation:
    order: tuple[int, ...]
    # position of the last used service; -1 when none is used or not yet encoded
    boundary: int = -1
    fitness: float | None = None
    encoded: bool = False

    def __post_init__(self):
        self.order = tuple(int(x) for x in self.order)

    def __len__(self) -> int:
        return len(self.order)

    @property
    def used(self) -> tuple[int, ...]:
        return self.order[: self.boundary + 1]

    @property
    def unused(self) -> tuple[int, ...]:
        return self.order[self.boundary + 1 :]

    def position_of(self) -> list[int]:
        pos = [0] * len(self.order)
        for i, s in enumerate(self.order):
            pos[s] = i
        return pos

    def copy(self) -> "Permutation":
        return Permutation(self.order, self.boundary, self.fitness, self.encoded)

    def __str__(self) -> str:
        if not self.encoded:
            return "[" + ", ".join(map(str, self.order)) + "]"
        left = ", ".join(map(str, self.used))
        right = ", ".join(map(str, self.unused))
        return f"[{left} | {right}]"


def is_permutation(order: Sequence[int], n: int | None = None) -> bool:
    n = len(order) if n is None else n
    return len(order) == n and sorted(order) == list(range(n))


@dataclass(frozen=True)
class Binding:
    producer: int
    output: str


@dataclass
class CompositionGraph:
    """Start-to-End DAG over dense service indexes.

    ``edges`` maps ``(producer, consumer)`` to ``(type, sim)``; ``START``
    and ``END`` are the sentinels. ``bindings[(consumer, input)]`` records
    which producer output feeds each input.
    """

    nodes: frozenset[int]
    edges: dict[tuple[int, int], tuple[float, float]]
    bindings: dict[tuple[int, str], Binding]
    depth: dict[int, int] = field(default_factory=dict)

    def predecessors(self, node: int) -> list[int]:
        return sorted(src for (src, dst) in self.edges if dst == node)

    def successors(self, node: int) -> list[int]:
        return sorted(dst for (src, dst) in self.edges if src == node)

    def edge_set(self) -> frozenset[tuple[int, int]]:
        return frozenset(self.edges)

    def ordered_nodes(self) -> list[int]:
        return sorted(self.nodes, key=lambda s: (self.depth[s], s))

    def to_json(self, layers: LayerSet | None = None) -> dict[str, object]:
        def name(x: int):
            if x == START:
                return "Start"
            if x == END:
                return "End"
            return layers.relevant[x] if layers is not None else x

        return {
            "nodes": [name(s) for s in self.ordered_nodes()],
            "edges": [
                {"from": name(a), "to": name(b), "type": q[0], "sim": q[1]}
                for (a, b), q in sorted(self.edges.items())
            ],
        }


class Instance:
    """A composition task prepared for search: dense relevant services and match caches."""

    def __init__(
        self,
        repo: Repository,
        task: CompositionTask,
        layers: LayerSet,
        p: float = DEFAULT_PLUGIN_SCORE,
    ):
        if not 0.0 < p < 1.0:
            raise ValueError(f"plugin score must lie in (0, 1), got {p}")
        self.repo = repo
        self.task = task
        self.layers = layers
        self.p = p
        self.n = layers.n
        self.services = [repo[s] for s in layers.relevant]
        self.inputs = [frozenset(s.inputs) for s in self.services]
        self.outputs = [frozenset(s.outputs) for s in self.services]
        self.provides = [repo.provides[s] for s in layers.relevant]
        self.start_outputs = frozenset(task.inputs)
        self.start_provides = repo.satisfiable_by(task.inputs)
        self.end_inputs = frozenset(task.outputs)
        self.qos = {k: s.qos for k, s in enumerate(self.services)}
        self._best_output: dict[tuple[int, str], tuple[str, float, float]] = {}

    def outputs_of(self, producer: int) -> frozenset[str]:
        return self.start_outputs if producer == START else self.outputs[producer]

    def inputs_of(self, consumer: int) -> frozenset[str]:
        return self.end_inputs if consumer == END else self.inputs[consumer]

    def best_output(self, producer: int, concept: str) -> tuple[str, float, float]:
        """Producer output that feeds ``concept``: exact first, then highest similarity, then name."""
        key = (producer, concept)
        hit = self._best_output.get(key)
        if hit is None:
            tax = self.repo.taxonomy
            best = None
            for o in sorted(self.outputs_of(producer)):
                m = match_type(tax, o, concept, self.p)
                if not m.ok:
                    continue
                cand = (m.score, similarity(tax, o, concept), o)
                if best is None or cand[:2] > best[:2]:
                    best = cand
            if best is None:
                raise CodecError(f"producer {producer} cannot feed {concept!r}")
            hit = (best[2], best[0], best[1])
            self._best_output[key] = hit
        return hit

    def end_satisfied(self, covered) -> bool:
        return self.end_inputs <= covered


def admit(order: Iterable[int], inst: Instance) -> list[int]:
    """Greedy admission: repeated left-to-right scans until End is satisfiable."""
    covered = set(inst.start_provides)
    end_inputs = inst.end_inputs
    if end_inputs <= covered:
        return []
    inputs, provides = inst.inputs, inst.provides
    admitted: list[int] = []
    remaining = list(order)
    while remaining:
        keep = []
        for k, s in enumerate(remaining):
            if inputs[s] <= covered:
                admitted.append(s)
                covered |= provides[s]
                if end_inputs <= covered:
                    return admitted
            else:
                keep.append(s)
        if len(keep) == len(remaining):
            break
        remaining = keep
    raise UndecodableError(
        f"undecodable permutation: End still lacks {sorted(end_inputs - covered)} after admitting {admitted}"
    )


def levels_within(admitted: Iterable[int], inst: Instance) -> dict[int, int]:
    """Forward-chaining layer of each admitted service, using only admitted producers."""
    avail = set(inst.start_provides)
    pending = set(admitted)
    level: dict[int, int] = {}
    k = 0
    while pending:
        k += 1
        fresh = [s for s in pending if inst.inputs[s] <= avail]
        if not fresh:
            raise UndecodableError(f"services {sorted(pending)} cannot be satisfied within the admitted set")
        for s in fresh:
            level[s] = k
            avail |= inst.provides[s]
        pending.difference_update(fresh)
    return level


def build_graph(admitted: Iterable[int], inst: Instance) -> CompositionGraph:
    """Bind inputs backwards from End over an admitted set and keep what End reaches."""
    level = levels_within(admitted, inst)
    ranked = sorted(level, key=lambda s: (level[s], s))

    def producer_for(concept: str) -> int:
        if concept in inst.start_provides:
            return START
        for s in ranked:
            if concept in inst.provides[s]:
                return s
        raise UndecodableError(f"no admitted producer for {concept!r}")

    bindings: dict[tuple[int, str], Binding] = {}
    pairs: dict[tuple[int, int], list[tuple[str, str]]] = {}
    nodes: set[int] = set()
    queue = deque([END])
    while queue:
        consumer = queue.popleft()
        for concept in sorted(inst.inputs_of(consumer)):
            prod = producer_for(concept)
            out, _, _ = inst.best_output(prod, concept)
            bindings[(consumer, concept)] = Binding(prod, out)
            pairs.setdefault((prod, consumer), []).append((out, concept))
            if prod != START and prod not in nodes:
                nodes.add(prod)
                queue.append(prod)

    tax = inst.repo.taxonomy
    edges = {key: link_quality(ps, tax, inst.p) for key, ps in pairs.items()}
    return CompositionGraph(frozenset(nodes), edges, bindings, longest_depth(nodes, edges))


def longest_depth(nodes: Iterable[int], edges: Iterable[tuple[int, int]]) -> dict[int, int]:
    preds: dict[int, list[int]] = {s: [] for s in nodes}
    for src, dst in edges:
        if dst in preds:
            preds[dst].append(src)
    depth: dict[int, int] = {}

    def d(s: int) -> int:
        if s == START:
            return 0
        if s not in depth:
            depth[s] = 1 + max(d(p) for p in preds[s])
        return depth[s]

    for s in preds:
        d(s)
    return depth


def decode(perm: Permutation | Sequence[int], inst: Instance) -> CompositionGraph:
    order = perm.order if isinstance(perm, Permutation) else tuple(perm)
    return build_graph(admit(order, inst), inst)


def encode(graph: CompositionGraph, prev: Permutation | Sequence[int]) -> Permutation:
    """Canonical permutation of ``graph``; unused services keep their order from ``prev``."""
    prev_order = prev.order if isinstance(prev, Permutation) else tuple(prev)
    universe = set(prev_order)
    if not graph.nodes <= universe:
        raise CodecError(f"graph services {sorted(graph.nodes - universe)} are outside the permutation universe")
    depth = graph.depth or longest_depth(graph.nodes, graph.edges)
    prefix = sorted(graph.nodes, key=lambda s: (depth[s], s))
    used = set(prefix)
    suffix = [s for s in prev_order if s not in used]
    return Permutation(tuple(prefix) + tuple(suffix), len(prefix) - 1, encoded=True)


def canonicalize(perm: Permutation | Sequence[int], inst: Instance) -> tuple[Permutation, CompositionGraph]:
    graph = decode(perm, inst)
    return encode(graph, perm), graph


def graph_qos(graph: CompositionGraph, inst: Instance) -> QosVector:
    return aggregate_dag(graph.nodes, graph.edges, inst.qos)
