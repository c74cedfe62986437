"""Relevant-service discovery and layering by forward chaining from the task inputs."""

from __future__ import annotations

from dataclasses import dataclass, field

from meeda.ingest import Repository
from meeda.model import CompositionTask
from meeda.ontology import DEFAULT_PLUGIN_SCORE


class UnsolvableTaskError(ValueError):
    pass


@dataclass(frozen=True)
class LayerSet:
    """Relevant services, in ascending repository id, with their layers.

    Search code works on dense indexes ``0..n-1`` into ``relevant``;
    ``layer_index[k]`` is the layer of ``relevant[k]``.
    """

    relevant: tuple[int, ...]
    layer_of: dict[int, int]
    layers: tuple[frozenset[int], ...]
    layer_index: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "layer_index", tuple(self.layer_of[s] for s in self.relevant))

    @property
    def n(self) -> int:
        return len(self.relevant)

    def dense(self, service_id: int) -> int:
        return self.relevant.index(service_id)

    def to_json(self) -> dict[str, object]:
        return {
            "relevant": list(self.relevant),
            "layers": [sorted(layer) for layer in self.layers],
        }


def discover(repo: Repository, task: CompositionTask, p: float = DEFAULT_PLUGIN_SCORE) -> LayerSet:
    """Forward-chain from the task inputs to the fixpoint.

    A service joins layer ``k`` when all of its inputs first become matched
    (exactly or by a plugin match) by the outputs accumulated before
    iteration ``k``. Raises ``UnsolvableTaskError`` when the fixpoint does
    not cover the task outputs. ``p`` does not affect satisfiability.
    """
    available = set(repo.satisfiable_by(task.inputs))
    pending = set(range(len(repo)))
    layer_of: dict[int, int] = {}
    layers: list[frozenset[int]] = []
    while True:
        fresh = frozenset(s for s in pending if repo[s].inputs <= available)
        if not fresh:
            break
        layers.append(fresh)
        for s in fresh:
            layer_of[s] = len(layers)
            available |= repo.provides[s]
        pending -= fresh
    missing = sorted(task.outputs - available)
    if missing:
        raise UnsolvableTaskError(f"task unsolvable: no relevant service produces {missing}")
    return LayerSet(tuple(sorted(layer_of)), layer_of, tuple(layers))
