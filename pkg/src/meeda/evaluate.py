"""QoSM aggregation, normalisation bounds and the weighted fitness."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

from meeda.codec import CompositionGraph, Instance, Permutation, canonicalize, graph_qos
from meeda.model import END, START, QosVector

log = logging.getLogger(__name__)

DEFAULT_WEIGHTS = (0.25, 0.25, 0.125, 0.125, 0.125, 0.125)
CRITERIA = ("MT", "SIM", "A", "R", "T", "CT")


@dataclass(frozen=True)
class FitnessWeights:
    w: tuple[float, float, float, float, float, float] = DEFAULT_WEIGHTS

    def __post_init__(self):
        w = tuple(float(x) for x in self.w)
        if len(w) != 6:
            raise ValueError(f"expected 6 weights, got {len(w)}")
        if any(x < 0 or not math.isfinite(x) for x in w):
            raise ValueError(f"weights must be finite and >= 0: {w}")
        if abs(sum(w) - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1, got {sum(w)}")
        object.__setattr__(self, "w", w)

    @classmethod
    def parse(cls, text: str) -> "FitnessWeights":
        return cls(tuple(float(x) for x in text.split(",")))

    def __iter__(self):
        return iter(self.w)


@dataclass(frozen=True)
class QualityBounds:
    """(min, max) of availability, reliability, response time and cost."""

    a: tuple[float, float]
    r: tuple[float, float]
    t: tuple[float, float]
    ct: tuple[float, float]

    def __post_init__(self):
        for name in ("a", "r", "t", "ct"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"bound {name}: min {lo} > max {hi}")


def qosm(graph: CompositionGraph, boundary_links: bool = True) -> tuple[float, float]:
    """Match-type product and mean similarity over the graph's causal links.

    With ``boundary_links`` false, links leaving Start or entering End are
    ignored. A graph without links scores (1, 1).
    """
    links = [
        q for (src, dst), q in graph.edges.items() if boundary_links or (src != START and dst != END)
    ]
    if not links:
        log.debug("qosm: no causal links, scoring MT = SIM = 1")
        return 1.0, 1.0
    mt = math.prod(q[0] for q in links)
    sim = sum(q[1] for q in links) / len(links)
    return mt, sim


def compute_bounds(qos: Sequence[QosVector]) -> QualityBounds:
    """Bounds over the relevant services' QoS.

    A and R range from the product to the best single value, T and CT
    from the best single value to the sum. No services gives degenerate
    bounds, which normalise to 1.
    """
    qos = list(qos)
    if not qos:
        return QualityBounds(a=(1.0, 1.0), r=(1.0, 1.0), t=(0.0, 0.0), ct=(0.0, 0.0))
    return QualityBounds(
        a=(math.prod(q.a for q in qos), max(q.a for q in qos)),
        r=(math.prod(q.r for q in qos), max(q.r for q in qos)),
        t=(min(q.t for q in qos), sum(q.t for q in qos)),
        ct=(min(q.ct for q in qos), sum(q.ct for q in qos)),
    )


def bounds_for(layers, repo) -> QualityBounds:
    """Bounds over the relevant services of a discovered layer set."""
    return compute_bounds(repo[s].qos for s in layers.relevant)


def _scale(value: float, lo: float, hi: float, higher_is_better: bool) -> float:
    if hi - lo == 0:
        return 1.0
    x = (value - lo) / (hi - lo) if higher_is_better else (hi - value) / (hi - lo)
    return min(1.0, max(0.0, x))


def normalized_terms(mt: float, sim: float, qos: QosVector, bounds: QualityBounds) -> tuple[float, ...]:
    """The six fitness terms in [0, 1]; time and cost are already flipped so 1 is best."""
    return (
        _scale(mt, 0.0, 1.0, True),
        _scale(sim, 0.0, 1.0, True),
        _scale(qos.a, *bounds.a, True),
        _scale(qos.r, *bounds.r, True),
        _scale(qos.t, *bounds.t, False),
        _scale(qos.ct, *bounds.ct, False),
    )


def combine(terms: Sequence[float], weights: FitnessWeights) -> float:
    return sum(w * x for w, x in zip(weights.w, terms))


def fitness(
    graph: CompositionGraph,
    bounds: QualityBounds,
    weights: FitnessWeights,
    inst: Instance,
    boundary_links: bool = True,
) -> float:
    mt, sim = qosm(graph, boundary_links)
    return combine(normalized_terms(mt, sim, graph_qos(graph, inst), bounds), weights)


class Evaluator:
    """Fitness of graphs and permutations for one prepared instance."""

    def __init__(
        self,
        inst: Instance,
        weights: FitnessWeights | None = None,
        boundary_links: bool = True,
    ):
        self.inst = inst
        self.weights = weights or FitnessWeights()
        self.boundary_links = boundary_links
        self.bounds = compute_bounds(inst.services[k].qos for k in range(inst.n))

    def graph_fitness(self, graph: CompositionGraph) -> float:
        return fitness(graph, self.bounds, self.weights, self.inst, self.boundary_links)

    def breakdown(self, graph: CompositionGraph) -> dict[str, float]:
        mt, sim = qosm(graph, self.boundary_links)
        q = graph_qos(graph, self.inst)
        terms = normalized_terms(mt, sim, q, self.bounds)
        return {
            "fitness": combine(terms, self.weights),
            "MT": mt,
            "SIM": sim,
            "A": q.a,
            "R": q.r,
            "T": q.t,
            "CT": q.ct,
            **{f"norm_{c}": v for c, v in zip(CRITERIA, terms)},
        }

    def __call__(self, perm: Permutation | Sequence[int]) -> tuple[Permutation, CompositionGraph]:
        """Decode, re-encode and score ``perm``; returns the encoded permutation and its graph."""
        encoded, graph = canonicalize(perm, self.inst)
        encoded.fitness = self.graph_fitness(graph)
        return encoded, graph
