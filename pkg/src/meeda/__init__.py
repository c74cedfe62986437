"""Memetic EDA solvers for QoS- and QoSM-aware semantic web service composition."""

from meeda.ontology import MatchKind, Taxonomy, link_quality, match_type, similarity
from meeda.model import CompositionTask, QosVector, Service
from meeda.ingest import Repository, load_canonical, dump_canonical, import_wsc
from meeda.discovery import LayerSet, discover
from meeda.codec import CompositionGraph, Permutation, decode, encode
from meeda.evaluate import FitnessWeights, QualityBounds, Evaluator, compute_bounds, fitness, qosm
from meeda.eda import RunConfig, RunResult, evolve, learn_nhm, sample

__version__ = "0.1.0"

__all__ = [
    "CompositionGraph",
    "CompositionTask",
    "Evaluator",
    "FitnessWeights",
    "LayerSet",
    "MatchKind",
    "Permutation",
    "QosVector",
    "QualityBounds",
    "Repository",
    "RunConfig",
    "RunResult",
    "Service",
    "Taxonomy",
    "compute_bounds",
    "decode",
    "discover",
    "dump_canonical",
    "encode",
    "evolve",
    "fitness",
    "import_wsc",
    "learn_nhm",
    "link_quality",
    "load_canonical",
    "match_type",
    "qosm",
    "sample",
    "similarity",
]
