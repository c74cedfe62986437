import numpy as np
import pytest

from meeda.eda import prepare
from meeda.ingest import build
from meeda.model import CompositionTask, QosVector, Service
from meeda.ontology import Taxonomy

FLAT = "abcdefghi"

# (inputs, outputs) of the seven services in the running example
EXAMPLE1 = [
    ("b", "i"),
    ("a", "fg"),
    ("ab", "h"),
    ("fh", "i"),
    ("a", "fgh"),
    ("ac", "fgh"),
    ("cde", "fgh"),
]

# the six permutations of the node-histogram example, boundary markers dropped
EXAMPLE3_POP = [
    [1, 2, 3, 0, 4],
    [0, 1, 2, 3, 4],
    [0, 1, 2, 3, 4],
    [4, 3, 0, 1, 2],
    [4, 3, 0, 1, 2],
    [2, 1, 3, 0, 4],
]

EXAMPLE3_PRINTED = np.array(
    [
        [2.6, 1.6, 1.6, 0.6, 2.6],
        [0.6, 3.6, 1.6, 2.6, 0.6],
        [2.6, 0.6, 2.6, 2.6, 0.6],
        [2.6, 2.6, 0.6, 2.6, 0.6],
        [0.6, 0.6, 2.6, 0.6, 4.6],
    ]
)


def flat_taxonomy(concepts=FLAT):
    return Taxonomy("T", [("T", c) for c in concepts])


def qos_for(i, n):
    # distinct but unremarkable values
    return QosVector(t=1.0 + i, ct=2.0 + (i * 7) % n, r=0.9 + 0.005 * (i % 20), a=0.95 - 0.01 * (i % 20))


def make_repo(specs, task=("ab", "i"), taxonomy=None, qos=None):
    tax = taxonomy or flat_taxonomy()
    services = [
        Service(k, frozenset(ins), frozenset(outs), (qos[k] if qos else qos_for(k, len(specs))), f"S{k}")
        for k, (ins, outs) in enumerate(specs)
    ]
    return build(services, tax, CompositionTask(set(task[0]), set(task[1])))


@pytest.fixture
def example1():
    return make_repo(EXAMPLE1)


@pytest.fixture
def example2():
    return make_repo(EXAMPLE1[:5])


@pytest.fixture
def example2_inst(example2):
    return prepare(*example2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
