import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from meeda.codec import (
    CodecError,
    CompositionGraph,
    Permutation,
    UndecodableError,
    admit,
    canonicalize,
    decode,
    encode,
    graph_qos,
)
from meeda.eda import prepare
from meeda.harness.synthetic import synthetic_instance
from meeda.model import END, START
from meeda.ontology import match_type

from conftest import make_repo


def test_example2_decode_matches_figure(example2_inst):
    g = decode([4, 1, 2, 3, 0], example2_inst)
    assert g.nodes == {1, 2, 3}
    assert g.edge_set() == {(START, 1), (START, 2), (1, 3), (2, 3), (3, END)}
    assert g.depth == {1: 1, 2: 1, 3: 2}


def test_example2_encode(example2_inst):
    g = decode([4, 1, 2, 3, 0], example2_inst)
    enc = encode(g, Permutation((4, 1, 2, 3, 0)))
    assert enc.order == (1, 2, 3, 4, 0)
    assert enc.boundary == 2
    assert str(enc) == "[1, 2, 3 | 4, 0]"
    assert enc.unused != (0, 4)


def test_single_service():
    repo, task = make_repo([("a", "i")], task=("a", "i"))
    inst = prepare(repo, task)
    g = decode([0], inst)
    assert g.nodes == {0}
    assert g.edge_set() == {(START, 0), (0, END)}


def test_late_admission_on_a_later_pass():
    # S1..S4 of the running example, renumbered 0..3
    repo, task = make_repo([("a", "fg"), ("ab", "h"), ("fh", "i"), ("a", "fgh")])
    inst = prepare(repo, task)
    assert admit([2, 0, 1, 3], inst) == [0, 1, 3, 2]
    g = decode([2, 0, 1, 3], inst)
    assert g.nodes == {0, 1, 2}


def test_encode_empty_graph():
    g = CompositionGraph(frozenset(), {(START, END): (1.0, 1.0)}, {})
    enc = encode(g, [2, 0, 1])
    assert enc.order == (2, 0, 1)
    assert enc.boundary == -1


def test_encode_diamond_orders_by_depth_then_index():
    edges = {(START, 0): (1, 1), (START, 2): (1, 1), (0, 1): (1, 1), (2, 1): (1, 1), (1, END): (1, 1)}
    g = CompositionGraph(frozenset({0, 1, 2}), edges, {})
    assert encode(g, [1, 2, 0, 3]).order[:2] == (0, 2)


def test_encode_rejects_foreign_services(example2_inst):
    g = decode([4, 1, 2, 3, 0], example2_inst)
    with pytest.raises(CodecError):
        encode(g, [0, 1])


def test_incomplete_permutation_is_undecodable(example2_inst):
    with pytest.raises(UndecodableError):
        decode([1, 2], example2_inst)


def check_graph(g: CompositionGraph, inst):
    """Structural invariants of a decoded composition."""
    tax = inst.repo.taxonomy
    succ = {}
    for (a, b) in g.edges:
        succ.setdefault(a, set()).add(b)
    # acyclic, and every node reaches End and is reached from Start
    reach_end = {END}
    changed = True
    while changed:
        changed = False
        for a, bs in succ.items():
            if a not in reach_end and bs & reach_end:
                reach_end.add(a)
                changed = True
    assert g.nodes | {START} <= reach_end
    depth = g.depth
    for (a, b) in g.edges:
        if a != START and b != END:
            assert depth[a] < depth[b]
    # every input of every node and of End is bound by an exact or plugin match
    for consumer in list(g.nodes) + [END]:
        for concept in inst.inputs_of(consumer):
            bind = g.bindings[(consumer, concept)]
            assert (bind.producer, consumer) in g.edges
            if bind.producer != START:
                assert bind.producer in g.nodes
                assert match_type(tax, bind.output, concept).ok
            else:
                assert concept in inst.start_provides


SUITE_LIKE = [(n, 3, s) for s in range(4) for n in (5, 8, 11, 14)]


@pytest.fixture(scope="module")
def instances():
    return [prepare(*synthetic_instance(n, d, s)) for n, d, s in SUITE_LIKE]


@settings(max_examples=300, deadline=None)
@given(st.data())
def test_round_trip_and_invariants(instances, data):
    inst = data.draw(st.sampled_from(instances))
    order = data.draw(st.permutations(range(inst.n)))
    g = decode(order, inst)
    check_graph(g, inst)
    enc = encode(g, order)
    assert sorted(enc.order) == list(range(inst.n))
    g2 = decode(enc, inst)
    assert g2.nodes == g.nodes
    assert g2.edges == g.edges
    assert graph_qos(g2, inst) == graph_qos(g, inst)
    # encoding is a fixpoint on encoded permutations
    assert encode(g2, enc) == enc
    enc2, _ = canonicalize(enc, inst)
    assert enc2.order == enc.order and enc2.boundary == enc.boundary


def test_decode_is_deterministic(instances):
    rng = np.random.default_rng(0)
    inst = instances[-1]
    for _ in range(50):
        order = rng.permutation(inst.n).tolist()
        a, b = decode(order, inst), decode(order, inst)
        assert a.nodes == b.nodes and a.edges == b.edges and a.bindings == b.bindings
