import pytest
from hypothesis import given, strategies as st

from meeda.model import QosVector, Service
from meeda.ontology import (
    Match,
    OntologyError,
    Taxonomy,
    UnknownConceptError,
    link_quality,
    match_type,
    service_link_quality,
    similarity,
)


@pytest.fixture
def tax():
    # root
    # |- b - a - a2
    # |- u
    # |- v
    return Taxonomy("root", [("root", "b"), ("b", "a"), ("a", "a2"), ("root", "u"), ("root", "v")])


def test_depths_and_ancestors(tax):
    assert tax.depth["root"] == 0
    assert tax.depth["a2"] == 3
    assert tax.ancestors["a2"] == ("a2", "a", "b", "root")
    assert tax.parent["a"] == "b"
    assert tax.common_ancestor("a2", "u") == "root"


def test_match_kinds(tax):
    m = match_type(tax, "a", "a")
    assert (m.kind, m.score) == (Match.EXACT, 1.0)
    m = match_type(tax, "a", "b", 0.75)
    assert (m.kind, m.score) == (Match.PLUGIN, 0.75)
    # deeper specialisations are still plugin matches
    assert match_type(tax, "a2", "b").kind is Match.PLUGIN
    assert match_type(tax, "u", "v").kind is Match.FAIL
    # subsume counts as fail
    assert match_type(tax, "b", "a").kind is Match.FAIL
    assert not match_type(tax, "b", "a").ok


def test_match_rejects_bad_p(tax):
    with pytest.raises(ValueError):
        match_type(tax, "a", "b", 1.0)


def test_unknown_concept(tax):
    with pytest.raises(UnknownConceptError):
        match_type(tax, "zzz", "a")
    with pytest.raises(KeyError):
        similarity(tax, "a", "zzz")


def test_similarity_values(tax):
    assert similarity(tax, "a", "a") == 1.0
    assert similarity(tax, "a", "b") == pytest.approx(0.8)
    assert similarity(tax, "u", "v") == pytest.approx(0.5)
    assert similarity(tax, "root", "root") == 1.0


def test_link_quality_pairs(tax):
    assert link_quality([("a", "a")], tax) == (1.0, 1.0)
    mt, sim = link_quality([("u", "u"), ("a", "b")], tax, 0.75)
    assert mt == pytest.approx(0.875)
    assert sim == pytest.approx(0.9)
    with pytest.raises(OntologyError):
        link_quality([("u", "v")], tax)
    with pytest.raises(OntologyError):
        link_quality([], tax)


def test_service_link_quality(tax):
    q = QosVector(1, 1, 1, 1)
    prod = Service(0, frozenset(), frozenset({"u", "a"}), q)
    cons = Service(1, frozenset({"u", "b"}), frozenset(), q)
    assert service_link_quality(prod, cons, tax) == pytest.approx((0.875, 0.9))
    with pytest.raises(OntologyError):
        service_link_quality(prod, Service(2, frozenset({"v"}), frozenset(), q), tax)


def test_multiple_inheritance_keeps_first_parent():
    t = Taxonomy("r", [("r", "p1"), ("r", "p2"), ("p1", "c"), ("p2", "c")])
    assert t.parent["c"] == "p1"
    assert t.dropped_edges == [("p2", "c")]


def test_cycle_rejected():
    with pytest.raises(OntologyError):
        Taxonomy("r", [("r", "x"), ("a", "b"), ("b", "a")])
    # a back edge onto an existing concept is a second parent and gets dropped
    t = Taxonomy("r", [("r", "a"), ("a", "b"), ("b", "a")])
    assert t.parent["a"] == "r"


# random trees: node k > 0 hangs under some earlier node
trees = st.integers(2, 25).flatmap(
    lambda n: st.tuples(st.just(n), st.lists(st.integers(0, 10**6), min_size=n - 1, max_size=n - 1))
)


def _tree(spec):
    n, picks = spec
    edges = [(f"c{picks[k - 1] % k}", f"c{k}") for k in range(1, n)]
    return Taxonomy("c0", edges), [f"c{k}" for k in range(n)]


@given(trees, st.data())
def test_similarity_properties(spec, data):
    t, names = _tree(spec)
    a = data.draw(st.sampled_from(names))
    b = data.draw(st.sampled_from(names))
    s = similarity(t, a, b)
    assert s == similarity(t, b, a)
    assert 0 < s <= 1
    assert (s == 1) == (a == b)
    if match_type(t, a, b).kind is Match.PLUGIN:
        na, nb = t.depth[a] + 1, t.depth[b] + 1
        assert s == pytest.approx(2 * nb / (na + nb))


@given(trees, st.data())
def test_similarity_monotone_towards_ancestor_chain(spec, data):
    t, names = _tree(spec)
    a = data.draw(st.sampled_from(names))
    # walking b from a's root down a's ancestor chain never lowers similarity
    chain = list(reversed(t.ancestors[a]))
    sims = [similarity(t, a, b) for b in chain]
    assert sims == sorted(sims)
