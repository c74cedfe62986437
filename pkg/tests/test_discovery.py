import math
import time

import pytest
from hypothesis import given, settings, strategies as st

from meeda.discovery import UnsolvableTaskError, discover

from conftest import make_repo

CONCEPTS = "abcdefgh"


def test_example1_layers(example1):
    t0 = time.perf_counter()
    layers = discover(*example1)
    assert time.perf_counter() - t0 < 1.0
    assert set(layers.relevant) == {0, 1, 2, 3, 4}
    assert [set(l) for l in layers.layers] == [{0, 1, 2, 4}, {3}]
    assert 5 not in layers.layer_of and 6 not in layers.layer_of


def test_chain():
    repo, task = make_repo([("a", "b"), ("b", "c")], task=("a", "c"))
    layers = discover(repo, task)
    assert [set(l) for l in layers.layers] == [{0}, {1}]


def test_task_already_satisfied():
    repo, task = make_repo([("c", "d")], task=("ab", "b"))
    layers = discover(repo, task)
    assert layers.relevant == ()
    assert layers.layers == ()


def test_unsolvable():
    repo, task = make_repo([("a", "b")], task=("a", "c"))
    with pytest.raises(UnsolvableTaskError):
        discover(repo, task)


def test_dense_index(example1):
    layers = discover(*example1)
    for k, s in enumerate(layers.relevant):
        assert layers.dense(s) == k
        assert layers.layer_index[k] == layers.layer_of[s]


repos = st.lists(
    st.tuples(
        st.sets(st.sampled_from(CONCEPTS), min_size=1, max_size=3),
        st.sets(st.sampled_from(CONCEPTS), min_size=1, max_size=2),
    ),
    min_size=1,
    max_size=12,
)


def _levels_oracle(specs, start):
    """level(s) = 1 + max over inputs of the cheapest producer level (Start = 0), by relaxation."""
    n = len(specs)
    level = [math.inf] * n
    changed = True
    while changed:
        changed = False
        for k, (ins, _) in enumerate(specs):
            need = []
            for c in ins:
                opts = [0] if c in start else []
                opts += [level[j] for j, (_, outs) in enumerate(specs) if c in outs]
                need.append(min(opts, default=math.inf))
            new = 1 + max(need)
            if new < level[k]:
                level[k] = new
                changed = True
    return level


@settings(max_examples=300)
@given(repos, st.sets(st.sampled_from(CONCEPTS), min_size=1, max_size=3), st.sampled_from(CONCEPTS))
def test_layers_match_relaxation_oracle(specs, start, goal):
    specs = [(tuple(sorted(i)), tuple(sorted(o))) for i, o in specs]
    repo, task = make_repo(specs, task=("".join(sorted(start)), goal))
    level = _levels_oracle(specs, start)
    reachable_goal = goal in start or any(goal in o and level[k] < math.inf for k, (_, o) in enumerate(specs))
    if not reachable_goal:
        with pytest.raises(UnsolvableTaskError):
            discover(repo, task)
        return
    layers = discover(repo, task)
    for s in layers.relevant:
        assert layers.layer_of[s] == level[s]
        # every first-layer service runs on the task inputs alone
        if layers.layer_of[s] == 1:
            assert set(specs[s][0]) <= start
    # relevant = every service the task inputs can eventually run
    assert set(layers.relevant) == {k for k in range(len(specs)) if level[k] < math.inf}


@settings(max_examples=100)
@given(repos, st.randoms(use_true_random=False))
def test_independent_of_listing_order(specs, rnd):
    specs = [(tuple(sorted(i)), tuple(sorted(o))) for i, o in specs]
    task = ("ab", "h")
    perm = list(range(len(specs)))
    rnd.shuffle(perm)
    shuffled = [specs[perm[k]] for k in range(len(specs))]
    a_repo, a_task = make_repo(specs, task=task)
    b_repo, b_task = make_repo(shuffled, task=task)
    try:
        a = discover(a_repo, a_task)
    except UnsolvableTaskError:
        with pytest.raises(UnsolvableTaskError):
            discover(b_repo, b_task)
        return
    b = discover(b_repo, b_task)
    assert {perm[s]: l for s, l in b.layer_of.items()} == a.layer_of
