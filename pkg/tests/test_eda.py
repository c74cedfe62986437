from dataclasses import asdict

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from meeda.codec import is_permutation
from meeda.discovery import UnsolvableTaskError
from meeda.eda import Archive, RunConfig, bias, evolve, learn_nhm, prepare, sample
from meeda.evaluate import Evaluator
from meeda.harness.oracle import brute_force_optimum
from meeda.harness.synthetic import synthetic_instance

from conftest import EXAMPLE3_POP, EXAMPLE3_PRINTED, make_repo


def test_example3_counts():
    nhm = learn_nhm(EXAMPLE3_POP, b_ratio=0.2)
    assert nhm.counts().tolist() == np.floor(EXAMPLE3_PRINTED).astype(int).tolist()
    assert nhm.counts()[0].tolist() == [2, 1, 1, 0, 2]
    assert nhm.counts()[4].tolist() == [0, 0, 2, 0, 4]


def test_example3_computed_bias():
    nhm = learn_nhm(EXAMPLE3_POP, b_ratio=0.2)
    assert nhm.epsilon == pytest.approx(0.3)
    assert nhm.entries[0, 0] == pytest.approx(2.3)


def test_example3_printed_matrix_with_fixed_bias():
    nhm = learn_nhm(EXAMPLE3_POP, b_ratio=0.2, epsilon_abs=0.6)
    assert np.abs(nhm.entries - EXAMPLE3_PRINTED).max() < 1e-9


def test_single_individual_zero_bias():
    nhm = learn_nhm([[0, 1]], b_ratio=0.0)
    assert nhm.entries.tolist() == [[1.0, 0.0], [0.0, 1.0]]


def test_bias_single_service():
    assert bias(10, 1, 0.1) == pytest.approx(1.0)
    assert bias(6, 5, 0.2) == pytest.approx(0.3)


def test_learn_rejects_mixed_sizes():
    with pytest.raises(ValueError):
        learn_nhm([[0, 1], [0, 1, 2]], 0.1)
    with pytest.raises(ValueError):
        learn_nhm([], 0.1)


@settings(max_examples=100)
@given(st.integers(1, 8).flatmap(lambda n: st.lists(st.permutations(range(n)), min_size=1, max_size=12)))
def test_counts_match_counting_oracle(pop):
    n = len(pop[0])
    expected = [[sum(1 for ind in pop if ind[pos] == s) for s in range(n)] for pos in range(n)]
    assert learn_nhm(pop, 0.01).counts().tolist() == expected


def test_sample_one_hot(rng):
    sigma = [3, 0, 4, 1, 2]
    nhm = learn_nhm([sigma] * 20, b_ratio=1e-9)
    assert all(sample(nhm, rng).order == tuple(sigma) for _ in range(200))


def test_sample_identical_population(rng):
    sigma = [2, 0, 1, 4, 3]
    nhm = learn_nhm([sigma] * 30, b_ratio=0.0002)
    hits = sum(sample(nhm, rng).order == tuple(sigma) for _ in range(2000))
    assert hits / 2000 > 0.99


def test_sample_uniform_marginals(rng):
    n, draws = 5, 10_000
    nhm = learn_nhm([list(range(n))], b_ratio=0.0, epsilon_abs=1.0)
    nhm.entries[:] = 1.0
    counts = np.zeros((n, n))
    for _ in range(draws):
        o = sample(nhm, rng).order
        counts[np.arange(n), o] += 1
    expected = draws / n
    sigma = np.sqrt(draws * (1 / n) * (1 - 1 / n))
    # 3 sigma per cell, widened to 4 sigma since 25 cells are checked at once
    z = np.abs(counts - expected) / sigma
    assert np.mean(z < 3) >= 0.9
    assert z.max() < 4
    # chi-square per position, 4 dof; 0.999 quantile is 18.47
    chi2 = ((counts - expected) ** 2 / expected).sum(axis=1)
    assert chi2.max() < 18.47


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 9), st.integers(0, 2**31))
def test_sample_is_bijection(n, seed):
    rng = np.random.default_rng(seed)
    pop = [rng.permutation(n).tolist() for _ in range(4)]
    nhm = learn_nhm(pop, 0.0)
    assert is_permutation(sample(nhm, rng).order, n)


def test_run_config_validation():
    with pytest.raises(ValueError):
        RunConfig(algorithm="nope")
    with pytest.raises(ValueError):
        RunConfig(pop_size=7)
    with pytest.raises(ValueError):
        RunConfig(ls_replace="sometimes")
    with pytest.raises(ValueError):
        RunConfig(weights=(1, 1, 1, 1, 1, 1))


@pytest.fixture(scope="module")
def inst8():
    return prepare(*synthetic_instance(8, 3, 7))


def test_archive_caches_canonical_orders(inst8):
    arch = Archive(5, Evaluator(inst8))
    a = arch.evaluate(list(range(inst8.n)))
    again = arch.evaluate(list(range(inst8.n)))
    canon = arch.evaluate(a.order)
    assert arch.evaluations == 1
    assert again.order == canon.order == a.order
    assert a.fitness == canon.fitness


def test_generation_zero_is_best_of_initial_population(inst8):
    res = evolve(RunConfig(algorithm="eda", pop_size=10, generations=0, seed=3), instance=inst8)
    assert len(res.trace) == 1
    rng = np.random.default_rng(3)
    ev = Evaluator(inst8)
    best = max(ev.graph_fitness(ev(rng.permutation(inst8.n).tolist())[1]) for _ in range(10))
    assert res.fitness == best


@pytest.mark.parametrize("algorithm", ["eda", "meeda-op", "meeda-tp", "meeda-ob", "meeda-lop"])
def test_runs_are_deterministic(inst8, algorithm):
    cfg = RunConfig(algorithm=algorithm, pop_size=20, generations=6, seed=11)
    a, b = evolve(cfg, instance=inst8), evolve(cfg, instance=inst8)
    strip = lambda rows: [{k: v for k, v in asdict(r).items() if k != "elapsed_ms"} for r in rows]
    assert strip(a.trace) == strip(b.trace)
    assert a.best.order == b.best.order


@pytest.mark.parametrize("algorithm", ["eda", "meeda-lop"])
def test_elitism_and_bookkeeping(inst8, algorithm):
    res = evolve(RunConfig(algorithm=algorithm, pop_size=20, generations=10, seed=5), instance=inst8)
    best = [r.best_fitness for r in res.trace]
    assert best == sorted(best)
    assert res.fitness == best[-1]
    assert is_permutation(res.best.order, inst8.n)
    evals = [r.evaluations for r in res.trace]
    assert evals == sorted(evals)
    if algorithm == "eda":
        assert all(r.better_neighbor_rate is None for r in res.trace)
    else:
        assert all(0 <= r.better_neighbor_rate <= 1 for r in res.trace[1:])


def test_evolve_reaches_oracle_on_small_instance(inst8):
    opt, _ = brute_force_optimum(Evaluator(inst8))
    hits = sum(
        abs(evolve(RunConfig(pop_size=60, generations=30, seed=s), instance=inst8).fitness - opt) < 1e-9
        for s in range(30)
    )
    assert hits >= 28


def test_unsolvable_task_propagates():
    repo, task = make_repo([("a", "b")], task=("a", "c"))
    with pytest.raises(UnsolvableTaskError):
        evolve(RunConfig(pop_size=4, generations=1), repo, task)
