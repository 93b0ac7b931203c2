import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from conftest import simulate_var
from heave.graph import InvalidInputError, constraint_from_hierarchy, is_acyclic, is_consistent
from heave.evolution import (
    VARIANTS,
    EAConfig,
    Genotype,
    Objective,
    Population,
    crossover,
    crossover_hierarchy,
    crossover_ordering,
    init_population,
    mutate,
    mutate_hierarchy,
    mutate_ordering,
    rank_fitness,
    run,
    select_parents,
    selection_probabilities,
    step_generation,
)
from heave.var import fit_constrained_var


def four_node_panel(seed, t=2000):
    a = np.array([
        [0.5, 0.0, 0.0, 0.0],
        [0.4, 0.3, 0.0, 0.0],
        [0.0, 0.4, 0.2, 0.0],
        [0.3, 0.0, 0.4, 0.3],
    ])
    return simulate_var(a, t, np.random.default_rng(seed))


# -- rank fitness and selection --------------------------------------------------

def test_rank_fitness_distinct():
    np.testing.assert_array_equal(rank_fitness([0.3, 0.5, 0.9]), [1.5, 2.5, 3.5])


def test_rank_fitness_ties():
    np.testing.assert_array_equal(rank_fitness([0.5, 0.5]), [2.0, 2.0])


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=40))
def test_rank_fitness_sum_invariant(scores):
    n = len(scores)
    assert rank_fitness(scores).sum() == pytest.approx(n * (n + 2) / 2)


@given(st.lists(st.integers(-1000, 1000), min_size=2, max_size=20))
def test_selection_invariant_under_monotone_transform(scores):
    s = np.array(scores, dtype=float)
    np.testing.assert_allclose(selection_probabilities(s), selection_probabilities(s**3 / 7 + 0.25))


@pytest.mark.parametrize("bad", [[], [1.0, np.nan], [np.inf]])
def test_rank_fitness_rejects(bad):
    with pytest.raises(InvalidInputError):
        rank_fitness(bad)


def _dummy_pop(scores, n=3):
    members = [Genotype("floating", np.full(n, k + 1)) for k in range(len(scores))]
    return Population(members, np.asarray(scores, float))


def test_selection_frequencies_two_members():
    pop = _dummy_pop([0.1, 0.2])
    rng = np.random.default_rng(0)
    counts = np.zeros(2)
    draws = 50_000
    for _ in range(draws):
        a, b = select_parents(pop, rng)
        counts[a.payload[0] - 1] += 1
        counts[b.payload[0] - 1] += 1
    np.testing.assert_allclose(counts / counts.sum(), [0.375, 0.625], atol=0.01)


def test_selection_uniform_for_equal_scores():
    pop = _dummy_pop([0.4] * 5)
    rng = np.random.default_rng(1)
    counts = np.zeros(5)
    for _ in range(20_000):
        for g in select_parents(pop, rng):
            counts[g.payload[0] - 1] += 1
    assert stats.chisquare(counts).pvalue > 0.01


# -- crossover -------------------------------------------------------------------

def test_ordering_crossover_example():
    a = Genotype("ordered", [0, 1, 2, 3])
    b = Genotype("ordered", [3, 2, 1, 0])
    child = crossover_ordering(a, b, None, indicator=[1, 0, 1, 0])
    np.testing.assert_array_equal(child.payload, [0, 3, 2, 1])


def test_hierarchy_crossover_example():
    a = Genotype("floating", [1, 2, 3])
    b = Genotype("floating", [3, 2, 1])
    # I*a + (1 - I)*b
    np.testing.assert_array_equal(crossover_hierarchy(a, b, None, indicator=[1, 0, 1]).payload, [1, 2, 3])
    np.testing.assert_array_equal(crossover_hierarchy(a, b, None, indicator=[1, 0, 0]).payload, [1, 2, 1])


def test_hierarchy_crossover_parent_frequency():
    a = Genotype("floating", np.zeros(10, dtype=int))
    b = Genotype("floating", np.ones(10, dtype=int))
    rng = np.random.default_rng(8)
    from_b = sum(crossover_hierarchy(a, b, rng).payload for _ in range(10_000))
    assert (np.abs(from_b - 5000) < 4 * 50).all()


@given(st.integers(2, 15), st.integers(0, 2**31))
def test_crossover_identical_parents(n, seed):
    rng = np.random.default_rng(seed)
    for variant in VARIANTS:
        x = Genotype(variant, rng.permutation(n) + (variant != "ordered"))
        assert crossover(x, x, rng) == x


@given(st.integers(2, 15), st.integers(0, 2**31))
def test_crossover_gene_provenance(n, seed):
    rng = np.random.default_rng(seed)
    a = Genotype("floating", rng.integers(-5, 5, n))
    b = Genotype("floating", rng.integers(-5, 5, n))
    c = crossover(a, b, rng).payload
    assert ((c == a.payload) | (c == b.payload)).all()
    p = Genotype("ordered", rng.permutation(n))
    q = Genotype("ordered", rng.permutation(n))
    assert sorted(crossover(p, q, rng).payload.tolist()) == list(range(n))


def test_crossover_mismatched_parents():
    with pytest.raises(InvalidInputError):
        crossover(Genotype("floating", [1, 2]), Genotype("floating", [1, 2, 3]), np.random.default_rng(0))


# -- mutation --------------------------------------------------------------------

@given(st.sampled_from(VARIANTS), st.integers(2, 20), st.integers(0, 2**31))
def test_zero_mutation_is_identity(variant, n, seed):
    rng = np.random.default_rng(seed)
    x = Genotype(variant, rng.permutation(n) + (variant != "ordered"))
    assert mutate(x, EAConfig(mutation_prob=0.0), rng) == x


def test_unit_step_shifts_by_one():
    cfg = EAConfig(mutation_prob=1.0, mean_step=1.0)
    x = Genotype("floating", np.full(50, 10))
    y = mutate_hierarchy(x, cfg, np.random.default_rng(0))
    assert set(np.abs(y.payload - 10).tolist()) == {1}


@pytest.mark.parametrize("lam", [1.0, 3.0, 7.5])
def test_mean_shift_matches_step(lam):
    cfg = EAConfig(mutation_prob=1.0, mean_step=lam)
    x = Genotype("floating", np.zeros(100_000, dtype=int))
    shifts = np.abs(mutate_hierarchy(x, cfg, np.random.default_rng(4)).payload)
    assert abs(shifts.mean() - lam) < 0.05 * lam


def test_sign_balance():
    cfg = EAConfig(mutation_prob=0.4, mean_step=2.0)
    x = Genotype("floating", np.zeros(100_000, dtype=int))
    d = mutate_hierarchy(x, cfg, np.random.default_rng(5)).payload
    assert abs((d != 0).mean() - 0.4) < 0.01
    assert abs((d > 0).mean() - (d < 0).mean()) < 0.01


def test_bounded_mutation_clamps():
    cfg = EAConfig(mutation_prob=1.0, mean_step=5.0)
    x = Genotype("bounded", [1, 3, 5, 5, 1])
    for seed in range(50):
        p = mutate(x, cfg, np.random.default_rng(seed)).payload
        assert p.min() >= 1 and p.max() <= 5


def test_ordering_mutation_example():
    x = Genotype("ordered", [0, 1, 2])
    y = mutate_ordering(x, EAConfig(), None, steps=[1, 0, 0])
    np.testing.assert_array_equal(y.payload, [1, 0, 2])


@given(st.integers(2, 25), st.integers(0, 2**31), st.floats(0.0, 1.0))
def test_ordering_mutation_stays_permutation(n, seed, p):
    rng = np.random.default_rng(seed)
    x = Genotype("ordered", rng.permutation(n))
    y = mutate(x, EAConfig(mutation_prob=p, mean_step=3.0), rng)
    assert sorted(y.payload.tolist()) == list(range(n))


# -- initialization and genotype semantics -----------------------------------------

def test_init_levels_uniform():
    n = 10
    pop = init_population(n, EAConfig(population_size=400, seed=3))
    levels = np.concatenate([m.payload for m in pop.members])
    assert levels.min() >= 1 and levels.max() <= n
    counts = np.bincount(levels, minlength=n + 1)[1:]
    assert stats.chisquare(counts).pvalue > 0.01


def test_init_orderings_are_permutations():
    pop = init_population(7, EAConfig(variant="ordered", population_size=50))
    for m in pop.members:
        assert sorted(m.payload.tolist()) == list(range(7))


@given(st.permutations(list(range(8))))
def test_ordering_levels_induce_same_constraint(perm):
    g = Genotype("ordered", perm)
    np.testing.assert_array_equal(g.constraint(), constraint_from_hierarchy(g.levels()))


def test_bounded_genotype_validation():
    with pytest.raises(InvalidInputError):
        Genotype("bounded", [0, 2])


@pytest.mark.parametrize("kwargs", [
    dict(population_size=1), dict(mutation_prob=1.5), dict(mean_step=0.5),
    dict(generations=0), dict(alpha=1.0), dict(variant="other"),
])
def test_config_validation(kwargs):
    with pytest.raises(InvalidInputError):
        EAConfig(**kwargs)


def test_config_defaults_scale_with_n():
    cfg = EAConfig()
    assert cfg.step_size(5) == 1.0 and cfg.step_size(60) == 6.0
    assert cfg.n_generations(10) == 150 and cfg.n_generations(100) == 500


# -- whole-run behaviour -------------------------------------------------------------

@pytest.fixture(scope="module")
def small_objective():
    rng = np.random.default_rng(2)
    n = 6
    a = 0.3 * np.tril(rng.standard_normal((n, n)) * (rng.random((n, n)) < 0.5))
    np.fill_diagonal(a, 0.4)
    return Objective(simulate_var(a, 600, rng))


def test_identical_population_without_mutation_is_fixed(small_objective):
    cfg = EAConfig(population_size=8, mutation_prob=0.0, seed=1)
    g = Genotype("floating", [3, 1, 2, 6, 5, 4])
    pop = small_objective.evaluate([g] * 8)
    for gen in range(1, 6):
        pop, _ = step_generation(pop, small_objective, cfg, gen)
        assert all(m == g for m in pop.members)


@pytest.mark.parametrize("variant", VARIANTS)
def test_run_is_deterministic(small_objective, variant):
    cfg = EAConfig(population_size=10, generations=8, variant=variant, seed=4)
    r1 = run(small_objective.panel, cfg, objective=small_objective)
    r2 = run(small_objective.panel, cfg)
    assert r1.traces == r2.traces
    assert r1.population.members == r2.population.members
    assert len(r1.history) == 5
    assert is_acyclic(r1.best_network.graph)
    assert is_consistent(r1.best_network.graph, r1.best_hierarchy)


def test_mean_fstar_improves(small_objective):
    improved = 0
    for seed in range(20):
        cfg = EAConfig(population_size=16, generations=25, seed=seed)
        first = small_objective.evaluate(init_population(6, cfg).members).f_stars.mean()
        improved += run(small_objective.panel, cfg, objective=small_objective).traces[-1].mean_fstar > first
    assert improved >= 19


def test_best_score_bounded_by_exhaustive_optimum():
    panel = four_node_panel(9, t=400)
    grid = [np.array(h) for h in np.ndindex(4, 4, 4, 4)]
    optimum = max(fit_constrained_var(panel, constraint_from_hierarchy(h)).fit_score for h in grid)
    res = run(panel, EAConfig(population_size=12, generations=20, seed=2))
    assert res.population.scores.max() <= optimum + 1e-12
