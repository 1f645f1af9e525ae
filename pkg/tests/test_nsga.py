"""Evolutionary-search tests against brute-force and analytic oracles."""

import math

import numpy as np
import pytest

from naqas.nsga import (EvalResult, EvoConfig, Individual, ParetoArchive,
                        crowding_distance, dominates, fast_non_dominated_sort,
                        hypervolume, mutate, run_search, sbx_crossover,
                        tournament_select)
from naqas.space import SearchSpaceDef, random_genome, validate_genome

SPACE3 = SearchSpaceDef(3, 5, 10)


def brute_force_fronts(fitnesses):
    """O(N^3) front peeling used as the sorting oracle."""
    remaining = list(range(len(fitnesses)))
    fronts = []
    while remaining:
        front = [i for i in remaining
                 if not any(dominates(fitnesses[j], fitnesses[i])
                            for j in remaining if j != i)]
        fronts.append(sorted(front))
        remaining = [i for i in remaining if i not in front]
    return fronts


def make_pop(fitnesses):
    return [Individual(genome=(i,), fitness=f) for i, f in enumerate(fitnesses)]


class TestDominates:
    def test_strict(self):
        assert dominates((1.0, 1.0), (2.0, 2.0))

    def test_incomparable(self):
        assert not dominates((1.0, 2.0), (2.0, 1.0))
        assert not dominates((2.0, 1.0), (1.0, 2.0))

    def test_equal_is_not_dominating(self):
        assert not dominates((1.0, 1.0), (1.0, 1.0))

    def test_one_equal_component(self):
        assert dominates((1.0, 1.0), (1.0, 2.0))


class TestSorting:
    def test_worked_example(self):
        fits = [(1, 5), (2, 3), (3, 1), (2, 4), (4, 4)]
        pop = make_pop(fits)
        fronts = fast_non_dominated_sort(pop)
        front_fits = [sorted(ind.fitness for ind in f) for f in fronts]
        assert front_fits == [[(1, 5), (2, 3), (3, 1)], [(2, 4)], [(4, 4)]]
        assert [ind.rank for ind in pop] == [1, 1, 1, 2, 3]

    def test_identical_fitnesses_single_front(self):
        pop = make_pop([(1.0, 1.0)] * 6)
        fronts = fast_non_dominated_sort(pop)
        assert len(fronts) == 1 and len(fronts[0]) == 6

    def test_matches_brute_force_on_random_populations(self):
        rng = np.random.default_rng(0)
        for trial in range(200):
            n = int(rng.integers(1, 101))
            values = rng.integers(0, 8, size=(n, 2)).astype(float)  # many ties
            if trial % 2:
                values = rng.normal(size=(n, 2))
            fits = [tuple(v) for v in values]
            pop = make_pop(fits)
            fronts = fast_non_dominated_sort(pop)
            got = [sorted(ind.genome[0] for ind in f) for f in fronts]
            assert got == brute_force_fronts(fits)
            # ranks partition the population
            assert sorted(i for f in got for i in f) == list(range(n))

    def test_front_properties(self):
        rng = np.random.default_rng(1)
        fits = [tuple(v) for v in rng.normal(size=(40, 2))]
        pop = make_pop(fits)
        fronts = fast_non_dominated_sort(pop)
        for fi, front in enumerate(fronts):
            for a in front:
                assert not any(dominates(b.fitness, a.fitness) for b in front)
                if fi > 0:
                    assert any(dominates(b.fitness, a.fitness)
                               for prev in fronts[:fi] for b in prev)


class TestCrowding:
    def test_pair_gets_infinity(self):
        front = make_pop([(0.0, 1.0), (1.0, 0.0)])
        crowding_distance(front)
        assert all(math.isinf(ind.crowding) for ind in front)

    def test_hand_example(self):
        front = make_pop([(0.0, 2.0), (1.0, 1.0), (2.0, 0.0)])
        crowding_distance(front)
        assert math.isinf(front[0].crowding)
        assert math.isinf(front[2].crowding)
        assert abs(front[1].crowding - 2.0) < 1e-12

    def test_degenerate_objective_contributes_zero(self):
        front = make_pop([(1.0, 0.0), (1.0, 1.0), (1.0, 2.0), (1.0, 3.0)])
        crowding_distance(front)
        interior = sorted(ind.crowding for ind in front)[:2]
        # only the C objective contributes: gaps (2-0)/3 and (3-1)/3
        assert all(abs(c - 2.0 / 3.0) < 1e-12 for c in interior)

    def test_empty_front_rejected(self):
        with pytest.raises(ValueError):
            crowding_distance([])


class TestTournament:
    def test_full_pop_tournament_returns_best(self):
        pop = make_pop([(3.0, 3.0), (1.0, 1.0), (2.0, 2.0)])
        fast_non_dominated_sort(pop)
        for front in fast_non_dominated_sort(pop):
            crowding_distance(front)
        rng = np.random.default_rng(2)
        for _ in range(10):
            assert tournament_select(pop, 3, rng).fitness == (1.0, 1.0)

    def test_crowding_breaks_rank_tie(self):
        a = Individual((0,), (0.0, 1.0), rank=1, crowding=0.5)
        b = Individual((1,), (1.0, 0.0), rank=1, crowding=2.0)
        rng = np.random.default_rng(3)
        wins = sum(tournament_select([a, b], 2, rng) is b for _ in range(20))
        assert wins == 20

    def test_rank_one_beats_rank_two_statistically(self):
        rng = np.random.default_rng(4)
        pop = make_pop([(0.0, 0.0), (1.0, 1.0), (2.0, 2.0), (3.0, 3.0)])
        for front in fast_non_dominated_sort(pop):
            crowding_distance(front)
        wins = np.zeros(4)
        for _ in range(10_000):
            winner = tournament_select(pop, 2, rng)
            wins[winner.genome[0]] += 1
        assert wins[0] > wins[1] > wins[2]
        assert wins[3] == 0   # rank 4 can never win a binary tournament

    def test_too_small_population(self):
        with pytest.raises(ValueError):
            tournament_select(make_pop([(0.0, 0.0)]), 2, np.random.default_rng(5))


class TestSBX:
    def test_no_crossover_copies(self):
        rng = np.random.default_rng(6)
        a, b = (1, 2, 3, 4, 5), (9, 8, 7, 6, 5, 4)
        ca, cb = sbx_crossover(a, b, 0.0, 15.0, SPACE3, rng)
        assert ca == a and cb == b

    def test_identical_parents_identical_children(self):
        rng = np.random.default_rng(7)
        a = (10, 20, 30, 40, 50)
        for _ in range(50):
            ca, cb = sbx_crossover(a, a, 1.0, 15.0, SPACE3, rng)
            assert ca == a and cb == a

    def test_tail_passthrough_and_lengths(self):
        rng = np.random.default_rng(8)
        a, b = (1, 2, 3, 4, 5), (9, 8, 7, 6, 5, 100, 200)
        ca, cb = sbx_crossover(a, b, 1.0, 15.0, SPACE3, rng)
        assert len(ca) == 5 and len(cb) == 7
        assert cb[5:] == (100, 200)

    def test_property_sweep_bounds(self):
        rng = np.random.default_rng(9)
        for _ in range(10_000):
            a = random_genome(SPACE3, rng)
            b = random_genome(SPACE3, rng)
            ca, cb = sbx_crossover(a, b, 0.9, 15.0, SPACE3, rng)
            assert len(ca) == len(a) and len(cb) == len(b)
            assert all(0 <= g < 216 for g in ca + cb)


class TestMutate:
    def test_all_zero_probabilities_identity(self):
        cfg = EvoConfig(p_mutation=0.0, p_add=0.0, p_del=0.0, p_rep=0.0)
        rng = np.random.default_rng(10)
        g = (5, 10, 15, 20, 25)
        assert mutate(g, cfg, SPACE3, rng) == g

    def test_delete_guard_at_min_depth(self):
        cfg = EvoConfig(p_mutation=0.0, p_add=0.0, p_del=1.0, p_rep=0.0)
        rng = np.random.default_rng(11)
        g = tuple(range(5))
        for _ in range(20):
            assert len(mutate(g, cfg, SPACE3, rng)) == 5

    def test_insert_noop_at_max_depth(self):
        cfg = EvoConfig(p_mutation=0.0, p_add=1.0, p_del=0.0, p_rep=0.0)
        rng = np.random.default_rng(12)
        g = tuple(range(10))
        for _ in range(20):
            assert mutate(g, cfg, SPACE3, rng) == g

    def test_insert_grows_by_one(self):
        cfg = EvoConfig(p_mutation=0.0, p_add=1.0, p_del=0.0, p_rep=0.0)
        rng = np.random.default_rng(13)
        g = tuple(range(7))
        for _ in range(20):
            assert len(mutate(g, cfg, SPACE3, rng)) == 8

    def test_property_sweep_closure(self):
        cfg = EvoConfig()
        rng = np.random.default_rng(14)
        for _ in range(10_000):
            g = random_genome(SPACE3, rng)
            out = mutate(g, cfg, SPACE3, rng)
            validate_genome(out, SPACE3)


class TestArchive:
    def test_pairwise_non_dominated(self):
        rng = np.random.default_rng(15)
        archive = ParetoArchive()
        for i in range(500):
            archive.add(Individual((i,), tuple(rng.integers(0, 20, size=2).astype(float))))
            pts = archive.fitness_points()
            assert not any(dominates(a, b) for a in pts for b in pts if a != b)

    def test_duplicate_genomes_collapse(self):
        archive = ParetoArchive()
        assert archive.add(Individual((1, 2), (0.5, 3.0)))
        assert not archive.add(Individual((1, 2), (0.5, 3.0)))
        assert len(archive) == 1

    def test_equal_fitness_distinct_genomes_kept(self):
        archive = ParetoArchive()
        archive.add(Individual((1,), (1.0, 1.0)))
        archive.add(Individual((2,), (1.0, 1.0)))
        assert len(archive) == 2

    def test_dominating_insert_prunes(self):
        archive = ParetoArchive()
        archive.add(Individual((1,), (2.0, 2.0)))
        archive.add(Individual((2,), (1.0, 1.0)))
        assert archive.fitness_points() == [(1.0, 1.0)]


class TestHypervolume:
    def test_single_point(self):
        assert hypervolume([(1.0, 1.0)], (3.0, 3.0)) == 4.0

    def test_dominated_point_ignored(self):
        assert hypervolume([(1.0, 1.0), (2.0, 2.0)], (3.0, 3.0)) == 4.0

    def test_two_point_front(self):
        # (1,2) and (2,1) against ref (3,3): 2*1 + 1*... = areas 2 + 2 minus overlap 1
        assert hypervolume([(1.0, 2.0), (2.0, 1.0)], (3.0, 3.0)) == 3.0


def mock_evaluator(genome):
    e = float(sum(genome)) / (len(genome) * SPACE3.layer_count)
    return EvalResult(objective=e, cost=float(len(genome)), n_depth=len(genome))


class TestRunSearch:
    def test_zero_generations_archive_is_initial_front(self):
        rng = np.random.default_rng(16)
        cfg = EvoConfig(pop_size=20, generations=0)
        result = run_search(mock_evaluator, SPACE3, cfg, rng)
        assert len(result.stats) == 1
        pts = result.archive.fitness_points()
        assert pts and not any(dominates(a, b) for a in pts for b in pts if a != b)

    def test_archive_always_non_dominated_and_hv_monotone(self):
        rng = np.random.default_rng(17)
        cfg = EvoConfig(pop_size=16, generations=12)
        result = run_search(mock_evaluator, SPACE3, cfg, rng)
        all_pts = [p for snap in result.archive_history for p in snap]
        ref = (max(p[0] for p in all_pts) + 1.0, max(p[1] for p in all_pts) + 1.0)
        volumes = [hypervolume(snap, ref) for snap in result.archive_history]
        for snap in result.archive_history:
            assert not any(dominates(a, b) for a in snap for b in snap if a != b)
        assert all(b >= a - 1e-12 for a, b in zip(volumes, volumes[1:]))

    def test_elitism_best_survives(self):
        # the crowded-comparison best individual must persist in later stats
        rng = np.random.default_rng(18)
        cfg = EvoConfig(pop_size=16, generations=8)
        result = run_search(mock_evaluator, SPACE3, cfg, rng)
        best = [s.best_e for s in result.stats]
        assert all(b <= a + 1e-15 for a, b in zip(best, best[1:]))

    def test_determinism(self):
        outs = []
        for _ in range(2):
            rng = np.random.default_rng(19)
            cfg = EvoConfig(pop_size=12, generations=6)
            result = run_search(mock_evaluator, SPACE3, cfg, rng)
            outs.append(sorted((m.genome, m.fitness) for m in result.archive))
        assert outs[0] == outs[1]

    def test_mock_objective_recovery(self):
        # the cheapest depths must be optimized to near zero; deeper ones
        # are progressively squeezed out by cost domination, so only their
        # early exploration level is guaranteed
        rng = np.random.default_rng(20)
        cfg = EvoConfig(pop_size=40, generations=30)
        result = run_search(mock_evaluator, SPACE3, cfg, rng)
        assert result.best_e_by_depth[5] < 0.02
        assert result.best_e_by_depth[6] < 0.05
        assert all(result.best_e_by_depth[d] < 0.5 for d in range(5, 11))
        final_front = result.archive.fitness_points()
        assert min(e for e, _ in final_front) < 0.01

    def test_stats_row_count_and_fields(self):
        rng = np.random.default_rng(21)
        cfg = EvoConfig(pop_size=10, generations=4)
        result = run_search(mock_evaluator, SPACE3, cfg, rng)
        assert len(result.stats) == 5
        assert [s.generation for s in result.stats] == list(range(5))
        for s in result.stats:
            assert s.best_e <= s.mean_e

    def test_evaluation_error_carries_genome(self):
        def broken(genome):
            raise RuntimeError("boom")
        rng = np.random.default_rng(22)
        from naqas.nsga import EvaluationError
        with pytest.raises(EvaluationError) as err:
            run_search(broken, SPACE3, EvoConfig(pop_size=4, generations=0), rng)
        assert isinstance(err.value.genome, tuple)

    def test_worker_pool_matches_serial(self):
        cfg = EvoConfig(pop_size=12, generations=4)
        results = []
        for workers in (1, 3):
            rng = np.random.default_rng(23)
            res = run_search(mock_evaluator, SPACE3, cfg, rng, workers=workers)
            results.append(sorted((m.genome, m.fitness) for m in res.archive))
        assert results[0] == results[1]


class TestEvoConfigValidation:
    def test_odd_population_rejected(self):
        with pytest.raises(ValueError):
            EvoConfig(pop_size=7)

    def test_bad_probability_rejected(self):
        with pytest.raises(ValueError):
            EvoConfig(p_add=1.5)

    def test_small_tournament_rejected(self):
        with pytest.raises(ValueError):
            EvoConfig(tournament_k=1)
