import numpy as np
import pytest

from hybridfs.classify import FitnessSpec
from hybridfs.dataset import min_max_scale
from hybridfs.gasearch import (
    GaParams,
    crossover_at,
    mutate,
    optimize,
    run_ga,
    single_point_crossover,
    tournament_select,
)
from hybridfs.pipeline import generate_synthetic


def bits(s):
    return np.array([c == "1" for c in s])


def onemax(mask):
    return float(np.mean(mask))


class TestTournament:
    def test_dominance(self):
        pop = [(bits("1100"), 0.9), (bits("0011"), 0.4)]
        rng = np.random.default_rng(0)
        for _ in range(50):
            winner = tournament_select(pop, rng)
            # either the fitter one, or the only candidate drawn twice
            assert winner is pop[0][0] or winner is pop[1][0]
        # with both drawn the 0.9 mask always wins
        class Fixed:
            def integers(self, n, size):
                return np.array([1, 0])

        assert tournament_select(pop, Fixed()) is pop[0][0]

    def test_identical(self):
        m = bits("101")
        assert tournament_select([(m, 0.5), (m, 0.5)], np.random.default_rng(0)).tolist() == m.tolist()

    def test_parsimony(self):
        small, big = bits("1110000000"), bits("1111111000")

        class Fixed:
            def integers(self, n, size):
                return np.array([1, 0])

        assert tournament_select([(small, 0.8), (big, 0.8)], Fixed()) is small

    def test_full_tie_first_drawn(self):
        a, b = bits("1100"), bits("0011")

        class Fixed:
            def integers(self, n, size):
                return np.array([1, 0])

        assert tournament_select([(a, 0.8), (b, 0.8)], Fixed()) is b

    def test_empty(self):
        with pytest.raises(ValueError):
            tournament_select([], np.random.default_rng(0))


class TestCrossover:
    def test_identical_parents(self):
        a = bits("10110")
        rng = np.random.default_rng(1)
        for _ in range(20):
            c1, c2 = single_point_crossover(a, a, rng)
            assert c1.tolist() == a.tolist() and c2.tolist() == a.tolist()

    def test_cut_arithmetic(self):
        c1, c2 = crossover_at(bits("11111"), bits("00000"), 2)
        assert c1.tolist() == bits("11000").tolist()
        assert c2.tolist() == bits("00111").tolist()

    def test_rate_zero(self):
        a, b = bits("11111"), bits("00000")
        c1, c2 = single_point_crossover(a, b, np.random.default_rng(0), rate=0.0)
        assert c1.tolist() == a.tolist() and c2.tolist() == b.tolist()

    def test_cut_range(self):
        a, b = bits("1111"), bits("0000")
        rng = np.random.default_rng(3)
        for _ in range(100):
            c1, _ = single_point_crossover(a, b, rng)
            cut = int(c1.sum())
            assert 1 <= cut <= 3

    def test_errors(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError):
            single_point_crossover(bits("10"), bits("101"), rng)
        with pytest.raises(ValueError):
            single_point_crossover(bits("1"), bits("0"), rng)


class TestMutate:
    def test_rate_zero(self):
        m = bits("10101")
        assert mutate(m, 0.0, np.random.default_rng(0)).tolist() == m.tolist()

    def test_forced_flip(self):
        assert mutate(bits("0"), 1.0, np.random.default_rng(0)).tolist() == [True]
        assert mutate(bits("1"), 1.0, np.random.default_rng(0)).tolist() == [False]

    def test_flip_frequency(self):
        rng = np.random.default_rng(7)
        m = np.zeros(20, bool)
        flips = sum(mutate(m, 0.1, rng).any() for _ in range(10_000))
        assert 0.08 <= flips / 10_000 <= 0.12

    def test_single_bit_per_chromosome(self):
        rng = np.random.default_rng(2)
        m = np.zeros(30, bool)
        assert all(mutate(m, 1.0, rng).sum() == 1 for _ in range(100))

    def test_bit_mode(self):
        rng = np.random.default_rng(2)
        out = mutate(np.zeros(10_000, bool), 0.1, rng, mode="bit")
        assert 0.09 <= out.mean() <= 0.11

    def test_input_untouched(self):
        m = bits("1010")
        mutate(m, 1.0, np.random.default_rng(0))
        assert m.tolist() == bits("1010").tolist()


class TestRunGa:
    def test_onemax(self):
        best = []
        for seed in range(10):
            res = optimize(onemax, 20, GaParams(rng_seed=seed))
            ever = [r.best_ever_fitness for r in res.trace]
            assert all(b >= a for a, b in zip(ever, ever[1:]))
            best.append(res.best_fitness)
        assert np.median(best) >= 0.9

    def test_frozen_population(self):
        m = bits("1011001")
        res = optimize(onemax, 7, GaParams(population=6, mutation_rate=0.0, rng_seed=1),
                       initial_population=[m] * 6)
        assert all(x.tolist() == m.tolist() for x in res.final_population)
        assert len(res.final_population) == 6

    def test_deterministic(self):
        a = optimize(onemax, 15, GaParams(max_generations=20, rng_seed=4))
        b = optimize(onemax, 15, GaParams(max_generations=20, rng_seed=4))
        assert a.trace == b.trace
        assert a.n_regenerations == 0

    def test_population_size_constant(self):
        for pop in (2, 3, 7):
            res = optimize(onemax, 9, GaParams(population=pop, elitism=1, max_generations=5))
            assert len(res.final_population) == pop
            assert all(m.shape == (9,) for m in res.final_population)

    def test_on_dataset(self):
        syn = generate_synthetic(30, 15, 3, 2, 1.0, seed=2)
        res = run_ga(min_max_scale(syn.dataset), FitnessSpec(), GaParams(max_generations=30))
        assert res.best_fitness == 1.0
        assert res.best_position.shape == (18,)

    def test_params_validation(self):
        with pytest.raises(ValueError):
            GaParams(population=1)
        with pytest.raises(ValueError):
            GaParams(mutation_rate=1.5)
        with pytest.raises(ValueError):
            GaParams(population=4, elitism=4)
        with pytest.raises(ValueError):
            GaParams(mutation_mode="swap")
