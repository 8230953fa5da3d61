"""Generational genetic algorithm over feature masks, used as the wrapper baseline."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .classify import FitnessFunction, FitnessSpec
from .dataset import Dataset, apply_mask, as_mask, lift_mask
from .search import Objective, SearchResult, TraceRow, better, evaluate_all

MUTATION_MODES = ("chromosome", "bit")


@dataclass(frozen=True)
class GaParams:
    """GA settings.

    ``mutation_rate`` is per chromosome by default (one random bit flipped
    with that probability); ``mutation_mode="bit"`` applies it to every bit.
    """

    population: int = 30
    crossover_rate: float = 1.0
    mutation_rate: float = 0.1
    max_generations: int = 100
    elitism: int = 1
    mutation_mode: str = "chromosome"
    rng_seed: int = 0

    def __post_init__(self):
        if self.population < 2:
            raise ValueError("population must be >= 2")
        for name in ("crossover_rate", "mutation_rate"):
            rate = getattr(self, name)
            if not 0.0 <= rate <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1] (got {rate})")
        if not 0 <= self.elitism < self.population:
            raise ValueError("elitism must satisfy 0 <= elitism < population")
        if self.mutation_mode not in MUTATION_MODES:
            raise ValueError(f"mutation_mode must be one of {MUTATION_MODES}")
        if self.max_generations < 0:
            raise ValueError("max_generations must be >= 0")


def tournament_select(pop: Sequence[tuple[np.ndarray, float]], rng: np.random.Generator) -> np.ndarray:
    """Binary tournament: fitter wins, then fewer bits, then the first drawn."""
    if not pop:
        raise ValueError("cannot select from an empty population")
    i, j = rng.integers(len(pop), size=2)
    (a, fa), (b, fb) = pop[i], pop[j]
    return b if better(fb, int(b.sum()), fa, int(a.sum())) else a


def crossover_at(a: np.ndarray, b: np.ndarray, cut: int) -> tuple[np.ndarray, np.ndarray]:
    return (
        np.concatenate([a[:cut], b[cut:]]),
        np.concatenate([b[:cut], a[cut:]]),
    )


def single_point_crossover(a, b, rng: np.random.Generator, rate: float = 1.0):
    a = as_mask(a)
    b = as_mask(b)
    if a.shape != b.shape:
        raise ValueError("parents differ in length")
    d = a.shape[0]
    if d < 2:
        raise ValueError("single-point crossover needs length >= 2")
    if rng.random() < rate:
        return crossover_at(a, b, int(rng.integers(1, d)))
    return a.copy(), b.copy()


def mutate(m, rate: float, rng: np.random.Generator, mode: str = "chromosome") -> np.ndarray:
    out = as_mask(m).copy()
    if mode == "bit":
        out ^= rng.random(out.shape[0]) < rate
    elif rng.random() < rate:
        j = rng.integers(out.shape[0])
        out[j] = ~out[j]
    return out


def _ranked(masks: list[np.ndarray], fits: np.ndarray) -> list[int]:
    bits = [int(m.sum()) for m in masks]
    return sorted(range(len(masks)), key=lambda i: (-fits[i], bits[i], i))


def optimize(
    objective: Objective,
    dim: int,
    params: GaParams = GaParams(),
    threads: int = 1,
    initial_population: Sequence[np.ndarray] | None = None,
) -> SearchResult:
    rng = np.random.default_rng(params.rng_seed)
    if initial_population is None:
        pop = [rng.random(dim) < 0.5 for _ in range(params.population)]
    else:
        pop = [as_mask(m, dim).copy() for m in initial_population]
        if len(pop) != params.population:
            raise ValueError("initial population size differs from params.population")
    fits = evaluate_all(objective, pop, threads)

    order = _ranked(pop, fits)
    best_pos, best_fit = pop[order[0]].copy(), float(fits[order[0]])
    stagnated = 0
    trace = [TraceRow(0, best_fit, best_fit, float(np.mean([m.sum() for m in pop])), 0, False)]

    for gen in range(1, params.max_generations + 1):
        pairs = list(zip(pop, fits))
        children = [pop[i].copy() for i in order[: params.elitism]]
        while len(children) < params.population:
            a = tournament_select(pairs, rng)
            b = tournament_select(pairs, rng)
            if dim >= 2:
                a, b = single_point_crossover(a, b, rng, params.crossover_rate)
            for c in (a, b):
                if len(children) < params.population:
                    children.append(mutate(c, params.mutation_rate, rng, params.mutation_mode))
        pop = children
        fits = evaluate_all(objective, pop, threads)
        order = _ranked(pop, fits)
        gen_pos, gen_fit = pop[order[0]], float(fits[order[0]])
        if gen_fit > best_fit:
            stagnated = 0
        else:
            stagnated += 1
        if better(gen_fit, int(gen_pos.sum()), best_fit, int(best_pos.sum())):
            best_pos, best_fit = gen_pos.copy(), gen_fit
        trace.append(TraceRow(
            gen, gen_fit, best_fit, float(np.mean([m.sum() for m in pop])), stagnated, False,
        ))
    evaluations = getattr(objective, "evaluations", 0)
    return SearchResult(best_pos, best_fit, trace, evaluations, pop)


def run_ga(
    d: Dataset,
    fit: FitnessSpec,
    params: GaParams = GaParams(),
    space=None,
    threads: int = 1,
) -> SearchResult:
    """GA wrapper over ``d`` (or the columns of ``space``); mask returned over all of ``d``."""
    if space is None:
        return optimize(FitnessFunction(d, fit), d.n_features, params, threads)
    space = as_mask(space, d.n_features)
    objective = FitnessFunction(apply_mask(d, space), fit)
    result = optimize(objective, int(space.sum()), params, threads)
    result.best_position = lift_mask(result.best_position, space)
    return result
