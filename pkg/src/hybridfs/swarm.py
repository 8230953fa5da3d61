"""Binary particle swarm search over feature masks (BPSO and IBPSO).

IBPSO adds one rule to plain BPSO: once the global best fitness has failed to
strictly improve for ``stagnation_limit`` iterations, the global best is
replaced by the bitwise AND of every particle's personal best.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .classify import FitnessFunction, FitnessSpec
from .dataset import Dataset, apply_mask, as_mask, lift_mask
from .search import Objective, SearchResult, TraceRow, better, evaluate_all


class Variant(str, enum.Enum):
    BPSO = "bpso"
    IBPSO = "ibpso"


@dataclass(frozen=True)
class SwarmParams:
    n_particles: int = 30
    w: float = 1.0
    c1: float = 2.0
    c2: float = 2.0
    vmax: float = 6.0
    max_iter: int = 100
    stagnation_limit: int = 3
    variant: Variant = Variant.IBPSO

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if self.n_particles < 1:
            raise ValueError("n_particles must be >= 1")
        if self.vmax <= 0:
            raise ValueError("vmax must be positive")
        if self.max_iter < 0:
            raise ValueError("max_iter must be >= 0")
        if self.stagnation_limit < 1:
            raise ValueError("stagnation_limit must be >= 1")


@dataclass
class Particle:
    position: np.ndarray
    velocity: np.ndarray
    pbest_position: np.ndarray
    pbest_fitness: float
    rng: np.random.Generator = field(repr=False)


@dataclass
class SwarmState:
    particles: list[Particle]
    gbest_position: np.ndarray
    gbest_fitness: float
    best_ever_position: np.ndarray
    best_ever_fitness: float
    params: SwarmParams
    rng: np.random.Generator = field(repr=False)
    stagnation_counter: int = 0
    iteration: int = 0
    regenerations: int = 0

    @property
    def dim(self) -> int:
        return self.gbest_position.shape[0]


def sigmoid(v):
    return 1.0 / (1.0 + np.exp(-np.asarray(v, dtype=np.float64)))


def velocity_step(v, x, pbest, gbest, params: SwarmParams, r1, r2) -> np.ndarray:
    """Inertia plus cognitive and social pulls, clamped to [-vmax, vmax]."""
    x = np.asarray(x, dtype=np.float64)
    new = (
        params.w * np.asarray(v, dtype=np.float64)
        + params.c1 * r1 * (np.asarray(pbest, dtype=np.float64) - x)
        + params.c2 * r2 * (np.asarray(gbest, dtype=np.float64) - x)
    )
    return np.clip(new, -params.vmax, params.vmax)


def update_velocity(p: Particle, gbest, params: SwarmParams, rng: np.random.Generator) -> np.ndarray:
    d = p.position.shape[0]
    r1 = rng.random(d)
    r2 = rng.random(d)
    return velocity_step(p.velocity, p.position, p.pbest_position, gbest, params, r1, r2)


def update_position(p: Particle, rng: np.random.Generator) -> np.ndarray:
    return rng.random(p.velocity.shape[0]) < sigmoid(p.velocity)


def init_swarm(
    dim: int,
    params: SwarmParams,
    rng_seed: int,
    objective: Objective,
    threads: int = 1,
) -> SwarmState:
    if dim < 1:
        raise ValueError(f"dimension must be >= 1 (got {dim})")
    root = np.random.SeedSequence(rng_seed)
    main_seq, *particle_seqs = root.spawn(params.n_particles + 1)
    rngs = [np.random.default_rng(s) for s in particle_seqs]
    positions = []
    velocities = []
    for rng in rngs:
        positions.append(rng.random(dim) < 0.5)
        velocities.append(rng.uniform(-params.vmax, params.vmax, dim))
    fits = evaluate_all(objective, positions, threads)
    particles = [
        Particle(x, v, x.copy(), float(f), rng)
        for x, v, f, rng in zip(positions, velocities, fits, rngs)
    ]
    g = _best_index(particles, range(len(particles)))
    best = particles[g]
    return SwarmState(
        particles=particles,
        gbest_position=best.pbest_position.copy(),
        gbest_fitness=best.pbest_fitness,
        best_ever_position=best.pbest_position.copy(),
        best_ever_fitness=best.pbest_fitness,
        params=params,
        rng=np.random.default_rng(main_seq),
    )


def _best_index(particles: list[Particle], indices) -> int:
    best = None
    for i in indices:
        p = particles[i]
        if best is None or better(
            p.pbest_fitness, int(p.pbest_position.sum()),
            particles[best].pbest_fitness, int(particles[best].pbest_position.sum()),
        ):
            best = i
    return best


def _archive(s: SwarmState, position: np.ndarray, fit: float) -> None:
    if better(fit, int(position.sum()), s.best_ever_fitness, int(s.best_ever_position.sum())):
        s.best_ever_position = position.copy()
        s.best_ever_fitness = fit


def update_bests(s: SwarmState, fitnesses) -> SwarmState:
    """Fold this iteration's fitness values into pbest, gbest and the archive.

    Only personal bests that changed this iteration compete for gbest, so a
    regenerated gbest stays the attractor until something beats it.
    """
    fitnesses = np.asarray(fitnesses, dtype=np.float64)
    if fitnesses.shape != (len(s.particles),):
        raise ValueError("need exactly one fitness value per particle")
    updated = []
    for i, (p, f) in enumerate(zip(s.particles, fitnesses)):
        if better(f, int(p.position.sum()), p.pbest_fitness, int(p.pbest_position.sum())):
            p.pbest_position = p.position.copy()
            p.pbest_fitness = float(f)
            updated.append(i)
    improved = False
    if updated:
        c = s.particles[_best_index(s.particles, updated)]
        if better(c.pbest_fitness, int(c.pbest_position.sum()),
                  s.gbest_fitness, int(s.gbest_position.sum())):
            improved = c.pbest_fitness > s.gbest_fitness
            s.gbest_position = c.pbest_position.copy()
            s.gbest_fitness = c.pbest_fitness
        _archive(s, c.pbest_position, c.pbest_fitness)
    s.stagnation_counter = 0 if improved else s.stagnation_counter + 1
    return s


def regenerate_gbest_and(s: SwarmState, objective: Objective) -> SwarmState:
    """Replace gbest with the AND of all personal bests, keeping it even if worse.

    An all-zero AND is replaced by a fresh Bernoulli(0.5) string.
    """
    if s.params.variant is not Variant.IBPSO:
        raise ValueError("gbest regeneration is an IBPSO-only step")
    if s.stagnation_counter < s.params.stagnation_limit:
        raise ValueError(
            f"swarm not stagnated ({s.stagnation_counter} < {s.params.stagnation_limit})"
        )
    new = np.logical_and.reduce([p.pbest_position for p in s.particles])
    if not new.any():
        new = s.rng.random(s.dim) < 0.5
    s.gbest_position = new
    s.gbest_fitness = float(objective(new))
    s.stagnation_counter = 0
    s.regenerations += 1
    _archive(s, new, s.gbest_fitness)
    return s


def step(s: SwarmState, objective: Objective, threads: int = 1) -> TraceRow:
    """One iteration: move every particle, evaluate, update bests, maybe regenerate."""
    params = s.params
    for p in s.particles:
        p.velocity = update_velocity(p, s.gbest_position, params, p.rng)
        p.position = update_position(p, p.rng)
    fits = evaluate_all(objective, [p.position for p in s.particles], threads)
    update_bests(s, fits)
    s.iteration += 1
    stagnated = s.stagnation_counter
    regenerated = False
    if params.variant is Variant.IBPSO and s.stagnation_counter >= params.stagnation_limit:
        regenerate_gbest_and(s, objective)
        regenerated = True
    return TraceRow(
        s.iteration,
        s.gbest_fitness,
        s.best_ever_fitness,
        float(np.mean([p.position.sum() for p in s.particles])),
        stagnated,
        regenerated,
    )


def optimize(
    objective: Objective,
    dim: int,
    params: SwarmParams = SwarmParams(),
    seed: int = 0,
    threads: int = 1,
) -> SearchResult:
    """Run the swarm on an arbitrary mask objective and return the best mask seen."""
    s = init_swarm(dim, params, seed, objective, threads)
    trace = [TraceRow(
        0, s.gbest_fitness, s.best_ever_fitness,
        float(np.mean([p.position.sum() for p in s.particles])), 0, False,
    )]
    for _ in range(params.max_iter):
        trace.append(step(s, objective, threads))
    evaluations = getattr(objective, "evaluations", 0)
    return SearchResult(s.best_ever_position.copy(), s.best_ever_fitness, trace, evaluations)


def run(
    d: Dataset,
    fit: FitnessSpec,
    params: SwarmParams = SwarmParams(),
    seed: int = 0,
    space=None,
    threads: int = 1,
) -> SearchResult:
    """Search masks over ``d`` (or over the columns of ``space``).

    The returned mask is always expressed over all columns of ``d``.
    """
    if space is None:
        objective = FitnessFunction(d, fit)
        return optimize(objective, d.n_features, params, seed, threads)
    space = as_mask(space, d.n_features)
    objective = FitnessFunction(apply_mask(d, space), fit)
    result = optimize(objective, int(space.sum()), params, seed, threads)
    result.best_position = lift_mask(result.best_position, space)
    return result
