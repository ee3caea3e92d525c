"""Elitist evolutionary baseline operating on flat parameter vectors.

Standard machinery: fast non-dominated sorting, crowding distance, binary
tournament, simulated binary crossover and polynomial mutation, with
(mu + lambda) survivor selection. Objective evaluation is a black box, so
the same engine trains networks (genome = flattened parameters) and solves
test problems.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import network, pinn_problems
from .errors import ConfigurationError, UsageError
from .pinn_problems import Dataset, LossWeights, PDEProblem

Array = np.ndarray


@dataclass(frozen=True)
class NSGAConfig:
    population: int = 100
    generations: int = 100
    crossover_prob: float = 0.9
    sbx_eta: float = 15.0
    mutation_prob: float | None = None   # defaults to 1/genome length
    mutation_eta: float = 20.0
    bound: float = 5.0
    seed: int = 0

    def __post_init__(self):
        if self.population < 2 or self.population % 2:
            raise ConfigurationError("population must be even and at least 2")
        if self.generations < 0:
            raise ConfigurationError("generations must be non-negative")
        for p in (self.crossover_prob, self.mutation_prob):
            if p is not None and not 0.0 <= p <= 1.0:
                raise ConfigurationError("probabilities must lie in [0, 1]")
        if self.bound <= 0:
            raise ConfigurationError("genome bound must be positive")


@dataclass
class Individual:
    genome: Array
    objectives: tuple[float, float] | None = None
    rank: int = -1
    crowding: float = 0.0


# ---------------------------------------------------------------------------
# sorting and diversity
# ---------------------------------------------------------------------------

def fast_nondominated_sort(objectives: Array) -> list[list[int]]:
    """Deb's front peeling; returns index lists, front 0 first."""
    values = np.asarray(objectives, dtype=np.float64)
    n = values.shape[0]
    if n == 0:
        return []
    # dom[i, j] = i dominates j, computed via broadcasting
    le = np.all(values[:, None, :] <= values[None, :, :], axis=2)
    lt = np.any(values[:, None, :] < values[None, :, :], axis=2)
    dom = le & lt
    n_dominators = dom.sum(axis=0)
    fronts = []
    remaining = n_dominators.copy()
    assigned = np.zeros(n, dtype=bool)
    current = np.flatnonzero(remaining == 0)
    while current.size:
        fronts.append(sorted(current.tolist()))
        assigned[current] = True
        for i in current:
            remaining[dom[i]] -= 1
        current = np.flatnonzero((remaining == 0) & ~assigned)
    return fronts


def crowding_distance(front_objectives: Array) -> Array:
    """Per-point diversity: boundary points get +inf, interior the sum of
    normalized neighbor gaps per objective."""
    values = np.asarray(front_objectives, dtype=np.float64)
    n = values.shape[0]
    if n == 0:
        raise ConfigurationError("front must be non-empty")
    dist = np.zeros(n)
    if n <= 2:
        return np.full(n, np.inf)
    any_spread = False
    for m in range(values.shape[1]):
        order = np.argsort(values[:, m], kind="stable")
        lo, hi = values[order[0], m], values[order[-1], m]
        if hi == lo:
            continue
        any_spread = True
        dist[order[0]] = dist[order[-1]] = np.inf
        gaps = (values[order[2:], m] - values[order[:-2], m]) / (hi - lo)
        dist[order[1:-1]] += gaps
    if not any_spread:
        return np.full(n, np.inf)
    return dist


# ---------------------------------------------------------------------------
# variation operators
# ---------------------------------------------------------------------------

def _sbx_crossover(p1: Array, p2: Array, eta: float, prob: float, bound: float,
                   rng: np.random.Generator) -> tuple[Array, Array]:
    c1, c2 = p1.copy(), p2.copy()
    if rng.random() < prob:
        u = rng.random(p1.size)
        beta = np.where(u < 0.5,
                        (2.0 * u) ** (1.0 / (eta + 1.0)),
                        (1.0 / (2.0 * (1.0 - u))) ** (1.0 / (eta + 1.0)))
        swap = rng.random(p1.size) < 0.5
        beta = np.where(swap, beta, 1.0)
        c1 = 0.5 * ((1.0 + beta) * p1 + (1.0 - beta) * p2)
        c2 = 0.5 * ((1.0 - beta) * p1 + (1.0 + beta) * p2)
    return np.clip(c1, -bound, bound), np.clip(c2, -bound, bound)


def _polynomial_mutation(genome: Array, eta: float, prob: float, bound: float,
                         rng: np.random.Generator) -> Array:
    out = genome.copy()
    hit = rng.random(genome.size) < prob
    if np.any(hit):
        u = rng.random(int(hit.sum()))
        delta = np.where(u < 0.5,
                         (2.0 * u) ** (1.0 / (eta + 1.0)) - 1.0,
                         1.0 - (2.0 * (1.0 - u)) ** (1.0 / (eta + 1.0)))
        out[hit] = out[hit] + delta * (2.0 * bound)
    return np.clip(out, -bound, bound)


def _tournament(pop: list[Individual], rng: np.random.Generator) -> Individual:
    i, j = rng.integers(len(pop)), rng.integers(len(pop))
    a, b = pop[i], pop[j]
    if a.rank != b.rank:
        return a if a.rank < b.rank else b
    if a.crowding != b.crowding:
        return a if a.crowding > b.crowding else b
    return a


# ---------------------------------------------------------------------------
# the evolutionary loop
# ---------------------------------------------------------------------------

@dataclass
class EvolutionResult:
    population: list[Individual]
    front: list[Individual]                       # final rank-0 set
    generation_fronts: list[Array] = field(default_factory=list)


def _evaluate(individuals: list[Individual], evaluate) -> None:
    for ind in individuals:
        if ind.objectives is None:
            f1, f2 = evaluate(ind.genome)
            if not (np.isfinite(f1) and np.isfinite(f2)):
                f1 = f2 = np.inf   # never selected over finite rivals
            ind.objectives = (float(f1), float(f2))


def _assign_ranks(pop: list[Individual]) -> list[list[int]]:
    for ind in pop:
        if ind.objectives is None:
            raise UsageError("individual has no evaluated objectives")
    fronts = fast_nondominated_sort(np.array([ind.objectives for ind in pop]))
    for rank, front in enumerate(fronts):
        members = np.array([pop[i].objectives for i in front])
        dists = crowding_distance(members)
        for d, i in zip(dists, front):
            pop[i].rank = rank
            pop[i].crowding = float(d)
    return fronts


def run_evolution(evaluate, genome_length: int, config: NSGAConfig) -> EvolutionResult:
    """Generic (mu + lambda) loop over a black-box two-objective function."""
    rng = np.random.default_rng(config.seed)
    mutation_prob = (config.mutation_prob if config.mutation_prob is not None
                     else 1.0 / genome_length)
    pop = [Individual(rng.uniform(-config.bound, config.bound, genome_length))
           for _ in range(config.population)]
    _evaluate(pop, evaluate)
    fronts = _assign_ranks(pop)
    result = EvolutionResult(pop, [], [])
    result.generation_fronts.append(
        np.array([pop[i].objectives for i in fronts[0]]))
    for _ in range(config.generations):
        offspring: list[Individual] = []
        while len(offspring) < config.population:
            p1, p2 = _tournament(pop, rng), _tournament(pop, rng)
            c1, c2 = _sbx_crossover(p1.genome, p2.genome, config.sbx_eta,
                                    config.crossover_prob, config.bound, rng)
            offspring.append(Individual(_polynomial_mutation(
                c1, config.mutation_eta, mutation_prob, config.bound, rng)))
            offspring.append(Individual(_polynomial_mutation(
                c2, config.mutation_eta, mutation_prob, config.bound, rng)))
        _evaluate(offspring, evaluate)
        combined = pop + offspring
        fronts = _assign_ranks(combined)
        survivors: list[Individual] = []
        for front in fronts:
            if len(survivors) + len(front) <= config.population:
                survivors.extend(combined[i] for i in front)
            else:
                members = [combined[i] for i in front]
                members.sort(key=lambda ind: ind.crowding, reverse=True)
                survivors.extend(members[:config.population - len(survivors)])
                break
        pop = survivors
        fronts = _assign_ranks(pop)
        result.generation_fronts.append(
            np.array([pop[i].objectives for i in fronts[0]]))
    result.population = pop
    result.front = [ind for ind in pop if ind.rank == 0]
    return result


def evolve(problem: PDEProblem, dataset: Dataset, layer_sizes,
           config: NSGAConfig, weights: LossWeights | None = None,
           hidden_activation: str = "tanh") -> EvolutionResult:
    """Evolve network parameters against (data loss, physics loss)."""
    weights = weights or LossWeights()
    template = network.init(tuple(layer_sizes), seed=0,
                            hidden_activation=hidden_activation)

    def evaluate(genome: Array) -> tuple[float, float]:
        net = network.unflatten(template, genome)
        with np.errstate(all="ignore"):
            l_data = pinn_problems.data_loss(net, dataset)
            l_physics = pinn_problems.physics_loss(net, problem, weights=weights)
        return l_data, l_physics

    return run_evolution(evaluate, template.parameter_count(), config)


# ---------------------------------------------------------------------------
# hypervolume
# ---------------------------------------------------------------------------

def hypervolume_2d(points, reference) -> float:
    """Area dominated by the points and bounded by the reference corner."""
    reference = np.asarray(reference, dtype=np.float64)
    values = np.asarray([np.asarray(p, dtype=np.float64) for p in points])
    if values.size == 0:
        return 0.0
    inside = np.all(values <= reference, axis=1)
    if not np.all(inside):
        warnings.warn(f"{int((~inside).sum())} points beyond the reference "
                      "point were excluded", RuntimeWarning)
        values = values[inside]
    if values.shape[0] == 0:
        return 0.0
    from .moo import nondominated_mask
    values = values[nondominated_mask(values)]
    order = np.lexsort((values[:, 1], values[:, 0]))
    values = values[order]
    area = 0.0
    for i in range(values.shape[0]):
        right = values[i + 1, 0] if i + 1 < values.shape[0] else reference[0]
        area += (right - values[i, 0]) * (reference[1] - values[i, 1])
    return float(area)
