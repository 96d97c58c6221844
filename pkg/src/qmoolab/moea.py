"""Genetic machinery for evolving populations of ansatz parameter vectors.

Each individual is a full angle vector whose decoded candidate solutions are
what actually get ranked: ranking pools the candidate sets of the whole
population, runs standard nondominated sorting and crowding on the pooled
image, and hands every individual the best (minimum) rank and the best
(maximum) crowding among its own elements. Crowding ties in the tournament,
including +inf against +inf, are broken by a seeded coin flip.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import crowding_distance, nondominated_mask, nondominated_sort

TWO_PI = 2.0 * np.pi


class _DecoderFailure(Exception):
    """Internal marker so decoder errors abort the run but keep the archive."""


@dataclass(eq=False)
class Individual:
    """One parameter vector with its decoded candidate set and pooled scores."""

    theta: np.ndarray
    solutions: np.ndarray  # candidate solution indices, most probable first
    image: np.ndarray      # (P, K) objective values in the same order
    rank: int = 0
    crowding: float = 0.0


@dataclass
class GAConfig:
    """Hyperparameters of the evolutionary loop."""

    pop_size: int = 5
    sbx_eta: float = 15.0
    sbx_prob: float = 0.9
    pm_eta: float = 20.0
    pm_prob: float | None = None  # defaults to 1/d
    max_generations: int = 200
    max_evaluations: int = 4000
    bounds: tuple[float, float] = (0.0, TWO_PI)
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.sbx_prob <= 1.0:
            raise ValueError("sbx_prob must lie in [0, 1]")
        if self.pm_prob is not None and not 0.0 <= self.pm_prob <= 1.0:
            raise ValueError("pm_prob must lie in [0, 1]")
        if self.pop_size < 1 or self.max_generations < 1 or self.max_evaluations < 1:
            raise ValueError("population and budgets must be positive")


@dataclass
class EvolveResult:
    population: list[Individual]
    archive_solutions: np.ndarray
    archive_image: np.ndarray
    archive_hv: float
    archive_trace: list[float]  # archive hypervolume after each ranking step
    evaluations: int
    generations: int
    reason: str  # "evaluations" | "generations" | "decoder-error"


def sbx_spread(u: float, eta: float) -> float:
    """Spread factor of simulated binary crossover for one uniform draw."""
    if u <= 0.5:
        return (2.0 * u) ** (1.0 / (eta + 1.0))
    return (1.0 / (2.0 * (1.0 - u))) ** (1.0 / (eta + 1.0))


def sbx_crossover(p1, p2, eta: float, prob: float, bounds: tuple[float, float],
                  rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Simulated binary crossover; applied to the whole pair with probability prob."""
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    if p1.shape != p2.shape:
        raise ValueError("parents must have equal dimension")
    if rng.random() > prob:
        return p1.copy(), p2.copy()
    u = rng.random(p1.size)
    beta = np.where(
        u <= 0.5,
        (2.0 * u) ** (1.0 / (eta + 1.0)),
        (1.0 / (2.0 * (1.0 - u))) ** (1.0 / (eta + 1.0)),
    )
    c1 = 0.5 * ((1.0 - beta) * p1 + (1.0 + beta) * p2)
    c2 = 0.5 * ((1.0 + beta) * p1 + (1.0 - beta) * p2)
    lo, hi = bounds
    return np.clip(c1, lo, hi), np.clip(c2, lo, hi)


def pm_delta(u: float, dist_lo: float, dist_hi: float, eta: float) -> float:
    """Polynomial-mutation offset (fraction of the box width) for one draw."""
    if u < 0.5:
        val = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - dist_lo) ** (eta + 1.0)
        return val ** (1.0 / (eta + 1.0)) - 1.0
    val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - dist_hi) ** (eta + 1.0)
    return 1.0 - val ** (1.0 / (eta + 1.0))


def polynomial_mutation(theta, eta: float, prob: float, bounds: tuple[float, float],
                        rng: np.random.Generator) -> np.ndarray:
    """Perturb each gene with probability prob by a bounded polynomial step."""
    out = np.asarray(theta, dtype=float).copy()
    lo, hi = bounds
    span = hi - lo
    selected = rng.random(out.size) < prob
    draws = rng.random(out.size)
    for i in np.flatnonzero(selected):
        d_lo = (out[i] - lo) / span
        d_hi = (hi - out[i]) / span
        out[i] += pm_delta(draws[i], d_lo, d_hi, eta) * span
    return np.clip(out, lo, hi)


def union_rank(population: list[Individual]) -> list[Individual]:
    """Assign each individual the best rank / crowding among its pooled elements.

    All candidate solutions of all individuals are pooled (duplicates kept),
    the pooled image is nondominated-sorted, crowding is computed front-wise,
    and each individual inherits min(rank) and max(crowding) over its rows.
    """
    if not population:
        return population
    counts = [ind.image.shape[0] for ind in population]
    pooled = np.concatenate([ind.image for ind in population], axis=0)
    partition = nondominated_sort(pooled)
    crowd = np.empty(pooled.shape[0])
    for front in partition.fronts:
        crowd[front] = crowding_distance(pooled[front])
    offset = 0
    for ind, count in zip(population, counts):
        sl = slice(offset, offset + count)
        ind.rank = int(partition.ranks[sl].min())
        ind.crowding = float(crowd[sl].max())
        offset += count
    return population


def crowded_compare(a: Individual, b: Individual,
                    rng: np.random.Generator) -> Individual:
    """Lower rank wins, then higher crowding; full ties (including inf vs inf)
    fall back to a seeded coin flip."""
    if a.rank != b.rank:
        return a if a.rank < b.rank else b
    if a.crowding != b.crowding:
        return a if a.crowding > b.crowding else b
    return a if rng.integers(2) == 0 else b


def tournament_winner(population: list[Individual],
                      rng: np.random.Generator) -> Individual:
    """Uniformly sample two individuals and return the crowded-compare winner."""
    i, j = rng.integers(len(population), size=2)
    return crowded_compare(population[int(i)], population[int(j)], rng)


def binary_tournament(population: list[Individual], rng: np.random.Generator,
                      pairs: int) -> list[tuple[Individual, Individual]]:
    """Select `pairs` parent pairs, each parent by one binary tournament."""
    if len(population) < 2:
        raise ValueError("tournament needs at least two individuals")
    return [(tournament_winner(population, rng), tournament_winner(population, rng))
            for _ in range(pairs)]


def _pooled_front(population: list[Individual]) -> tuple[np.ndarray, np.ndarray]:
    """Distinct solutions whose images are nondominated in the population pool."""
    solutions = np.concatenate([ind.solutions for ind in population])
    images = np.concatenate([ind.image for ind in population], axis=0)
    mask = nondominated_mask(images)
    sol = solutions[mask]
    img = images[mask]
    _, keep = np.unique(sol, return_index=True)  # ascending solution index
    return sol[keep], img[keep]


def evolve(decoder: Callable[[np.ndarray], Individual], dimension: int,
           config: GAConfig,
           front_hv: Callable[[np.ndarray], float]) -> EvolveResult:
    """Elitist generational loop over parameter vectors.

    `decoder` performs exactly one ansatz execution per call; decode calls are
    what the evaluation budget counts. The archive keeps the pooled
    nondominated set with the best hypervolume seen so far, so its
    hypervolume never decreases.
    """
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(config.seed)))
    lo, hi = config.bounds
    pm_prob = config.pm_prob if config.pm_prob is not None else 1.0 / dimension

    evaluations = 0
    archive_solutions = np.empty(0, dtype=np.int64)
    archive_image = np.empty((0, 0))
    archive_hv = -np.inf
    archive_trace: list[float] = []
    population: list[Individual] = []
    reason = "generations"
    generations = 0

    def decode(theta: np.ndarray) -> Individual:
        nonlocal evaluations
        try:
            individual = decoder(theta)
        except Exception as exc:
            raise _DecoderFailure() from exc
        evaluations += 1
        return individual

    def update_archive(pool: list[Individual]) -> None:
        nonlocal archive_solutions, archive_image, archive_hv
        sol, img = _pooled_front(pool)
        hv = front_hv(img)
        if hv > archive_hv:
            archive_solutions, archive_image, archive_hv = sol, img, hv
        archive_trace.append(archive_hv)

    try:
        for _ in range(config.pop_size):
            if evaluations >= config.max_evaluations:
                break
            theta = rng.uniform(lo, hi, dimension)
            population.append(decode(theta))
        union_rank(population)
        update_archive(population)
        if evaluations >= config.max_evaluations:
            reason = "evaluations"
        else:
            while generations < config.max_generations:
                offspring: list[Individual] = []
                while (len(offspring) < config.pop_size
                       and evaluations < config.max_evaluations):
                    pa, pb = binary_tournament(population, rng, 1)[0]
                    c1, c2 = sbx_crossover(pa.theta, pb.theta, config.sbx_eta,
                                           config.sbx_prob, config.bounds, rng)
                    for child in (c1, c2):
                        if (len(offspring) >= config.pop_size
                                or evaluations >= config.max_evaluations):
                            break
                        mutated = polynomial_mutation(child, config.pm_eta, pm_prob,
                                                      config.bounds, rng)
                        offspring.append(decode(mutated))
                if not offspring:
                    reason = "evaluations"
                    break
                combined = population + offspring
                union_rank(combined)
                update_archive(combined)
                combined.sort(key=lambda ind: (ind.rank, -ind.crowding))
                population = combined[: config.pop_size]
                generations += 1
                if evaluations >= config.max_evaluations:
                    reason = "evaluations"
                    break
    except _DecoderFailure as failure:
        if not population:
            raise failure.__cause__
        if not archive_trace:
            union_rank(population)
            update_archive(population)
        reason = "decoder-error"
    return EvolveResult(
        population=population,
        archive_solutions=archive_solutions,
        archive_image=archive_image,
        archive_hv=archive_hv if np.isfinite(archive_hv) else 0.0,
        archive_trace=archive_trace,
        evaluations=evaluations,
        generations=generations,
        reason=reason,
    )
