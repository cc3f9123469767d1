"""NSGA-II over integer genotypes, plus a uniform random-search baseline.

Both searches measure through an :class:`EvaluationStore`, so a duplicate
offspring reuses the stored measurement without consuming budget and the
budget counts distinct configurations. Objectives are handled internally in
minimization convention; evaluators stay in natural directions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .objective import (
    ConfigurationRejectedError,
    EvaluationStore,
    Measurement,
    ObjectiveSpec,
    oriented_values,
)
from .space import Genotype, SearchSpace

_SEARCH_SEED_TAG = 0x5EED
_ATTEMPT_CAP = 100_000


class SpaceExhaustedError(RuntimeError):
    """Raised when a search cannot reach its budget of distinct configs."""


def search_rng(seed: int) -> np.random.Generator:
    """The seed stream shared by every search entry point.

    Keeping the construction identical across algorithms makes runs with the
    same config seed comparable draw for draw.
    """
    return np.random.default_rng(np.random.SeedSequence([_SEARCH_SEED_TAG, seed]))


@dataclass(frozen=True)
class Individual:
    """A genotype with its measured raw values and minimized objectives."""

    genotype: Genotype
    values: tuple[float, ...]
    objectives: tuple[float, ...]

    @classmethod
    def from_measurement(
        cls, m: Measurement, objectives: Sequence[ObjectiveSpec]
    ) -> "Individual":
        oriented = oriented_values(m.values, objectives)
        return cls(m.genotype, m.values, tuple(float(v) for v in oriented))


@dataclass(frozen=True)
class EaConfig:
    """NSGA-II settings.

    ``max_evaluations`` bounds store growth (distinct measured configs);
    ``max_generations`` optionally caps the generation count, which the
    predictor-guided inner search uses; ``stall_generations`` is a safety
    stop after that many generations without store growth (duplicate-only
    offspring, e.g. on a nearly exhausted space).
    """

    population_size: int = 50
    max_evaluations: int = 250
    crossover_prob: float = 0.9
    mutation_prob: float = 0.02
    seed: int = 0
    max_generations: int | None = None
    stall_generations: int = 50
    source: str = "nsga2"

    def __post_init__(self) -> None:
        if self.population_size < 2:
            raise ValueError("population_size must be at least 2")
        if self.max_evaluations < self.population_size:
            raise ValueError(
                f"max_evaluations ({self.max_evaluations}) must cover one "
                f"population ({self.population_size})"
            )
        if not 0.0 <= self.crossover_prob <= 1.0:
            raise ValueError("crossover_prob must lie in [0, 1]")
        if not 0.0 <= self.mutation_prob <= 1.0:
            raise ValueError("mutation_prob must lie in [0, 1]")
        if self.max_generations is not None and self.max_generations < 0:
            raise ValueError("max_generations must be non-negative")
        if self.stall_generations < 1:
            raise ValueError("stall_generations must be positive")


@dataclass(frozen=True, eq=False)
class SearchOutcome:
    """What a search run produced.

    ``population`` is the final population (NSGA-II) or every measured
    sample (random search); ``front`` is its rank-0 subset.
    """

    store: EvaluationStore
    population: tuple[Individual, ...]
    front: tuple[Individual, ...]
    generations: int


def dominates(a, b) -> bool:
    """Strict Pareto dominance between minimization vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return bool(np.all(a <= b) and np.any(a < b))


def _domination_matrix(F: np.ndarray) -> np.ndarray:
    """``D[i, j]`` is True when row i dominates row j."""
    le = np.all(F[:, None, :] <= F[None, :, :], axis=2)
    lt = np.any(F[:, None, :] < F[None, :, :], axis=2)
    return le & lt


def fast_nondominated_sort(objectives: np.ndarray) -> list[np.ndarray]:
    """Partition rows into Pareto fronts (lists of index arrays, best first)."""
    F = np.asarray(objectives, dtype=np.float64)
    if F.ndim != 2 or F.shape[0] == 0:
        raise ValueError("need a non-empty (N, m) objective matrix")
    dom = _domination_matrix(F)
    counts = dom.sum(axis=0).astype(np.int64)
    active = np.ones(F.shape[0], dtype=bool)
    fronts: list[np.ndarray] = []
    while active.any():
        members = np.nonzero(active & (counts == 0))[0]
        fronts.append(members)
        active[members] = False
        counts -= dom[members].sum(axis=0)
    return fronts


def ranks_of(objectives: np.ndarray) -> np.ndarray:
    """Per-row front rank (0 is non-dominated)."""
    ranks = np.empty(len(objectives), dtype=np.int64)
    for r, members in enumerate(fast_nondominated_sort(objectives)):
        ranks[members] = r
    return ranks


def crowding_distance(front_objectives: np.ndarray) -> np.ndarray:
    """Crowding distance within one front.

    Boundary members per objective get infinity; interior members sum
    neighbour gaps scaled by the objective's range. A zero-range objective
    contributes nothing.
    """
    F = np.asarray(front_objectives, dtype=np.float64)
    if F.ndim != 2 or F.shape[0] == 0:
        raise ValueError("need a non-empty (k, m) objective matrix")
    k = F.shape[0]
    dist = np.zeros(k)
    for col in F.T:
        lo, hi = float(col.min()), float(col.max())
        if hi == lo:
            continue
        order = np.argsort(col, kind="stable")
        dist[order[0]] = math.inf
        dist[order[-1]] = math.inf
        if k > 2:
            gaps = (col[order[2:]] - col[order[:-2]]) / (hi - lo)
            dist[order[1:-1]] += gaps
    return dist


def rank_and_crowd(objectives: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Front ranks plus within-front crowding for a whole population."""
    F = np.asarray(objectives, dtype=np.float64)
    ranks = np.empty(len(F), dtype=np.int64)
    crowd = np.empty(len(F), dtype=np.float64)
    for r, members in enumerate(fast_nondominated_sort(F)):
        ranks[members] = r
        crowd[members] = crowding_distance(F[members])
    return ranks, crowd


def tournament_winners(
    rng: np.random.Generator, ranks: np.ndarray, crowding: np.ndarray, count: int
) -> np.ndarray:
    """Vectorised binary tournaments: better rank, then larger crowding, then coin.

    Each tournament draws two distinct population indices uniformly.
    """
    n = len(ranks)
    if n < 2:
        raise ValueError("tournament needs a population of at least 2")
    first = rng.integers(0, n, size=count)
    second = rng.integers(0, n - 1, size=count)
    second = second + (second >= first)
    coin = rng.integers(0, 2, size=count).astype(bool)
    first_wins = (ranks[first] < ranks[second]) | (
        (ranks[first] == ranks[second]) & (crowding[first] > crowding[second])
    )
    tie = (ranks[first] == ranks[second]) & (crowding[first] == crowding[second])
    return np.where(first_wins | (tie & coin), first, second)


def _cut_points(rng: np.random.Generator, length: int, pairs: int) -> tuple[np.ndarray, np.ndarray]:
    """Two distinct sorted cut positions in 0..length per pair."""
    c1 = rng.integers(0, length + 1, size=pairs)
    c2 = rng.integers(0, length, size=pairs)
    c2 = c2 + (c2 >= c1)
    return np.minimum(c1, c2), np.maximum(c1, c2)


def crossover_two_point(
    rng: np.random.Generator, a, b
) -> tuple[np.ndarray, np.ndarray]:
    """Swap the segment between two distinct sorted cut points.

    Cut points live on the boundaries 0..len, so the swapped slice is
    ``[lo:hi)`` and never empty.
    """
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if a.shape != b.shape or a.ndim != 1 or a.size < 2:
        raise ValueError("parents must be equal-length vectors of length >= 2")
    lo, hi = _cut_points(rng, a.size, 1)
    mask = (np.arange(a.size) >= lo[0]) & (np.arange(a.size) < hi[0])
    return np.where(mask, b, a), np.where(mask, a, b)


def _mutate_batch(
    rng: np.random.Generator,
    G: np.ndarray,
    option_counts: np.ndarray,
    prob: float,
) -> np.ndarray:
    """Per-position mutation to a uniformly chosen different option index."""
    hits = (rng.random(G.shape) < prob) & (option_counts > 1)
    draw = rng.integers(0, np.maximum(option_counts - 1, 1), size=G.shape)
    replacement = draw + (draw >= G)
    return np.where(hits, replacement, G)


def mutate(
    rng: np.random.Generator, genotype, option_counts, prob: float
) -> np.ndarray:
    """Single-genotype view of :func:`_mutate_batch`."""
    g = np.asarray(genotype, dtype=np.int64)[None, :]
    counts = np.asarray(option_counts, dtype=np.int64)
    return _mutate_batch(rng, g, counts, prob)[0]


def _measure_one(
    store: EvaluationStore,
    evaluator,
    genotype: Genotype,
    budget_left: int,
    source: str,
    iteration: int,
) -> tuple[Measurement | None, int]:
    """Resolve one canonical genotype through the store.

    Returns (measurement or None, budget consumed). None means the config
    was rejected by the evaluator or the budget is exhausted.
    """
    hit = store.get(genotype)
    if hit is not None:
        return hit, 0
    if budget_left <= 0:
        return None, 0
    try:
        values = evaluator.evaluate(genotype)
    except ConfigurationRejectedError:
        return None, 0
    m, inserted = store.insert(values=values, genotype=genotype, source=source, iteration=iteration)
    return m, 1 if inserted else 0


def sample_fresh_into_store(
    space: SearchSpace,
    evaluator,
    store: EvaluationStore,
    rng: np.random.Generator,
    count: int,
    source: str,
    iteration: int = 0,
) -> list[Measurement]:
    """Uniformly sample until ``count`` new distinct configs are measured.

    Duplicates of stored configs and evaluator-rejected configs are skipped
    without consuming budget.

    Raises:
        SpaceExhaustedError: after a long run of samples without growth.
    """
    new: list[Measurement] = []
    misses = 0
    while len(new) < count:
        g = space.sample_uniform(rng)
        if g in store:
            misses += 1
            if misses >= _ATTEMPT_CAP:
                raise SpaceExhaustedError(
                    f"no unseen config found after {misses} samples"
                )
            continue
        try:
            values = evaluator.evaluate(g)
        except ConfigurationRejectedError:
            misses += 1
            if misses >= _ATTEMPT_CAP:
                raise SpaceExhaustedError(
                    f"no acceptable config found after {misses} samples"
                )
            continue
        m, _ = store.insert(values=values, genotype=g, source=source, iteration=iteration)
        new.append(m)
        misses = 0
    return new


def run_random(
    space: SearchSpace,
    evaluator,
    objectives: Sequence[ObjectiveSpec],
    budget: int,
    seed: int = 0,
    store: EvaluationStore | None = None,
    source: str = "random",
) -> SearchOutcome:
    """Uniform random search with canonical deduplication.

    Samples until ``budget`` distinct configs are measured; the returned
    population is every measured sample, the front its rank-0 subset.

    Raises:
        SpaceExhaustedError: if the space holds fewer configs than ``budget``.
    """
    if budget < 1:
        raise ValueError("budget must be positive")
    if space.cardinality() < budget:
        raise SpaceExhaustedError(
            f"space {space.name!r} holds {space.cardinality()} configs, "
            f"budget is {budget}"
        )
    if store is None:
        store = EvaluationStore(space, objectives)
    rng = search_rng(seed)
    measured = sample_fresh_into_store(
        space, evaluator, store, rng, budget, source=source, iteration=0
    )
    individuals = tuple(Individual.from_measurement(m, objectives) for m in measured)
    F = np.array([ind.objectives for ind in individuals])
    front_idx = fast_nondominated_sort(F)[0]
    return SearchOutcome(
        store=store,
        population=individuals,
        front=tuple(individuals[i] for i in front_idx),
        generations=0,
    )


def environmental_selection(
    G: np.ndarray, F: np.ndarray, pop_size: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """NSGA-II environmental selection from a combined pool.

    Fills by front; the boundary front is cut by descending crowding.
    Returns (genotypes, objectives, ranks, crowding) for the survivors.
    """
    chosen: list[np.ndarray] = []
    ranks = np.empty(pop_size, dtype=np.int64)
    crowd = np.empty(pop_size, dtype=np.float64)
    filled = 0
    for r, members in enumerate(fast_nondominated_sort(F)):
        dist = crowding_distance(F[members])
        if filled + len(members) <= pop_size:
            take = members
            take_dist = dist
        else:
            # Stable sort on negated distance keeps index order among ties.
            order = np.argsort(-dist, kind="stable")[: pop_size - filled]
            take = members[order]
            take_dist = dist[order]
        chosen.append(take)
        ranks[filled : filled + len(take)] = r
        crowd[filled : filled + len(take)] = take_dist
        filled += len(take)
        if filled == pop_size:
            break
    idx = np.concatenate(chosen)
    return G[idx], F[idx], ranks, crowd


def run_nsga2(
    space: SearchSpace,
    evaluator,
    objectives: Sequence[ObjectiveSpec],
    config: EaConfig,
    store: EvaluationStore | None = None,
) -> SearchOutcome:
    """Elitist NSGA-II until the store-growth budget (or generation cap) is hit.

    Offspring are built by binary tournaments, two-point crossover, and
    per-position mutation, then canonicalized. Offspring already in the
    store join the pool with cached values at no budget cost; once the
    budget is exhausted the remaining new offspring of that generation are
    dropped.
    """
    if store is None:
        store = EvaluationStore(space, objectives)
    rng = search_rng(config.seed)
    pop = config.population_size
    counts = space.option_counts
    budget_left = config.max_evaluations

    # Initial population: uniform draws; duplicates allowed and resolved
    # through the store. Rejected configs are resampled.
    genotypes: list[Genotype] = []
    rows: list[Measurement] = []
    attempts = 0
    while len(rows) < pop:
        g = space.sample_uniform(rng)
        m, used = _measure_one(store, evaluator, g, budget_left, config.source, 0)
        budget_left -= used
        if m is None:
            attempts += 1
            if attempts >= _ATTEMPT_CAP:
                raise SpaceExhaustedError(
                    f"could not assemble an initial population after {attempts} attempts"
                )
            continue
        genotypes.append(m.genotype)
        rows.append(m)
    G = np.array(genotypes, dtype=np.int64)
    F = oriented_values(np.array([m.values for m in rows]), objectives)
    ranks, crowd = rank_and_crowd(F)

    generations = 0
    stall = 0
    while budget_left > 0:
        if config.max_generations is not None and generations >= config.max_generations:
            break
        if stall >= config.stall_generations:
            break
        generations += 1

        # Variation: tournaments pick parents, pairs cross with probability
        # crossover_prob, every child mutates position-wise.
        n_pairs = (pop + 1) // 2
        parents_idx = tournament_winners(rng, ranks, crowd, 2 * n_pairs)
        P1 = G[parents_idx[0::2]]
        P2 = G[parents_idx[1::2]]
        do_cross = rng.random(n_pairs) < config.crossover_prob
        lo, hi = _cut_points(rng, space.n_variables, n_pairs)
        span = np.arange(space.n_variables)
        swap = (span >= lo[:, None]) & (span < hi[:, None]) & do_cross[:, None]
        C1 = np.where(swap, P2, P1)
        C2 = np.where(swap, P1, P2)
        children = np.empty((2 * n_pairs, space.n_variables), dtype=np.int64)
        children[0::2] = C1
        children[1::2] = C2
        children = children[:pop]
        children = _mutate_batch(rng, children, counts, config.mutation_prob)
        children = space.canonicalize_batch(children)

        # Measure: store hits are free, new configs spend budget in child
        # order, overflow and rejected children are dropped.
        child_tuples = [tuple(int(v) for v in row) for row in children]
        fresh: list[Genotype] = []
        seen_batch: set[Genotype] = set()
        for g in child_tuples:
            if g not in store and g not in seen_batch:
                seen_batch.add(g)
                if len(fresh) < budget_left:
                    fresh.append(g)
        rejected: set[Genotype] = set()
        if fresh:
            try:
                values = evaluator.evaluate_batch(fresh)
                for g, v in zip(fresh, values):
                    store.insert(values=v, genotype=g, source=config.source, iteration=generations)
                budget_left -= len(fresh)
            except ConfigurationRejectedError:
                for g in fresh:
                    m, used = _measure_one(
                        store, evaluator, g, budget_left, config.source, generations
                    )
                    budget_left -= used
                    if m is None:
                        rejected.add(g)

        kept = [g for g in child_tuples if g in store and g not in rejected]
        grew = len(fresh) > 0 and len(rejected) < len(fresh)
        stall = 0 if grew else stall + 1
        if kept:
            off_G = np.array(kept, dtype=np.int64)
            off_F = oriented_values(
                np.array([store.get(g).values for g in kept]), objectives
            )
            G, F, ranks, crowd = environmental_selection(
                np.concatenate([G, off_G]), np.concatenate([F, off_F]), pop
            )

    individuals = tuple(
        Individual.from_measurement(store.get(tuple(int(v) for v in row)), objectives)
        for row in G
    )
    front_idx = fast_nondominated_sort(F)[0]
    return SearchOutcome(
        store=store,
        population=individuals,
        front=tuple(individuals[i] for i in front_idx),
        generations=generations,
    )
