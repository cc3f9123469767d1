"""Predictor-guided multi-objective architecture search.

Each outer iteration measures a small batch of real configurations, fits one
predictor per objective on everything measured so far, explores far beyond
the real-evaluation budget with a predictor-only NSGA-II, and promotes the
most promising unseen candidates to the next measured batch. Real
measurements therefore total ``population_size * iterations``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .metrics import pareto_front
from .moea import (
    EaConfig,
    Individual,
    SearchOutcome,
    SpaceExhaustedError,
    rank_and_crowd,
    run_nsga2,
    sample_fresh_into_store,
    search_rng,
)
from .objective import (
    ConfigurationRejectedError,
    EvaluationStore,
    ObjectiveSpec,
)
from .predictor import PREDICTOR_KINDS, featurize_batch, make_predictor
from .space import Genotype, SearchSpace

LINAS_SOURCE = "linas"
INNER_SOURCE = "predicted"


@dataclass(frozen=True, eq=False)
class PredictorEvaluator:
    """Evaluator facade over fitted per-objective predictors.

    Returns raw natural-direction predictions, exactly what the underlying
    models produce, so it drops into any search routine in place of a real
    evaluator.
    """

    space: SearchSpace
    models: tuple

    def evaluate(self, genotype: Genotype) -> tuple[float, ...]:
        X = featurize_batch(self.space, [genotype])
        return tuple(float(m.predict(X)[0]) for m in self.models)

    def evaluate_batch(self, genotypes) -> np.ndarray:
        X = featurize_batch(self.space, genotypes)
        return np.column_stack([m.predict(X) for m in self.models])


@dataclass(frozen=True)
class LinasConfig:
    """Settings for the predictor-guided search.

    ``predictor_kinds`` is either one kind applied to every objective or one
    kind per objective; ``inner_evaluations`` is the predictor-query budget
    of each inner search, which also caps its generations at
    ``inner_evaluations // population_size``.
    """

    population_size: int = 50
    iterations: int = 5
    inner_evaluations: int = 20_000
    predictor_kinds: tuple[str, ...] = ("ridge",)
    crossover_prob: float = 0.9
    mutation_prob: float = 0.02
    seed: int = 0

    def __post_init__(self) -> None:
        if self.population_size < 2:
            raise ValueError("population_size must be at least 2")
        if self.iterations < 1:
            raise ValueError("iterations must be positive")
        if self.inner_evaluations < self.population_size:
            raise ValueError(
                "inner_evaluations must cover at least one population"
            )
        if isinstance(self.predictor_kinds, str):
            raise ValueError("predictor_kinds must be a tuple of kind names")
        object.__setattr__(self, "predictor_kinds", tuple(self.predictor_kinds))
        if not self.predictor_kinds:
            raise ValueError("need at least one predictor kind")
        for kind in self.predictor_kinds:
            if kind not in PREDICTOR_KINDS:
                raise ValueError(
                    f"unknown predictor kind {kind!r}; choose from {PREDICTOR_KINDS}"
                )

    def kinds_for(self, objectives: Sequence[ObjectiveSpec]) -> tuple[str, ...]:
        """One predictor kind per objective, broadcasting a single kind."""
        if len(self.predictor_kinds) == 1:
            return self.predictor_kinds * len(objectives)
        if len(self.predictor_kinds) != len(objectives):
            raise ValueError(
                f"{len(self.predictor_kinds)} predictor kinds for "
                f"{len(objectives)} objectives"
            )
        return self.predictor_kinds


@dataclass(frozen=True, eq=False)
class LinasOutcome:
    """What a predictor-guided run produced.

    ``front`` holds the non-dominated measured configurations;
    ``iteration_models`` the fitted predictors per outer iteration;
    ``inner_outcome`` the last inner search (predicted values only).
    """

    store: EvaluationStore
    front: tuple[Individual, ...]
    iteration_models: tuple[tuple, ...]
    inner_outcome: SearchOutcome


def select_best_unique(
    population: Sequence[Individual],
    count: int,
    seen,
) -> list[Genotype]:
    """The best ``count`` distinct genotypes not already in ``seen``.

    Candidates are ordered by front rank, then descending crowding distance,
    then position. Returns fewer than ``count`` when the population cannot
    supply enough unseen genotypes.
    """
    if not population:
        return []
    F = np.array([ind.objectives for ind in population])
    ranks, crowd = rank_and_crowd(F)
    order = np.lexsort((np.arange(len(F)), -crowd, ranks))
    chosen: list[Genotype] = []
    picked: set[Genotype] = set()
    for i in order:
        g = population[i].genotype
        if g in seen or g in picked:
            continue
        picked.add(g)
        chosen.append(g)
        if len(chosen) == count:
            break
    return chosen


def _fit_models(
    store: EvaluationStore, kinds: Sequence[str], seed: int
) -> tuple:
    X = featurize_batch(store.space, [m.genotype for m in store])
    Y = store.values_matrix()
    models = []
    for j, kind in enumerate(kinds):
        model = make_predictor(kind, seed=seed)
        model.fit(X, Y[:, j])
        models.append(model)
    return tuple(models)


def run_linas(
    space: SearchSpace,
    evaluator,
    objectives: Sequence[ObjectiveSpec],
    config: LinasConfig,
    store: EvaluationStore | None = None,
) -> LinasOutcome:
    """Iterative predictor-guided search.

    Iteration 1 draws the population uniformly at random (the same stream a
    plain random search with this seed would use); every later iteration
    measures the candidates promoted by the previous inner search, topping
    up with uniform samples when promotion falls short or a candidate is
    rejected. Inner searches run on a throwaway store, so the real store
    grows by exactly ``population_size`` per iteration.

    Raises:
        SpaceExhaustedError: if the space cannot supply the total budget of
            distinct configurations.
    """
    if store is None:
        store = EvaluationStore(space, objectives)
    kinds = config.kinds_for(objectives)
    total = config.population_size * config.iterations
    if space.cardinality() < total:
        raise SpaceExhaustedError(
            f"space {space.name!r} holds {space.cardinality()} configs, "
            f"budget is {total}"
        )
    rng = search_rng(config.seed)

    iteration_models: list[tuple] = []
    inner_outcome: SearchOutcome | None = None
    promoted: list[Genotype] = []
    for it in range(1, config.iterations + 1):
        fresh = 0
        for g in promoted:
            try:
                values = evaluator.evaluate(g)
            except ConfigurationRejectedError:
                continue
            _, inserted = store.insert(
                g, values, source=LINAS_SOURCE, iteration=it
            )
            fresh += inserted
        if fresh < config.population_size:
            sample_fresh_into_store(
                space,
                evaluator,
                store,
                rng,
                config.population_size - fresh,
                source=LINAS_SOURCE,
                iteration=it,
            )

        models = _fit_models(store, kinds, seed=config.seed)
        iteration_models.append(models)
        surrogate = PredictorEvaluator(space, models)
        inner_cfg = EaConfig(
            population_size=config.population_size,
            max_evaluations=config.inner_evaluations,
            crossover_prob=config.crossover_prob,
            mutation_prob=config.mutation_prob,
            seed=int(rng.integers(0, 2**63)),
            max_generations=config.inner_evaluations // config.population_size,
            source=INNER_SOURCE,
        )
        inner_outcome = run_nsga2(space, surrogate, objectives, inner_cfg)
        promoted = select_best_unique(
            inner_outcome.population, config.population_size, store
        )

    F = store.values_matrix()
    front_idx = pareto_front(F, objectives)
    records = list(store)
    front = tuple(
        Individual.from_measurement(records[i], objectives) for i in front_idx
    )
    return LinasOutcome(
        store=store,
        front=front,
        iteration_models=tuple(iteration_models),
        inner_outcome=inner_outcome,
    )
