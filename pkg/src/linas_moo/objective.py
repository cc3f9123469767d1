"""Objective declarations, evaluators, and the deduplicating evaluation store.

Evaluators return raw objective vectors in each objective's natural
direction; search code converts to minimization form via the declared
directions. The store is the single source of truth for what a run really
measured: canonical genotypes only, duplicates rejected, evaluation indices
gapless and 1-based.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .space import Genotype, SearchSpace, format_genotype, parse_genotype

MINIMIZE = "minimize"
MAXIMIZE = "maximize"


class StoreContractError(ValueError):
    """Raised on non-canonical inserts, arity mismatches, or non-finite values."""


class UnknownConfigurationError(KeyError):
    """Raised by a tabular evaluator on a missing row under the error policy."""


class ConfigurationRejectedError(RuntimeError):
    """Signals a config a tabular evaluator cannot score; searches skip it."""


class DegenerateScaleError(ValueError):
    """Raised when a normalization denominator is zero."""


@dataclass(frozen=True)
class ObjectiveSpec:
    """Name and optimization direction of one objective."""

    name: str
    direction: str

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("objective name must be non-empty")
        if self.direction not in (MINIMIZE, MAXIMIZE):
            raise ValueError(
                f"objective {self.name!r}: direction must be "
                f"{MINIMIZE!r} or {MAXIMIZE!r}, got {self.direction!r}"
            )

    @property
    def sign(self) -> float:
        """+1 for minimize, -1 for maximize: ``raw * sign`` is minimized."""
        return -1.0 if self.direction == MAXIMIZE else 1.0


def oriented_values(values, objectives: Sequence[ObjectiveSpec]) -> np.ndarray:
    """Convert raw objective rows to minimization convention.

    Maximized columns are negated; minimizing the result is equivalent to
    optimizing every objective in its natural direction.
    """
    arr = np.asarray(values, dtype=np.float64)
    signs = np.array([o.sign for o in objectives])
    return arr * signs


@dataclass(frozen=True)
class Measurement:
    """One stored evaluation.

    Attributes:
        eval_index: 1-based, gapless position in measurement order.
        genotype: Canonical genotype that was measured.
        values: Raw objective vector, natural directions.
        source: Tag of the algorithm that requested the measurement.
        iteration: Outer-loop iteration for iterative searches, else 0.
    """

    eval_index: int
    genotype: Genotype
    values: tuple[float, ...]
    source: str
    iteration: int

    def to_json_obj(self) -> dict:
        return {
            "eval_index": self.eval_index,
            "genotype": format_genotype(self.genotype),
            "values": list(self.values),
            "source": self.source,
            "iteration": self.iteration,
        }

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "Measurement":
        return cls(
            eval_index=int(obj["eval_index"]),
            genotype=parse_genotype(obj["genotype"]),
            values=tuple(float(v) for v in obj["values"]),
            source=str(obj["source"]),
            iteration=int(obj["iteration"]),
        )


class EvaluationStore:
    """Append-only, deduplicating log of real objective measurements.

    Keys are canonical genotypes. Re-inserting a known genotype is reported,
    not stored, so search budgets count distinct configurations.
    """

    def __init__(self, space: SearchSpace, objectives: Sequence[ObjectiveSpec]):
        if len(objectives) == 0:
            raise ValueError("store needs at least one objective")
        self.space = space
        self.objectives = tuple(objectives)
        self._records: list[Measurement] = []
        self._position: dict[Genotype, int] = {}

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self) -> Iterator[Measurement]:
        return iter(self._records)

    @property
    def records(self) -> tuple[Measurement, ...]:
        return tuple(self._records)

    def __contains__(self, genotype: Genotype) -> bool:
        return tuple(genotype) in self._position

    def get(self, genotype: Genotype) -> Measurement | None:
        pos = self._position.get(tuple(genotype))
        return None if pos is None else self._records[pos]

    def insert(
        self, genotype: Genotype, values: Sequence[float], *, source: str, iteration: int = 0
    ) -> tuple[Measurement, bool]:
        """Record one measurement.

        Returns:
            ``(measurement, True)`` if inserted, or ``(existing, False)`` if
            the canonical genotype was already present.

        Raises:
            StoreContractError: non-canonical genotype, wrong objective
                arity, or non-finite values.
        """
        g = tuple(int(i) for i in genotype)
        self.space.validate(g)
        if not self.space.is_canonical(g):
            raise StoreContractError(f"genotype {format_genotype(g)} is not canonical")
        pos = self._position.get(g)
        if pos is not None:
            return self._records[pos], False
        vals = tuple(float(v) for v in values)
        if len(vals) != len(self.objectives):
            raise StoreContractError(
                f"expected {len(self.objectives)} objective values, got {len(vals)}"
            )
        if not all(math.isfinite(v) for v in vals):
            raise StoreContractError(f"non-finite objective values: {vals}")
        m = Measurement(
            eval_index=len(self._records) + 1,
            genotype=g,
            values=vals,
            source=source,
            iteration=iteration,
        )
        self._position[g] = len(self._records)
        self._records.append(m)
        return m, True

    def values_matrix(self) -> np.ndarray:
        """Raw values as an ``(N, m)`` array in insertion order."""
        if not self._records:
            return np.empty((0, len(self.objectives)))
        return np.array([m.values for m in self._records], dtype=np.float64)

    def genotype_matrix(self) -> np.ndarray:
        return np.array([m.genotype for m in self._records], dtype=np.int64)

    def to_jsonl(self, path: str | Path) -> None:
        """One sorted-keys JSON object per line, insertion order; byte-deterministic."""
        with open(path, "w", encoding="utf-8") as fh:
            for m in self._records:
                fh.write(json.dumps(m.to_json_obj(), sort_keys=True) + "\n")

    def to_csv(self, path: str | Path) -> None:
        """CSV mirror of the JSONL export with one column per objective."""
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["eval_index", "genotype"]
                + [o.name for o in self.objectives]
                + ["source", "iteration"]
            )
            for m in self._records:
                writer.writerow(
                    [m.eval_index, format_genotype(m.genotype)]
                    + [repr(v) for v in m.values]
                    + [m.source, m.iteration]
                )


def read_measurements_jsonl(path: str | Path) -> list[Measurement]:
    """Load measurements exported by :meth:`EvaluationStore.to_jsonl`."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(Measurement.from_json_obj(json.loads(line)))
    return out


def normalize_latency(values, l_min: float | None = None, l_max: float | None = None) -> np.ndarray:
    """Scale latencies to ``(l - l_min) / l_max``.

    Bounds default to the min and max of ``values``.

    Raises:
        DegenerateScaleError: if ``l_max`` is 0.
        ValueError: on empty input without explicit bounds.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0 and (l_min is None or l_max is None):
        raise ValueError("cannot infer latency bounds from empty input")
    lo = float(np.min(arr)) if l_min is None else float(l_min)
    hi = float(np.max(arr)) if l_max is None else float(l_max)
    if hi == 0.0:
        raise DegenerateScaleError("latency scale l_max is 0")
    return (arr - lo) / hi


def _logistic(q: np.ndarray) -> np.ndarray:
    # Split by sign to stay overflow-free for large |q|.
    out = np.empty_like(q)
    pos = q >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-q[pos]))
    eq = np.exp(q[~pos])
    out[~pos] = eq / (1.0 + eq)
    return out


_NOISE_TAG = b"synthetic-accuracy-noise"


@dataclass(frozen=True, eq=False)
class SyntheticLandscape:
    """Deterministic two-objective surrogate over a search space.

    A quality score, linear in unit coordinates plus a sparse pairwise term,
    is squashed through a logistic into the accuracy range. Latency is a
    non-negative weighted average of the same coordinates scaled into the
    latency range. The coupling ``rho`` ties quality weights to cost weights:
    +1 makes every costly choice helpful (maximal conflict between the
    objectives), 0 decouples them, -1 opposes them.

    Coefficients are fully determined by ``(space, seed, rho)``; accuracy
    noise is drawn per canonical genotype from ``(seed, genotype)`` so
    repeated evaluations agree bit for bit.
    """

    space: SearchSpace
    seed: int
    rho: float
    noise_sd: float
    quality_weights: np.ndarray
    cost_weights: np.ndarray
    pair_indices: tuple[tuple[int, int], ...]
    pair_weights: np.ndarray
    bias: float
    accuracy_range: tuple[float, float] = (70.0, 80.0)
    latency_range: tuple[float, float] = (5.0, 60.0)

    PAIR_WEIGHT_SD = 0.1

    def __post_init__(self) -> None:
        n = self.space.n_variables
        if not -1.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must lie in [-1, 1], got {self.rho}")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be non-negative")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.quality_weights.shape != (n,) or self.cost_weights.shape != (n,):
            raise ValueError("weight vectors must have one entry per variable")
        if np.any(self.cost_weights < 0):
            raise ValueError("cost weights must be non-negative")
        if len(self.pair_indices) != len(self.pair_weights):
            raise ValueError("pair index and weight counts differ")
        for i, j in self.pair_indices:
            if not (0 <= i < j < n):
                raise ValueError(f"bad pair ({i}, {j})")
        for lo, hi in (self.accuracy_range, self.latency_range):
            if not lo < hi:
                raise ValueError(f"range ({lo}, {hi}) is not increasing")

    @classmethod
    def from_seed(
        cls,
        space: SearchSpace,
        seed: int = 0,
        rho: float = 0.8,
        noise_sd: float = 0.0,
        accuracy_range: tuple[float, float] = (70.0, 80.0),
        latency_range: tuple[float, float] = (5.0, 60.0),
    ) -> "SyntheticLandscape":
        """Derive all coefficients from the seed.

        Cost weights are folded normals; quality weights couple to them with
        strength ``rho`` plus an independent normal component, then shrink by
        ``1 / sqrt(n)`` so the quality score's spread is roughly space-size
        independent and the logistic is exercised without saturating. The
        pairwise term touches ``ceil(n/2)`` distinct variable pairs with
        weights an order of magnitude below the linear ones, a perturbation
        rather than the signal.
        """
        if seed < 0:
            raise ValueError("seed must be non-negative")
        n = space.n_variables
        rng = np.random.default_rng(np.random.SeedSequence([0x5C0FE, seed]))
        c_raw = rng.standard_normal(n)
        z = rng.standard_normal(n)
        cost = np.abs(c_raw)
        scale = 1.0 / math.sqrt(n)
        quality = (rho * cost + math.sqrt(1.0 - rho * rho) * z) * scale
        iu, ju = np.triu_indices(n, k=1)
        n_pairs = min(math.ceil(n / 2), iu.size)
        if n_pairs:
            chosen = rng.choice(iu.size, size=n_pairs, replace=False)
            chosen.sort()
            pair_indices = tuple((int(iu[k]), int(ju[k])) for k in chosen)
            pair_weights = rng.normal(0.0, cls.PAIR_WEIGHT_SD * scale, n_pairs)
        else:
            pair_indices = ()
            pair_weights = np.empty(0)
        # Center the quality score at the mid-utility configuration
        # (E[u] = 1/2, E[uu] = 1/4) so the logistic is exercised on both
        # shoulders instead of saturating when coupled weights share a sign.
        bias = float(
            rng.normal(0.0, 1.0)
            - 0.5 * float(np.sum(quality))
            - 0.25 * float(np.sum(pair_weights))
        )
        return cls(
            space=space,
            seed=seed,
            rho=rho,
            noise_sd=noise_sd,
            quality_weights=quality,
            cost_weights=cost,
            pair_indices=pair_indices,
            pair_weights=pair_weights,
            bias=bias,
            accuracy_range=accuracy_range,
            latency_range=latency_range,
        )

    def objectives(self) -> tuple[ObjectiveSpec, ObjectiveSpec]:
        return (ObjectiveSpec("accuracy", MAXIMIZE), ObjectiveSpec("latency", MINIMIZE))

    @cached_property
    def _pair_cols(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.pair_indices:
            return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
        arr = np.asarray(self.pair_indices, dtype=np.int64)
        return arr[:, 0], arr[:, 1]

    def quality_score(self, genotype: Genotype) -> float:
        """Pre-squash quality: bias + linear + pairwise terms."""
        return float(self._quality_batch(self.space.unit_coordinates_batch([genotype]))[0])

    def _quality_batch(self, U: np.ndarray) -> np.ndarray:
        q = U @ self.quality_weights + self.bias
        pi, pj = self._pair_cols
        if pi.size:
            q = q + (U[:, pi] * U[:, pj]) @ self.pair_weights
        return q

    def _noise(self, genotype: Genotype) -> float:
        h = hashlib.blake2b(digest_size=16)
        h.update(_NOISE_TAG)
        h.update(self.seed.to_bytes(8, "little", signed=False))
        h.update(np.asarray(genotype, dtype="<i8").tobytes())
        rng = np.random.default_rng(int.from_bytes(h.digest(), "little"))
        return float(rng.normal(0.0, self.noise_sd))

    def accuracy(self, genotype: Genotype) -> float:
        value = float(self._accuracy_batch(self.space.unit_coordinates_batch([genotype]))[0])
        if self.noise_sd > 0:
            value += self._noise(self.space.canonicalize(genotype))
        return value

    def _accuracy_batch(self, U: np.ndarray) -> np.ndarray:
        lo, hi = self.accuracy_range
        return lo + (hi - lo) * _logistic(self._quality_batch(U))

    def latency(self, genotype: Genotype) -> float:
        return float(self._latency_batch(self.space.unit_coordinates_batch([genotype]))[0])

    def _latency_batch(self, U: np.ndarray) -> np.ndarray:
        lo, hi = self.latency_range
        total = float(np.sum(self.cost_weights))
        frac = (U @ self.cost_weights) / total if total > 0 else np.zeros(len(U))
        return lo + (hi - lo) * np.clip(frac, 0.0, 1.0)

    def evaluate(self, genotype: Genotype) -> tuple[float, ...]:
        """Raw ``(accuracy, latency)`` for one genotype."""
        return (self.accuracy(genotype), self.latency(genotype))

    def evaluate_batch(self, genotypes) -> np.ndarray:
        """Raw values for many genotypes as a ``(B, 2)`` array."""
        U = self.space.unit_coordinates_batch(genotypes)
        acc = self._accuracy_batch(U)
        if self.noise_sd > 0:
            canon = self.space.canonicalize_batch(np.asarray(genotypes, dtype=np.int64))
            acc = acc + np.array([self._noise(tuple(g)) for g in canon])
        return np.column_stack([acc, self._latency_batch(U)])


class TabularEvaluator:
    """Looks up objective vectors for canonical genotypes in a fixed table.

    Misses either raise (policy ``error``) or mark the config as rejected
    (policy ``nearest-reject``) so searches skip it; values are never
    substituted from neighbouring rows.
    """

    POLICIES = ("error", "nearest-reject")

    def __init__(
        self,
        space: SearchSpace,
        table: Mapping[Genotype, Sequence[float]],
        n_objectives: int,
        missing_policy: str = "error",
    ):
        if missing_policy not in self.POLICIES:
            raise ValueError(f"missing_policy must be one of {self.POLICIES}")
        if n_objectives < 1:
            raise ValueError("need at least one objective column")
        self.space = space
        self.missing_policy = missing_policy
        self.n_objectives = n_objectives
        self._table: dict[Genotype, tuple[float, ...]] = {}
        for raw_g, raw_v in table.items():
            g = space.canonicalize(tuple(int(i) for i in raw_g))
            vals = tuple(float(v) for v in raw_v)
            if len(vals) != n_objectives:
                raise ValueError(
                    f"row {format_genotype(g)}: expected {n_objectives} values, got {len(vals)}"
                )
            if not all(math.isfinite(v) for v in vals):
                raise ValueError(f"row {format_genotype(g)}: non-finite values {vals}")
            if g in self._table and self._table[g] != vals:
                raise ValueError(
                    f"rows collide on canonical genotype {format_genotype(g)} with different values"
                )
            self._table[g] = vals

    def __len__(self) -> int:
        return len(self._table)

    @classmethod
    def from_csv(
        cls, path: str | Path, space: SearchSpace, missing_policy: str = "error"
    ) -> "TabularEvaluator":
        """Load ``genotype,obj_1,...,obj_m`` rows; genotypes are dash-separated indices."""
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if not header or header[0] != "genotype" or len(header) < 2:
                raise ValueError(f"{path}: header must be genotype,obj_1,...,obj_m")
            m = len(header) - 1
            table: dict[Genotype, tuple[float, ...]] = {}
            for ln, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != m + 1:
                    raise ValueError(f"{path}:{ln}: expected {m + 1} cells, got {len(row)}")
                try:
                    g = parse_genotype(row[0])
                    vals = tuple(float(v) for v in row[1:])
                except ValueError as exc:
                    raise ValueError(f"{path}:{ln}: {exc}") from exc
                space.validate(g)
                if space.canonicalize(g) in table:
                    raise ValueError(
                        f"{path}:{ln}: duplicate canonical genotype {row[0]}"
                    )
                table[g] = vals
        return cls(space, table, m, missing_policy)

    def evaluate(self, genotype: Genotype) -> tuple[float, ...]:
        g = self.space.canonicalize(tuple(int(i) for i in genotype))
        hit = self._table.get(g)
        if hit is not None:
            return hit
        if self.missing_policy == "error":
            raise UnknownConfigurationError(
                f"no table row for genotype {format_genotype(g)}"
            )
        raise ConfigurationRejectedError(format_genotype(g))

    def evaluate_batch(self, genotypes) -> np.ndarray:
        return np.array([self.evaluate(g) for g in genotypes], dtype=np.float64)

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["genotype"] + [f"obj_{k + 1}" for k in range(self.n_objectives)])
            for g in sorted(self._table):
                writer.writerow([format_genotype(g)] + [repr(v) for v in self._table[g]])
