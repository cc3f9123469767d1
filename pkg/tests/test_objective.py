"""Evaluator and store behaviour, including the synthetic landscape geometry."""

from __future__ import annotations

import json

import numpy as np
import pytest

from conftest import make_free_space, make_masked_space
from linas_moo.objective import (
    MAXIMIZE,
    MINIMIZE,
    ConfigurationRejectedError,
    DegenerateScaleError,
    EvaluationStore,
    Measurement,
    ObjectiveSpec,
    StoreContractError,
    SyntheticLandscape,
    TabularEvaluator,
    UnknownConfigurationError,
    normalize_latency,
    oriented_values,
    read_measurements_jsonl,
)
from linas_moo.space import DesignVariable, SearchSpace


def two_objectives():
    return (ObjectiveSpec("accuracy", MAXIMIZE), ObjectiveSpec("latency", MINIMIZE))


class TestObjectiveSpec:
    def test_direction_validated(self):
        with pytest.raises(ValueError):
            ObjectiveSpec("x", "up")

    def test_orientation_negates_maximized_columns(self):
        arr = oriented_values([[1.0, 2.0], [3.0, 4.0]], two_objectives())
        assert np.array_equal(arr, [[-1.0, 2.0], [-3.0, 4.0]])


class TestEvaluationStore:
    def make_store(self):
        return EvaluationStore(make_masked_space(), two_objectives())

    def test_eval_indices_gapless_and_one_based(self):
        store = self.make_store()
        space = store.space
        rng = np.random.default_rng(3)
        while len(store) < 15:
            store.insert(space.sample_uniform(rng), (1.0, 2.0), source="t")
        assert [m.eval_index for m in store] == list(range(1, 16))

    def test_duplicate_reported_not_stored(self):
        store = self.make_store()
        first, inserted = store.insert((0, 1, 0, 0), (1.0, 2.0), source="t")
        assert inserted
        again, inserted2 = store.insert((0, 1, 0, 0), (9.0, 9.0), source="t")
        assert not inserted2
        assert again is first
        assert len(store) == 1

    def test_non_canonical_insert_rejected(self):
        store = self.make_store()
        # depth index 0 leaves slot 2 inactive, so index 1 there is not canonical.
        with pytest.raises(StoreContractError):
            store.insert((0, 1, 1, 0), (1.0, 2.0), source="t")

    def test_arity_and_finiteness_enforced(self):
        store = self.make_store()
        with pytest.raises(StoreContractError):
            store.insert((0, 1, 0, 0), (1.0,), source="t")
        with pytest.raises(StoreContractError):
            store.insert((0, 1, 0, 0), (float("nan"), 2.0), source="t")

    def test_jsonl_roundtrip_and_determinism(self, tmp_path):
        store = self.make_store()
        rng = np.random.default_rng(7)
        while len(store) < 10:
            g = store.space.sample_uniform(rng)
            store.insert(g, (float(rng.normal()), float(rng.normal())), source="t", iteration=2)
        p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        store.to_jsonl(p1)
        store.to_jsonl(p2)
        assert p1.read_bytes() == p2.read_bytes()
        back = read_measurements_jsonl(p1)
        assert back == list(store.records)

    def test_jsonl_line_schema(self, tmp_path):
        store = self.make_store()
        store.insert((1, 2, 1, 0), (75.5, 12.25), source="alg", iteration=3)
        path = tmp_path / "m.jsonl"
        store.to_jsonl(path)
        obj = json.loads(path.read_text().splitlines()[0])
        assert obj == {
            "eval_index": 1,
            "genotype": "1-2-1-0",
            "iteration": 3,
            "source": "alg",
            "values": [75.5, 12.25],
        }

    def test_csv_mirror(self, tmp_path):
        store = self.make_store()
        store.insert((1, 2, 1, 0), (75.5, 12.25), source="alg", iteration=3)
        path = tmp_path / "m.csv"
        store.to_csv(path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "eval_index,genotype,accuracy,latency,source,iteration"
        assert lines[1] == "1,1-2-1-0,75.5,12.25,alg,3"


class TestNormalizeLatency:
    def test_hand_values(self):
        # min 10, max 40: (l - 10) / 40.
        out = normalize_latency([10.0, 20.0, 40.0])
        assert np.allclose(out, [0.0, 0.25, 0.75])

    def test_explicit_bounds(self):
        out = normalize_latency([5.0], l_min=0.0, l_max=10.0)
        assert np.allclose(out, [0.5])

    def test_zero_scale_raises(self):
        with pytest.raises(DegenerateScaleError):
            normalize_latency([0.0, 0.0])

    def test_empty_without_bounds_raises(self):
        with pytest.raises(ValueError):
            normalize_latency([])


def constant_landscape(space, **overrides):
    """All-zero coefficients: accuracy flat at the range midpoint."""
    n = space.n_variables
    kwargs = dict(
        space=space,
        seed=0,
        rho=0.0,
        noise_sd=0.0,
        quality_weights=np.zeros(n),
        cost_weights=np.zeros(n),
        pair_indices=(),
        pair_weights=np.empty(0),
        bias=0.0,
    )
    kwargs.update(overrides)
    return SyntheticLandscape(**kwargs)


class TestSyntheticLandscape:
    def test_coefficients_reproducible(self):
        space = make_free_space()
        a = SyntheticLandscape.from_seed(space, seed=17, rho=0.5)
        b = SyntheticLandscape.from_seed(space, seed=17, rho=0.5)
        assert np.array_equal(a.quality_weights, b.quality_weights)
        assert np.array_equal(a.cost_weights, b.cost_weights)
        assert a.pair_indices == b.pair_indices
        assert np.array_equal(a.pair_weights, b.pair_weights)
        assert a.bias == b.bias
        g = (1, 2, 0)
        assert a.evaluate(g) == b.evaluate(g)

    def test_different_seeds_differ(self):
        space = make_free_space()
        a = SyntheticLandscape.from_seed(space, seed=1)
        b = SyntheticLandscape.from_seed(space, seed=2)
        assert not np.array_equal(a.quality_weights, b.quality_weights)

    def test_all_zero_coefficients_hit_midpoint(self):
        space = make_free_space()
        land = constant_landscape(space)
        for g in [(0, 0, 0), (3, 2, 1), (1, 0, 1)]:
            acc, lat = land.evaluate(g)
            assert acc == pytest.approx(75.0)
            assert lat == pytest.approx(5.0)

    def test_latency_endpoints(self):
        space = make_free_space()
        land = constant_landscape(space, cost_weights=np.array([1.0, 2.0, 0.5]))
        assert land.latency((0, 0, 0)) == pytest.approx(5.0)
        assert land.latency((3, 2, 1)) == pytest.approx(60.0)

    def test_latency_monotone_in_costly_variable(self):
        space = make_free_space()
        land = constant_landscape(space, cost_weights=np.array([1.0, 0.0, 0.0]))
        lats = [land.latency((i, 0, 0)) for i in range(4)]
        assert lats == sorted(lats)
        assert lats[0] < lats[-1]

    def test_accuracy_monotone_when_single_positive_weight(self):
        space = SearchSpace("one", (DesignVariable("x", (0, 1, 2, 3, 4)),))
        land = constant_landscape(space, quality_weights=np.array([2.0]))
        accs = [land.accuracy((i,)) for i in range(5)]
        assert accs == sorted(accs)
        assert accs[0] < accs[-1]

    def test_masked_positions_do_not_matter(self):
        space = make_masked_space()
        land = SyntheticLandscape.from_seed(space, seed=5, rho=0.3)
        # depth index 0 masks slot 2: any raw index there evaluates identically.
        vals = {land.evaluate((0, 2, j, 1)) for j in range(3)}
        assert len(vals) == 1

    def test_full_coupling_aligns_quality_and_cost(self):
        space = make_free_space()
        land = SyntheticLandscape.from_seed(space, seed=3, rho=1.0)
        # rho = 1 leaves no independent component: quality is a positive
        # multiple of cost, so the objectives conflict at every variable.
        scale = 1.0 / np.sqrt(space.n_variables)
        assert np.allclose(land.quality_weights, scale * land.cost_weights)

    def test_positive_coupling_gives_positive_correlation(self):
        # rho = +1: quality score and latency rise together over 10k samples.
        space = make_free_space()
        land = SyntheticLandscape.from_seed(space, seed=11, rho=1.0)
        rng = np.random.default_rng(0)
        gs = [space.sample_uniform(rng) for _ in range(10_000)]
        q = np.array([land.quality_score(g) for g in gs])
        lat = np.array([land.latency(g) for g in gs])
        r = np.corrcoef(q, lat)[0, 1]
        assert r > 0.5

    def test_noise_frozen_per_genotype(self):
        space = make_free_space()
        land = SyntheticLandscape.from_seed(space, seed=2, rho=0.0, noise_sd=0.5)
        g = (2, 1, 0)
        assert land.accuracy(g) == land.accuracy(g)
        clean = SyntheticLandscape.from_seed(space, seed=2, rho=0.0, noise_sd=0.0)
        assert land.accuracy(g) != clean.accuracy(g)
        # Latency stays deterministic and noise-free.
        assert land.latency(g) == clean.latency(g)

    def test_noise_scale_roughly_sigma(self):
        space = make_free_space()
        sigma = 0.3
        noisy = SyntheticLandscape.from_seed(space, seed=9, rho=0.0, noise_sd=sigma)
        clean = SyntheticLandscape.from_seed(space, seed=9, rho=0.0, noise_sd=0.0)
        rng = np.random.default_rng(1)
        gs = {space.sample_uniform(rng) for _ in range(500)}
        deltas = np.array([noisy.accuracy(g) - clean.accuracy(g) for g in gs])
        assert abs(float(np.mean(deltas))) < 0.1
        assert 0.8 * sigma < float(np.std(deltas)) < 1.2 * sigma

    def test_batch_matches_scalar_path(self):
        space = make_masked_space()
        land = SyntheticLandscape.from_seed(space, seed=4, rho=0.7, noise_sd=0.2)
        rng = np.random.default_rng(8)
        gs = [space.sample_uniform(rng) for _ in range(64)]
        batch = land.evaluate_batch(gs)
        single = np.array([land.evaluate(g) for g in gs])
        assert np.allclose(batch, single, rtol=1e-12, atol=0.0)

    def test_pair_count_rule(self):
        space = make_free_space()  # 3 variables -> ceil(3/2) = 2 pairs
        land = SyntheticLandscape.from_seed(space, seed=0)
        assert len(land.pair_indices) == 2
        one = SearchSpace("single", (DesignVariable("x", (0, 1)),))
        assert SyntheticLandscape.from_seed(one, seed=0).pair_indices == ()

    def test_parameter_validation(self):
        space = make_free_space()
        with pytest.raises(ValueError):
            SyntheticLandscape.from_seed(space, seed=0, rho=1.5)
        with pytest.raises(ValueError):
            SyntheticLandscape.from_seed(space, seed=-1)
        with pytest.raises(ValueError):
            constant_landscape(space, noise_sd=-0.1)
        with pytest.raises(ValueError):
            constant_landscape(space, cost_weights=np.array([-1.0, 0.0, 0.0]))


class TestTabularEvaluator:
    def make_table(self, space):
        rows = {}
        for raw in [(0, 0, 0), (1, 0, 0), (2, 1, 1), (3, 2, 1)]:
            rows[raw] = (70.0 + raw[0], 5.0 + raw[1])
        return rows

    def test_lookup_and_canonical_keying(self):
        space = make_masked_space()
        # Raw keys canonicalize: (0, 1, 2, 0) and (0, 1, 0, 0) are the same config.
        ev = TabularEvaluator(space, {(0, 1, 2, 0): (1.0, 2.0)}, 2)
        assert ev.evaluate((0, 1, 0, 0)) == (1.0, 2.0)
        assert ev.evaluate((0, 1, 1, 0)) == (1.0, 2.0)

    def test_conflicting_duplicate_rows_raise(self):
        space = make_masked_space()
        with pytest.raises(ValueError):
            TabularEvaluator(
                space, {(0, 1, 2, 0): (1.0, 2.0), (0, 1, 1, 0): (3.0, 4.0)}, 2
            )

    def test_error_policy_raises_on_miss(self):
        space = make_free_space()
        ev = TabularEvaluator(space, self.make_table(space), 2, missing_policy="error")
        with pytest.raises(UnknownConfigurationError):
            ev.evaluate((0, 2, 1))

    def test_reject_policy_signals_skip(self):
        space = make_free_space()
        ev = TabularEvaluator(
            space, self.make_table(space), 2, missing_policy="nearest-reject"
        )
        with pytest.raises(ConfigurationRejectedError):
            ev.evaluate((0, 2, 1))

    def test_csv_roundtrip(self, tmp_path):
        space = make_free_space()
        ev = TabularEvaluator(space, self.make_table(space), 2)
        path = tmp_path / "table.csv"
        ev.write_csv(path)
        header = path.read_text().splitlines()[0]
        assert header == "genotype,obj_1,obj_2"
        back = TabularEvaluator.from_csv(path, space)
        assert back._table == ev._table

    def test_malformed_csv_reports_line(self, tmp_path):
        space = make_free_space()
        path = tmp_path / "bad.csv"
        path.write_text("genotype,obj_1,obj_2\n0-0-0,1.0,oops\n")
        with pytest.raises(ValueError, match="bad.csv:2"):
            TabularEvaluator.from_csv(path, space)

    def test_duplicate_csv_row_raises(self, tmp_path):
        space = make_free_space()
        path = tmp_path / "dup.csv"
        path.write_text("genotype,obj_1,obj_2\n0-0-0,1.0,2.0\n0-0-0,1.0,2.0\n")
        with pytest.raises(ValueError, match="duplicate"):
            TabularEvaluator.from_csv(path, space)

    def test_bad_policy_rejected(self):
        space = make_free_space()
        with pytest.raises(ValueError):
            TabularEvaluator(space, {}, 2, missing_policy="nearest")
