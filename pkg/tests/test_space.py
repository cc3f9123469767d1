"""Search-space invariants, checked against exhaustive and closed-form oracles."""

from __future__ import annotations

import itertools

import numpy as np
import pytest
from scipy import stats

from conftest import enumerate_canonicals, make_free_space, make_masked_space
from linas_moo.space import (
    BUILTIN_SPACES,
    DependencyRule,
    DesignVariable,
    MalformedGenotypeError,
    SearchSpace,
    SpaceValidationError,
    builtin_space,
    format_genotype,
    parse_genotype,
)

# Closed forms computed by hand, independent of SearchSpace.cardinality:
# mobilenetv3: per block, sum over depth d in {2,3,4} of (3 kernels * 3 expands)^d,
# five independent blocks.
MOBILENETV3_BLOCK = 9**2 + 9**3 + 9**4
MOBILENETV3_CARDINALITY = MOBILENETV3_BLOCK**5
# ncf: two 5-option embeddings, MLP depth 1..6 over 8-option hidden slots.
NCF_CARDINALITY = 5 * 5 * sum(8**d for d in range(1, 7))
# transformer: fixed 6-layer encoder (2 embed * 3^6 hidden * 2^6 heads), decoder
# embed, decoder depth 1..6 over (3*2*2*3)-option layer bundles.
TRANSFORMER_CARDINALITY = (2 * 3**6 * 2**6) * 2 * sum(36**d for d in range(1, 7))
RESNET50_CARDINALITY = 3**36


class TestConstructionValidation:
    def test_empty_options_rejected(self):
        with pytest.raises(SpaceValidationError):
            DesignVariable("x", ())

    def test_duplicate_options_rejected(self):
        with pytest.raises(SpaceValidationError):
            DesignVariable("x", (3, 3))

    def test_duplicate_names_rejected(self):
        v = DesignVariable("x", (1, 2))
        with pytest.raises(SpaceValidationError):
            SearchSpace("s", (v, DesignVariable("x", (4, 5))))

    def test_rule_must_cover_every_option(self):
        vs = (DesignVariable("d", (1, 2, 3)), DesignVariable("s", (0, 1)))
        with pytest.raises(SpaceValidationError):
            SearchSpace("s", vs, (DependencyRule.from_mapping(0, {0: [1], 1: [1]}),))

    def test_self_dependency_rejected(self):
        vs = (DesignVariable("d", (1, 2)),)
        with pytest.raises(SpaceValidationError):
            SearchSpace("s", vs, (DependencyRule.from_mapping(0, {0: [], 1: [0]}),))

    def test_dependent_of_two_rules_rejected(self):
        vs = (
            DesignVariable("c1", (1, 2)),
            DesignVariable("c2", (1, 2)),
            DesignVariable("s", (0, 1)),
        )
        rules = (
            DependencyRule.from_mapping(0, {0: [], 1: [2]}),
            DependencyRule.from_mapping(1, {0: [], 1: [2]}),
        )
        with pytest.raises(SpaceValidationError):
            SearchSpace("s", vs, rules)

    def test_controller_cannot_be_dependent(self):
        vs = (
            DesignVariable("c1", (1, 2)),
            DesignVariable("c2", (1, 2)),
            DesignVariable("s", (0, 1)),
        )
        rules = (
            DependencyRule.from_mapping(0, {0: [], 1: [1]}),
            DependencyRule.from_mapping(1, {0: [], 1: [2]}),
        )
        with pytest.raises(SpaceValidationError):
            SearchSpace("s", vs, rules)

    def test_dependent_index_out_of_range(self):
        vs = (DesignVariable("d", (1, 2)), DesignVariable("s", (0, 1)))
        with pytest.raises(SpaceValidationError):
            SearchSpace("s", vs, (DependencyRule.from_mapping(0, {0: [], 1: [5]}),))


class TestGenotypeChecks:
    def test_wrong_length_rejected(self, free_space):
        with pytest.raises(MalformedGenotypeError):
            free_space.validate((0, 0))

    def test_out_of_range_index_rejected(self, free_space):
        with pytest.raises(MalformedGenotypeError):
            free_space.validate((0, 3, 0))

    def test_non_integer_rejected(self, free_space):
        with pytest.raises(MalformedGenotypeError):
            free_space.validate((0.5, 0, 0))

    def test_format_parse_roundtrip(self):
        assert format_genotype((0, 2, 1)) == "0-2-1"
        assert parse_genotype("0-2-1") == (0, 2, 1)
        with pytest.raises(MalformedGenotypeError):
            parse_genotype("0-x-1")


class TestCanonicalization:
    def test_inactive_positions_zeroed(self, masked_space):
        # depth index 0 (value 1) leaves slot 2 inactive.
        assert masked_space.canonicalize((0, 2, 1, 1)) == (0, 2, 0, 1)
        # depth index 1 (value 2) keeps both slots.
        assert masked_space.canonicalize((1, 2, 1, 1)) == (1, 2, 1, 1)

    def test_idempotent(self, masked_space):
        rng = np.random.default_rng(11)
        for _ in range(200):
            g = tuple(
                int(rng.integers(0, len(v.options))) for v in masked_space.variables
            )
            once = masked_space.canonicalize(g)
            assert masked_space.canonicalize(once) == once

    def test_masked_flip_is_invisible(self, masked_space):
        # Changing an inactive slot must not change the canonical form.
        base = masked_space.canonicalize((0, 1, 0, 0))
        for idx2 in range(3):
            assert masked_space.canonicalize((0, 1, idx2, 0)) == base

    def test_rule_free_space_is_untouched(self, free_space):
        for raw in itertools.product(range(4), range(3), range(2)):
            assert free_space.canonicalize(raw) == raw


class TestDecode:
    def test_values_not_indices(self, free_space):
        assert free_space.decode((2, 0, 1)) == {"a": 30, "b": 1, "c": 5}

    def test_inactive_variables_omitted(self, masked_space):
        assert masked_space.decode((0, 2, 1, 1)) == {"depth": 1, "s1": 9, "free": 1}
        assert masked_space.decode((1, 2, 1, 1)) == {
            "depth": 2,
            "s1": 9,
            "s2": 8,
            "free": 1,
        }

    def test_bijective_over_canonicals(self, masked_space):
        # Every canonical genotype decodes to a distinct configuration.
        canonicals = enumerate_canonicals(masked_space)
        decoded = {tuple(sorted(masked_space.decode(g).items())) for g in canonicals}
        assert len(decoded) == len(canonicals)


class TestCardinality:
    def test_matches_exhaustive_oracle_free(self, free_space):
        assert free_space.cardinality() == len(enumerate_canonicals(free_space)) == 24

    def test_matches_exhaustive_oracle_masked(self, masked_space):
        assert (
            masked_space.cardinality() == len(enumerate_canonicals(masked_space)) == 24
        )

    def test_matches_exhaustive_oracle_ncf_shrunk(self):
        # Same block structure as ncf, shrunk so exhaustive enumeration is cheap.
        space = SearchSpace(
            "ncf_shrunk",
            (
                DesignVariable("e1", (8, 16)),
                DesignVariable("e2", (8, 16)),
                DesignVariable("layers", (1, 2, 3)),
                DesignVariable("h1", (8, 16, 32)),
                DesignVariable("h2", (8, 16, 32)),
                DesignVariable("h3", (8, 16, 32)),
            ),
            (DependencyRule.from_mapping(2, {0: [3], 1: [3, 4], 2: [3, 4, 5]}),),
        )
        expected = 2 * 2 * (3 + 3**2 + 3**3)
        assert space.cardinality() == len(enumerate_canonicals(space)) == expected

    def test_single_option_variables_count_once(self):
        space = SearchSpace(
            "frozen", (DesignVariable("x", (6,)), DesignVariable("y", (1, 2)))
        )
        assert space.cardinality() == 2


class TestSampling:
    def test_samples_are_canonical_and_valid(self, masked_space):
        rng = np.random.default_rng(5)
        for _ in range(500):
            g = masked_space.sample_uniform(rng)
            masked_space.validate(g)
            assert masked_space.is_canonical(g)

    def test_rule_free_marginals_chi_square(self, free_space):
        # 20k draws; each marginal must look uniform (alpha = 1e-3).
        rng = np.random.default_rng(1234)
        draws = np.array([free_space.sample_uniform(rng) for _ in range(20_000)])
        for i, var in enumerate(free_space.variables):
            counts = np.bincount(draws[:, i], minlength=len(var.options))
            _, p = stats.chisquare(counts)
            assert p > 1e-3, f"variable {var.name} marginal not uniform (p={p})"

    def test_deterministic_given_seed(self, masked_space):
        a = [masked_space.sample_uniform(np.random.default_rng(9)) for _ in range(10)]
        b = [masked_space.sample_uniform(np.random.default_rng(9)) for _ in range(10)]
        # One generator drawn through ten samples, twice from the same seed.
        rng1, rng2 = np.random.default_rng(10), np.random.default_rng(10)
        c = [masked_space.sample_uniform(rng1) for _ in range(10)]
        d = [masked_space.sample_uniform(rng2) for _ in range(10)]
        assert a == b and c == d


class TestBuiltinSpaces:
    def test_variable_counts(self):
        assert builtin_space("mobilenetv3").n_variables == 45
        assert builtin_space("transformer").n_variables == 40
        assert builtin_space("resnet50").n_variables == 36
        assert builtin_space("ncf").n_variables == 9

    def test_cardinalities_against_closed_forms(self):
        assert builtin_space("mobilenetv3").cardinality() == MOBILENETV3_CARDINALITY
        assert builtin_space("ncf").cardinality() == NCF_CARDINALITY == 7_489_800
        assert builtin_space("transformer").cardinality() == TRANSFORMER_CARDINALITY
        assert builtin_space("resnet50").cardinality() == RESNET50_CARDINALITY

    def test_orders_of_magnitude(self):
        assert builtin_space("mobilenetv3").cardinality_magnitude() == 19
        assert builtin_space("ncf").cardinality_magnitude() == 7
        assert builtin_space("transformer").cardinality_magnitude() == 15
        assert builtin_space("resnet50").cardinality_magnitude() == 17

    def test_unknown_name_raises(self):
        with pytest.raises(KeyError):
            builtin_space("vgg")

    def test_all_builtins_self_consistent(self):
        # Sampled genotypes decode, canonicalize idempotently, and validate.
        for name in BUILTIN_SPACES:
            space = builtin_space(name)
            rng = np.random.default_rng(42)
            for _ in range(50):
                g = space.sample_uniform(rng)
                assert space.canonicalize(g) == g
                decoded = space.decode(g)
                assert set(decoded) <= {v.name for v in space.variables}


class TestJsonRoundTrip:
    def test_roundtrip_equality(self, masked_space):
        again = SearchSpace.from_json(masked_space.to_json())
        assert again == masked_space

    def test_export_is_byte_deterministic(self):
        a = make_masked_space().to_json()
        b = make_masked_space().to_json()
        assert a == b
        assert SearchSpace.from_json(a).to_json() == a

    def test_builtin_roundtrip(self):
        for name in BUILTIN_SPACES:
            space = builtin_space(name)
            assert SearchSpace.from_json(space.to_json()) == space

    def test_malformed_definition_raises(self):
        with pytest.raises(SpaceValidationError):
            SearchSpace.from_json('{"name": "x"}')


def test_free_and_masked_fixture_builders_agree():
    assert make_free_space() == make_free_space()
    assert make_masked_space() == make_masked_space()
