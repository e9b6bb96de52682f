import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import binomtest

from qkdsim.entropy_core import (
    Distribution,
    FlatSource,
    SourceSpec,
    decode_subset,
    encode_subset,
    is_nb_source,
    loss_rate,
    make_flat,
    min_entropy,
    restricted_subset_source,
    sample,
    subset_code_width,
    subset_rank,
    subset_unrank,
)
from qkdsim.errors import InfeasibleAttackError, InvalidInputError

# significance for sampling-uniformity checks; low so CI practically never
# false-alarms
ALPHA_SIG = 1e-6


class TestDistribution:
    def test_uniform_two_bits(self):
        d = Distribution(2, {s: 0.25 for s in ("00", "01", "10", "11")})
        assert min_entropy(d) == pytest.approx(2.0, abs=1e-12)

    def test_single_bit_fair_coin(self):
        d = Distribution(1, {"0": 0.5, "1": 0.5})
        assert min_entropy(d) == pytest.approx(1.0, abs=1e-12)

    def test_three_point_distribution(self):
        # hand evaluation: the most probable string has p=0.5 -> 1 bit
        d = Distribution(2, {"00": 0.5, "01": 0.25, "10": 0.25})
        assert min_entropy(d) == pytest.approx(1.0, abs=1e-12)

    def test_zero_probability_strings_dropped(self):
        d = Distribution(2, {"00": 1.0, "11": 0.0})
        assert d.support == ("00",)

    def test_rejects_bad_sum(self):
        with pytest.raises(InvalidInputError):
            Distribution(1, {"0": 0.6, "1": 0.5})

    def test_rejects_wrong_width(self):
        with pytest.raises(InvalidInputError):
            Distribution(2, {"000": 1.0})

    def test_rejects_negative_probability(self):
        with pytest.raises(InvalidInputError):
            Distribution(1, {"0": 1.5, "1": -0.5})

    def test_rejects_empty(self):
        with pytest.raises(InvalidInputError):
            Distribution(1, {})

    def test_wide_sparse_distribution(self):
        width = 300
        strings = ["0" * width, "1" * width, "01" * 150]
        d = Distribution(width, {strings[0]: 0.5, strings[1]: 0.25, strings[2]: 0.25})
        assert min_entropy(d) == pytest.approx(1.0, abs=1e-12)


class TestIsNbSource:
    def test_uniform_meets_full_entropy(self):
        d = Distribution(2, {s: 0.25 for s in ("00", "01", "10", "11")})
        assert is_nb_source(d, 2.0)
        assert not is_nb_source(d, 2.1)

    def test_three_point_bounds(self):
        d = Distribution(2, {"00": 0.5, "01": 0.25, "10": 0.25})
        assert is_nb_source(d, 1.0)
        assert not is_nb_source(d, 1.5)

    @given(
        st.lists(
            st.floats(min_value=0.01, max_value=1.0), min_size=1, max_size=8
        )
    )
    def test_own_min_entropy_boundary(self, weights):
        total = sum(weights)
        probs = [w / total for w in weights]
        strings = [format(i, "04b") for i in range(len(probs))]
        d = Distribution(4, dict(zip(strings, probs)))
        h = min_entropy(d)
        assert is_nb_source(d, h)
        assert not is_nb_source(d, h + 1e-6)


class TestFlatSource:
    def test_full_support_is_perfect(self):
        src = make_flat(2, {"00", "01", "10", "11"})
        assert src.min_entropy == pytest.approx(2.0, abs=1e-12)

    def test_two_point_support(self):
        src = make_flat(3, {"000", "111"})
        assert src.min_entropy == pytest.approx(1.0, abs=1e-12)

    def test_support_of_six(self):
        # log2 of the support cardinality
        strings = [format(i, "04b") for i in range(6)]
        src = make_flat(4, strings)
        assert src.min_entropy == pytest.approx(math.log2(6), abs=1e-12)

    def test_min_entropy_matches_distribution(self):
        for size in (1, 2, 3, 5, 7, 12):
            strings = [format(i, "05b") for i in range(size)]
            src = make_flat(5, strings)
            assert abs(min_entropy(src.to_distribution()) - math.log2(size)) < 1e-12

    def test_rejects_empty_support(self):
        with pytest.raises(InvalidInputError):
            make_flat(2, [])

    def test_rejects_width_mismatch(self):
        with pytest.raises(InvalidInputError):
            make_flat(2, ["000"])


class TestSampling:
    def test_singleton_support(self):
        src = make_flat(2, ["10"])
        rng = np.random.default_rng(123)
        assert all(sample(src, rng) == "10" for _ in range(100))

    def test_two_point_frequencies(self):
        src = make_flat(1, ["0", "1"])
        rng = np.random.default_rng(42)
        draws = [sample(src, rng) for _ in range(100_000)]
        ones = draws.count("1")
        assert abs(ones / 100_000 - 0.5) < 0.01
        assert binomtest(ones, 100_000, 0.5).pvalue > ALPHA_SIG

    def test_same_seed_same_sequence(self):
        src = make_flat(3, [format(i, "03b") for i in range(5)])
        rng1, rng2 = np.random.default_rng(7), np.random.default_rng(7)
        assert [src.sample(rng1) for _ in range(20)] == [src.sample(rng2) for _ in range(20)]

    def test_draws_stay_in_support(self):
        rng = np.random.default_rng(2024)
        support_rng = np.random.default_rng(77)
        total = 0
        while total < 100_000:
            size = int(support_rng.integers(1, 40))
            idx = support_rng.choice(2**9, size=size, replace=False)
            src = make_flat(9, [format(int(i), "09b") for i in idx])
            members = set(src.support)
            for _ in range(5_000):
                assert sample(src, rng) in members
            total += 5_000


class TestSourceSpec:
    def test_loss_computed(self):
        spec = SourceSpec(n_bits=8, min_entropy_bound=6.0)
        assert spec.loss == 2.0
        assert loss_rate(spec) == pytest.approx(0.25)

    def test_perfect_and_useless(self):
        assert loss_rate(SourceSpec(10, 10.0)) == 0.0
        assert loss_rate(SourceSpec(10, 0.0)) == 1.0

    def test_zero_width_rejected(self):
        spec = SourceSpec(0, 0.0)
        with pytest.raises(InvalidInputError):
            loss_rate(spec)

    def test_inconsistent_loss_rejected(self):
        with pytest.raises(InvalidInputError):
            SourceSpec(8, 6.0, loss=3.0)

    def test_bound_outside_width_rejected(self):
        with pytest.raises(InvalidInputError):
            SourceSpec(4, 5.0)

    @given(st.integers(1, 64), st.floats(0, 1))
    def test_rate_range(self, n_bits, frac):
        spec = SourceSpec(n_bits, frac * n_bits)
        assert 0.0 <= loss_rate(spec) <= 1.0


class TestSubsetCode:
    def test_colex_order_small(self):
        # subsets of {0,1,2} taken 2 at a time, in colex order
        assert subset_rank((0, 1)) == 0
        assert subset_rank((0, 2)) == 1
        assert subset_rank((1, 2)) == 2

    def test_rank_unrank_roundtrip_enumerated(self):
        for m in range(1, 9):
            for k in range(1, m + 1):
                subsets = list(combinations(range(m), k))
                ranks = [subset_rank(s) for s in subsets]
                assert sorted(ranks) == list(range(math.comb(m, k)))
                for s, r in zip(subsets, ranks):
                    assert subset_unrank(r, k, m) == s

    @given(st.integers(1, 400), st.data())
    def test_rank_unrank_roundtrip_random(self, m, data):
        k = data.draw(st.integers(1, m))
        rank = data.draw(st.integers(0, math.comb(m, k) - 1))
        subset = subset_unrank(rank, k, m)
        assert len(subset) == k
        assert all(0 <= c < m for c in subset)
        assert subset_rank(subset) == rank

    def test_encode_decode(self):
        width = subset_code_width(6, 2)
        assert width == (math.comb(6, 2) - 1).bit_length()
        for s in combinations(range(6), 2):
            bits = encode_subset(s, 6)
            assert len(bits) == width
            assert decode_subset(bits, 6, 2) == s

    def test_decode_rejects_out_of_range_rank(self):
        width = subset_code_width(4, 2)  # C(4,2)=6 -> width 3
        with pytest.raises(InvalidInputError):
            decode_subset(format(7, f"0{width}b"), 4, 2)

    def test_single_subset_width(self):
        assert subset_code_width(5, 5) == 1
        assert decode_subset("0", 5, 5) == (0, 1, 2, 3, 4)


class TestSubsetFlatSource:
    def test_restricted_membership(self):
        src = restricted_subset_source(universe=6, allowed=[3, 4, 5], k=2)
        assert src.support_size == 3
        assert src.min_entropy == pytest.approx(math.log2(3))
        assert src.width == subset_code_width(6, 2)
        for s in combinations([3, 4, 5], 2):
            assert encode_subset(s, 6) in src
        assert encode_subset((0, 3), 6) not in src

    def test_sampling_stays_in_pool(self):
        src = restricted_subset_source(universe=10, allowed=[5, 6, 7, 8, 9], k=3)
        rng = np.random.default_rng(5)
        for _ in range(500):
            positions = src.sample_positions(rng)
            assert set(positions) <= {5, 6, 7, 8, 9}
            assert len(positions) == 3
            assert src.sample(rng) in src

    def test_materialize_matches_implicit(self):
        src = restricted_subset_source(universe=8, allowed=[2, 3, 5, 7], k=2)
        explicit = src.materialize()
        assert isinstance(explicit, FlatSource)
        assert explicit.support_size == src.support_size == math.comb(4, 2)
        assert explicit.width == src.width
        assert abs(explicit.min_entropy - src.min_entropy) < 1e-12
        assert set(explicit.support) == {s for s in explicit.support if s in src}

    def test_sampling_uniform_over_support(self):
        src = restricted_subset_source(universe=6, allowed=list(range(6)), k=2)
        rng = np.random.default_rng(31)
        counts = {}
        n_draws = 100_000
        for _ in range(n_draws):
            pair = src.sample_positions(rng)
            counts[pair] = counts.get(pair, 0) + 1
        assert len(counts) == 15
        for pair, count in counts.items():
            assert abs(count / n_draws - 1 / 15) < 0.005, pair
            assert binomtest(count, n_draws, 1 / 15).pvalue > ALPHA_SIG

    def test_infeasible_pool(self):
        with pytest.raises(InfeasibleAttackError):
            restricted_subset_source(universe=6, allowed=[1, 2], k=3)

    def test_huge_support_is_exact(self):
        src = restricted_subset_source(universe=2048, allowed=range(1024, 2048), k=46)
        assert src.support_size == math.comb(1024, 46)
        assert src.min_entropy == pytest.approx(math.log2(math.comb(1024, 46)))
        rng = np.random.default_rng(8)
        positions = src.sample_positions(rng)
        assert len(positions) == 46
        assert all(1024 <= p < 2048 for p in positions)
