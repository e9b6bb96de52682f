import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qkdsim.combinatorics import (
    LOG2_E,
    asymptote_comparison,
    default_test_set_size,
    entropy_loss_report,
    log2_binomial,
    stirling_log2_factorial,
)
from qkdsim.errors import InfeasibleAttackError, InvalidInputError


def exact_log2_binomial(n: int, k: int) -> float:
    """Independent oracle: exact big-integer binomial, then log2."""
    return math.log2(math.comb(n, k))


class TestLog2Binomial:
    def test_tiny_exact_values(self):
        assert log2_binomial(4, 2) == pytest.approx(math.log2(6), rel=1e-12)
        assert log2_binomial(10, 0) == 0.0
        assert log2_binomial(10, 10) == 0.0

    def test_against_oracle_1024_32(self):
        assert log2_binomial(1024, 32) == pytest.approx(
            exact_log2_binomial(1024, 32), rel=1e-9
        )

    def test_oracle_grid(self):
        # randomized 1000-point grid over n <= 10^4
        rng = np.random.default_rng(1234)
        for _ in range(1000):
            n = int(rng.integers(1, 10_001))
            k = int(rng.integers(0, n + 1))
            got = log2_binomial(n, k)
            want = exact_log2_binomial(n, k)
            if want == 0.0:
                assert got == 0.0
            else:
                assert got == pytest.approx(want, rel=1e-9), (n, k)

    @given(st.integers(0, 10**6), st.data())
    def test_symmetry(self, n, data):
        k = data.draw(st.integers(0, n))
        assert log2_binomial(n, k) == log2_binomial(n, n - k)

    def test_rejects_bad_arguments(self):
        with pytest.raises(InvalidInputError):
            log2_binomial(3, 4)
        with pytest.raises(InvalidInputError):
            log2_binomial(-1, 0)
        with pytest.raises(InvalidInputError):
            log2_binomial(3, -1)


class TestStirling:
    def test_n1_documented_error(self):
        # the coarse form gives -log2(e) at n=1; exact log2(1!) is 0
        assert stirling_log2_factorial(1) == pytest.approx(-LOG2_E, rel=1e-12)
        assert abs(stirling_log2_factorial(1) - 0.0) == pytest.approx(1.4427, abs=1e-4)

    def test_n10_error_is_the_missing_constant(self):
        exact = math.log2(math.factorial(10))
        assert exact == pytest.approx(21.791061114716953, rel=1e-12)
        err = exact - stirling_log2_factorial(10)
        # dominated by the omitted log2(sqrt(2*pi)) ~ 1.3257
        assert 1.3 < err < 1.4

    def test_large_n_relative_error(self):
        n = 10**6
        # cumulative-sum-of-log2 oracle (pairwise summation keeps it exact
        # to ~1e-12 relative)
        exact = float(np.sum(np.log2(np.arange(1, n + 1, dtype=np.float64))))
        approx = stirling_log2_factorial(n)
        assert abs(approx - exact) / exact < 1e-6

    def test_zero_convention(self):
        assert stirling_log2_factorial(0) == 0.0

    def test_negative_rejected(self):
        with pytest.raises(InvalidInputError):
            stirling_log2_factorial(-1)


class TestDefaultTestSetSize:
    def test_dyadic_cases(self):
        assert default_test_set_size(1024, 0.5) == 32
        assert default_test_set_size(2048, 0.5) == 46  # ceil(45.25...)
        assert default_test_set_size(2**20, 0.5) == 1024

    def test_bounds(self):
        with pytest.raises(InvalidInputError):
            default_test_set_size(10, 0.0)
        with pytest.raises(InvalidInputError):
            default_test_set_size(10, 1.0)
        with pytest.raises(InvalidInputError):
            default_test_set_size(0, 0.5)


class TestEntropyLossReport:
    def test_tiny_exact_case(self):
        # C(4,1) = 4 and C(2,1) = 2: two bits against one
        report = entropy_loss_report(4, 0.5, k=1)
        assert report.n_bits == pytest.approx(2.0, rel=1e-12)
        assert report.c_bits == pytest.approx(1.0, rel=1e-12)
        assert report.rate == pytest.approx(0.5, rel=1e-12)

    def test_oracle_1024(self):
        report = entropy_loss_report(1024, 0.5)
        assert report.k == 32
        want = (
            exact_log2_binomial(1024, 32) - exact_log2_binomial(512, 32)
        ) / exact_log2_binomial(1024, 32)
        assert report.rate == pytest.approx(want, rel=1e-9)

    def test_2pow20_against_coarse_asymptote(self):
        report = entropy_loss_report(2**20, 0.5)
        assert report.coarse_asymptote == pytest.approx(0.05, rel=1e-12)
        exact = (
            exact_log2_binomial(2**20, 1024) - exact_log2_binomial(2**19, 1024)
        ) / exact_log2_binomial(2**20, 1024)
        assert report.rate == pytest.approx(exact, rel=1e-9)

    def test_infeasible_k(self):
        with pytest.raises(InfeasibleAttackError):
            entropy_loss_report(8, 0.5, k=5)

    def test_invalid_n(self):
        with pytest.raises(InvalidInputError):
            entropy_loss_report(7, 0.5)
        with pytest.raises(InvalidInputError):
            entropy_loss_report(2, 0.5)

    def test_positive_loss_whenever_feasible(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            n = 2 * int(rng.integers(2, 2000))
            k = int(rng.integers(1, n // 2 + 1))
            report = entropy_loss_report(n, 0.5, k=k)
            assert report.c_bits > 0.0
            assert 0.0 < report.rate < 1.0

    def test_loss_close_to_k_first_order(self):
        # c = k + sum log2((1-i/n)/(1-2i/n)) <= k + k^2/n + 1 for alpha >= 1/2
        for alpha in (0.5, 0.6, 0.75):
            for n in (2**10, 2**14, 2**18):
                report = entropy_loss_report(n, alpha)
                assert abs(report.c_bits - report.k) <= report.k**2 / n + 1.0


class TestAsymptoteComparison:
    def test_rate_strictly_decreasing(self):
        for alpha in (0.3, 0.5, 0.7):
            ns = [2**j for j in range(10, 25)]
            reports = asymptote_comparison(ns, alpha)
            rates = [r.rate for r in reports]
            assert all(a > b for a, b in zip(rates, rates[1:])), alpha

    def test_coarse_asymptote_definition(self):
        for report in asymptote_comparison([2**10, 2**12], 0.5):
            assert report.coarse_asymptote == pytest.approx(1 / math.log2(report.n))

    def test_refined_asymptote_first_order(self):
        report = entropy_loss_report(2**20, 0.5)
        product = report.rate * (0.5 * math.log2(2**20) + LOG2_E)
        assert 0.9 <= product <= 1.1
        assert report.refined_ratio == pytest.approx(product, rel=1e-12)

    def test_errors_propagate(self):
        with pytest.raises(InfeasibleAttackError):
            asymptote_comparison([4], 0.01)
