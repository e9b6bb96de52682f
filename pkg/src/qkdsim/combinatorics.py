"""Entropy-loss accounting for restricted test-position sources.

All quantities are in bits. The honest source needs N = log2 C(n, k) bits to
name k test positions out of n; confining the choice to half the positions
costs c = log2 C(n, k) - log2 C(n/2, k) bits of min-entropy. The loss rate
c/N vanishes as n grows; two closed-form asymptotes for it are reported side
by side because they differ in their alpha-dependence (see EntropyReport).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

from .errors import InfeasibleAttackError, InvalidInputError

__all__ = [
    "LOG2_E",
    "EntropyReport",
    "log2_binomial",
    "stirling_log2_factorial",
    "default_test_set_size",
    "entropy_loss_report",
    "asymptote_comparison",
]

LOG2_E = math.log2(math.e)
_LN_2 = math.log(2.0)


def log2_binomial(n: int, k: int) -> float:
    """log2 of the binomial coefficient C(n, k), via log-gamma.

    O(1) in n, accurate to ~1e-12 relative; the test suite anchors it to
    exact big-integer arithmetic.
    """
    if n < 0 or k < 0 or k > n:
        raise InvalidInputError(f"C({n}, {k}) is undefined here")
    if k == 0 or k == n:
        return 0.0
    # the grouped sum keeps k <-> n-k symmetry exact (float + is commutative)
    return (
        math.lgamma(n + 1) - (math.lgamma(k + 1) + math.lgamma(n - k + 1))
    ) / _LN_2


def stirling_log2_factorial(n: int) -> float:
    """(n + 1/2) * log2(n) - n * log2(e): the coarse Stirling form, in bits.

    Deliberately omits the +log2(sqrt(2*pi)) term, so it is off by about
    1.33 bits absolute (negligible relatively for large n); n=0 returns 0 by
    the 0! = 1 convention.
    """
    if n < 0:
        raise InvalidInputError("factorial of a negative number")
    if n == 0:
        return 0.0
    return (n + 0.5) * math.log2(n) - n * LOG2_E


def default_test_set_size(n: int, alpha: float) -> int:
    """Sublinear test-set size ceil(n**(1 - alpha))."""
    if n < 1:
        raise InvalidInputError("n must be positive")
    if not 0.0 < alpha < 1.0:
        raise InvalidInputError(f"alpha must lie in (0, 1), got {alpha}")
    return math.ceil(n ** (1.0 - alpha))


@dataclass(frozen=True)
class EntropyReport:
    """Exact and asymptotic entropy-loss figures for one (n, alpha, k).

    ``coarse_asymptote`` is the classic 1/log2(n) large-n estimate;
    ``refined_asymptote`` is 1/(alpha*log2(n) + log2(e)), the first-order
    expansion that keeps the alpha-dependence. The exact rate tracks the
    refined form closely and exceeds 1/log2(n) by roughly a factor 1/alpha,
    which is why both are reported.
    """

    n: int
    alpha: float
    k: int
    n_bits: float
    c_bits: float
    rate: float
    coarse_asymptote: float
    refined_asymptote: float

    @property
    def coarse_ratio(self) -> float:
        """Exact rate divided by 1/log2(n)."""
        return self.rate / self.coarse_asymptote

    @property
    def refined_ratio(self) -> float:
        """Exact rate divided by the refined asymptote."""
        return self.rate / self.refined_asymptote


def entropy_loss_report(n: int, alpha: float, k: int | None = None) -> EntropyReport:
    """Exact loss figures for restricting k of n test positions to one half.

    k defaults to ceil(n**(1-alpha)). Raises InfeasibleAttackError when
    k > n/2: the half-restricted source cannot supply k distinct positions.
    """
    if n < 4 or n % 2:
        raise InvalidInputError(f"n must be even and >= 4, got {n}")
    if not 0.0 < alpha < 1.0:
        raise InvalidInputError(f"alpha must lie in (0, 1), got {alpha}")
    if k is None:
        k = default_test_set_size(n, alpha)
    if k < 1:
        raise InvalidInputError("test-set size must be >= 1")
    if k > n // 2:
        raise InfeasibleAttackError(
            f"test set of {k} cannot be drawn from the untested half of n={n}"
        )
    n_bits = log2_binomial(n, k)
    c_bits = n_bits - log2_binomial(n // 2, k)
    return EntropyReport(
        n=n,
        alpha=alpha,
        k=k,
        n_bits=n_bits,
        c_bits=c_bits,
        rate=c_bits / n_bits,
        coarse_asymptote=1.0 / math.log2(n),
        refined_asymptote=1.0 / (alpha * math.log2(n) + LOG2_E),
    )


def asymptote_comparison(n_values: Iterable[int], alpha: float) -> list[EntropyReport]:
    """Entropy-loss reports across an n sweep, for asymptote checks."""
    return [entropy_loss_report(n, alpha) for n in n_values]
