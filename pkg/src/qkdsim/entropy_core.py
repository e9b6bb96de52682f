"""Discrete randomness sources and their min-entropy bookkeeping.

Sources are stored sparsely: a distribution is a map from bit strings to
probabilities, a flat source is just its support. Position choices ("k test
positions out of m") are carried as fixed-width bit strings through a
canonical colexicographic subset code, so that restricting a position source
has an exact min-entropy cost in bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .errors import InfeasibleAttackError, InvalidInputError

__all__ = [
    "Distribution",
    "FlatSource",
    "SubsetFlatSource",
    "SourceSpec",
    "min_entropy",
    "is_nb_source",
    "make_flat",
    "sample",
    "loss_rate",
    "subset_rank",
    "subset_unrank",
    "subset_code_width",
    "encode_subset",
    "decode_subset",
    "restricted_subset_source",
]

_PROB_SUM_TOL = 1e-12


def _check_bitstring(s: str, width: int) -> None:
    if not isinstance(s, str) or len(s) != width:
        raise InvalidInputError(f"expected a {width}-bit string, got {s!r}")
    if set(s) - {"0", "1"}:
        raise InvalidInputError(f"not a 0/1 string: {s!r}")


@dataclass(frozen=True)
class Distribution:
    """Probability distribution over fixed-width bit strings, stored sparsely.

    Zero-probability strings are dropped on construction; the remaining
    probabilities must be positive and sum to 1 within 1e-12.
    """

    width: int
    entries: Mapping[str, float]

    def __post_init__(self):
        if self.width < 1:
            raise InvalidInputError("distribution width must be >= 1")
        cleaned = {}
        for s, p in self.entries.items():
            _check_bitstring(s, self.width)
            p = float(p)
            if p < 0.0:
                raise InvalidInputError(f"negative probability for {s!r}: {p}")
            if p > 0.0:
                cleaned[s] = p
        if not cleaned:
            raise InvalidInputError("distribution has empty support")
        total = math.fsum(cleaned.values())
        if abs(total - 1.0) > _PROB_SUM_TOL:
            raise InvalidInputError(f"probabilities sum to {total!r}, not 1")
        object.__setattr__(self, "entries", cleaned)

    @property
    def support(self) -> tuple[str, ...]:
        return tuple(sorted(self.entries))


def min_entropy(dist: Distribution) -> float:
    """Worst-case entropy in bits: -log2 of the most probable string."""
    if not dist.entries:
        raise InvalidInputError("distribution has empty support")
    return max(0.0, -math.log2(max(dist.entries.values())))


def is_nb_source(dist: Distribution, b: float) -> bool:
    """True iff every string has probability <= 2**-b (min-entropy >= b)."""
    return min_entropy(dist) >= b


@dataclass(frozen=True)
class FlatSource:
    """Uniform distribution over an explicit, duplicate-free support."""

    width: int
    support: tuple[str, ...]

    def __post_init__(self):
        if not self.support:
            raise InvalidInputError("flat source needs a non-empty support")
        seen = set()
        for s in self.support:
            _check_bitstring(s, self.width)
            if s in seen:
                raise InvalidInputError(f"duplicate support string {s!r}")
            seen.add(s)
        object.__setattr__(self, "support", tuple(sorted(self.support)))

    @property
    def support_size(self) -> int:
        return len(self.support)

    @property
    def min_entropy(self) -> float:
        return math.log2(len(self.support))

    def sample(self, rng: np.random.Generator) -> str:
        return self.support[int(rng.integers(len(self.support)))]

    def to_distribution(self) -> Distribution:
        p = 1.0 / len(self.support)
        return Distribution(self.width, {s: p for s in self.support})


def make_flat(width: int, support: Iterable[str]) -> FlatSource:
    """Build a flat source; duplicates collapse, empty support is an error."""
    return FlatSource(width, tuple(dict.fromkeys(support)))


def sample(source, rng: np.random.Generator) -> str:
    """Draw one support string from a flat source, uniformly."""
    return source.sample(rng)


@dataclass(frozen=True)
class SourceSpec:
    """(N, b) bookkeeping for a weak source: width, min-entropy bound, loss."""

    n_bits: int
    min_entropy_bound: float
    loss: float | None = None

    def __post_init__(self):
        if self.n_bits < 0:
            raise InvalidInputError("n_bits must be non-negative")
        if not 0.0 <= self.min_entropy_bound <= self.n_bits:
            raise InvalidInputError(
                f"min-entropy bound {self.min_entropy_bound} outside [0, {self.n_bits}]"
            )
        expected = self.n_bits - self.min_entropy_bound
        if self.loss is None:
            object.__setattr__(self, "loss", expected)
        elif abs(self.loss - expected) > 1e-9:
            raise InvalidInputError(
                f"loss {self.loss} inconsistent with n_bits - bound = {expected}"
            )


def loss_rate(spec: SourceSpec) -> float:
    """Fraction of the source's width lost to bias: (N - b) / N, in [0, 1]."""
    if spec.n_bits <= 0:
        raise InvalidInputError("loss rate undefined for zero-width source")
    return spec.loss / spec.n_bits


# --- canonical subset code -------------------------------------------------
#
# k-subsets of {0..m-1} are ranked colexicographically:
#   rank(c_1 < ... < c_k) = sum_i C(c_i, i)
# and written as fixed-width binary strings. This pins the string/set duality
# used by restricted test-position sources.


def subset_rank(subset: Iterable[int]) -> int:
    """Colexicographic rank of a set of non-negative integers."""
    elems = sorted(subset)
    if any(e < 0 for e in elems):
        raise InvalidInputError("subset elements must be non-negative")
    if len(set(elems)) != len(elems):
        raise InvalidInputError("subset elements must be distinct")
    return sum(math.comb(c, i) for i, c in enumerate(elems, start=1))


def subset_unrank(rank: int, k: int, universe: int) -> tuple[int, ...]:
    """Inverse of subset_rank over k-subsets of range(universe)."""
    if k < 0 or universe < 0 or k > universe:
        raise InvalidInputError(f"no {k}-subsets of a {universe}-element universe")
    total = math.comb(universe, k)
    if not 0 <= rank < total:
        raise InvalidInputError(f"rank {rank} outside [0, {total})")
    if k == 0:
        return ()
    out = []
    remaining = rank
    i, c = k, universe - 1
    binom = math.comb(universe - 1, k)  # C(c, i), updated incrementally
    while i > 0:
        if binom <= remaining:
            remaining -= binom
            out.append(c)
            if i > 1:
                binom = binom * i // c
            i -= 1
        else:
            binom = binom * (c - i) // c
        c -= 1
    return tuple(reversed(out))


def subset_code_width(universe: int, k: int) -> int:
    """Bit width of the canonical encoding of k-subsets of range(universe)."""
    if k < 0 or universe < 0 or k > universe:
        raise InvalidInputError(f"no {k}-subsets of a {universe}-element universe")
    return max(1, (math.comb(universe, k) - 1).bit_length())


def encode_subset(subset: Iterable[int], universe: int) -> str:
    """Encode a subset of range(universe) as a fixed-width bit string."""
    elems = tuple(sorted(subset))
    if elems and elems[-1] >= universe:
        raise InvalidInputError(f"element {elems[-1]} outside range({universe})")
    width = subset_code_width(universe, len(elems))
    return format(subset_rank(elems), f"0{width}b")


def decode_subset(bits: str, universe: int, k: int) -> tuple[int, ...]:
    """Decode a canonical subset string back to its k positions."""
    width = subset_code_width(universe, k)
    _check_bitstring(bits, width)
    return subset_unrank(int(bits, 2), k, universe)


@dataclass(frozen=True)
class SubsetFlatSource:
    """Flat source over encodings of k-subsets drawn from an allowed pool.

    The support is every canonical (universe, k)-encoding whose decoded
    positions all lie in ``allowed``. It is represented implicitly: at
    production sizes C(len(allowed), k) is far too large to enumerate, but
    its size, min-entropy, membership test and uniform sampling are all
    exact.
    """

    universe: int
    subset_size: int
    allowed: tuple[int, ...]

    def __post_init__(self):
        allowed = tuple(sorted(self.allowed))
        if len(set(allowed)) != len(allowed):
            raise InvalidInputError("allowed positions must be distinct")
        if allowed and (allowed[0] < 0 or allowed[-1] >= self.universe):
            raise InvalidInputError("allowed positions outside the universe")
        if not 1 <= self.subset_size <= len(allowed):
            raise InvalidInputError(
                f"cannot draw {self.subset_size} positions from a pool of {len(allowed)}"
            )
        object.__setattr__(self, "allowed", allowed)

    @property
    def width(self) -> int:
        return subset_code_width(self.universe, self.subset_size)

    @property
    def support_size(self) -> int:
        return math.comb(len(self.allowed), self.subset_size)

    @property
    def min_entropy(self) -> float:
        return math.log2(self.support_size)

    def sample_positions(self, rng: np.random.Generator) -> tuple[int, ...]:
        """Draw a uniform subset_size-subset of the allowed pool."""
        pool = np.asarray(self.allowed)
        picked = rng.choice(pool, size=self.subset_size, replace=False)
        return tuple(int(p) for p in np.sort(picked))

    def sample(self, rng: np.random.Generator) -> str:
        return encode_subset(self.sample_positions(rng), self.universe)

    def __contains__(self, bits: str) -> bool:
        try:
            positions = decode_subset(bits, self.universe, self.subset_size)
        except InvalidInputError:
            return False
        return set(positions) <= set(self.allowed)

    def materialize(self, limit: int = 1_000_000) -> FlatSource:
        """Enumerate the support into an explicit FlatSource (small pools only)."""
        if self.support_size > limit:
            raise InvalidInputError(
                f"support of size {self.support_size} exceeds materialize limit {limit}"
            )
        from itertools import combinations

        strings = [
            encode_subset(combo, self.universe)
            for combo in combinations(self.allowed, self.subset_size)
        ]
        return FlatSource(self.width, tuple(strings))


def restricted_subset_source(
    universe: int, allowed: Iterable[int], k: int
) -> SubsetFlatSource:
    """Flat source over k-subsets confined to ``allowed``; infeasible if the
    pool is smaller than k."""
    allowed = tuple(sorted(allowed))
    if len(allowed) < k:
        raise InfeasibleAttackError(
            f"restricted pool has {len(allowed)} positions, fewer than k={k}"
        )
    return SubsetFlatSource(universe, k, allowed)
