"""The BB84 pipeline: distribute, measure, sift, test, estimate.

Every run is a pure function of (config, attack, seed). The randomness for
one run comes from a single seeded stream consumed in pipeline order, so
transcripts are reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from . import adversary as _adversary
from .bitstrings import bit_array, bit_string
from .combinatorics import default_test_set_size
from .entropy_core import FlatSource, SubsetFlatSource, decode_subset, subset_code_width
from .errors import (
    InfeasibleAttackError,
    InsufficientPositionsError,
    InvalidInputError,
)
from .qsim import (
    Basis,
    ConjugateQubit,
    QubitRegister,
    apply_bitflip_noise,
    as_register,
    encode,
    measure_register,
)

__all__ = [
    "SiftMode",
    "ProtocolConfig",
    "SiftResult",
    "Transcript",
    "generate_strings",
    "constrained_bob_bases",
    "distribute",
    "bob_measure",
    "sift",
    "choose_test_set",
    "estimate_parameters",
    "run_bb84",
]


class SiftMode(Enum):
    """How Bob's bases relate to Alice's.

    RANDOM is the plain protocol: independent uniform bases, so the sift
    count fluctuates. EXPECTED pins exactly n/2 basis matches in each half
    of the 2n transmissions (uniformly among such basis strings), which
    removes sift-count noise when checking per-run averages.
    """

    RANDOM = "random"
    EXPECTED = "expected"


@dataclass(frozen=True)
class ProtocolConfig:
    """Run parameters; n is half the number of transmitted qubits."""

    n: int
    alpha: float = 0.5
    test_set_size: int | None = None
    abort_threshold: float = 0.05
    sift_mode: SiftMode = SiftMode.RANDOM
    channel_flip_prob: float = 0.0

    def __post_init__(self):
        if self.n < 4 or self.n % 2:
            raise InvalidInputError(f"n must be even and >= 4, got {self.n}")
        if not 0.0 < self.alpha < 1.0:
            raise InvalidInputError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.test_set_size is not None and self.test_set_size < 1:
            raise InvalidInputError("test-set size must be >= 1")
        if not 0.0 <= self.abort_threshold <= 1.0:
            raise InvalidInputError("abort threshold must lie in [0, 1]")
        if not 0.0 <= self.channel_flip_prob <= 1.0:
            raise InvalidInputError("channel flip probability must lie in [0, 1]")

    @property
    def k(self) -> int:
        """Test-set size; defaults to ceil(n**(1-alpha))."""
        if self.test_set_size is not None:
            return self.test_set_size
        return default_test_set_size(self.n, self.alpha)


@dataclass(frozen=True, eq=False)
class SiftResult:
    """Positions kept after basis reconciliation, with both parties' bits."""

    kept_indices: np.ndarray
    x_a: np.ndarray
    x_b: np.ndarray

    def __post_init__(self):
        kept = np.asarray(self.kept_indices, dtype=np.int64)
        x_a = np.asarray(self.x_a, dtype=np.uint8)
        x_b = np.asarray(self.x_b, dtype=np.uint8)
        if not (kept.size == x_a.size == x_b.size):
            raise InvalidInputError("sift fields must have equal length")
        if kept.size and np.any(np.diff(kept) <= 0):
            raise InvalidInputError("kept indices must be strictly increasing")
        object.__setattr__(self, "kept_indices", kept)
        object.__setattr__(self, "x_a", x_a)
        object.__setattr__(self, "x_b", x_b)

    def __len__(self) -> int:
        return self.kept_indices.size


@dataclass(frozen=True, eq=False)
class Transcript:
    """Complete record of one run, up to the point where only one-way
    classical post-processing would remain."""

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    sift: SiftResult
    test_set: tuple[int, ...]
    test_errors: int | None
    test_error_rate: float | None
    aborted: bool
    abort_reason: str | None
    x_a_remaining: np.ndarray
    x_b_remaining: np.ndarray
    eve_estimate: np.ndarray | None = None

    def to_json_dict(self) -> dict:
        """JSON shape: bit strings as 0/1 text, indices as 0-based ints."""
        return {
            "x": bit_string(self.x),
            "y": bit_string(self.y),
            "z": bit_string(self.z),
            "sift": {
                "kept_indices": [int(i) for i in self.sift.kept_indices],
                "x_a": bit_string(self.sift.x_a),
                "x_b": bit_string(self.sift.x_b),
            },
            "test_set": [int(i) for i in self.test_set],
            "test_errors": self.test_errors,
            "test_error_rate": self.test_error_rate,
            "aborted": self.aborted,
            "abort_reason": self.abort_reason,
            "x_a_remaining": bit_string(self.x_a_remaining),
            "x_b_remaining": bit_string(self.x_b_remaining),
            "eve_estimate": None
            if self.eve_estimate is None
            else bit_string(self.eve_estimate),
        }


def generate_strings(
    config: ProtocolConfig, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Draw the three uniform 2n-bit strings: Alice's bits and bases, Bob's bases."""
    two_n = 2 * config.n
    x = rng.integers(0, 2, size=two_n, dtype=np.uint8)
    y = rng.integers(0, 2, size=two_n, dtype=np.uint8)
    z = rng.integers(0, 2, size=two_n, dtype=np.uint8)
    return x, y, z


def constrained_bob_bases(y, rng: np.random.Generator) -> np.ndarray:
    """Bob bases with exactly half matches in each half of the transmissions.

    Uniform over all such basis strings given y: the matching positions are
    chosen uniformly per half, and z copies y there and differs elsewhere.
    """
    y = bit_array(y)
    if y.size % 2:
        raise InvalidInputError("basis string must have even length")
    n = y.size // 2
    if n % 2:
        raise InvalidInputError("each half must admit an exact 50% match count")
    z = y ^ 1
    for start in (0, n):
        matched = rng.choice(n, size=n // 2, replace=False) + start
        z[matched] = y[matched]
    return z


def distribute(x, y) -> list[ConjugateQubit]:
    """Encode bit i of x in the basis named by bit i of y (0 -> computational)."""
    x = bit_array(x)
    y = bit_array(y)
    if x.size != y.size:
        raise InvalidInputError("x and y must have equal length")
    return [encode(int(b), Basis(int(yb))) for b, yb in zip(x.tolist(), y.tolist())]


def bob_measure(
    qubits: Sequence[ConjugateQubit] | QubitRegister, z, rng: np.random.Generator
) -> np.ndarray:
    """Measure every received qubit in the basis named by z."""
    reg = as_register(qubits)
    z = bit_array(z)
    if z.size != len(reg):
        raise InvalidInputError("z must have one basis per qubit")
    return measure_register(reg, z, rng)


def sift(y, z, x, bob_bits, mode: SiftMode = SiftMode.RANDOM) -> SiftResult:
    """Keep the positions where preparation and measurement bases coincide."""
    y, z, x, bob_bits = bit_array(y), bit_array(z), bit_array(x), bit_array(bob_bits)
    if not (y.size == z.size == x.size == bob_bits.size):
        raise InvalidInputError("all strings must have equal length")
    kept = np.nonzero(y == z)[0]
    if mode is SiftMode.EXPECTED:
        n = y.size // 2
        first = int(np.count_nonzero(kept < n))
        if first != n // 2 or kept.size - first != n // 2:
            raise InvalidInputError(
                "expected sift mode requires exactly n/2 matches per half"
            )
    return SiftResult(kept_indices=kept, x_a=x[kept], x_b=bob_bits[kept])


def _decoded_support(source: FlatSource, m: int, k: int) -> None:
    """Validate that every support string is a canonical (m, k) encoding."""
    if source.width != subset_code_width(m, k):
        raise InvalidInputError(
            f"source width {source.width} does not match the ({m}, {k}) subset code"
        )
    for s in source.support:
        decode_subset(s, m, k)


def choose_test_set(
    source: FlatSource | SubsetFlatSource | None,
    sifted_length: int,
    k: int,
    rng: np.random.Generator,
) -> tuple[int, ...]:
    """Draw the k test positions (indices into the sifted string).

    source None means the honest uniform choice over all C(m, k) subsets.
    A flat source must encode k-subsets of range(m) in the canonical code;
    a subset source must have been built for this (m, k).
    """
    if k < 1:
        raise InvalidInputError("test-set size must be >= 1")
    if k > sifted_length:
        raise InsufficientPositionsError(
            f"test set of {k} exceeds the {sifted_length} sifted positions"
        )
    if source is None:
        picked = rng.choice(sifted_length, size=k, replace=False)
        return tuple(int(p) for p in np.sort(picked))
    if isinstance(source, SubsetFlatSource):
        if source.universe != sifted_length or source.subset_size != k:
            raise InvalidInputError(
                f"source built for ({source.universe}, {source.subset_size}), "
                f"expected ({sifted_length}, {k})"
            )
        return source.sample_positions(rng)
    _decoded_support(source, sifted_length, k)
    return decode_subset(source.sample(rng), sifted_length, k)


def estimate_parameters(
    x_a, x_b, test_set: Sequence[int], threshold: float
) -> tuple[int, float, bool]:
    """Count disagreements on the test positions and apply the abort rule."""
    x_a, x_b = bit_array(x_a), bit_array(x_b)
    idx = np.asarray(sorted(int(i) for i in test_set), dtype=np.int64)
    if idx.size == 0:
        raise InvalidInputError("test set is empty")
    if idx.size > 1 and np.any(np.diff(idx) == 0):
        raise InvalidInputError("test positions must be distinct")
    if idx[0] < 0 or idx[-1] >= x_a.size:
        raise InvalidInputError("test position outside the sifted string")
    t = int(np.count_nonzero(x_a[idx] != x_b[idx]))
    rate = t / idx.size
    return t, rate, rate > threshold


def run_bb84(
    config: ProtocolConfig,
    attack: "_adversary.AttackSpec | None" = None,
    seed: int | np.random.SeedSequence = 0,
) -> Transcript:
    """Execute one full run and return its transcript.

    Pipeline order (fixed, so transcripts are seed-deterministic):
    generate strings -> [expected-mode basis constraint] -> encode ->
    [interception] -> [channel noise] -> measure -> sift -> test-set choice
    (restricted source when the attack corrupts it) -> parameter estimation
    -> [Eve's estimate].

    A sift outcome that cannot supply the test set flags the run aborted
    with a reason rather than raising; a statically impossible restriction
    (k > n/2) raises InfeasibleAttackError up front.
    """
    k = config.k
    if attack is not None and attack.corrupt_test_source and k > config.n // 2:
        raise InfeasibleAttackError(
            f"k={k} test positions cannot avoid half of n={config.n} sifted bits"
        )

    rng = np.random.default_rng(seed)
    x, y, z = generate_strings(config, rng)
    if config.sift_mode is SiftMode.EXPECTED:
        z = constrained_bob_bases(y, rng)

    reg = QubitRegister(bits=x, bases=y)
    eve_record = None
    attacked = None
    if attack is not None:
        attacked = _adversary.attacked_index_array(attack, 2 * config.n)
        reg, eve_record = _adversary.intercept_resend(reg, attack, rng)
    if config.channel_flip_prob:
        reg = apply_bitflip_noise(reg, config.channel_flip_prob, rng)
    bob_bits = measure_register(reg, z, rng)

    sift_result = sift(y, z, x, bob_bits, config.sift_mode)
    m = len(sift_result)

    test_set: tuple[int, ...] = ()
    test_errors: int | None = None
    test_error_rate: float | None = None
    abort_reason: str | None = None
    try:
        source = None
        if attack is not None and attack.corrupt_test_source:
            source = _adversary.corrupt_test_source(sift_result, attacked, k)
        test_set = choose_test_set(source, m, k, rng)
    except (InsufficientPositionsError, InfeasibleAttackError) as exc:
        aborted = True
        abort_reason = str(exc)
    else:
        test_errors, test_error_rate, aborted = estimate_parameters(
            sift_result.x_a, sift_result.x_b, test_set, config.abort_threshold
        )
        if aborted:
            abort_reason = (
                f"test error rate {test_error_rate:.4f} exceeds "
                f"threshold {config.abort_threshold}"
            )

    keep_mask = np.ones(m, dtype=bool)
    if test_set:
        keep_mask[np.asarray(test_set, dtype=np.int64)] = False

    x_e = None
    if eve_record is not None:
        x_e = _adversary.eve_estimate(eve_record, sift_result, rng)

    return Transcript(
        x=x,
        y=y,
        z=z,
        sift=sift_result,
        test_set=test_set,
        test_errors=test_errors,
        test_error_rate=test_error_rate,
        aborted=aborted,
        abort_reason=abort_reason,
        x_a_remaining=sift_result.x_a[keep_mask],
        x_b_remaining=sift_result.x_b[keep_mask],
        eve_estimate=x_e,
    )
