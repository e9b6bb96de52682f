"""Statistics over protocol runs.

Covers the closed-form case table for the flip-resend attack (both the
receiver and the eavesdropper expect to agree with the sender on 5n/8 of the
sifted bits), the one-way key-rate proxy built from binary entropies, and a
deterministic Monte Carlo harness whose results do not depend on how many
workers execute the trials.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial

import numpy as np

from . import adversary as _adversary
from .bitstrings import bit_array
from .errors import InvalidInputError
from .protocol import ProtocolConfig, Transcript, run_bb84
from .qsim import Basis

__all__ = [
    "AgreementBreakdown",
    "CaseStats",
    "RunStats",
    "CSV_HEADER",
    "agreement",
    "hamming",
    "expected_agreement_analytic",
    "binary_entropy",
    "one_way_key_rate",
    "trial_seed",
    "monte_carlo",
    "case_stats",
]

CSV_HEADER = [
    "n",
    "alpha",
    "attack",
    "test_source",
    "trials",
    "bob_mean",
    "bob_std",
    "eve_mean",
    "eve_std",
    "test_err_mean",
    "abort_rate",
    "key_rate",
]


def agreement(a, b) -> int:
    """Number of positions where the two bit strings coincide."""
    a, b = bit_array(a), bit_array(b)
    if a.size != b.size:
        raise InvalidInputError("strings must have equal length")
    return int(np.count_nonzero(a == b))


def hamming(a, b) -> int:
    """Number of positions where the two bit strings differ."""
    a, b = bit_array(a), bit_array(b)
    if a.size != b.size:
        raise InvalidInputError("strings must have equal length")
    return int(np.count_nonzero(a != b))


@dataclass(frozen=True)
class AgreementBreakdown:
    """Closed-form case table for the default flip-resend attack.

    A sifted bit falls in one of three cases: intercepted and prepared in
    the interception basis (fraction 1/4), intercepted but prepared in the
    conjugate basis (1/4), or untouched (1/2). Conditional agreement with
    the sender is (bob, eve) = (0, 1), (1/2, 1/2), (1, 1/2) respectively,
    which makes both expected agreements 5n/8 and both expected Hamming
    distances 3n/8.
    """

    n: int
    case_fractions: tuple[float, float, float]
    bob_case_agreement: tuple[float, float, float]
    eve_case_agreement: tuple[float, float, float]
    bob_expected: float
    eve_expected: float
    bob_hamming: float
    eve_hamming: float


def expected_agreement_analytic(n: int) -> AgreementBreakdown:
    """Expected agreement counts on an n-bit sifted string under the attack."""
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    fractions = (0.25, 0.25, 0.5)
    bob_cond = (0.0, 0.5, 1.0)
    eve_cond = (1.0, 0.5, 0.5)
    bob = n * sum(f * p for f, p in zip(fractions, bob_cond))
    eve = n * sum(f * p for f, p in zip(fractions, eve_cond))
    return AgreementBreakdown(
        n=n,
        case_fractions=fractions,
        bob_case_agreement=bob_cond,
        eve_case_agreement=eve_cond,
        bob_expected=bob,
        eve_expected=eve,
        bob_hamming=n - bob,
        eve_hamming=n - eve,
    )


def binary_entropy(p: float) -> float:
    """h2(p) in bits, with h2(0) = h2(1) = 0 by continuity."""
    if not 0.0 <= p <= 1.0:
        raise InvalidInputError(f"probability outside [0, 1]: {p}")
    if p in (0.0, 1.0):
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def one_way_key_rate(e_bob: float, e_eve: float) -> float:
    """h2(e_eve) - h2(e_bob): a proxy for the one-way distillable key rate.

    Models both parties' knowledge of the sender's string as binary
    symmetric channels; positive exactly when the receiver's channel is
    less noisy than the eavesdropper's, which is the regime where one-way
    reconciliation plus hashing can still yield a secret key.
    """
    for name, e in (("e_bob", e_bob), ("e_eve", e_eve)):
        if not 0.0 <= e <= 0.5:
            raise InvalidInputError(f"{name} outside [0, 1/2]: {e}")
    return binary_entropy(e_eve) - binary_entropy(e_bob)


@dataclass(frozen=True)
class RunStats:
    """Aggregate of a Monte Carlo batch.

    Agreement fractions are normalized per run by that run's sifted length,
    then averaged. Eve fields are None for batches without an attack; the
    key-rate estimate then uses e_eve = 1/2 (a blind adversary). Means over
    quantities undefined in some runs (e.g. the test error rate when the
    sift could not supply a test set) skip those runs.
    """

    trials: int
    bob_agreement_mean: float
    bob_agreement_std: float
    eve_agreement_mean: float | None
    eve_agreement_std: float | None
    test_error_rate_mean: float | None
    test_error_rate_std: float | None
    sifted_length_mean: float
    sifted_length_std: float
    abort_rate: float
    one_way_key_rate_estimate: float

    def json_dict(self, n: int, alpha: float, attack: str, test_source: str) -> dict:
        return {
            "n": n,
            "alpha": alpha,
            "attack": attack,
            "test_source": test_source,
            "trials": self.trials,
            "bob_mean": self.bob_agreement_mean,
            "bob_std": self.bob_agreement_std,
            "eve_mean": self.eve_agreement_mean,
            "eve_std": self.eve_agreement_std,
            "test_err_mean": self.test_error_rate_mean,
            "test_err_std": self.test_error_rate_std,
            "sifted_mean": self.sifted_length_mean,
            "sifted_std": self.sifted_length_std,
            "abort_rate": self.abort_rate,
            "key_rate": self.one_way_key_rate_estimate,
        }

    def csv_row(self, n: int, alpha: float, attack: str, test_source: str) -> list[str]:
        """Values in CSV_HEADER order; absent quantities are empty cells."""

        def cell(v) -> str:
            return "" if v is None else repr(v) if isinstance(v, float) else str(v)

        return [
            cell(n),
            cell(alpha),
            attack,
            test_source,
            cell(self.trials),
            cell(self.bob_agreement_mean),
            cell(self.bob_agreement_std),
            cell(self.eve_agreement_mean),
            cell(self.eve_agreement_std),
            cell(self.test_error_rate_mean),
            cell(self.abort_rate),
            cell(self.one_way_key_rate_estimate),
        ]


def trial_seed(master_seed: int, trial_index: int) -> np.random.SeedSequence:
    """Stable per-trial stream: SeedSequence over (master_seed, trial_index)."""
    return np.random.SeedSequence(entropy=(master_seed, trial_index))


def _trial_metrics(
    config: ProtocolConfig,
    attack: "_adversary.AttackSpec | None",
    master_seed: int,
    index: int,
) -> tuple[float, float, float, float, float]:
    t = run_bb84(config, attack, trial_seed(master_seed, index))
    m = len(t.sift)
    bob = agreement(t.sift.x_b, t.sift.x_a) / m if m else math.nan
    eve = math.nan
    if t.eve_estimate is not None and m:
        eve = agreement(t.eve_estimate, t.sift.x_a) / m
    rate = math.nan if t.test_error_rate is None else t.test_error_rate
    return float(m), bob, eve, rate, float(t.aborted)


def _mean_std(values: np.ndarray) -> tuple[float | None, float | None]:
    defined = values[~np.isnan(values)]
    if defined.size == 0:
        return None, None
    mean = float(defined.mean())
    std = float(defined.std(ddof=1)) if defined.size > 1 else 0.0
    return mean, std


def monte_carlo(
    config: ProtocolConfig,
    attack: "_adversary.AttackSpec | None",
    trials: int,
    master_seed: int,
    workers: int = 1,
) -> RunStats:
    """Run independent trials and aggregate them into RunStats.

    Trial i uses the stream trial_seed(master_seed, i); metrics are gathered
    in trial order and reduced once, so the result is identical for any
    worker count. Any run-level configuration error aborts the whole batch.
    """
    if trials < 1:
        raise InvalidInputError("trials must be >= 1")
    if workers < 1:
        raise InvalidInputError("workers must be >= 1")

    fn = partial(_trial_metrics, config, attack, master_seed)
    if workers == 1:
        rows = [fn(i) for i in range(trials)]
    else:
        chunk = max(1, trials // (workers * 4))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(fn, range(trials), chunksize=chunk))

    table = np.asarray(rows, dtype=np.float64)
    sifted, bob, eve, test_rate, aborted = table.T

    bob_mean, bob_std = _mean_std(bob)
    eve_mean, eve_std = _mean_std(eve)
    err_mean, err_std = _mean_std(test_rate)
    sift_mean = float(sifted.mean())
    sift_std = float(sifted.std(ddof=1)) if trials > 1 else 0.0

    e_bob = min(max(1.0 - (bob_mean if bob_mean is not None else 1.0), 0.0), 0.5)
    e_eve = 0.5 if eve_mean is None else min(max(1.0 - eve_mean, 0.0), 0.5)

    return RunStats(
        trials=trials,
        bob_agreement_mean=bob_mean if bob_mean is not None else math.nan,
        bob_agreement_std=bob_std if bob_std is not None else math.nan,
        eve_agreement_mean=eve_mean,
        eve_agreement_std=eve_std,
        test_error_rate_mean=err_mean,
        test_error_rate_std=err_std,
        sifted_length_mean=sift_mean,
        sifted_length_std=sift_std,
        abort_rate=float(aborted.mean()),
        one_way_key_rate_estimate=one_way_key_rate(e_bob, e_eve),
    )


@dataclass(frozen=True)
class CaseStats:
    """Per-case tallies over sifted bits: counts and agreement counts.

    Case 0: intercepted, prepared in the interception basis. Case 1:
    intercepted, prepared in the conjugate basis. Case 2: untouched.
    """

    counts: tuple[int, int, int]
    bob_agree: tuple[int, int, int]
    eve_agree: tuple[int, int, int]

    def __add__(self, other: "CaseStats") -> "CaseStats":
        return CaseStats(
            counts=tuple(a + b for a, b in zip(self.counts, other.counts)),
            bob_agree=tuple(a + b for a, b in zip(self.bob_agree, other.bob_agree)),
            eve_agree=tuple(a + b for a, b in zip(self.eve_agree, other.eve_agree)),
        )

    @property
    def total(self) -> int:
        return sum(self.counts)

    @property
    def fractions(self) -> tuple[float, float, float]:
        return tuple(c / self.total for c in self.counts)

    def conditional_agreement(self, which: str) -> tuple[float, ...]:
        agree = self.bob_agree if which == "bob" else self.eve_agree
        return tuple(a / c if c else math.nan for a, c in zip(agree, self.counts))


def case_stats(
    transcript: Transcript,
    attacked_indices,
    attack_basis: Basis = Basis.COMPUTATIONAL,
) -> CaseStats:
    """Classify each sifted bit of an attacked run and tally agreements."""
    if transcript.eve_estimate is None:
        raise InvalidInputError("case statistics need a run with an attack")
    origin = transcript.sift.kept_indices
    attacked = np.isin(origin, np.asarray(sorted(attacked_indices), dtype=np.int64))
    alice_basis = transcript.y[origin]
    in_attack_basis = alice_basis == attack_basis.value

    case0 = attacked & in_attack_basis
    case1 = attacked & ~in_attack_basis
    case2 = ~attacked
    bob_ok = transcript.sift.x_b == transcript.sift.x_a
    eve_ok = transcript.eve_estimate == transcript.sift.x_a

    def tally(mask) -> tuple[int, int, int]:
        return (
            int(np.count_nonzero(case0 & mask)),
            int(np.count_nonzero(case1 & mask)),
            int(np.count_nonzero(case2 & mask)),
        )

    return CaseStats(
        counts=(
            int(case0.sum()),
            int(case1.sum()),
            int(case2.sum()),
        ),
        bob_agree=tally(bob_ok),
        eve_agree=tally(eve_ok),
    )
