"""Eve's composite attack.

Two coordinated moves: an intercept-flip-resend on a designated half of the
transmissions, and a corruption of the sender's test-position source so that
the tampered half is never sampled during parameter estimation. The deliberate
bit flip on resend equalizes the receiver's and the eavesdropper's knowledge
of the sender's sifted string; the identity resend policy is kept as a control
showing that without the flip the receiver stays strictly better informed.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Iterable

import numpy as np

from .combinatorics import log2_binomial
from .entropy_core import SubsetFlatSource, restricted_subset_source
from .errors import InfeasibleAttackError, InvalidInputError
from .qsim import Basis, QubitRegister, as_register

if TYPE_CHECKING:
    from .protocol import SiftResult

__all__ = [
    "ResendPolicy",
    "AttackSpec",
    "EveRecord",
    "attacked_index_array",
    "intercept_resend",
    "eve_estimate",
    "corrupt_test_source",
    "required_loss",
]


class ResendPolicy(Enum):
    """What Eve sends on after measuring: the complement, or a copy."""

    FLIP = "flip"
    IDENTITY = "identity"


@dataclass(frozen=True)
class AttackSpec:
    """Adversary configuration; the defaults are the full attack.

    attacked_indices of None means the first half of the 2n transmissions.
    """

    attacked_indices: tuple[int, ...] | None = None
    attack_basis: Basis = Basis.COMPUTATIONAL
    resend_policy: ResendPolicy = ResendPolicy.FLIP
    corrupt_test_source: bool = True

    def __post_init__(self):
        if self.attacked_indices is not None:
            idx = tuple(sorted(int(i) for i in self.attacked_indices))
            if len(set(idx)) != len(idx):
                raise InvalidInputError("attacked indices must be distinct")
            if idx and idx[0] < 0:
                raise InvalidInputError("attacked indices must be non-negative")
            object.__setattr__(self, "attacked_indices", idx)


def attacked_index_array(spec: AttackSpec, num_transmissions: int) -> np.ndarray:
    """Resolve the attacked transmission indices (default: first half)."""
    if spec.attacked_indices is None:
        return np.arange(num_transmissions // 2)
    idx = np.asarray(spec.attacked_indices, dtype=np.int64)
    if idx.size and idx[-1] >= num_transmissions:
        raise InvalidInputError(
            f"attacked index {int(idx[-1])} outside the {num_transmissions} transmissions"
        )
    return idx


@dataclass(frozen=True, eq=False)
class EveRecord:
    """Eve's measurement outcomes, keyed by attacked transmission index."""

    indices: np.ndarray
    outcomes: np.ndarray

    def __post_init__(self):
        indices = np.asarray(self.indices, dtype=np.int64)
        outcomes = np.asarray(self.outcomes, dtype=np.uint8)
        if indices.shape != outcomes.shape or indices.ndim != 1:
            raise InvalidInputError("indices and outcomes must be aligned 1-d arrays")
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "outcomes", outcomes)

    def as_dict(self) -> dict[int, int]:
        return {int(i): int(b) for i, b in zip(self.indices, self.outcomes)}


def intercept_resend(
    qubits, spec: AttackSpec, rng: np.random.Generator
) -> tuple[QubitRegister, EveRecord] | tuple[list, EveRecord]:
    """Measure the attacked transmissions in Eve's basis and resend.

    Each attacked qubit is measured in spec.attack_basis (collapsing it);
    the resent state re-encodes the outcome in that basis, complemented when
    the policy is FLIP. Untouched positions pass through bit-identical. The
    returned container matches the input type (register in, register out).
    """
    want_list = not isinstance(qubits, QubitRegister)
    reg = as_register(qubits)
    idx = attacked_index_array(spec, len(reg))

    att_bases = reg.bases[idx]
    coins = rng.integers(0, 2, size=idx.size, dtype=np.uint8)
    outcomes = np.where(att_bases == spec.attack_basis.value, reg.bits[idx], coins)
    resent = outcomes ^ 1 if spec.resend_policy is ResendPolicy.FLIP else outcomes

    new_bits = reg.bits.copy()
    new_bases = reg.bases.copy()
    new_bits[idx] = resent
    new_bases[idx] = spec.attack_basis.value
    out = QubitRegister(bits=new_bits, bases=new_bases)
    record = EveRecord(indices=idx, outcomes=outcomes)
    return (out.to_qubits() if want_list else out), record


def eve_estimate(
    record: EveRecord, sift: "SiftResult", rng: np.random.Generator
) -> np.ndarray:
    """Assemble Eve's guess at the sender's sifted string.

    Sifted positions that originated in the attacked set take her measured
    outcome; every other position gets an independent fair coin. The sift
    outcome is public (bases are announced), so she knows which is which.
    """
    origin = np.asarray(sift.kept_indices, dtype=np.int64)
    pos = np.searchsorted(record.indices, origin)
    pos_clipped = np.minimum(pos, max(record.indices.size - 1, 0))
    if record.indices.size:
        known = record.indices[pos_clipped] == origin
        measured = record.outcomes[pos_clipped]
    else:
        known = np.zeros(origin.size, dtype=bool)
        measured = np.zeros(origin.size, dtype=np.uint8)
    coins = rng.integers(0, 2, size=origin.size, dtype=np.uint8)
    return np.where(known, measured, coins)


def corrupt_test_source(
    sift: "SiftResult", attacked: Iterable[int], k: int
) -> SubsetFlatSource:
    """Flat source over test sets that avoid every attacked-origin position.

    The support is every canonical k-subset encoding (in the honest
    (m, k) code, m = sifted length) whose positions all originate outside
    ``attacked``; its min-entropy is log2 C(m', k) for a pool of m' allowed
    positions. Raises InfeasibleAttackError when m' < k.
    """
    attacked_set = np.asarray(sorted(set(int(a) for a in attacked)), dtype=np.int64)
    origin = np.asarray(sift.kept_indices, dtype=np.int64)
    from_attacked = np.isin(origin, attacked_set)
    allowed = np.nonzero(~from_attacked)[0]
    return restricted_subset_source(
        universe=origin.size, allowed=(int(p) for p in allowed), k=k
    )


def required_loss(n: int, k: int) -> float:
    """Minimal min-entropy loss (bits) that confines k test positions to n/2.

    log2 C(n, k) - log2 C(n/2, k): the gap between naming a k-subset of all
    n positions and naming one inside the designated half.
    """
    if n < 2 or n % 2:
        raise InvalidInputError(f"n must be even and >= 2, got {n}")
    if k < 0:
        raise InvalidInputError("k must be non-negative")
    if k > n // 2:
        raise InfeasibleAttackError(
            f"k={k} positions cannot all avoid half of n={n}"
        )
    return log2_binomial(n, k) - log2_binomial(n // 2, k)
