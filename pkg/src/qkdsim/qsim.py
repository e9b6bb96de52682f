"""Idealized conjugate-coding qubits.

The four BB84 states under basis measurement obey an exact classical rule:
matched-basis measurement reproduces the encoded bit, conjugate-basis
measurement yields a fair coin and collapses the state. That rule is all the
simulator needs, so there are no amplitudes anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "Basis",
    "ConjugateQubit",
    "QubitRegister",
    "encode",
    "measure",
    "flip",
    "as_register",
    "measure_register",
    "apply_bitflip_noise",
]


class Basis(Enum):
    """Preparation/measurement basis: |0>,|1> or |+>,|->."""

    COMPUTATIONAL = 0
    DIAGONAL = 1

    @classmethod
    def from_bit(cls, bit: int) -> "Basis":
        return cls.DIAGONAL if bit else cls.COMPUTATIONAL

    def conjugate(self) -> "Basis":
        return Basis.DIAGONAL if self is Basis.COMPUTATIONAL else Basis.COMPUTATIONAL


_KETS = {(0, Basis.COMPUTATIONAL): "|0>", (1, Basis.COMPUTATIONAL): "|1>",
         (0, Basis.DIAGONAL): "|+>", (1, Basis.DIAGONAL): "|->"}


@dataclass(frozen=True)
class ConjugateQubit:
    """One transmitted qubit: a classical bit and the basis it is encoded in."""

    bit: int
    basis: Basis

    def __post_init__(self):
        if self.bit not in (0, 1):
            raise InvalidInputError(f"bit must be 0 or 1, got {self.bit!r}")

    def ket(self) -> str:
        return _KETS[(self.bit, self.basis)]


def encode(bit: int, basis: Basis) -> ConjugateQubit:
    """Prepare the state carrying ``bit`` in ``basis``."""
    return ConjugateQubit(int(bit), basis)


def measure(q: ConjugateQubit, basis: Basis, rng: np.random.Generator) -> int:
    """Measure ``q`` in ``basis``.

    Matched basis returns the encoded bit deterministically; the conjugate
    basis returns a fair coin. The post-measurement state is
    encode(outcome, basis) - re-measuring in the original basis after a
    conjugate measurement is 50/50 again, which is the disturbance an
    interceptor cannot avoid.
    """
    if basis is q.basis:
        return q.bit
    return int(rng.integers(0, 2))


def flip(q: ConjugateQubit) -> ConjugateQubit:
    """Complement the encoded bit, keeping the basis (|0> <-> |1>, |+> <-> |->)."""
    return ConjugateQubit(q.bit ^ 1, q.basis)


@dataclass(frozen=True, eq=False)
class QubitRegister:
    """A block of conjugate qubits as parallel bit/basis arrays.

    Equivalent to a list of ConjugateQubit but cheap to transform in bulk;
    treat the arrays as read-only.
    """

    bits: np.ndarray
    bases: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=np.uint8)
        bases = np.asarray(self.bases, dtype=np.uint8)
        if bits.shape != bases.shape or bits.ndim != 1:
            raise InvalidInputError("bits and bases must be 1-d arrays of equal length")
        object.__setattr__(self, "bits", bits)
        object.__setattr__(self, "bases", bases)

    def __len__(self) -> int:
        return self.bits.size

    def to_qubits(self) -> list[ConjugateQubit]:
        return [
            ConjugateQubit(int(b), Basis(int(y)))
            for b, y in zip(self.bits.tolist(), self.bases.tolist())
        ]

    @classmethod
    def from_qubits(cls, qubits: Sequence[ConjugateQubit]) -> "QubitRegister":
        return cls(
            bits=np.fromiter((q.bit for q in qubits), dtype=np.uint8, count=len(qubits)),
            bases=np.fromiter(
                (q.basis.value for q in qubits), dtype=np.uint8, count=len(qubits)
            ),
        )


def as_register(qubits) -> QubitRegister:
    """Coerce a qubit sequence or register to a QubitRegister."""
    if isinstance(qubits, QubitRegister):
        return qubits
    return QubitRegister.from_qubits(qubits)


def measure_register(
    reg: QubitRegister, bases: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Measure every qubit of ``reg`` in the corresponding entry of ``bases``.

    Vectorized form of ``measure``: matched positions reproduce the encoded
    bit, mismatched positions get independent fair coins from ``rng``.
    """
    bases = np.asarray(bases, dtype=np.uint8)
    if bases.shape != reg.bits.shape:
        raise InvalidInputError("basis array length does not match register")
    coins = rng.integers(0, 2, size=reg.bits.size, dtype=np.uint8)
    return np.where(reg.bases == bases, reg.bits, coins)


def apply_bitflip_noise(
    reg: QubitRegister, flip_prob: float, rng: np.random.Generator
) -> QubitRegister:
    """Independently complement each qubit's bit with probability flip_prob."""
    if not 0.0 <= flip_prob <= 1.0:
        raise InvalidInputError(f"flip probability outside [0, 1]: {flip_prob}")
    if flip_prob == 0.0:
        return reg
    flips = (rng.random(reg.bits.size) < flip_prob).astype(np.uint8)
    return QubitRegister(bits=reg.bits ^ flips, bases=reg.bases)
