"""Bell-state algebra for EPR pairs under local Pauli encodings.

Two backends live here:

* a symbolic Pauli-frame backend (``PairState``) that tracks a Bell state as two
  bits plus a global sign, and
* a dense backend over 4-component complex vectors, used as an oracle to
  cross-check the symbolic one.

Bit conventions: a Bell state is ``(parity, phase)`` with parity 0 for the
``|00>±|11>`` family and phase 0 for ``+``.  An encoding unitary is a 2-bit code
whose first bit flips parity (sigma_x) and second bit flips phase (sigma_z), so
``U_11 = i*sigma_y = sigma_z @ sigma_x``.  With this convention the Bell state
after local operations is ``initial XOR opB XOR opC``.
"""

from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass, replace
from typing import NamedTuple, Sequence

import numpy as np

__all__ = [
    "Basis",
    "BellCode",
    "DecoyState",
    "PairState",
    "PauliOp",
    "Side",
    "apply_pauli_to_bell",
    "collapse_half",
    "decoy_measure",
    "decoy_prepare",
    "deduce_op_xor",
    "dense_apply",
    "dense_apply_and_project",
    "dense_bell_probabilities",
    "dense_bell_project",
    "dense_bell_vector",
    "dense_decoy_vector",
    "dense_measure_half",
    "encode_bits_to_ops",
    "measure_bell",
]

AMPLITUDE_ATOL = 1e-9


class BellCode(enum.IntEnum):
    """Bell state label; the integer value is ``parity << 1 | phase``."""

    PHI_PLUS = 0b00
    PHI_MINUS = 0b01
    PSI_PLUS = 0b10
    PSI_MINUS = 0b11

    @property
    def parity(self) -> int:
        return self.value >> 1

    @property
    def phase(self) -> int:
        return self.value & 1

    @classmethod
    def from_bits(cls, parity: int, phase: int) -> BellCode:
        return cls((parity & 1) << 1 | (phase & 1))

    @property
    def label(self) -> str:
        return _BELL_LABELS[self]

    @classmethod
    def from_label(cls, label: str) -> BellCode:
        for code, text in _BELL_LABELS.items():
            if text == label or code.name == label:
                return code
        raise ValueError(f"unknown Bell state label {label!r}")

    def __xor__(self, other: int) -> BellCode:
        return BellCode(int(self) ^ int(other))


_BELL_LABELS = {
    BellCode.PHI_PLUS: "Phi+",
    BellCode.PHI_MINUS: "Phi-",
    BellCode.PSI_PLUS: "Psi+",
    BellCode.PSI_MINUS: "Psi-",
}


class PauliOp(enum.IntEnum):
    """Encoding unitary; the integer value is the two-bit message it carries."""

    I = 0b00  # noqa: E741
    Z = 0b01
    X = 0b10
    Y = 0b11  # i*sigma_y

    @property
    def bits(self) -> tuple[int, int]:
        return self.value >> 1, self.value & 1

    @property
    def label(self) -> str:
        return format(self.value, "02b")

    @classmethod
    def from_bits(cls, first: int, second: int) -> PauliOp:
        return cls((first & 1) << 1 | (second & 1))

    @classmethod
    def from_label(cls, label: str) -> PauliOp:
        if label in cls.__members__:
            return cls[label]
        return cls(int(label, 2))

    def __xor__(self, other: int) -> PauliOp:
        return PauliOp(int(self) ^ int(other))


class Side(enum.Enum):
    B = "B"
    C = "C"


class Basis(enum.Enum):
    Z = "Z"
    X = "X"


@dataclass(frozen=True, slots=True)
class PairState:
    """Joint state of one EPR pair in the Pauli frame.

    ``sign`` is the global phase relative to the canonical Bell vector; it is
    never observable and only kept so the dense oracle can be matched exactly.

    ``parity_known`` / ``phase_known`` are both true for a genuine Bell state.
    A single-qubit measurement in transit (an intercept-resend eavesdropper)
    turns the pair into a product state: a Z measurement erases the phase bit,
    an X measurement erases the parity bit.  The remaining bit keeps obeying the
    XOR law and a later Bell measurement draws the erased bit uniformly.
    """

    bell: BellCode
    sign: int = 1
    parity_known: bool = True
    phase_known: bool = True

    @property
    def is_bell(self) -> bool:
        return self.parity_known and self.phase_known


def _pauli_action(bell: int, op: int, side: Side) -> tuple[BellCode, int]:
    parity, phase = bell >> 1, bell & 1
    sign = 1
    if op & 0b10:
        if side is Side.B and phase:
            sign = -sign
        parity ^= 1
    if op & 0b01:
        if side is Side.C and parity:
            sign = -sign
        phase ^= 1
    return BellCode.from_bits(parity, phase), sign


_PAULI_TABLE = {(b, o, side): _pauli_action(b, o, side) for b in range(4) for o in range(4) for side in Side}


def apply_pauli_to_bell(state: PairState, op: PauliOp, side: Side) -> PairState:
    """Apply ``U_op`` to one half of the pair.

    The code is XORed into the Bell label regardless of side.  The sign follows
    from acting with sigma_x first and sigma_z second on
    ``(|0,a> + (-1)^b |1,1-a>)/sqrt2``: on side B sigma_x picks up ``(-1)^b``,
    on side C sigma_z picks up ``(-1)^a``.
    """
    if op == 0:
        return state
    bell, flip = _PAULI_TABLE[state.bell, op, side]
    return PairState(bell, state.sign * flip, state.parity_known, state.phase_known)


def collapse_half(state: PairState, basis: Basis) -> PairState:
    """Project one half of the pair onto ``basis`` (the global sign is lost)."""
    if basis is Basis.Z:
        return replace(state, sign=1, phase_known=False)
    return replace(state, sign=1, parity_known=False)


def measure_bell(state: PairState, rng: random.Random | None = None) -> BellCode:
    """Bell-basis measurement.  Deterministic unless the pair was collapsed."""
    if state.is_bell:
        return state.bell
    if rng is None:
        raise ValueError("measuring a collapsed pair needs an rng")
    parity = state.bell.parity if state.parity_known else rng.getrandbits(1)
    phase = state.bell.phase if state.phase_known else rng.getrandbits(1)
    return BellCode.from_bits(parity, phase)


def deduce_op_xor(initial: BellCode, final: BellCode) -> PauliOp:
    """Combined operation ``opB XOR opC`` implied by an initial/final pair."""
    return PauliOp(int(initial) ^ int(final))


def encode_bits_to_ops(hash_bits: Sequence[int]) -> list[PauliOp]:
    """Map hash bits ``(x'_{M-1}, ..., x'_0)`` to one PauliOp per encoding pair.

    Op ``k`` carries ``(x'_{2k}, x'_{2k+1})``.  An odd-length hash gets one
    leading zero bit first, so the most significant position is the padded one.
    """
    bits = [int(b) for b in hash_bits]
    if not bits:
        raise ValueError("hash_bits must not be empty")
    if any(b not in (0, 1) for b in bits):
        raise ValueError("hash_bits must contain only 0/1")
    if len(bits) % 2:
        bits.insert(0, 0)
    low_first = bits[::-1]  # low_first[i] == x'_i
    return [PauliOp.from_bits(low_first[2 * k], low_first[2 * k + 1]) for k in range(len(bits) // 2)]


class DecoyState(NamedTuple):
    basis: Basis
    value: int

    @property
    def label(self) -> str:
        return {(Basis.Z, 0): "0", (Basis.Z, 1): "1", (Basis.X, 0): "+", (Basis.X, 1): "-"}[self]


DECOY_STATES = tuple(DecoyState(b, v) for b in Basis for v in (0, 1))


def decoy_prepare(rng: random.Random) -> DecoyState:
    return DECOY_STATES[rng.randrange(4)]


def decoy_measure(state: DecoyState, basis: Basis, rng: random.Random) -> int:
    """Measure a decoy photon.  The post-measurement state is ``DecoyState(basis, result)``."""
    if basis is state.basis:
        return state.value
    return rng.getrandbits(1)


# --- dense oracle ---------------------------------------------------------

_S = 1 / math.sqrt(2)

PAULI_MATRICES: dict[PauliOp, np.ndarray] = {
    PauliOp.I: np.array([[1, 0], [0, 1]], dtype=complex),
    PauliOp.Z: np.array([[1, 0], [0, -1]], dtype=complex),
    PauliOp.X: np.array([[0, 1], [1, 0]], dtype=complex),
    PauliOp.Y: np.array([[0, 1], [-1, 0]], dtype=complex),
}

_BELL_VECTORS: dict[BellCode, np.ndarray] = {
    BellCode.PHI_PLUS: np.array([_S, 0, 0, _S], dtype=complex),
    BellCode.PHI_MINUS: np.array([_S, 0, 0, -_S], dtype=complex),
    BellCode.PSI_PLUS: np.array([0, _S, _S, 0], dtype=complex),
    BellCode.PSI_MINUS: np.array([0, _S, -_S, 0], dtype=complex),
}

_QUBIT_BASES: dict[Basis, tuple[np.ndarray, np.ndarray]] = {
    Basis.Z: (np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex)),
    Basis.X: (np.array([_S, _S], dtype=complex), np.array([_S, -_S], dtype=complex)),
}


def dense_bell_vector(bell: BellCode) -> np.ndarray:
    """Amplitudes in the order ``|00>, |01>, |10>, |11>``."""
    return _BELL_VECTORS[BellCode(bell)].copy()


def dense_apply(vec: np.ndarray, op_b: PauliOp, op_c: PauliOp) -> np.ndarray:
    return np.kron(PAULI_MATRICES[op_b], PAULI_MATRICES[op_c]) @ vec


def dense_bell_probabilities(vec: np.ndarray) -> np.ndarray:
    """Born-rule probabilities of the four Bell outcomes, indexed by BellCode."""
    return np.array([abs(np.vdot(_BELL_VECTORS[b], vec)) ** 2 for b in BellCode])


def dense_bell_project(vec: np.ndarray) -> BellCode:
    """Return the Bell state ``vec`` equals up to global phase, or raise."""
    overlaps = [abs(np.vdot(_BELL_VECTORS[b], vec)) for b in BellCode]
    hits = [b for b, o in zip(BellCode, overlaps) if o >= 1 - AMPLITUDE_ATOL]
    if len(hits) != 1:
        raise ArithmeticError(f"vector is not a Bell state (overlaps {overlaps})")
    return hits[0]


def dense_apply_and_project(bell: BellCode, op_b: PauliOp, op_c: PauliOp) -> BellCode:
    return dense_bell_project(dense_apply(dense_bell_vector(bell), op_b, op_c))


def dense_measure_half(
    vec: np.ndarray, side: Side, basis: Basis, outcome: int
) -> tuple[float, np.ndarray]:
    """Project one qubit of a two-qubit vector; returns (probability, normalised post-state)."""
    ket = _QUBIT_BASES[basis][outcome]
    proj = np.outer(ket, ket.conj())
    full = np.kron(proj, np.eye(2)) if side is Side.B else np.kron(np.eye(2), proj)
    post = full @ vec
    prob = float(np.vdot(post, post).real)
    if prob < AMPLITUDE_ATOL:
        return 0.0, post
    return prob, post / math.sqrt(prob)


def dense_decoy_vector(state: DecoyState) -> np.ndarray:
    return _QUBIT_BASES[state.basis][state.value].copy()
