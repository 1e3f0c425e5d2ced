"""Misbehaving parties: the dishonest third party and a channel eavesdropper."""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

from .quantum_core import Basis, BellCode, DecoyState, PairState, collapse_half, decoy_measure


class Channel(enum.Enum):
    TP_B = "TP->B"
    TP_C = "TP->C"
    B_TP = "B->TP"
    C_TP = "C->TP"

    @classmethod
    def parse(cls, text: str) -> Channel:
        """Accepts ``TP->B``, ``tp-b``, ``TP_B``, ``TP→B`` and the like."""
        key = "".join(ch for ch in text.upper() if ch.isalpha())
        for ch in cls:
            if key == "".join(c for c in ch.value if c.isalpha()):
                return ch
        raise ValueError(f"unknown channel {text!r}; expected one of {[c.value for c in cls]}")


class TpKind(enum.Enum):
    HONEST = "HONEST"
    SAME_STATE_ATTACK = "SAME_STATE_ATTACK"


class Inference(enum.Enum):
    EQUAL = "EQUAL"
    UNEQUAL = "UNEQUAL"
    UNKNOWN = "UNKNOWN"


@dataclass(frozen=True)
class TpBehavior:
    kind: TpKind = TpKind.HONEST
    attack_state: BellCode = BellCode.PHI_PLUS

    @property
    def attacking(self) -> bool:
        return self.kind is TpKind.SAME_STATE_ATTACK

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "attack_state": self.attack_state.label}

    @classmethod
    def from_value(cls, value: Union[str, dict, TpBehavior]) -> TpBehavior:
        if isinstance(value, TpBehavior):
            return value
        if isinstance(value, str):
            return cls(TpKind(_TP_ALIASES.get(value.lower(), value.upper())))
        return cls(
            TpKind(_TP_ALIASES.get(value["kind"].lower(), value["kind"].upper())),
            BellCode.from_label(value.get("attack_state", "Phi+")),
        )


_TP_ALIASES = {"honest": "HONEST", "same-state": "SAME_STATE_ATTACK", "attack": "SAME_STATE_ATTACK"}


@dataclass(frozen=True)
class EveModel:
    """Intercept-resend eavesdropper on a set of channels; touches every photon there."""

    channels: frozenset[Channel] = field(default_factory=frozenset)
    strategy: str = "INTERCEPT_RESEND"

    def taps(self, channel: Channel) -> bool:
        return channel in self.channels

    @classmethod
    def on(cls, channels: Iterable[Channel]) -> EveModel:
        return cls(frozenset(channels))


Photon = Union[DecoyState, PairState]


def eve_intercept_resend(photon: Photon, rng: random.Random) -> Photon:
    """Measure in a random basis and forward the eigenstate found.

    For an EPR half the pair is left as a product state, see ``PairState``.
    """
    basis = Basis.Z if rng.getrandbits(1) == 0 else Basis.X
    if isinstance(photon, DecoyState):
        return DecoyState(basis, decoy_measure(photon, basis, rng))
    return collapse_half(photon, basis)


def tp_infer_result(
    true_outcomes: Sequence[BellCode], behavior: TpBehavior, improved: bool = False
) -> Inference:
    """What an attacking TP learns from its own Bell measurements.

    With every pair prepared in ``attack_state`` and untouched sampling pairs,
    any outcome off ``attack_state`` must come from unequal encodings.  The rule
    says nothing once sampling pairs are randomised, so it is only applied to
    the original protocol.
    """
    if not behavior.attacking or improved:
        return Inference.UNKNOWN
    if all(o == behavior.attack_state for o in true_outcomes):
        return Inference.EQUAL
    return Inference.UNEQUAL
