"""Simulator for Bell-state quantum private comparison under a dishonest third party."""

from .adversary import Channel, EveModel, Inference, TpBehavior, TpKind
from .hashing import keyed_hash, mix64, sampling_positions
from .protocol import ConfigError, ProtocolConfig, Transcript, Variant, Verdict, run_protocol
from .quantum_core import BellCode, PairState, PauliOp

__all__ = [
    "BellCode",
    "Channel",
    "ConfigError",
    "EveModel",
    "Inference",
    "PairState",
    "PauliOp",
    "ProtocolConfig",
    "TpBehavior",
    "TpKind",
    "Transcript",
    "Variant",
    "Verdict",
    "keyed_hash",
    "mix64",
    "run_protocol",
    "sampling_positions",
]
