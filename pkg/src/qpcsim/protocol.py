"""Bell-state private comparison with a third party, original and improved variants.

One call to :func:`run_protocol` plays Steps 1-5 for Bob, Charlie and TP and
returns a :class:`Transcript`.  Party knowledge is kept apart on purpose: TP's
functions only ever see what TP physically holds (pair halves in sequence
order), never roles, positions or the disarrangement secret.
"""

from __future__ import annotations

import enum
import json
import math
import random
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence, Union

from .adversary import (
    Channel,
    EveModel,
    Inference,
    TpBehavior,
    eve_intercept_resend,
    tp_infer_result,
)
from .hashing import HashFunction, derive_seed, keyed_hash, sampling_positions
from .quantum_core import (
    BellCode,
    DecoyState,
    PairState,
    PauliOp,
    Side,
    apply_pauli_to_bell,
    decoy_measure,
    decoy_prepare,
    deduce_op_xor,
    encode_bits_to_ops,
    measure_bell,
)


class Variant(enum.Enum):
    ORIGINAL = "ORIGINAL"
    IMPROVED = "IMPROVED"


class Role(enum.Enum):
    ENCODING = "ENCODING"
    SAMPLING = "SAMPLING"


class Verdict(enum.Enum):
    EQUAL = "EQUAL"
    UNEQUAL = "UNEQUAL"
    ABORT_EAVESDROPPER = "ABORT_EAVESDROPPER"
    ABORT_TP_CHEATING = "ABORT_TP_CHEATING"

    @property
    def aborted(self) -> bool:
        return self in (Verdict.ABORT_EAVESDROPPER, Verdict.ABORT_TP_CHEATING)


class ConfigError(ValueError):
    pass


def round_sig(x: float, digits: int = 6) -> float:
    return float(format(x, f".{digits}g"))


def dumps(obj: Any, **kwargs: Any) -> str:
    """Deterministic JSON: insertion-ordered keys, no NaN."""
    return json.dumps(obj, ensure_ascii=False, allow_nan=False, **kwargs)


def _as_bytes(value: Union[str, bytes]) -> bytes:
    return value.encode("utf-8") if isinstance(value, str) else bytes(value)


def _as_text(value: bytes) -> str:
    return value.decode("utf-8", errors="backslashreplace")


@dataclass(frozen=True)
class ProtocolConfig:
    variant: Variant = Variant.ORIGINAL
    n_pairs: int = 32
    hash_len: int = 32
    decoy_count_per_channel: int = 16
    reveal_fraction_sampling: float = 1.0
    inconsistency_threshold: float = 0.0
    tp_behavior: TpBehavior = field(default_factory=TpBehavior)
    eve_on: frozenset[Channel] = frozenset()
    seed: int = 0
    x: bytes = b""
    y: bytes = b""
    # None: derived from ``seed`` (the participants' pre-shared secrets)
    hash_key: int | None = None
    l: int | None = None
    decoy_threshold: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", _as_bytes(self.x))
        object.__setattr__(self, "y", _as_bytes(self.y))
        object.__setattr__(self, "eve_on", frozenset(self.eve_on))

    @property
    def n_encoding(self) -> int:
        return -(-self.hash_len // 2)

    @property
    def n_sampling(self) -> int:
        return self.n_pairs - self.n_encoding

    def validate(self) -> ProtocolConfig:
        if self.hash_len < 1:
            raise ConfigError(f"hash_len must be >= 1, got {self.hash_len}")
        if self.n_pairs <= self.n_encoding:
            raise ConfigError(
                f"n_pairs must exceed ceil(hash_len/2) = {self.n_encoding}, got {self.n_pairs}"
            )
        if self.decoy_count_per_channel < 0:
            raise ConfigError("decoy_count_per_channel must be >= 0")
        if not 0 < self.reveal_fraction_sampling <= 1:
            raise ConfigError("reveal_fraction_sampling must be in (0, 1]")
        for name in ("inconsistency_threshold", "decoy_threshold"):
            if not 0 <= getattr(self, name) < 1:
                raise ConfigError(f"{name} must be in [0, 1)")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        return self

    def to_dict(self) -> dict:
        return {
            "variant": self.variant.value,
            "n_pairs": self.n_pairs,
            "hash_len": self.hash_len,
            "decoy_count_per_channel": self.decoy_count_per_channel,
            "reveal_fraction_sampling": round_sig(self.reveal_fraction_sampling),
            "inconsistency_threshold": round_sig(self.inconsistency_threshold),
            "tp_behavior": self.tp_behavior.to_dict(),
            "eve_on": sorted(c.value for c in self.eve_on),
            "seed": self.seed,
            "x": _as_text(self.x),
            "y": _as_text(self.y),
            "hash_key": self.hash_key,
            "l": self.l,
            "decoy_threshold": round_sig(self.decoy_threshold),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> ProtocolConfig:
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        kw: dict[str, Any] = dict(data)
        try:
            if "variant" in kw:
                kw["variant"] = Variant(str(kw["variant"]).upper())
            if "tp_behavior" in kw:
                kw["tp_behavior"] = TpBehavior.from_value(kw["tp_behavior"])
            if "eve_on" in kw:
                kw["eve_on"] = frozenset(Channel.parse(c) for c in kw["eve_on"])
        except (ValueError, KeyError) as exc:
            raise ConfigError(str(exc)) from exc
        return cls(**kw)


@dataclass(slots=True)
class PairRecord:
    original_index: int
    role: Role
    initial: BellCode
    opB: PauliOp = PauliOp.I
    opC: PauliOp = PauliOp.I
    shuffled_position: int = -1
    tp_outcome_announced: BellCode | None = None
    # None only when the run stopped before TP measured
    tp_outcome_true: BellCode | None = None

    def to_dict(self) -> dict:
        return {
            "original_index": self.original_index,
            "role": self.role.value,
            "initial": self.initial.label,
            "opB": self.opB.label,
            "opC": self.opC.label,
            "shuffled_position": self.shuffled_position,
            "tp_outcome_announced": None if self.tp_outcome_announced is None else self.tp_outcome_announced.label,
            "tp_outcome_true": None if self.tp_outcome_true is None else self.tp_outcome_true.label,
        }


@dataclass(slots=True)
class DecoyRecord:
    channel: Channel
    position: int
    prepared: DecoyState
    measured_value: int | None = None

    @property
    def mismatch(self) -> bool:
        return self.measured_value != self.prepared.value

    def to_dict(self) -> dict:
        return {
            "channel": self.channel.value,
            "position": self.position,
            "prepared": self.prepared.label,
            "measured_value": self.measured_value,
        }


@dataclass(frozen=True)
class DecoyCheck:
    passed: bool
    error_rate: float
    checked: int
    mismatches: int

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "error_rate": round_sig(self.error_rate),
            "checked": self.checked,
            "mismatches": self.mismatches,
        }


@dataclass(frozen=True)
class SamplingCheck:
    passed: bool
    inconsistency_rate: float
    checked_positions: tuple[int, ...]
    mismatches: int

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "inconsistency_rate": round_sig(self.inconsistency_rate),
            "checked_positions": list(self.checked_positions),
            "mismatches": self.mismatches,
        }


Slot = Union[int, DecoyRecord]


@dataclass
class ChannelPayload:
    """Photon sequence on one channel: pair indices interleaved with decoys."""

    channel: Channel
    slots: list[Slot]

    @property
    def decoys(self) -> list[DecoyRecord]:
        return [s for s in self.slots if isinstance(s, DecoyRecord)]

    @property
    def pair_indices(self) -> list[int]:
        return [s for s in self.slots if not isinstance(s, DecoyRecord)]


@dataclass(frozen=True)
class Transcript:
    config: ProtocolConfig
    pairs: tuple[PairRecord, ...]
    decoys: tuple[DecoyRecord, ...]
    tp_preannouncement: dict[int, BellCode]
    improved_sampling_ops_published: dict[int, tuple[PauliOp, PauliOp]] | None
    decoy_check_results: dict[Channel, DecoyCheck]
    sampling_check: SamplingCheck | None
    encoding_reveal: dict[int, BellCode] | None
    participant_verdict: Verdict
    tp_inference: Inference
    ground_truth_equal: bool
    hash_equal: bool
    events: tuple[str, ...]

    @property
    def decoy_mismatches(self) -> int:
        return sum(c.mismatches for c in self.decoy_check_results.values())

    def to_dict(self) -> dict:
        ops = self.improved_sampling_ops_published
        return {
            "config": self.config.to_dict(),
            "pairs": [p.to_dict() for p in self.pairs],
            "decoys": [d.to_dict() for d in self.decoys],
            "tp_preannouncement": {str(k): v.label for k, v in self.tp_preannouncement.items()},
            "improved_sampling_ops_published": None
            if ops is None
            else {str(k): [b.label, c.label] for k, (b, c) in ops.items()},
            "decoy_check_results": {ch.value: r.to_dict() for ch, r in self.decoy_check_results.items()},
            "sampling_check": None if self.sampling_check is None else self.sampling_check.to_dict(),
            "encoding_reveal": None
            if self.encoding_reveal is None
            else {str(k): v.label for k, v in self.encoding_reveal.items()},
            "participant_verdict": self.participant_verdict.value,
            "tp_inference": self.tp_inference.value,
            "ground_truth_equal": self.ground_truth_equal,
            "hash_equal": self.hash_equal,
            "events": list(self.events),
        }

    def to_json(self, **kwargs: Any) -> str:
        return dumps(self.to_dict(), **kwargs)


# --- steps --------------------------------------------------------------------


def _insert_decoys(
    pair_order: Sequence[int], channel: Channel, count: int, rng: random.Random
) -> ChannelPayload:
    total = len(pair_order) + count
    decoy_slots = set(rng.sample(range(total), count)) if count else set()
    pairs_iter = iter(pair_order)
    slots: list[Slot] = []
    for pos in range(total):
        if pos in decoy_slots:
            slots.append(DecoyRecord(channel, pos, decoy_prepare(rng)))
        else:
            slots.append(next(pairs_iter))
    return ChannelPayload(channel, slots)


def tp_prepare(
    config: ProtocolConfig, rng: random.Random
) -> tuple[list[PairRecord], ChannelPayload, ChannelPayload]:
    """Step 2: prepare ``n_pairs`` Bell states and the two decoy-laced sequences."""
    behavior = config.tp_behavior
    pairs = []
    for i in range(config.n_pairs):
        initial = behavior.attack_state if behavior.attacking else BellCode(rng.randrange(4))
        role = Role.ENCODING if i < config.n_encoding else Role.SAMPLING
        pairs.append(PairRecord(i, role, initial))
    order = list(range(config.n_pairs))
    t_b = _insert_decoys(order, Channel.TP_B, config.decoy_count_per_channel, rng)
    t_c = _insert_decoys(order, Channel.TP_C, config.decoy_count_per_channel, rng)
    return pairs, t_b, t_c


def transmit(
    payload: ChannelPayload,
    states: list[PairState],
    eve: EveModel,
    rng_eve: random.Random,
) -> dict[int, DecoyState]:
    """Send a payload through its channel.

    Pair halves are updated in ``states`` in place (indexed by original pair
    index); the returned map gives each decoy's state on arrival, by slot.
    """
    tapped = eve.taps(payload.channel)
    arrived: dict[int, DecoyState] = {}
    for pos, slot in enumerate(payload.slots):
        if isinstance(slot, DecoyRecord):
            arrived[pos] = eve_intercept_resend(slot.prepared, rng_eve) if tapped else slot.prepared
        elif tapped:
            states[slot] = eve_intercept_resend(states[slot], rng_eve)
    return arrived


def measure_decoys(payload: ChannelPayload, arrived: Mapping[int, DecoyState], rng: random.Random) -> None:
    """Receiver measures each decoy in the basis the sender discloses."""
    for rec in payload.decoys:
        rec.measured_value = decoy_measure(arrived[rec.position], rec.prepared.basis, rng)


def check_decoys(records: Sequence[DecoyRecord], threshold: float) -> DecoyCheck:
    if any(r.measured_value is None for r in records):
        raise ValueError("every decoy must be measured before the check")
    mismatches = sum(r.mismatch for r in records)
    rate = mismatches / len(records) if records else 0.0
    return DecoyCheck(rate <= threshold, rate, len(records), mismatches)


def participant_encode(
    hash_digest: Sequence[int], pairs: list[PairRecord], side: Side
) -> list[PairRecord]:
    """Step 4: put this participant's hash onto the first ``ceil(M/2)`` pairs."""
    ops = encode_bits_to_ops(hash_digest)
    encoding = [p for p in pairs if p.role is Role.ENCODING]
    if len(ops) != len(encoding):
        raise ValueError(f"digest gives {len(ops)} ops for {len(encoding)} encoding pairs")
    for rec, op in zip(sorted(encoding, key=lambda p: p.original_index), ops):
        if side is Side.B:
            rec.opB = op
        else:
            rec.opC = op
    return pairs


def improved_sampling_ops(
    pairs: list[PairRecord], rng: random.Random, side: Side, variant: Variant = Variant.IMPROVED
) -> tuple[list[PairRecord], dict[int, PauliOp]]:
    """Random Pauli on each sampling pair for this side; returns the list to publish."""
    if variant is not Variant.IMPROVED:
        raise ValueError("sampling-pair randomisation only exists in the improved variant")
    published: dict[int, PauliOp] = {}
    for rec in pairs:
        if rec.role is Role.SAMPLING:
            op = PauliOp(rng.randrange(4))
            if side is Side.B:
                rec.opB = op
            else:
                rec.opC = op
            published[rec.original_index] = op
    return pairs, published


def disarrange(pairs: list[PairRecord], l: int) -> list[PairRecord]:
    """Assign shuffled positions: sampling pairs where ``l`` says, encoding pairs in the gaps."""
    n = len(pairs)
    sampling = [p for p in pairs if p.role is Role.SAMPLING]
    encoding = [p for p in pairs if p.role is Role.ENCODING]
    taken = sampling_positions(l, n, len(sampling))
    for rec, pos in zip(sampling, taken):
        rec.shuffled_position = pos
    free = sorted(set(range(n)) - set(taken))
    for rec, pos in zip(encoding, free):
        rec.shuffled_position = pos
    return pairs


def tp_measure(received: Sequence[PairState], rng: random.Random) -> list[BellCode]:
    """TP's Bell measurement on the pairs it holds, in received order."""
    return [measure_bell(s, rng) for s in received]


def tp_announce(true_outcomes: Sequence[BellCode], behavior: TpBehavior) -> list[BellCode]:
    """TP's committed answer for every position (the attack claims its fake state everywhere)."""
    if behavior.attacking:
        return [behavior.attack_state] * len(true_outcomes)
    return list(true_outcomes)


def tp_measure_and_announce(
    received: Sequence[PairState], behavior: TpBehavior, rng: random.Random
) -> tuple[list[BellCode], list[BellCode]]:
    """Returns ``(announced, true)`` outcomes per position."""
    true = tp_measure(received, rng)
    return tp_announce(true, behavior), true


def tp_publish_initial(prepared: Sequence[BellCode], indices: Sequence[int]) -> dict[int, BellCode]:
    return {i: prepared[i] for i in indices}


def _reveal_count(fraction: float, size: int) -> int:
    return min(size, math.ceil(round(fraction * size, 9)))


def verify_sampling(
    pairs: Sequence[PairRecord],
    announced: Mapping[int, BellCode],
    checked_positions: Sequence[int],
    preannouncement: Mapping[int, BellCode],
    published_ops: Mapping[int, tuple[PauliOp, PauliOp]] | None,
    variant: Variant,
    threshold: float,
) -> SamplingCheck:
    """Compare TP's revealed sampling outcomes against what the participants expect."""
    by_position = {p.shuffled_position: p for p in pairs}
    mismatches = 0
    for pos in checked_positions:
        if pos not in announced:
            raise KeyError(f"no announcement for position {pos}")
        rec = by_position[pos]
        expected = preannouncement[rec.original_index]
        if variant is Variant.IMPROVED:
            assert published_ops is not None
            u_b, u_c = published_ops[rec.original_index]
            expected = expected ^ (u_b ^ u_c)
        mismatches += announced[pos] != expected
    rate = mismatches / len(checked_positions) if checked_positions else 0.0
    return SamplingCheck(rate <= threshold, rate, tuple(checked_positions), mismatches)


def deduce_comparison(
    pairs: Sequence[PairRecord],
    initial_states: Mapping[int, BellCode],
    announced: Mapping[int, BellCode],
    side: Side,
) -> Verdict:
    """One participant's conclusion from the encoding-pair reveals.

    The XOR of initial and announced state is ``opB ^ opC``; removing one's own
    op recovers the counterpart's, and the inputs match iff every recovered op
    equals one's own.
    """
    for rec in pairs:
        if rec.role is not Role.ENCODING:
            continue
        combined = deduce_op_xor(initial_states[rec.original_index], announced[rec.shuffled_position])
        own = rec.opB if side is Side.B else rec.opC
        if own ^ combined != own:
            return Verdict.UNEQUAL
    return Verdict.EQUAL


# --- full run -----------------------------------------------------------------


@dataclass
class _Run:
    """Mutable scratch state of one run; frozen into a Transcript at the end."""

    config: ProtocolConfig
    pairs: list[PairRecord] = field(default_factory=list)
    decoys: list[DecoyRecord] = field(default_factory=list)
    checks: dict[Channel, DecoyCheck] = field(default_factory=dict)
    preannouncement: dict[int, BellCode] = field(default_factory=dict)
    published_ops: dict[int, tuple[PauliOp, PauliOp]] | None = None
    sampling_check: SamplingCheck | None = None
    encoding_reveal: dict[int, BellCode] | None = None
    tp_inference: Inference = Inference.UNKNOWN
    events: list[str] = field(default_factory=list)
    hash_equal: bool = False

    def finish(self, verdict: Verdict) -> Transcript:
        self.events.append(f"verdict:{verdict.value}")
        return Transcript(
            config=self.config,
            pairs=tuple(self.pairs),
            decoys=tuple(self.decoys),
            tp_preannouncement=self.preannouncement,
            improved_sampling_ops_published=self.published_ops,
            decoy_check_results=self.checks,
            sampling_check=self.sampling_check,
            encoding_reveal=self.encoding_reveal,
            participant_verdict=verdict,
            tp_inference=self.tp_inference,
            ground_truth_equal=self.config.x == self.config.y,
            hash_equal=self.hash_equal,
            events=tuple(self.events),
        )


def run_protocol(config: ProtocolConfig, hash_fn: HashFunction | None = None) -> Transcript:
    """Play one complete comparison and return its transcript.

    ``hash_fn(msg, hash_len)`` replaces the keyed toy hash when given.
    Aborts end the run early and are reported as verdicts.
    """
    config.validate()
    seed = config.seed
    rng_tp = random.Random(derive_seed(seed, "tp"))
    rng_b = random.Random(derive_seed(seed, "bob"))
    rng_c = random.Random(derive_seed(seed, "charlie"))
    rng_joint = random.Random(derive_seed(seed, "participants"))
    rng_eve = random.Random(derive_seed(seed, "eve"))
    rng_nature = random.Random(derive_seed(seed, "nature"))
    eve = EveModel.on(config.eve_on)
    behavior = config.tp_behavior
    improved = config.variant is Variant.IMPROVED
    run = _Run(config)

    # Step 1: shared hash H and secret l are pre-shared between Bob and Charlie.
    hash_key = config.hash_key if config.hash_key is not None else derive_seed(seed, "hash-key")
    l_secret = config.l if config.l is not None else derive_seed(seed, "disarrange-l")
    if hash_fn is None:
        digest_x = keyed_hash(hash_key, config.x, config.hash_len)
        digest_y = keyed_hash(hash_key, config.y, config.hash_len)
    else:
        digest_x = tuple(hash_fn(config.x, config.hash_len))
        digest_y = tuple(hash_fn(config.y, config.hash_len))
    run.hash_equal = digest_x == digest_y
    run.events.append("step1:hash")

    # Step 2
    pairs, t_b, t_c = tp_prepare(config, rng_tp)
    prepared = [p.initial for p in pairs]
    states = [PairState(p.initial) for p in pairs]
    run.pairs = pairs
    run.events.append("step2:prepare")

    # Step 3
    for payload in (t_b, t_c):
        arrived = transmit(payload, states, eve, rng_eve)
        measure_decoys(payload, arrived, rng_nature)
        run.decoys.extend(payload.decoys)
        run.checks[payload.channel] = check_decoys(payload.decoys, config.decoy_threshold)
    run.events.append("step3:decoy-check")
    if not all(c.passed for c in run.checks.values()):
        return run.finish(Verdict.ABORT_EAVESDROPPER)

    # Step 4
    participant_encode(digest_x, pairs, Side.B)
    participant_encode(digest_y, pairs, Side.C)
    run.events.append("step4:encode")
    if improved:
        _, ops_b = improved_sampling_ops(pairs, rng_b, Side.B)
        _, ops_c = improved_sampling_ops(pairs, rng_c, Side.C)
        sampling_ops = {i: (ops_b[i], ops_c[i]) for i in ops_b}
        run.events.append("step4:random-sampling-ops")
    for rec in pairs:
        s = states[rec.original_index]
        states[rec.original_index] = apply_pauli_to_bell(apply_pauli_to_bell(s, rec.opB, Side.B), rec.opC, Side.C)
    disarrange(pairs, l_secret)
    run.events.append("step4:disarrange")
    sampling_indices = [p.original_index for p in pairs if p.role is Role.SAMPLING]
    run.preannouncement = tp_publish_initial(prepared, sampling_indices)
    run.events.append("step4:tp-preannounce")

    order = [0] * config.n_pairs
    for rec in pairs:
        order[rec.shuffled_position] = rec.original_index
    returns = (
        _insert_decoys(order, Channel.B_TP, config.decoy_count_per_channel, rng_b),
        _insert_decoys(order, Channel.C_TP, config.decoy_count_per_channel, rng_c),
    )

    # Step 5
    for payload in returns:
        arrived = transmit(payload, states, eve, rng_eve)
        measure_decoys(payload, arrived, rng_nature)
        run.decoys.extend(payload.decoys)
        run.checks[payload.channel] = check_decoys(payload.decoys, config.decoy_threshold)
    run.events.append("step5:decoy-check")
    if not all(c.passed for c in run.checks.values()):
        return run.finish(Verdict.ABORT_EAVESDROPPER)

    held = [states[i] for i in order]  # everything TP gets to see
    true_outcomes = tp_measure(held, rng_nature)
    for rec in pairs:
        rec.tp_outcome_true = true_outcomes[rec.shuffled_position]
    run.tp_inference = tp_infer_result(true_outcomes, behavior, improved)
    run.events.append("step5:tp-measure")
    if improved:
        run.published_ops = sampling_ops
        run.events.append("step5:publish-sampling-ops")
    committed = tp_announce(true_outcomes, behavior)
    initial_states = tp_publish_initial(prepared, range(config.n_pairs))
    run.events.append("step5:tp-publish-initial")

    sampling_pos = sorted(p.shuffled_position for p in pairs if p.role is Role.SAMPLING)
    k = _reveal_count(config.reveal_fraction_sampling, len(sampling_pos))
    checked = sorted(rng_joint.sample(sampling_pos, k))
    revealed = {pos: committed[pos] for pos in checked}
    by_position = {p.shuffled_position: p for p in pairs}
    for pos, code in revealed.items():
        by_position[pos].tp_outcome_announced = code
    run.sampling_check = verify_sampling(
        pairs, revealed, checked, run.preannouncement, run.published_ops,
        config.variant, config.inconsistency_threshold,
    )
    run.events.append("step5:sampling-check")
    if not run.sampling_check.passed:
        return run.finish(Verdict.ABORT_TP_CHEATING)

    encoding_pos = sorted(p.shuffled_position for p in pairs if p.role is Role.ENCODING)
    run.encoding_reveal = {pos: committed[pos] for pos in encoding_pos}
    for pos, code in run.encoding_reveal.items():
        by_position[pos].tp_outcome_announced = code
    run.events.append("step5:encoding-reveal")
    verdict_b = deduce_comparison(pairs, initial_states, run.encoding_reveal, Side.B)
    verdict_c = deduce_comparison(pairs, initial_states, run.encoding_reveal, Side.C)
    assert verdict_b is verdict_c, "participants reached different verdicts"
    return run.finish(verdict_b)
