"""Seeded Monte-Carlo runs of the protocol and their closed-form predictions."""

from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import IO, Callable, Iterable, Union

from .adversary import Channel, Inference, TpBehavior, TpKind
from .hashing import derive_seed, mix64_out
from .protocol import ProtocolConfig, Transcript, Variant, Verdict, dumps, round_sig, run_protocol


class InputPolicy(enum.Enum):
    EQUAL_PAIRS = "EQUAL_PAIRS"
    RANDOM_PAIRS = "RANDOM_PAIRS"  # always x != y


Inputs = Union[InputPolicy, tuple[bytes, bytes]]


@dataclass(frozen=True)
class Scenario:
    name: str
    config: ProtocolConfig
    trials: int
    base_seed: int
    inputs: Inputs = InputPolicy.RANDOM_PAIRS

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError("trials must be >= 1")

    def trial_seed(self, t: int) -> int:
        return mix64_out(self.base_seed ^ t)

    def trial_config(self, t: int) -> ProtocolConfig:
        seed = self.trial_seed(t)
        x, y = draw_inputs(self.inputs, seed)
        return replace(self.config, seed=seed, x=x, y=y)


def draw_inputs(inputs: Inputs, seed: int) -> tuple[bytes, bytes]:
    if not isinstance(inputs, InputPolicy):
        x, y = inputs
        return (x.encode() if isinstance(x, str) else x), (y.encode() if isinstance(y, str) else y)
    rng = random.Random(derive_seed(seed, "inputs"))
    x = rng.getrandbits(64).to_bytes(8, "big").hex().encode()
    if inputs is InputPolicy.EQUAL_PAIRS:
        return x, x
    y = x
    while y == x:
        y = rng.getrandbits(64).to_bytes(8, "big").hex().encode()
    return x, y


@dataclass
class TrialStats:
    """Counters over a contiguous range of trial indices.

    Every field is an exact count (the inconsistency sum is a Fraction), so
    merging adjacent ranges gives exactly the stats of the union.
    """

    trials: int = 0
    verdict_counts: dict[str, int] = field(default_factory=lambda: {v.value: 0 for v in Verdict})
    wrong_verdicts: int = 0
    tp_inference_correct: int = 0
    detection_count: int = 0
    sampling_checks: int = 0
    sampling_inconsistency_sum: Fraction = Fraction(0)
    decoy_mismatches: int = 0
    seeds_of_failures: list[int] = field(default_factory=list)
    hash_collision_seeds: list[int] = field(default_factory=list)

    @property
    def mean_sampling_inconsistency(self) -> float:
        if not self.sampling_checks:
            return 0.0
        return float(self.sampling_inconsistency_sum / self.sampling_checks)

    def eavesdropper_aborts(self) -> int:
        return self.verdict_counts[Verdict.ABORT_EAVESDROPPER.value]

    def record(self, tr: Transcript) -> None:
        seed = tr.config.seed
        verdict = tr.participant_verdict
        self.trials += 1
        self.verdict_counts[verdict.value] += 1
        if not verdict.aborted and (verdict is Verdict.EQUAL) != tr.ground_truth_equal:
            self.wrong_verdicts += 1
            self.seeds_of_failures.append(seed)
        truth = Inference.EQUAL if tr.ground_truth_equal else Inference.UNEQUAL
        self.tp_inference_correct += tr.tp_inference is truth
        self.detection_count += verdict is Verdict.ABORT_TP_CHEATING
        if tr.sampling_check is not None:
            chk = tr.sampling_check
            self.sampling_checks += 1
            self.sampling_inconsistency_sum += Fraction(chk.mismatches, len(chk.checked_positions))
        self.decoy_mismatches += tr.decoy_mismatches
        if tr.hash_equal and not tr.ground_truth_equal:
            self.hash_collision_seeds.append(seed)

    def merge(self, later: TrialStats) -> TrialStats:
        """Combine with the stats of the trial range that directly follows this one."""
        return TrialStats(
            trials=self.trials + later.trials,
            verdict_counts={k: self.verdict_counts[k] + later.verdict_counts[k] for k in self.verdict_counts},
            wrong_verdicts=self.wrong_verdicts + later.wrong_verdicts,
            tp_inference_correct=self.tp_inference_correct + later.tp_inference_correct,
            detection_count=self.detection_count + later.detection_count,
            sampling_checks=self.sampling_checks + later.sampling_checks,
            sampling_inconsistency_sum=self.sampling_inconsistency_sum + later.sampling_inconsistency_sum,
            decoy_mismatches=self.decoy_mismatches + later.decoy_mismatches,
            seeds_of_failures=self.seeds_of_failures + later.seeds_of_failures,
            hash_collision_seeds=self.hash_collision_seeds + later.hash_collision_seeds,
        )

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "verdict_counts": dict(self.verdict_counts),
            "wrong_verdicts": self.wrong_verdicts,
            "tp_inference_correct": self.tp_inference_correct,
            "detection_count": self.detection_count,
            "eavesdropper_aborts": self.eavesdropper_aborts(),
            "sampling_checks": self.sampling_checks,
            "mean_sampling_inconsistency": round_sig(self.mean_sampling_inconsistency),
            "decoy_mismatches": self.decoy_mismatches,
            "seeds_of_failures": list(self.seeds_of_failures),
            "hash_collision_seeds": list(self.hash_collision_seeds),
        }

    def to_json(self, **kwargs) -> str:
        return dumps(self.to_dict(), **kwargs)


def run_trials(
    scenario: Scenario,
    start: int = 0,
    stop: int | None = None,
    on_transcript: Callable[[int, Transcript], None] | None = None,
) -> TrialStats:
    """Run trials ``start <= t < stop`` (default: all) of a scenario.

    Trial ``t`` is fully determined by ``scenario.trial_seed(t)``, so any range
    can be re-run on its own and ranges can be merged in index order.
    """
    stop = scenario.trials if stop is None else stop
    stats = TrialStats()
    for t in range(start, stop):
        tr = run_protocol(scenario.trial_config(t))
        stats.record(tr)
        if on_transcript is not None:
            on_transcript(t, tr)
    return stats


def write_transcripts(fh: IO[str]) -> Callable[[int, Transcript], None]:
    """JSON Lines sink for ``run_trials(on_transcript=...)``."""

    def sink(t: int, tr: Transcript) -> None:
        fh.write(dumps({"trial": t, **tr.to_dict()}) + "\n")

    return sink


def predict_attack_detection(s: int) -> float:
    """Chance the improved protocol catches a same-state TP with ``s`` revealed sampling pairs.

    A revealed pair looks consistent only when ``uB ^ uC == 00``: 4 of 16 op pairs.
    """
    if s < 0:
        raise ValueError("s must be >= 0")
    return 1 - 0.25**s


def predict_eve_detection(d: int) -> float:
    """Chance an intercept-resend eavesdropper trips at least one of ``d`` decoys."""
    if d < 0:
        raise ValueError("d must be >= 0")
    return 1 - 0.75**d


@dataclass(frozen=True)
class PredictionReport:
    passed: bool
    z: float
    empirical: float
    predicted: float
    sigma: float
    trials: int

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "z": round_sig(self.z) if math.isfinite(self.z) else str(self.z),
            "empirical": round_sig(self.empirical),
            "predicted": round_sig(self.predicted),
            "sigma": round_sig(self.sigma),
            "trials": self.trials,
        }


def compare_to_prediction(empirical: float, predicted: float, trials: int) -> PredictionReport:
    """3-sigma binomial band around ``predicted``."""
    if trials < 30:
        raise ValueError("need at least 30 trials for a normal-approximation band")
    sigma = math.sqrt(predicted * (1 - predicted) / trials)
    diff = abs(empirical - predicted)
    if sigma == 0:
        z = 0.0 if diff == 0 else math.inf
    else:
        z = diff / sigma
    return PredictionReport(diff <= 3 * sigma, z, empirical, predicted, sigma, trials)


# --- named scenarios ------------------------------------------------------------

ATTACK = TpBehavior(TpKind.SAME_STATE_ATTACK)

SCENARIOS: dict[str, tuple[ProtocolConfig, InputPolicy]] = {
    "honest": (ProtocolConfig(), InputPolicy.EQUAL_PAIRS),
    "honest-unequal": (ProtocolConfig(), InputPolicy.RANDOM_PAIRS),
    "attack-original": (ProtocolConfig(tp_behavior=ATTACK), InputPolicy.RANDOM_PAIRS),
    "attack-original-equal": (ProtocolConfig(tp_behavior=ATTACK), InputPolicy.EQUAL_PAIRS),
    "attack-improved": (ProtocolConfig(tp_behavior=ATTACK, variant=Variant.IMPROVED), InputPolicy.RANDOM_PAIRS),
    "eve": (ProtocolConfig(eve_on=frozenset({Channel.TP_B})), InputPolicy.EQUAL_PAIRS),
}

DEMO_SCENARIOS = ("honest", "attack-original", "attack-improved", "eve")


def named_scenario(name: str, trials: int, base_seed: int, **overrides) -> Scenario:
    if name not in SCENARIOS:
        raise KeyError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}")
    config, inputs = SCENARIOS[name]
    return Scenario(name, replace(config, **overrides), trials, base_seed, inputs)


def merge_all(parts: Iterable[TrialStats]) -> TrialStats:
    total = TrialStats()
    for part in parts:
        total = total.merge(part)
    return total
