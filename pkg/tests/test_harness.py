import itertools
import json
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qpcsim.adversary import TpBehavior, TpKind
from qpcsim.harness import (
    InputPolicy,
    Scenario,
    TrialStats,
    compare_to_prediction,
    draw_inputs,
    merge_all,
    named_scenario,
    predict_attack_detection,
    predict_eve_detection,
    run_trials,
    write_transcripts,
)
from qpcsim.hashing import mix64
from qpcsim.protocol import ProtocolConfig
from qpcsim.quantum_core import PauliOp


def small(**kw):
    return ProtocolConfig(hash_len=8, n_pairs=8, decoy_count_per_channel=4, **kw)


def test_trial_seed_derivation():
    sc = Scenario("s", small(), 5, base_seed=99)
    assert sc.trial_seed(3) == mix64(99 ^ 3)[1]


def test_trials_must_be_positive():
    with pytest.raises(ValueError):
        Scenario("s", small(), 0, 1)


def test_draw_inputs():
    x, y = draw_inputs(InputPolicy.EQUAL_PAIRS, 5)
    assert x == y
    x, y = draw_inputs(InputPolicy.RANDOM_PAIRS, 5)
    assert x != y
    assert draw_inputs((b"a", "b"), 5) == (b"a", b"b")


def test_honest_equal_pairs():
    stats = run_trials(named_scenario("honest", 100, 1))
    assert stats.wrong_verdicts == 0
    assert stats.verdict_counts["EQUAL"] == 100


def test_attack_original_case_one():
    stats = run_trials(named_scenario("attack-original", 1000, 11))
    assert stats.wrong_verdicts == 1000
    assert stats.detection_count == 0


def test_attack_improved_s10():
    p = predict_attack_detection(10)
    sc = named_scenario("attack-improved", 2000, 5, hash_len=8, n_pairs=14, decoy_count_per_channel=0)
    stats = run_trials(sc)
    n = stats.trials
    assert stats.detection_count >= n * p - 3 * math.sqrt(n * p * (1 - p))


class TestPredictions:
    def test_attack(self):
        assert predict_attack_detection(0) == 0
        assert predict_attack_detection(1) == 0.75
        assert predict_attack_detection(10) == pytest.approx(1 - 9.5367431640625e-07, abs=1e-15)

    def test_attack_from_enumeration(self):
        inconsistent = sum((a ^ b) != PauliOp.I for a, b in itertools.product(PauliOp, repeat=2))
        assert inconsistent == 12
        assert predict_attack_detection(1) == inconsistent / 16

    def test_eve(self):
        assert predict_eve_detection(0) == 0
        assert predict_eve_detection(1) == 0.25
        assert predict_eve_detection(20) == pytest.approx(0.99683, abs=5e-6)

    def test_negative(self):
        with pytest.raises(ValueError):
            predict_attack_detection(-1)
        with pytest.raises(ValueError):
            predict_eve_detection(-1)


class TestCompare:
    def test_exact(self):
        rep = compare_to_prediction(0.75, 0.75, 10_000)
        assert rep.passed and rep.z == 0

    def test_far(self):
        rep = compare_to_prediction(0.80, 0.75, 10_000)
        assert not rep.passed and rep.z == pytest.approx(11.547, abs=1e-3)

    def test_close(self):
        assert compare_to_prediction(0.752, 0.75, 10_000).passed

    def test_degenerate_p(self):
        assert compare_to_prediction(0.0, 0.0, 100).passed
        assert not compare_to_prediction(0.01, 0.0, 100).passed

    def test_requires_30(self):
        with pytest.raises(ValueError):
            compare_to_prediction(0.5, 0.5, 29)


def test_reproducible_bytes():
    sc = named_scenario("attack-improved", 200, 3, hash_len=8, n_pairs=10)
    assert run_trials(sc).to_json() == run_trials(sc).to_json()


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 60), st.integers(0, 60), st.integers(0, 2**64 - 1))
def test_merge_associativity(a, b, seed):
    lo, hi = sorted((a, b))
    sc = Scenario("m", small(), 60, seed, InputPolicy.RANDOM_PAIRS)
    whole = run_trials(sc, 0, hi)
    parts = run_trials(sc, 0, lo).merge(run_trials(sc, lo, hi))
    assert parts.to_dict() == whole.to_dict()
    assert parts.sampling_inconsistency_sum == whole.sampling_inconsistency_sum


def test_merge_all_three_ranges():
    sc = Scenario("m", small(tp_behavior=TpBehavior(TpKind.SAME_STATE_ATTACK)), 30, 8)
    merged = merge_all([run_trials(sc, 0, 10), run_trials(sc, 10, 20), run_trials(sc, 20, 30)])
    assert merged.to_dict() == run_trials(sc).to_dict()


def test_counts_consistent():
    stats = run_trials(named_scenario("eve", 300, 4, decoy_count_per_channel=2))
    assert sum(stats.verdict_counts.values()) == stats.trials == 300
    assert stats.detection_count == stats.verdict_counts["ABORT_TP_CHEATING"]


def test_mean_inconsistency_exact():
    stats = TrialStats(sampling_checks=3, sampling_inconsistency_sum=Fraction(1, 2))
    assert stats.mean_sampling_inconsistency == pytest.approx(1 / 6)


def test_transcript_stream(tmp_path):
    path = tmp_path / "t.jsonl"
    with open(path, "w") as fh:
        run_trials(named_scenario("honest", 5, 2), on_transcript=write_transcripts(fh))
    lines = path.read_text().splitlines()
    assert len(lines) == 5
    assert [json.loads(ln)["trial"] for ln in lines] == list(range(5))


def test_unknown_scenario():
    with pytest.raises(KeyError):
        named_scenario("nope", 1, 1)
