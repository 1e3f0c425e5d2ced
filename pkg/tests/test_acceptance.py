"""Exit criteria, each driven through the command-line interface.

Statistical bands are 3 sigma binomial; every command uses a fixed seed so the
outcome of each check is itself reproducible.
"""

import contextlib
import io
import itertools
import json
import time

import pytest

from qpcsim.cli import main
from qpcsim.harness import compare_to_prediction, predict_attack_detection, predict_eve_detection
from qpcsim.quantum_core import (
    BellCode,
    PairState,
    PauliOp,
    Side,
    apply_pauli_to_bell,
    dense_apply_and_project,
    measure_bell,
)

pytestmark = pytest.mark.acceptance

TRIALS_MC = 10_000
ATTACK_S = (1, 2, 5, 10)
EVE_D = (1, 4, 16)

COMMANDS = {
    "c2-equal": ["run", "--scenario", "honest", "--trials", "1000", "--seed", "2001"],
    "c2-unequal": ["run", "--scenario", "honest-unequal", "--trials", "1000", "--seed", "2002"],
    "c3": ["run", "--scenario", "attack-original", "--trials", "1000", "--seed", "3001"],
    "c4": ["run", "--scenario", "attack-original-equal", "--trials", "1000", "--seed", "4001"],
    **{
        f"c5-s{s}": [
            "run", "--scenario", "attack-improved", "--trials", str(TRIALS_MC), "--seed", str(5000 + s),
            "--hash-len", "8", "--n-pairs", str(4 + s), "--reveal-fraction", "1", "--decoys", "4",
        ]
        for s in ATTACK_S
    },
    **{
        f"c6-d{d}": [
            "run", "--scenario", "eve", "--eve", "TP->B", "--trials", str(TRIALS_MC), "--seed", str(6000 + d),
            "--hash-len", "8", "--n-pairs", "8", "--decoys", str(d),
        ]
        for d in EVE_D
    },
    "c6-no-eve": [
        "run", "--scenario", "honest-unequal", "--eve", "none", "--trials", "2000", "--seed", "6100",
        "--decoys", "16",
    ],
    "c8": ["vectors"],
    "predict": ["predict", "--attack-sampling", "1", "--attack-sampling", "10", "--eve-decoys", "20"],
}

_stdout_cache: dict[str, str] = {}


def invoke(argv):
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = main(argv)
    return code, buf.getvalue()


def cli_json(name):
    if name not in _stdout_cache:
        code, out = invoke(COMMANDS[name])
        assert code == 0, (name, code)
        _stdout_cache[name] = out
    return json.loads(_stdout_cache[name])


def test_c1_backend_equivalence(record_criterion):
    start = time.perf_counter()
    mismatches = 0
    for bell, op_b, op_c in itertools.product(BellCode, PauliOp, PauliOp):
        s = apply_pauli_to_bell(apply_pauli_to_bell(PairState(bell), op_b, Side.B), op_c, Side.C)
        mismatches += measure_bell(s) is not dense_apply_and_project(bell, op_b, op_c)
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and elapsed < 1.0
    record_criterion(1, "symbolic vs dense, 64 combos", ok, f"mismatches={mismatches} time={elapsed:.3f}s")
    assert ok


def test_c2_completeness(record_criterion):
    start = time.perf_counter()
    eq = cli_json("c2-equal")
    neq = cli_json("c2-unequal")
    elapsed = time.perf_counter() - start
    collisions = neq["hash_collision_seeds"]
    all_equal = eq["verdict_counts"]["EQUAL"] == 1000
    # a collision forces an EQUAL verdict; those trials are excluded, the rest must be UNEQUAL
    all_unequal = neq["verdict_counts"]["UNEQUAL"] == 1000 - len(collisions) and neq["wrong_verdicts"] == len(collisions)
    ok = all_equal and all_unequal and elapsed < 10.0
    record_criterion(
        2, "honest completeness", ok,
        f"EQUAL {eq['verdict_counts']['EQUAL']}/1000, UNEQUAL {neq['verdict_counts']['UNEQUAL']}/"
        f"{1000 - len(collisions)} (collisions excluded: {collisions}) time={elapsed:.2f}s",
    )
    assert ok


def test_c3_attack_original_unequal(record_criterion):
    st = cli_json("c3")
    ok = (
        st["verdict_counts"]["EQUAL"] == 1000
        and st["wrong_verdicts"] == 1000
        and st["detection_count"] == 0
        and st["tp_inference_correct"] == 1000
    )
    record_criterion(
        3, "attack+original, x!=y", ok,
        f"wrong EQUAL {st['wrong_verdicts']}/1000, detected {st['detection_count']}/1000, "
        f"TP correct {st['tp_inference_correct']}/1000",
    )
    assert ok


def test_c4_attack_original_equal(record_criterion):
    st = cli_json("c4")
    ok = st["verdict_counts"]["EQUAL"] == 1000 and st["tp_inference_correct"] == 1000
    record_criterion(
        4, "attack+original, x=y", ok,
        f"EQUAL {st['verdict_counts']['EQUAL']}/1000, TP correct {st['tp_inference_correct']}/1000",
    )
    assert ok


def test_c5_countermeasure(record_criterion):
    start = time.perf_counter()
    inconsistent = sum((a ^ b) is not PauliOp.I for a, b in itertools.product(PauliOp, repeat=2))
    details = [f"enumeration {inconsistent}/16"]
    ok = inconsistent == 12
    for s in ATTACK_S:
        st = cli_json(f"c5-s{s}")
        rep = compare_to_prediction(st["detection_count"] / st["trials"], predict_attack_detection(s), st["trials"])
        ok &= rep.passed and st["trials"] == TRIALS_MC
        details.append(f"s={s}: {rep.empirical:.6f} vs {rep.predicted:.6f} (z={rep.z:.2f})")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 60.0
    record_criterion(5, "improved protocol detects attack", ok, "; ".join(details) + f" time={elapsed:.1f}s")
    assert ok


def test_c6_decoy_soundness(record_criterion):
    details = []
    ok = True
    for d in EVE_D:
        st = cli_json(f"c6-d{d}")
        rep = compare_to_prediction(st["eavesdropper_aborts"] / st["trials"], predict_eve_detection(d), st["trials"])
        ok &= rep.passed
        details.append(f"d={d}: {rep.empirical:.4f} vs {rep.predicted:.4f} (z={rep.z:.2f})")
    clean = cli_json("c6-no-eve")
    ok &= clean["decoy_mismatches"] == 0 and clean["eavesdropper_aborts"] == 0
    details.append(f"no-Eve mismatches={clean['decoy_mismatches']}")
    record_criterion(6, "intercept-resend detection", ok, "; ".join(details))
    assert ok


def test_c7_determinism(record_criterion):
    differing = []
    for name, argv in COMMANDS.items():
        if name not in _stdout_cache:
            cli_json(name)
        code, again = invoke(argv)
        if code != 0 or again != _stdout_cache[name]:
            differing.append(name)
    ok = not differing
    record_criterion(7, "byte-identical reruns", ok, f"{len(COMMANDS)} commands, differing={differing}")
    assert ok


def test_c8_vectors(record_criterion, reference, tmp_path):
    report = cli_json("c8")
    reference.write_fixtures(str(tmp_path))
    from importlib import resources

    data = resources.files("qpcsim").joinpath("data")
    fresh = all(
        (tmp_path / n).read_text() == data.joinpath(n).read_text() for n in ("hash_vectors.txt", "perm_vectors.txt")
    )
    ok = report["ok"] and fresh
    record_criterion(8, "hash/permutation vectors", ok, f"checked={report['checked']} fixtures-match-reference={fresh}")
    assert ok
