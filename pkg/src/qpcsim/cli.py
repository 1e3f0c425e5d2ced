"""Command-line entry point: ``qpcsim {run,predict,vectors,demo}``.

JSON goes to stdout, human-readable notes to stderr.  Exit codes: 0 success,
1 internal failure (including a fixture vector mismatch), 2 bad usage or config.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from contextlib import ExitStack
from dataclasses import replace
from typing import Sequence

from .adversary import Channel, TpBehavior
from .hashing import verify_vectors
from .harness import (
    DEMO_SCENARIOS,
    SCENARIOS,
    InputPolicy,
    Scenario,
    named_scenario,
    predict_attack_detection,
    predict_eve_detection,
    run_trials,
    write_transcripts,
)
from .protocol import ConfigError, ProtocolConfig, Variant, dumps, round_sig, run_protocol

log = logging.getLogger("qpcsim")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("must be a 64-bit unsigned integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qpcsim", description="Quantum private comparison attack simulator.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run a Monte-Carlo scenario, print TrialStats JSON")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--scenario", choices=sorted(SCENARIOS))
    src.add_argument("--config", metavar="PATH", help="JSON file with ProtocolConfig fields")
    run.add_argument("--trials", type=int, default=1)
    run.add_argument("--seed", type=_u64, required=True)
    run.add_argument("--n-pairs", type=int)
    run.add_argument("--hash-len", type=int)
    run.add_argument("--variant", choices=["original", "improved"])
    run.add_argument("--tp", choices=["honest", "same-state"])
    run.add_argument("--eve", metavar="CHANNELS", help="comma list of TP->B,TP->C,B->TP,C->TP, or 'none'")
    run.add_argument("--decoys", type=int, help="decoy photons per channel")
    run.add_argument("--reveal-fraction", type=float)
    run.add_argument("--threshold", type=float, help="sampling inconsistency threshold")
    run.add_argument("--x")
    run.add_argument("--y")
    run.add_argument("--inputs", choices=["equal", "random"], help="input policy when --x/--y are absent")
    run.add_argument("--transcripts", metavar="PATH", help="write one JSON transcript per trial")

    pred = sub.add_parser("predict", help="closed-form detection probabilities")
    pred.add_argument("--attack-sampling", type=int, action="append", default=[], metavar="S")
    pred.add_argument("--eve-decoys", type=int, action="append", default=[], metavar="D")

    sub.add_parser("vectors", help="recompute and check the hash/permutation fixture vectors")

    demo = sub.add_parser("demo", help="one full transcript per canonical scenario (JSON Lines)")
    demo.add_argument("--seed", type=_u64, default=0)
    return parser


def _scenario_from_args(args: argparse.Namespace) -> Scenario:
    if args.trials < 1:
        raise ConfigError("--trials must be >= 1")
    if args.scenario:
        scenario = named_scenario(args.scenario, args.trials, args.seed)
        config, inputs = scenario.config, scenario.inputs
    else:
        try:
            with open(args.config, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        config = ProtocolConfig.from_dict(data)
        inputs = (config.x, config.y) if "x" in data and "y" in data else InputPolicy.RANDOM_PAIRS

    changes: dict = {}
    if args.n_pairs is not None:
        changes["n_pairs"] = args.n_pairs
    if args.hash_len is not None:
        changes["hash_len"] = args.hash_len
    if args.variant:
        changes["variant"] = Variant(args.variant.upper())
    if args.tp:
        changes["tp_behavior"] = TpBehavior.from_value(args.tp)
    if args.eve is not None:
        names = [] if args.eve.strip().lower() in ("", "none") else args.eve.split(",")
        try:
            changes["eve_on"] = frozenset(Channel.parse(n) for n in names)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if args.decoys is not None:
        changes["decoy_count_per_channel"] = args.decoys
    if args.reveal_fraction is not None:
        changes["reveal_fraction_sampling"] = args.reveal_fraction
    if args.threshold is not None:
        changes["inconsistency_threshold"] = args.threshold
    config = replace(config, **changes).validate()

    if (args.x is None) != (args.y is None):
        raise ConfigError("--x and --y must be given together")
    if args.x is not None:
        inputs = (args.x.encode(), args.y.encode())
    elif args.inputs:
        inputs = InputPolicy.EQUAL_PAIRS if args.inputs == "equal" else InputPolicy.RANDOM_PAIRS
    return Scenario(args.scenario or "custom", config, args.trials, args.seed, inputs)


def cmd_run(args: argparse.Namespace) -> int:
    scenario = _scenario_from_args(args)
    log.info("running %s: %d trials from base seed %d", scenario.name, scenario.trials, scenario.base_seed)
    with ExitStack() as stack:
        sink = None
        if args.transcripts:
            fh = stack.enter_context(open(args.transcripts, "w", encoding="utf-8"))
            sink = write_transcripts(fh)
        stats = run_trials(scenario, on_transcript=sink)
    out = {"scenario": scenario.name, "base_seed": scenario.base_seed, **stats.to_dict()}
    print(dumps(out))
    return 0


def cmd_predict(args: argparse.Namespace) -> int:
    if not args.attack_sampling and not args.eve_decoys:
        raise UsageError("give --attack-sampling and/or --eve-decoys")
    if any(v < 0 for v in args.attack_sampling + args.eve_decoys):
        raise ConfigError("counts must be >= 0")
    out = {
        "attack_detection": {str(s): round_sig(predict_attack_detection(s)) for s in args.attack_sampling},
        "eve_detection": {str(d): round_sig(predict_eve_detection(d)) for d in args.eve_decoys},
    }
    print(dumps(out))
    return 0


def cmd_vectors(args: argparse.Namespace) -> int:
    results = verify_vectors()
    failures = [r for r in results if not r["ok"]]
    print(dumps({"ok": not failures, "checked": len(results), "failures": failures}))
    return 1 if failures else 0


def cmd_demo(args: argparse.Namespace) -> int:
    for name in DEMO_SCENARIOS:
        scenario = named_scenario(name, 1, args.seed)
        tr = run_protocol(scenario.trial_config(0))
        print(
            f"{name}: verdict={tr.participant_verdict.value} truth_equal={tr.ground_truth_equal} "
            f"tp_inference={tr.tp_inference.value}",
            file=sys.stderr,
        )
        print(dumps({"scenario": name, **tr.to_dict()}))
    return 0


COMMANDS = {"run": cmd_run, "predict": cmd_predict, "vectors": cmd_vectors, "demo": cmd_demo}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(
            level=logging.INFO if args.verbose else logging.WARNING,
            format="%(levelname)s %(message)s",
            stream=sys.stderr,
        )
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"qpcsim: error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, KeyError) as exc:
        print(f"qpcsim: invalid config: {exc}", file=sys.stderr)
        return 2
    except AssertionError as exc:
        print(f"qpcsim: internal check failed: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
