"""Command-line harness.

Subcommands: alpha | tree | simulate | opt | adversary | verify | run |
reproduce.  Exit status is 0 on success, 1 when a checked bound or
property was violated, 2 on usage or input errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import __version__
from .alpha import alpha_fast, aspect_ratio
from .adversary import (
    greedy_adversary,
    greedy_params,
    permutation_adversary,
    permutation_params,
    random_layout,
)
from .algorithms import build_rule, build_split_tree, tree_to_dict
from .core import (
    OfalError,
    fraction_str,
    load_instance,
    load_sequence,
    save_instance,
    save_sequence,
    to_coord,
    trace_to_dict,
    unit_instance,
)
from .harness import (
    ExperimentConfig,
    format_reproduce,
    reproduce,
    run_experiment,
    run_algorithm,
)
from .hybrid import check_c3, sweep_hybrid_invariants
from .offline import lexmin_assignment
from .verify import (
    capacity_insensitivity_probe,
    check_faithful,
    check_ratio_bound,
    check_surrounding_oriented,
    sweep_adx,
)

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_ERROR = 2


def _emit(data, fmt: str) -> None:
    if fmt == "json":
        print(json.dumps(data, indent=2))
    else:  # csv-ish flat dump for simple dict payloads
        if isinstance(data, dict):
            for key, value in data.items():
                print(f"{key},{value}")
        else:
            print(data)


def cmd_alpha(args) -> int:
    inst = load_instance(args.instance)
    metrics = alpha_fast(inst.layout)
    _emit(
        {
            "alpha": fraction_str(metrics.alpha),
            "l_value": fraction_str(metrics.l_value),
            "witness": list(metrics.witness),
            "bound": fraction_str(2 * metrics.alpha + 1),
            "aspect_ratio": fraction_str(aspect_ratio(inst.layout)),
        },
        args.format,
    )
    return EXIT_OK


def cmd_tree(args) -> int:
    inst = load_instance(args.instance)
    tree = build_split_tree(inst.layout)
    print(json.dumps(tree_to_dict(tree, inst.layout), indent=2))
    return EXIT_OK


def cmd_simulate(args) -> int:
    inst = load_instance(args.instance)
    seq = load_sequence(args.sequence)
    trace = run_algorithm(args.alg, inst, seq)
    print(json.dumps(trace_to_dict(trace), indent=2))
    return EXIT_OK


def cmd_opt(args) -> int:
    inst = load_instance(args.instance)
    seq = load_sequence(args.sequence)
    print(json.dumps(lexmin_assignment(inst, seq).to_dict(), indent=2))
    return EXIT_OK


def cmd_adversary(args) -> int:
    epsilon = to_coord(args.epsilon)
    if args.family == "greedy":
        inst, seq = greedy_adversary(greedy_params(args.k, epsilon, args.capacity))
    else:
        inst, seq = permutation_adversary(permutation_params(args.k, epsilon, args.capacity))
    if args.out_prefix:
        inst_path = f"{args.out_prefix}.instance.json"
        seq_path = f"{args.out_prefix}.sequence.json"
        save_instance(inst, inst_path)
        save_sequence(seq, seq_path)
        print(json.dumps({"instance": inst_path, "sequence": seq_path}))
    else:
        from .core import instance_to_dict, sequence_to_dict

        print(json.dumps({"instance": instance_to_dict(inst), "sequence": sequence_to_dict(seq)}, indent=2))
    return EXIT_OK


def _verify_layout(args):
    if args.instance:
        return load_instance(args.instance).layout
    import random

    return random_layout(random.Random(args.seed), args.k)


def cmd_verify(args) -> int:
    from .adversary import random_sequences

    def rule_builder(layout):
        return build_rule(args.alg, layout)

    layout = _verify_layout(args)
    if args.check == "surrounding":
        inst = unit_instance(layout)
        bad = 0
        total = 0
        for seq in random_sequences(inst, inst.total_capacity, seed=args.seed, count=args.trials):
            trace = run_algorithm(args.alg, inst, seq)
            report = check_surrounding_oriented(trace, seq, layout, inst)
            total += report.trials
            bad += len(report.violations)
        payload = {"property": "surrounding-oriented", "trials": total, "violations": bad}
        failed = bad > 0
    elif args.check == "faithful":
        inst = unit_instance(layout)
        seq = next(random_sequences(inst, inst.total_capacity, seed=args.seed, count=1))
        report = check_faithful(rule_builder, inst, seq, trials=args.trials, seed=args.seed)
        payload = report.to_dict()
        failed = not report.ok
    elif args.check == "ratio":
        inst = unit_instance(layout)
        worst = None
        failed = False
        for i, seq in enumerate(
            random_sequences(inst, inst.total_capacity, seed=args.seed, count=args.trials)
        ):
            rr = check_ratio_bound(rule_builder, inst, seq, instance_id=f"trial-{i}")
            if worst is None or rr.rate > worst.rate:
                worst = rr
            if args.alg == "ptcp" and not rr.within_bound:
                failed = True
        payload = worst.to_dict() if worst else {"trials": 0}
    elif args.check == "adx":
        report = sweep_adx(
            rule_builder,
            layout,
            d=to_coord(args.d),
            x=to_coord(args.x),
            trials=args.trials,
            seed=args.seed,
        )
        payload = report.to_dict()
        failed = not report.ok
    elif args.check == "capacity":
        report = capacity_insensitivity_probe(
            rule_builder, layout, max_capacity=args.capacity, n_max=args.n_max
        )
        payload = report.to_dict()
        failed = not report.ok
    elif args.check == "hybrid":
        rule = rule_builder(layout)
        structural = sweep_hybrid_invariants(rule, layout, trials=args.trials, seed=args.seed)
        threshold = check_c3(rule, layout, trials=args.trials, seed=args.seed)
        payload = {"invariants": structural.to_dict(), "threshold": threshold.to_dict()}
        failed = not (structural.ok and threshold.ok)
    else:
        raise OfalError(f"unknown check {args.check!r}")
    print(json.dumps(payload, indent=2))
    return EXIT_VIOLATION if failed else EXIT_OK


def cmd_run(args) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if args.seed_provided:
        data["seed"] = args.seed
    if args.jobs is not None:
        data["jobs"] = args.jobs
    config = ExperimentConfig.from_dict(data)
    result = run_experiment(config)
    if not config.out_csv:
        print(result.csv_text, end="")
    print(
        json.dumps({"max_rate": result.summary["max_rate"], "violations": len(result.summary["violations"])}),
        file=sys.stderr,
    )
    return EXIT_OK if result.ok else EXIT_VIOLATION


def cmd_reproduce(args) -> int:
    result = reproduce(args.table, k=args.k, epsilon=Fraction(args.epsilon) if args.epsilon else None)
    if args.format == "json":
        print(json.dumps(result, indent=2))
    else:
        print(format_reproduce(result))
    return EXIT_OK if all(row["ok"] for row in result["rows"]) else EXIT_VIOLATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ofal",
        description="Online facility assignment on a line: algorithms, exact optima, and verification sweeps.",
    )
    parser.add_argument("--version", action="version", version=f"ofal {__version__}")
    parser.add_argument("--seed", type=int, default=None, help="global RNG seed (default 0)")
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    parser.add_argument("--jobs", type=int, default=None, help="worker processes for batch runs")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("alpha", help="layout stretch metrics and the 2*alpha+1 bound")
    p.add_argument("instance")
    p.set_defaults(func=cmd_alpha)

    p = sub.add_parser("tree", help="dump the split tree of a layout")
    p.add_argument("instance")
    p.set_defaults(func=cmd_tree)

    p = sub.add_parser("simulate", help="run an online algorithm over a sequence")
    p.add_argument("--alg", choices=("ptcp", "greedy", "permutation"), required=True)
    p.add_argument("instance")
    p.add_argument("sequence")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("opt", help="exact offline optimum")
    p.add_argument("instance")
    p.add_argument("sequence")
    p.set_defaults(func=cmd_opt)

    p = sub.add_parser("adversary", help="generate a named adversarial input")
    p.add_argument("family", choices=("greedy", "permutation"))
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--epsilon", default="1/10")
    p.add_argument("--capacity", type=int, default=1)
    p.add_argument("--out-prefix", default=None)
    p.set_defaults(func=cmd_adversary)

    p = sub.add_parser("verify", help="property sweeps and bound checks")
    p.add_argument("check", choices=("surrounding", "faithful", "ratio", "adx", "capacity", "hybrid"))
    p.add_argument("--alg", choices=("ptcp", "greedy"), default="ptcp")
    p.add_argument("--instance", default=None, help="instance JSON (default: random layout)")
    p.add_argument("--k", type=int, default=4, help="random layout size when no instance given")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--d", default="3", help="guard distance for adx")
    p.add_argument("--x", default="1", help="guard offset for adx")
    p.add_argument("--capacity", type=int, default=3, help="capacity for the insensitivity probe")
    p.add_argument("--n-max", type=int, default=4, help="search depth for the insensitivity probe")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("run", help="batch experiment from a config file")
    p.add_argument("config")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("reproduce", help="one-command headline comparisons")
    p.add_argument("table", choices=("thm46", "thm47", "tightness-k2"))
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--epsilon", default=None)
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.seed_provided = getattr(args, "seed", None) is not None
    if not args.seed_provided:
        args.seed = 0
    try:
        return args.func(args)
    except OfalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
