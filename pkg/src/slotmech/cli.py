"""Command-line entry point: ``slotmech {solve,verify,experiment,gen}``.

Exit codes: 0 ok, 1 invalid input, 2 unsupported configuration,
3 internal assertion.  ``verify`` also exits 1 when it finds violations.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import experiments as ex
from .core import (
    DivisibleInstance,
    InvalidInput,
    Outcome,
    SingleSlotInstance,
    UnsupportedConfiguration,
    dumps,
    instance_to_dict,
    load_instance,
    outcome_to_dict,
)
from .mia import DegenerateInstance, maa_trace, trace_json
from .oracle import (
    GENERATORS,
    InstanceTooLarge,
    brute_force,
    capacity_suite,
    epp_suite,
    ir_suite,
    probe_truthfulness,
)
from .vcgt import run_vcgt, vcg_delays

EXIT_OK, EXIT_INVALID, EXIT_UNSUPPORTED, EXIT_INTERNAL = 0, 1, 2, 3


def _emit(text: str, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("SLOTMECH_SEED")
    if env is None:
        raise InvalidInput("a seed is required: pass --seed or set SLOTMECH_SEED")
    try:
        return int(env)
    except ValueError:
        raise InvalidInput(f"SLOTMECH_SEED must be an integer, got {env!r}") from None


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x)


# --- subcommands -------------------------------------------------------------------


def cmd_solve(args) -> int:
    inst = load_instance(args.instance)
    if args.mechanism == "maa":
        if inst.kind != "multi":
            raise UnsupportedConfiguration("maa solves multi-slot (indivisible) instances")
        order = None
        if args.order:
            index = {a: i for i, a in enumerate(inst.ids)}
            try:
                order = [index[a] for a in args.order.split(",")]
            except KeyError as exc:
                raise InvalidInput(f"unknown agent id in --order: {exc}") from None
        doc = trace_json(inst, maa_trace(inst, order))
    elif args.mechanism == "vcgt":
        if inst.kind == "multi":
            raise UnsupportedConfiguration(
                "vcgt handles single-slot and divisible jobs; use maa or exact for multi"
            )
        doc = outcome_to_dict(inst, run_vcgt(inst))
    else:
        alloc = brute_force(inst)[0]
        delays = vcg_delays(inst, lambda x: brute_force(x)[0])
        doc = outcome_to_dict(inst, Outcome(alloc, tuple(delays)))
    _emit(dumps(doc), args.output)
    return EXIT_OK


def cmd_verify(args) -> int:
    seed = _seed(args)
    mechanisms = [args.mechanism] if args.mechanism else list(GENERATORS)
    reports = []
    if args.suite == "truthfulness":
        for mech in mechanisms:
            reports.append(probe_truthfulness(mech, GENERATORS[mech], args.trials, seed))
    elif args.suite == "ir":
        reports = [ir_suite(mech, args.trials, seed) for mech in mechanisms]
    elif args.suite == "epp":
        mechs = [m for m in mechanisms if m != "maa"]
        if not mechs:
            raise UnsupportedConfiguration("maa is an approximation; epp applies to vcgt only")
        reports = [epp_suite(mech, args.trials, seed) for mech in mechs]
    else:
        reports = [capacity_suite(args.trials, seed)]
    doc = {"suite": args.suite, "reports": [r.to_dict() for r in reports]}
    _emit(dumps(doc), args.output)
    bad = sum(len(r.violations) for r in reports)
    for r in reports:
        print(f"{args.suite} {r.mechanism}: {len(r.violations)} violations / {r.trials} trials",
              file=sys.stderr)
    return EXIT_OK if bad == 0 else EXIT_INVALID


def cmd_experiment(args) -> int:
    seed = _seed(args)
    name = args.name
    if name == "congestion":
        table = ex.ingest_footfall(args.footfall) if args.footfall else None
        rows = ex.congestion_experiment(ex.CongestionConfig(
            capacity=args.capacity or 28, delta=args.delta, days=args.days, seed=seed,
            footfall=table, jobs=args.jobs))
        cols = ex.CONGESTION_COLUMNS
    elif name == "approx":
        cfg = ex.ApproxConfig(seed=seed, reps=args.reps or 100, jobs=args.jobs, delta=args.delta)
        if args.ms:
            cfg.ms = _int_list(args.ms)
        rows = ex.approx_experiment(cfg)
        cols = ex.APPROX_COLUMNS
    elif name == "priority":
        cfg = ex.PriorityConfig(seed=seed, reps=args.reps or 100, jobs=args.jobs, delta=args.delta)
        if args.ns:
            cfg.ns = _int_list(args.ns)
        rows = ex.priority_delay_experiment(cfg)
        cols = ex.PRIORITY_COLUMNS
    else:
        cfg = ex.ScaleConfig(seed=seed, reps=args.reps or 3, k=args.capacity or 12,
                             delta=args.delta)
        if args.ms:
            cfg.ms = _int_list(args.ms)
        rows = ex.scalability_experiment(cfg)
        cols = ex.SCALE_COLUMNS
    _emit(ex.write_csv(rows, columns=cols), args.output)
    return EXIT_OK


def cmd_gen(args) -> int:
    seed = _seed(args)
    rng = ex.stream(seed, 99)
    if args.what == "footfall":
        _emit(ex.synthesize_footfall(args.days, rng=rng).to_csv(), args.output)
        return EXIT_OK
    n, m, k = args.n, args.m, args.k
    if args.kind == "multi":
        inst = ex.random_multi_instance(n, m, k, rng, args.delta)
    else:
        favourites = [int(x) for x in rng.integers(m, size=n)]
        classes = ex._draw_classes(n, ex.STORE_CLASS_PROBS, rng)
        base = ex.build_population(favourites, classes, m, k, args.delta).instance
        if args.kind == "single":
            inst = base
        else:
            lengths = tuple(int(rng.integers(1, min(3, m) + 1)) for _ in range(n))
            inst = DivisibleInstance(k, base.values, base.scale, lengths=lengths)
    _emit(dumps(instance_to_dict(inst)), args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="slotmech", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run a mechanism on an instance JSON file")
    p.add_argument("instance")
    p.add_argument("--mechanism", choices=["vcgt", "maa", "exact"], default="vcgt")
    p.add_argument("--order", help="MAA processing order as comma-separated agent ids")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="run a property suite and write a JSON report")
    p.add_argument("--suite", choices=["truthfulness", "ir", "epp", "capacity"], required=True)
    p.add_argument("--mechanism", choices=sorted(GENERATORS))
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("experiment", help="run an experiment and write CSV")
    p.add_argument("name", choices=["congestion", "approx", "priority", "scale"])
    p.add_argument("--seed", type=int)
    p.add_argument("--capacity", type=int)
    p.add_argument("--delta", type=float, default=ex.DEFAULT_DELTA)
    p.add_argument("--days", type=int, default=31)
    p.add_argument("--reps", type=int)
    p.add_argument("--ms", help="comma-separated slot counts")
    p.add_argument("--ns", help="comma-separated population sizes (priority)")
    p.add_argument("--footfall", help="footfall CSV (date,hour,count) for congestion")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("gen", help="generate synthetic inputs")
    p.add_argument("what", choices=["instance", "footfall"])
    p.add_argument("--kind", choices=["single", "multi", "divisible"], default="single")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--m", type=int, default=5)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--delta", type=float, default=ex.DEFAULT_DELTA)
    p.add_argument("--days", type=int, default=31)
    p.add_argument("--seed", type=int)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UnsupportedConfiguration, DegenerateInstance, InstanceTooLarge) as exc:
        print(f"slotmech: unsupported configuration: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except (InvalidInput, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"slotmech: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except AssertionError as exc:
        print(f"slotmech: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
