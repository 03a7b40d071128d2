"""Command-line front end.

    tscf eval      <file | --builtin NAME> [--strict-meaningless]
    tscf elements  <file | --builtin NAME> [--obs NAME ...]
    tscf check     [<file | --builtin NAME>] [--random N --dim D --events E --seed S]
    tscf simulate  <file | --builtin NAME> [--samples N] [--seed S]
    tscf fmt       <file | --builtin NAME>

Reports are a single JSON object on stdout; diagnostics go to stderr.
Exit codes: 0 success, 1 error (or failed oracle check), 2 Meaningless
verdict under --strict-meaningless.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from tscf import __version__
from tscf.counterfactual import (
    MeaninglessError,
    VerdictKind,
    bind,
    definition_iii_eval,
    element_of_reality,
    evaluate,
    product_rule_check,
)
from tscf.oracle import ForwardRun, cross_check, enumerate_exact, monte_carlo
from tscf.randomize import random_case
from tscf.scenario import BUILTIN_NAMES, Scenario, ScenarioError, builtin, parse, serialize
from tscf.tsvf import MeasurementEvent, ZeroDenominatorError

log = logging.getLogger("tscf")

EXIT_OK, EXIT_ERROR, EXIT_MEANINGLESS = 0, 1, 2
CHECK_TOLERANCE = 1e-12
DEFAULT_SAMPLES = 10_000


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(EXIT_ERROR)


class CommandError(Exception):
    pass


def _event_names(events: list[MeasurementEvent]) -> list[str]:
    return [f"{ev.label}@{ev.slot}" for ev in events]


def _table_rows(table) -> list[dict]:
    return [
        {"outcomes": list(k), "probability": p} if isinstance(k, tuple) else {"outcome": k, "probability": p}
        for k, p in table.entries
    ]


def _load(args) -> Scenario:
    if getattr(args, "builtin", None):
        if args.file:
            raise CommandError("give either a scenario file or --builtin, not both")
        try:
            return builtin(args.builtin)
        except KeyError as exc:
            raise CommandError(exc.args[0]) from None
    if not args.file:
        raise CommandError("a scenario file or --builtin NAME is required")
    try:
        with open(args.file, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise CommandError(f"cannot read {args.file}: {exc.strerror}") from None
    return parse(text)


def _seed(args, scenario: Scenario | None = None) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("TSVF_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise CommandError(f"TSVF_SEED must be an integer, got {env!r}") from None
    if scenario is not None and scenario.seed is not None:
        return scenario.seed
    return 0


def _header(command: str, scenario: Scenario | None) -> dict:
    return {
        "tool": "tscf",
        "version": __version__,
        "command": command,
        "scenario": scenario.name if scenario is not None else None,
    }


def _element(tsv, obs) -> dict:
    try:
        table = definition_iii_eval(tsv, obs)
    except MeaninglessError as exc:
        return {"observable": obs.label, "verdict": "Meaningless", "denominator": exc.denominator}
    found = element_of_reality(tsv, obs)
    return {
        "observable": obs.label,
        "element_of_reality": found is not None,
        "value": found[0] if found else None,
        "probability": found[1] if found else None,
        "table": _table_rows(table),
        "denominator": table.denominator,
    }


def _product_rules(scenario: Scenario) -> list[dict]:
    tsv = scenario.world.tsv
    out = []
    for spec in scenario.product_checks:
        a, b, ab = (scenario.observable(n) for n in (spec.a, spec.b, spec.ab))
        try:
            rep = product_rule_check(tsv, a, b, ab)
        except MeaninglessError:
            out.append({"a": spec.a, "b": spec.b, "ab": spec.ab, "status": "meaningless"})
            continue

        def pair(x):
            return None if x is None else {"value": x[0], "probability": x[1]}

        out.append(
            {
                "a": spec.a,
                "b": spec.b,
                "ab": spec.ab,
                "elements": {spec.a: pair(rep.a), spec.b: pair(rep.b), spec.ab: pair(rep.ab)},
                "status": rep.status,
                "lhs": rep.lhs,
                "rhs": rep.rhs,
            }
        )
    return out


def cmd_eval(args) -> tuple[dict, int]:
    scenario = _load(args)
    world = scenario.world
    report = _header("eval", scenario)
    records = []
    meaningless = False
    for spec in scenario.queries:
        query = scenario.query(spec)
        verdict = evaluate(world, query)
        bound = bind(world, query)
        meaningless |= verdict.kind is VerdictKind.MEANINGLESS
        record = {
            "query": spec.label,
            "replacement": [f"{name}@{slot}" for slot, name in spec.replacement],
            "property": str(spec.prop),
            "verdict": verdict.kind.value,
            "probability": verdict.probability,
        }
        if verdict.statistic is not None:
            record["statistic"] = verdict.statistic
        record["events"] = _event_names(list(bound.events))
        record["table"] = _table_rows(verdict.table)
        record["denominator"] = verdict.denominator
        records.append(record)
    report["queries"] = records
    checks = _product_rules(scenario)
    if checks:
        seen = []
        for spec in scenario.product_checks:
            for n in (spec.a, spec.b, spec.ab):
                if n not in seen:
                    seen.append(n)
        report["elements_of_reality"] = [_element(world.tsv, scenario.observable(n)) for n in seen]
        report["product_rule"] = checks
    code = EXIT_MEANINGLESS if meaningless and args.strict_meaningless else EXIT_OK
    return report, code


def cmd_elements(args) -> tuple[dict, int]:
    scenario = _load(args)
    names = args.obs or [o.name for o in scenario.observables]
    tsv = scenario.world.tsv
    report = _header("elements", scenario)
    report["elements"] = [_element(tsv, scenario.observable(n)) for n in names]
    return report, EXIT_OK


def _comparison(tsv, events) -> dict:
    try:
        cmp = cross_check(tsv, events)
    except ZeroDenominatorError:
        return {"status": "both_meaningless", "max_discrepancy": 0.0, "denominator_ratio": None}
    if cmp.abl_zero or cmp.exact_zero:
        status = "one_sided_zero"
    else:
        status = "ok" if cmp.max_discrepancy < CHECK_TOLERANCE else "mismatch"
    return {"status": status, "max_discrepancy": cmp.max_discrepancy, "denominator_ratio": cmp.denominator_ratio}


def cmd_check(args) -> tuple[dict, int]:
    scenario = None
    if args.file or args.builtin:
        scenario = _load(args)
    elif args.random is None:
        raise CommandError("check needs a scenario, --random N, or both")
    report = _header("check", scenario)
    worst = 0.0
    failed = False

    def tally(rec):
        nonlocal worst, failed
        worst = max(worst, rec["max_discrepancy"])
        failed |= rec["status"] in ("mismatch", "one_sided_zero")

    if scenario is not None:
        world = scenario.world
        obs_records = []
        for spec in scenario.observables:
            rec = {"observable": spec.name, **_comparison(world.tsv, [scenario.event(1, spec.name)])}
            tally(rec)
            obs_records.append(rec)
        report["observables"] = obs_records
        query_records = []
        for spec in scenario.queries:
            bound = bind(world, scenario.query(spec))
            rec = {"query": spec.label, "events": _event_names(list(bound.events))}
            rec.update(_comparison(world.tsv, list(bound.events)))
            tally(rec)
            query_records.append(rec)
        report["queries"] = query_records
    if args.random is not None:
        seed = _seed(args)
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        cases = []
        for i in range(args.random):
            tsv, events = random_case(rng, args.dim, 2, args.events)
            rec = {
                "index": i,
                "dims": list(tsv.layout.subsystem_dims),
                "events": len(events),
                **_comparison(tsv, events),
            }
            tally(rec)
            cases.append(rec)
        report["random"] = {"count": args.random, "seed": seed, "dim": args.dim, "max_events": args.events, "cases": cases}
    report["max_discrepancy"] = worst
    report["tolerance"] = CHECK_TOLERANCE
    report["passed"] = not failed
    if failed:
        log.error("oracle cross-check failed (max discrepancy %.3e)", worst)
    return report, EXIT_OK if not failed else EXIT_ERROR


def cmd_simulate(args) -> tuple[dict, int]:
    scenario = _load(args)
    samples = args.samples or scenario.samples or DEFAULT_SAMPLES
    seed = _seed(args, scenario)
    world = scenario.world
    report = _header("simulate", scenario)
    report["samples"] = samples
    report["seed"] = seed
    records = []
    for spec in scenario.queries:
        bound = bind(world, scenario.query(spec))
        required = {i: v for i, v in enumerate(bound.recorded) if v is not None}
        run = ForwardRun.from_tsv(world.tsv, bound.events, required)
        emp = monte_carlo(run, samples, seed)
        rec = {
            "query": spec.label,
            "events": _event_names(list(bound.events)),
            "accepted": emp.accepted,
            "total": emp.total,
            "acceptance_rate": emp.acceptance_rate,
            "all_rejected": emp.all_rejected,
            "counts": [{"outcomes": list(k), "count": c} for k, c in emp.counts],
        }
        hits = sum(c for k, c in emp.counts if bound.holds(k))
        rec["property_frequency"] = hits / emp.accepted if emp.accepted else None
        try:
            exact = enumerate_exact(run)
            rec["exact"] = _table_rows(exact)
            rec["exact_acceptance"] = exact.denominator
        except ZeroDenominatorError:
            rec["exact"] = None
            rec["exact_acceptance"] = 0.0
        records.append(rec)
    report["queries"] = records
    return report, EXIT_OK


def cmd_fmt(args) -> tuple[str, int]:
    return serialize(_load(args)), EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tscf", description="Time-symmetrized quantum counterfactuals.")
    parser.add_argument("--version", action="version", version=f"tscf {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def source(p):
        p.add_argument("file", nargs="?", help="scenario file")
        p.add_argument("--builtin", metavar="NAME", choices=BUILTIN_NAMES, help="built-in scenario")

    p = sub.add_parser("eval", help="evaluate every query of a scenario")
    source(p)
    p.add_argument("--strict-meaningless", action="store_true", help="exit 2 if any verdict is Meaningless")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("elements", help="elements of reality between pre and post")
    source(p)
    p.add_argument("--obs", nargs="+", metavar="NAME", help="observables (default: all)")
    p.set_defaults(func=cmd_elements)

    p = sub.add_parser("check", help="cross-check ABL against forward enumeration")
    source(p)
    p.add_argument("--random", type=int, metavar="N", help="also check N random cases")
    p.add_argument("--dim", type=int, default=4, metavar="D", help="max dimension per subsystem (default 4)")
    p.add_argument("--events", type=int, default=3, metavar="E", help="max events per case (default 3)")
    p.add_argument("--seed", type=int, metavar="S")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("simulate", help="Monte Carlo with post-selection by rejection")
    source(p)
    p.add_argument("--samples", type=int, metavar="N")
    p.add_argument("--seed", type=int, metavar="S")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fmt", help="print the canonical form of a scenario")
    source(p)
    p.set_defaults(func=cmd_fmt)
    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "random", None) is not None and args.random < 0:
            parser.error("--random must be >= 0")
        if getattr(args, "dim", 2) < 2:
            parser.error("--dim must be >= 2")
        if getattr(args, "samples", None) is not None and args.samples < 1:
            parser.error("--samples must be >= 1")
    except SystemExit as exc:  # usage errors, --help, --version
        return exc.code if isinstance(exc.code, int) else EXIT_ERROR
    try:
        output, code = args.func(args)
    except ScenarioError as exc:
        print(f"tscf: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (CommandError, ValueError, KeyError, ArithmeticError) as exc:
        print(f"tscf: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if isinstance(output, str):
        sys.stdout.write(output)
    else:
        sys.stdout.write(json.dumps(output, indent=2) + "\n")
    return code


def main() -> None:
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(message)s", stream=sys.stderr)
    sys.exit(run())


if __name__ == "__main__":
    main()
