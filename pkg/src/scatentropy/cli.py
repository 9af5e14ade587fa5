"""Command-line front end.

Subcommands: check, predict, sweep, demon, probe (each on a scenario file)
and suite (the built-in library). Exit codes: 0 success, 1 config error,
2 numerical failure, 3 guarantee violation (a probe or demon run found
dS < -1e-10 under a StrictIncrease verdict).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from .errors import ConfigError, ScatentropyError
from .harness import Report, render_text, report_to_dict, run_scenario, write_csv
from .scenarios import builtin_library, parse_scenario_file

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_GUARANTEE = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scatentropy",
        description="Classify, predict and numerically validate subsystem entropy "
        "change in perturbative bipartite scattering.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_command(name: str, help_text: str) -> argparse.ArgumentParser:
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("scenario", help="path to a TOML scenario file")
        cmd.add_argument("--json", dest="json_path", default=None, help="write the full report as JSON")
        cmd.add_argument("--csv", dest="csv_path", default=None, help="write per-lambda sweep rows as CSV")
        return cmd

    scenario_command("check", "classify the scenario against the three criteria")
    scenario_command("predict", "compute every applicable coefficient prediction")
    scenario_command("sweep", "run the exact sweep, fit coefficients, compare")

    demon = scenario_command("demon", "adversarial search for entropy-decreasing T1")
    demon.add_argument("--budget", type=int, default=500, help="objective evaluations (default 500)")
    demon.add_argument("--seed", type=int, default=0)

    probe = scenario_command("probe", "minimum exact dS over random T1 samples")
    probe.add_argument("--samples", type=int, default=1000)
    probe.add_argument("--seed", type=int, default=0)

    suite = sub.add_parser("suite", help="run the built-in scenario library")
    suite.add_argument("--json", dest="json_path", default=None)
    suite.add_argument("--csv", dest="csv_path", default=None)
    suite.add_argument("--budget", type=int, default=500)
    suite.add_argument("--samples", type=int, default=1000)
    suite.add_argument("--seed", type=int, default=0)
    return parser


def _emit(reports: list[Report], json_path: str | None, csv_path: str | None) -> None:
    for report in reports:
        print(render_text(report))
        print()
    if json_path:
        payload = [report_to_dict(r) for r in reports]
        with open(json_path, "w") as handle:
            json.dump(payload[0] if len(payload) == 1 else payload, handle, indent=2, sort_keys=True)
            handle.write("\n")
    if csv_path:
        write_csv(reports, csv_path)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "suite":
            reports = [
                run_scenario(cfg, budget=args.budget, samples=args.samples, seed=args.seed)
                for cfg in builtin_library()
            ]
        else:
            cfg = parse_scenario_file(args.scenario)
            cfg = replace(cfg, mode=args.command)
            kwargs = {}
            if args.command == "demon":
                kwargs = {"budget": args.budget, "seed": args.seed}
            elif args.command == "probe":
                kwargs = {"samples": args.samples, "seed": args.seed}
            reports = [run_scenario(cfg, **kwargs)]
        _emit(reports, args.json_path, args.csv_path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ScatentropyError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    if any(r.guarantee_violation for r in reports):
        print("guarantee violation detected", file=sys.stderr)
        return EXIT_GUARANTEE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
