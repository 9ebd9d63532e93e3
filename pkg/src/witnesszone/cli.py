"""Command-line front end.

Subcommands: ``run`` (scenarios and Monte Carlo summaries), ``heatmap``
(admission-probability CSV), ``verify`` (evidence files against a witness
registry), ``calibrate`` (solve for the calibrated channel constants).

Exit codes: 0 success, 1 internal error, 2 configuration or input error,
3 verification failure.  All randomness flows from ``--seed`` (default 0,
never OS entropy), so identical invocations produce identical bytes.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

from .configtext import ConfigSyntaxError
from .evidence import (
    MalformedFileError,
    WitnessRegistry,
    read_evidence_file,
    verify_evidence,
    write_chain_file,
    write_evidence_file,
)
from .geometry import ConfigurationError
from .policy import PolicyError, builtin_policy, builtin_policy_ids, load_policy
from .simulation import (
    SCENARIO_NAMES,
    CalibrationError,
    GridSpec,
    Summary,
    build_scenario,
    calibrate,
    heatmap,
    load_scenario,
    monte_carlo,
    run_scenario,
)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_CONFIG = 2
EXIT_VERIFY = 3

_TABLE_NAMES = {
    "baseline_4w": "Baseline (4W)",
    "baseline_6w": "Baseline (6W)",
    "distance_fraud": "Distance Fraud",
    "edge_position": "Edge Position",
    "visual_valid": "Visual (Valid)",
    "visual_invalid": "Visual (Invalid)",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="witnesszone",
        description="Witnessing-zone proof-of-location simulator and evidence verifier",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario and print its Monte Carlo summary")
    run.add_argument(
        "--scenario",
        help=f"built-in scenario name ({', '.join(SCENARIO_NAMES)}) or 'all'",
    )
    run.add_argument("--scenario-file", help="path to a custom scenario document")
    run.add_argument("--iterations", type=int, default=1, help="Monte Carlo iterations")
    run.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    run.add_argument("--jobs", type=int, default=1, help="parallel workers across iterations")
    run.add_argument("--table", action="store_true", help="render rows in the table layout")
    run.add_argument("--out", help="write output to this path instead of stdout")
    run.add_argument(
        "--evidence-out",
        metavar="DIR",
        help="also run once at --seed and write evidence files, chain, and registry",
    )

    hm = sub.add_parser("heatmap", help="emit an admission-probability CSV grid")
    hm.add_argument("--x-min", type=float, default=-20.0)
    hm.add_argument("--x-max", type=float, default=20.0)
    hm.add_argument("--y-min", type=float, default=-20.0)
    hm.add_argument("--y-max", type=float, default=20.0)
    hm.add_argument("--step", type=float, default=0.5)
    hm.add_argument("--mode", choices=("analytic", "monte_carlo"), default="analytic")
    hm.add_argument("--samples", type=int, default=1000, help="samples per cell (monte_carlo)")
    hm.add_argument("--seed", type=int, default=0)
    hm.add_argument("--witness-count", type=int, default=4, choices=(4, 6))
    hm.add_argument("--out", help="write CSV to this path instead of stdout")

    ver = sub.add_parser("verify", help="verify an evidence file against a registry")
    ver.add_argument("evidence", help="evidence file produced by run --evidence-out")
    ver.add_argument("--registry", required=True, help="witness registry JSON file")
    ver.add_argument(
        "--policy",
        action="append",
        default=[],
        help="extra policy document(s) to trust besides the built-ins",
    )

    cal = sub.add_parser("calibrate", help="solve for a calibrated channel constant")
    cal.add_argument("--target", choices=("edge_admission", "visual_admission"), required=True)
    cal.add_argument("--value", type=float, help="target admission probability")
    return parser


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _fmt_opt(value: float | None, fmt: str) -> str:
    return "N/A" if value is None else format(value, fmt)


def _table_row(name: str, s: Summary) -> str:
    display = _TABLE_NAMES.get(name, name)
    return (
        f"{display:<18} "
        f"{s.success_rate_mean:.3f} ± {s.success_rate_std:.2f}   "
        f"{_fmt_opt(s.precision, '.2f'):<9} "
        f"{_fmt_opt(s.recall, '.3f'):<7} "
        f"{s.admitted_mean:.1f}/{s.claims_per_run}"
    )


def _render_table(rows: list[tuple[str, Summary]]) -> str:
    header = f"{'Scenario':<18} {'Success Rate':<14} {'Precision':<9} {'Recall':<7} Admitted"
    lines = [header] + [_table_row(name, s) for name, s in rows]
    return "\n".join(lines) + "\n"


def _summary_json(name: str, seed: int, s: Summary) -> dict:
    return {"scenario": name, "seed": seed, "summary": s.to_json_dict()}


def _cmd_run(args) -> int:
    if args.scenario and args.scenario_file:
        print("error: give either --scenario or --scenario-file", file=sys.stderr)
        return EXIT_CONFIG
    if not args.scenario and not args.scenario_file:
        print("error: one of --scenario or --scenario-file is required", file=sys.stderr)
        return EXIT_CONFIG
    if args.iterations < 1:
        print("error: --iterations must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    if args.jobs < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return EXIT_CONFIG

    if args.scenario == "all":
        configs = [build_scenario(n, seed=args.seed) for n in SCENARIO_NAMES]
    elif args.scenario:
        configs = [build_scenario(args.scenario, seed=args.seed)]
    else:
        configs = [replace(load_scenario(args.scenario_file), seed=args.seed)]

    rows = [(c.name, monte_carlo(c, args.iterations, jobs=args.jobs)) for c in configs]

    if args.evidence_out:
        _write_evidence_bundle(configs[0], args.evidence_out)

    if args.table:
        _emit(_render_table(rows), args.out)
    else:
        payload = [
            dict(_summary_json(name, args.seed, s), iterations=args.iterations)
            for name, s in rows
        ]
        doc = payload[0] if len(payload) == 1 else {"results": payload}
        _emit(json.dumps(doc, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def _write_evidence_bundle(config, out_dir: str) -> None:
    from .witness import build_registry
    from .simulation import _make_witnesses  # deterministic per-seed keys

    os.makedirs(out_dir, exist_ok=True)
    result = run_scenario(config)
    witnesses = _make_witnesses(config.zone, config.witness_behaviors, config.seed)
    registry = build_registry(config.zone.zone_id, witnesses)
    with open(os.path.join(out_dir, "registry.json"), "w", encoding="utf-8") as fh:
        fh.write(registry.to_json())
    write_chain_file(os.path.join(out_dir, "chain.bin"), result.chain)
    for outcome in result.outcomes:
        if outcome.evidence is not None:
            path = os.path.join(out_dir, f"evidence_{outcome.interval_index:04d}.bin")
            write_evidence_file(path, outcome.evidence)


def _cmd_heatmap(args) -> int:
    if args.samples < 1:
        print("error: --samples must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    grid = GridSpec(
        x_min=args.x_min, x_max=args.x_max, y_min=args.y_min, y_max=args.y_max, step=args.step
    )
    from .geometry import ZoneConfig

    zone = ZoneConfig("Z-01", witness_count=args.witness_count)
    result = heatmap(zone, grid, mode=args.mode, samples=args.samples, seed=args.seed)
    _emit(result.to_csv(), args.out)
    return EXIT_OK


def _cmd_verify(args) -> int:
    with open(args.registry, "r", encoding="utf-8") as fh:
        registry = WitnessRegistry.from_json(fh.read())
    evidence = read_evidence_file(args.evidence)
    policies = {pid: builtin_policy(pid) for pid in builtin_policy_ids()}
    for path in args.policy:
        policy = load_policy(path)
        policies[policy.policy_id] = policy
    verdict = verify_evidence(evidence, registry, policies)
    detail = f": {verdict.detail}" if verdict.detail else ""
    print(f"{verdict.code.value}{detail}")
    return EXIT_OK if verdict.ok else EXIT_VERIFY


def _cmd_calibrate(args) -> int:
    result = calibrate(args.target, value=args.value)
    doc = {
        "target": result.target,
        "parameter": result.parameter,
        "value": result.value,
        "achieved": result.achieved,
        "residual": result.residual,
    }
    print(json.dumps(doc, sort_keys=True))
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "heatmap":
            return _cmd_heatmap(args)
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "calibrate":
            return _cmd_calibrate(args)
        parser.error(f"unknown command {args.command!r}")
    except (
        ConfigurationError,
        ConfigSyntaxError,
        PolicyError,
        CalibrationError,
        MalformedFileError,
        FileNotFoundError,
        IsADirectoryError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # pragma: no cover - internal failure path
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_INTERNAL  # pragma: no cover


if __name__ == "__main__":
    sys.exit(main())
