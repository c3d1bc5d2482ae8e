#!/usr/bin/env python3
"""
Run wavepacket scenarios and the ion-trap verification.

Usage:
    python scripts/simulate.py list
    python scripts/simulate.py run --preset fig2a --out results/
    python scripts/simulate.py run --preset fig2a --preset fig2d --out results/
    python scripts/simulate.py run --config scenarios/klein-majorana.json --out results/
    python scripts/simulate.py verify-iontrap --out results/
    python scripts/simulate.py verify-iontrap --config scenarios/iontrap-detuned.json --out results/

Environment:
    SIM_THREADS   maximum number of scenarios run concurrently (default 1)
    LOG_LEVEL     logging level (default INFO)

Exit codes:
    0 success, 1 verification failed, 2 invalid configuration, 3 numerical abort
"""

import argparse
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

from utils.artifacts import (
    OBSERVABLE_COLUMNS,
    ArtifactWriter,
    observable_rows,
    snapshot_header,
    snapshot_rows,
)
from utils.dynamics import run_scenario
from utils.errors import ConfigError, NumericalAbort
from utils.scenarios import ScenarioConfig, list_scenarios, load_document, load_preset, parse_config, validate_document
from utils.verification import IonTrapReport, IonTrapVerification, verify_iontrap

logger = logging.getLogger("simulate")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INVALID = 2
EXIT_ABORT = 3

REPORT_NAME = "iontrap-report.json"


def scenario_threads() -> int:
    raw = os.environ.get("SIM_THREADS", "1")
    try:
        threads = int(raw)
    except ValueError:
        raise ConfigError([f"SIM_THREADS: expected a positive integer, got '{raw}'"])
    if threads < 1:
        raise ConfigError([f"SIM_THREADS: expected a positive integer, got {threads}"])
    return threads


def target_directory(config: ScenarioConfig, out_dir: Path) -> Path:
    return Path(config.outputs.directory) if config.outputs.directory else out_dir / config.name


def run(config: ScenarioConfig, out_dir: Path) -> dict:
    """Run one scenario and write its artifacts into out_dir/<name>/.

    Returns:
        The run summary (also written as summary.json)
    """
    target = target_directory(config, out_dir)
    payload = config.model_dump(mode="json")
    writer = ArtifactWriter(target, payload)

    result = run_scenario(config.hamiltonian, config.evolution_plan(), config.grid, config.initial_packet())

    summary = {"name": config.name, **result.summary()}
    writer.write_json("config.json", payload)
    writer.write_csv("observables.csv", OBSERVABLE_COLUMNS, observable_rows(result.series))
    if result.snapshots:
        writer.write_csv("snapshots.csv", snapshot_header(result.final.n_comp), snapshot_rows(result.snapshots))
    writer.write_json("summary.json", summary)
    writer.finalize()
    return summary


def run_all(configs: list[ScenarioConfig], out_dir: Path, threads: int) -> list[dict]:
    names = [c.name for c in configs]
    duplicates = sorted({n for n in names if names.count(n) > 1})
    if duplicates:
        raise ConfigError([f"name: '{n}' appears more than once in the run set" for n in duplicates])
    targets: dict[Path, str] = {}
    clashes = []
    for config in configs:
        target = target_directory(config, out_dir).resolve()
        if target in targets:
            clashes.append(f"outputs.directory: '{config.name}' and '{targets[target]}' both write to {target}")
        targets.setdefault(target, config.name)
    if clashes:
        raise ConfigError(clashes)
    if threads == 1 or len(configs) == 1:
        return [run(c, out_dir) for c in configs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda c: run(c, out_dir), configs))


def verify(config_path: Optional[str], out_dir: Path) -> IonTrapReport:
    if config_path:
        verification = validate_document(load_document(config_path), IonTrapVerification, source=config_path)
    else:
        verification = IonTrapVerification()
    report = verify_iontrap(verification)
    writer = ArtifactWriter(out_dir, verification.model_dump(mode="json"))
    writer.write_model(REPORT_NAME, report)
    writer.finalize()
    return report


def print_run_summary(summaries: list[dict], out_dir: Path) -> None:
    print(f"\nWrote {len(summaries)} scenario(s) to {out_dir}")
    for s in summaries:
        print(
            f"  {s['name']:<14} {s['model']:<14} T={s['transmission']:.4f}  "
            f"R={s['reflection']:.4f}  |rho(t)-rho(0)|_1={s['density_l1_to_initial']:.3e}"
        )


def print_report(report: IonTrapReport, out_dir: Path) -> None:
    print(f"\nIon-trap verification: {'PASS' if report.passed else 'FAIL'} ({out_dir / REPORT_NAME})")
    for check in report.checks:
        mark = "ok  " if check.passed else "FAIL"
        print(f"  [{mark}] {check.name:<26} measured={check.measured!r} threshold={check.threshold!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Majorana equation simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run_parser = sub.add_parser("run", help="Run wavepacket scenarios")
    source = run_parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--config", action="append", help="Scenario document (JSON or YAML); repeatable")
    source.add_argument("--preset", action="append", help="Built-in scenario name; repeatable")
    run_parser.add_argument("--out", required=True, help="Output directory")

    verify_parser = sub.add_parser("verify-iontrap", help="Verify the two-ion realization")
    verify_parser.add_argument("--config", help="Verification document (JSON or YAML)")
    verify_parser.add_argument("--out", required=True, help="Output directory")

    sub.add_parser("list", help="List built-in scenarios")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=os.environ.get("LOG_LEVEL", "INFO").upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    try:
        if args.command == "list":
            for name, description in list_scenarios():
                print(f"{name:<14} {description}")
            return EXIT_OK

        out_dir = Path(args.out)
        if args.command == "run":
            configs = [parse_config(p) for p in args.config] if args.config else [load_preset(n) for n in args.preset]
            summaries = run_all(configs, out_dir, scenario_threads())
            print_run_summary(summaries, out_dir)
            return EXIT_OK

        report = verify(args.config, out_dir)
        print_report(report, out_dir)
        return EXIT_OK if report.passed else EXIT_FAILED

    except ConfigError as exc:
        logger.error(str(exc))
        return EXIT_INVALID
    except NumericalAbort as exc:
        logger.error(f"Numerical abort: {exc}")
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
