"""
Command-line entry point.

    python main.py list-scenarios
    python main.py validate sample1
    python main.py run sample1 --seed 7 --threads 4 --out-dir out/sample1
    python main.py run fig5a --override visibility_sweep.arm=signal
    python main.py history --limit 5

Exit codes: 0 success, 2 parse error, 3 validation error, 4 numeric or
domain error during the run.
"""
import argparse
import logging
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import List, Optional

from qict import __version__
from qict.catalog import describe, list_scenarios, load_document
from qict.config import Settings, get_settings
from qict.dependencies import get_db
from qict.errors import QICTError
from qict.experiments import run_scenario
from qict.ledger import create_tables, fail_run, finish_run, recent_runs, start_run
from qict.schemas import Scenario, validate_scenario
from qict.utils import apply_overrides

logger = logging.getLogger("qict")

ledger_session = contextmanager(get_db)


def create_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qict",
        description="Induced-coherence tomography simulator: scenarios in, CSV/PGM artifacts and summary.json out.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging (overrides QICT_LOG_LEVEL)")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Run a scenario and write its artifacts")
    run.add_argument("scenario", help="Scenario file or bundled scenario name")
    run.add_argument("--seed", type=int, default=None, help="Master seed; overrides the scenario's seed")
    run.add_argument("--threads", type=int, default=None, help="Worker threads (default: QICT_THREADS or all cores)")
    run.add_argument("--out-dir", default=None, help="Output directory (default: <QICT_OUT_DIR>/<scenario name>)")
    run.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                     help="Dotted-path scenario override; repeatable")

    validate = commands.add_parser("validate", help="Parse and validate a scenario without running it")
    validate.add_argument("scenario")
    validate.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")

    commands.add_parser("list-scenarios", help="List bundled scenarios")

    history = commands.add_parser("history", help="Show recent runs from the run ledger")
    history.add_argument("--limit", type=int, default=20)
    return parser


def load_scenario(name: str, overrides: List[str], seed: Optional[int] = None) -> Scenario:
    document = load_document(name)
    apply_overrides(document, overrides)
    if seed is not None:
        document["seed"] = seed
    return validate_scenario(document)


def cmd_run(args, settings: Settings) -> int:
    scenario = load_scenario(args.scenario, args.override, args.seed)
    threads = args.threads if args.threads is not None else settings.threads
    if threads < 1:
        raise QICTError("--threads must be >= 1", exit_code=2)
    out_dir = Path(args.out_dir or scenario.output_dir or Path(settings.out_dir) / scenario.name)

    with ledger_session() as db:
        run = None
        if db is not None:
            create_tables(db.get_bind())
            run = start_run(db, scenario, out_dir)
        try:
            summary, artifacts = run_scenario(scenario, out_dir, threads)
        except Exception as e:
            if run is not None:
                fail_run(db, run, getattr(e, "detail", str(e)))
            raise
        if run is not None:
            finish_run(db, run, summary, artifacts)
    print(f"{scenario.name}: wrote {len(artifacts)} artifacts to {out_dir}")
    return 0


def cmd_validate(args, settings: Settings) -> int:
    scenario = load_scenario(args.scenario, args.override)
    print(f"{scenario.name}: valid {scenario.kind} scenario")
    return 0


def cmd_list(args, settings: Settings) -> int:
    for name in list_scenarios():
        print(f"{name:<14} {describe(name)}")
    return 0


def cmd_history(args, settings: Settings) -> int:
    with ledger_session() as db:
        if db is None:
            print("run ledger disabled; set QICT_DATABASE_URL to enable it")
            return 0
        create_tables(db.get_bind())
        for run in recent_runs(db, args.limit):
            finished = run.finished_at.isoformat(timespec="seconds") if run.finished_at else "-"
            print(f"{run.id:>5} {run.status.value:<9} {run.scenario:<14} seed={run.seed} {finished} {run.out_dir}")
    return 0


COMMANDS = {
    "run": cmd_run,
    "validate": cmd_validate,
    "list-scenarios": cmd_list,
    "history": cmd_history,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = create_parser().parse_args(argv)
    settings = get_settings()
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else getattr(logging, settings.log_level, logging.INFO),
        format="%(levelname)s [%(name)s] %(message)s",
        stream=sys.stderr,
    )
    try:
        return COMMANDS[args.command](args, settings)
    except QICTError as e:
        logger.debug("command failed", exc_info=True)
        print(f"error: {e.detail}", file=sys.stderr)
        return e.exit_code
    except (ArithmeticError, ValueError) as e:
        logger.debug("numeric failure", exc_info=True)
        print(f"error: numeric failure: {e}", file=sys.stderr)
        return 4
