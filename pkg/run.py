#!/usr/bin/env python3
"""
NC-Value QRF - Command Line Entry Point

Sub-commands:
- run:    execute one scenario config (qubit or grid) and write its report
- verify: run a property suite and print the worst error per property

Exit code is 0 iff every check passes. Domain errors print one JSON line
on stderr and exit nonzero.
"""

import argparse
import json
import sys
from typing import List, Optional, Sequence, Tuple

from app.config import settings
from app.models.report import CheckRecord
from app.utils.errors import QRFError

EXIT_OK = 0
EXIT_CHECKS_FAILED = 1
EXIT_ERROR = 2


def parse_dims(text: str) -> Tuple[int, int]:
    """'LO..HI' -> (LO, HI)"""
    try:
        lo, hi = (int(part) for part in text.split(".."))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO..HI, got {text!r}")
    return lo, hi


def print_checks(checks: Sequence[CheckRecord]):
    width = max((len(c.name) for c in checks), default=10)
    for c in checks:
        mark = "✅" if c.passed else "❌"
        flag = f"  [{c.flag}]" if c.flag else ""
        print(f"{mark} {c.name:<{width}}  max err {c.error:.3e}  (tol {c.tolerance:.1e}){flag}")


def cmd_run(args: argparse.Namespace) -> int:
    from app.services.runner import runner

    print(f"🧪 Running scenario {args.config}")
    report, written = runner.run(args.config, args.out, args.format, timing=args.timing)
    print_checks(report.checks)
    print("-" * 60)
    print(f"📄 Report written to {written}")
    if report.all_passed:
        print(f"✅ {report.scenario_id}: all {len(report.checks)} checks passed")
        return EXIT_OK
    print(f"❌ {report.scenario_id}: {len(report.failed_checks)} of {len(report.checks)} checks failed")
    return EXIT_CHECKS_FAILED


def cmd_verify(args: argparse.Namespace) -> int:
    from app.services.reporter import reporter
    from app.services.verifier import verifier

    seed = settings.DEFAULT_SEED if args.seed is None else args.seed
    print(f"🔬 Verifying suite {args.suite} (seed {seed})")
    summary = verifier.verify(args.suite, dims=args.dims, draws=args.draws, seed=seed, grid_n=args.grid_n)
    print_checks(summary.checks)
    print("-" * 60)
    if args.out:
        print(f"📄 Summary written to {reporter.emit(summary, 'json', args.out, timing=args.timing)}")
    failed = [c for c in summary.checks if not c.passed]
    if not failed:
        print(f"✅ {args.suite}: all {len(summary.checks)} properties within tolerance")
        return EXIT_OK
    print(f"❌ {args.suite}: {len(failed)} of {len(summary.checks)} properties out of tolerance")
    return EXIT_CHECKS_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Quantum reference frames and noncommutative values")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="Run one scenario config and write its report")
    run_p.add_argument("config", help="Path to a ScenarioConfig JSON document")
    run_p.add_argument("--out", default=None, help="Report path (default: <OUTPUT_DIR>/<scenario_id>.<ext>)")
    run_p.add_argument(
        "--format",
        choices=["json", "csv-summary"],
        default=None,
        help="Report format (default: the config's output_format)",
    )
    run_p.add_argument("--timing", action="store_true", help="Keep wall time in the JSON report")
    run_p.set_defaults(handler=cmd_run)

    verify_p = sub.add_parser("verify", help="Run a property suite")
    verify_p.add_argument("suite", help="ncvalue-core, qubit, grid, appendix or all")
    verify_p.add_argument("--dims", type=parse_dims, default=(2, 16), help="Dimension range LO..HI (default: 2..16)")
    verify_p.add_argument("--draws", type=int, default=200, help="Random draws per property (default: 200)")
    verify_p.add_argument("--seed", type=int, default=None, help="Seed (default: NCVAL_QRF_SEED or 42)")
    verify_p.add_argument("--grid-n", type=int, default=None, help="Grid size for the grid/appendix suites")
    verify_p.add_argument("--out", default=None, help="Also write the summary as JSON")
    verify_p.add_argument("--timing", action="store_true", help="Keep wall time in the JSON summary")
    verify_p.set_defaults(handler=cmd_verify)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)

    print("=" * 60)
    print("⚛️  NC-Value QRF")
    print("=" * 60)

    try:
        return args.handler(args)
    except QRFError as e:
        print(json.dumps(e.to_dict(), ensure_ascii=False), file=sys.stderr)
        print(f"💥 {e.__class__.__name__}: {e}")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
