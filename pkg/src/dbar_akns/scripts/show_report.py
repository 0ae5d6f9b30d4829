import sys

from pathlib import Path

from tabulate import tabulate
from termcolor import colored

from dbar_akns.globals import OUT_DIR
from dbar_akns.repositories.results_repository import load_report


def _fmt(value: float) -> str:
    return f"{value:.4g}"


def main():
    report_path = Path(sys.argv[1]) if len(sys.argv) > 1 else OUT_DIR / "report.json"
    if not report_path.exists():
        print(f"Report not found at {report_path}")
        return 1

    report = load_report(report_path)
    if not report.checks:
        print("No check records found")
        return 0

    headers = ["Check", "Observed", "Bound / Target", "Tolerance", "Result"]
    rows = [
        [
            c.name,
            _fmt(c.observed),
            _fmt(c.bound_or_target),
            _fmt(c.tolerance),
            colored("pass", "green") if c.passed else colored("FAIL", "red"),
        ]
        for c in report.checks
    ]

    failed = len(report.failed())
    rows.append(["TOTAL", "", "", "", f"{len(report.checks) - failed}/{len(report.checks)}"])

    p = report.provenance
    print(f"\n{p.command} report (seed {p.seed}, config {p.config_hash})")
    print("=" * 40)
    print(tabulate(rows, headers=headers, tablefmt="grid"))
    return 1 if failed else 0


if __name__ == "__main__":
    exit(main())
