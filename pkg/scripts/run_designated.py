"""Run designated configurations and write their artifacts.

    python3 scripts/run_designated.py                 # all runs
    python3 scripts/run_designated.py bv-burgers vv-rotated2 --output out/
"""
import argparse
import sys
import time
from pathlib import Path

from templelab.designated import DESIGNATED, designated_config, run_study


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("names", nargs="*", help="designated run names (default: all)")
    parser.add_argument("--output", default="templelab-output", help="parent directory")
    args = parser.parse_args(argv)

    names = args.names or sorted(DESIGNATED)
    unknown = [n for n in names if n not in DESIGNATED]
    if unknown:
        parser.error(f"unknown runs {unknown}; choose from {sorted(DESIGNATED)}")
    failed = []
    for name in names:
        start = time.perf_counter()
        report = run_study(designated_config(name))
        report.write(Path(args.output) / name)
        status = "PASS" if report.passed else "FAIL"
        print(f"{status}  {name:28s} {time.perf_counter() - start:6.1f}s")
        if not report.passed:
            failed.append(name)
    if failed:
        print(f"failed: {', '.join(failed)}")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
