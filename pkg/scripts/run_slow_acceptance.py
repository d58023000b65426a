"""Fill the cache of the slow acceptance runs (size and power).

Usage: python3 scripts/run_slow_acceptance.py [size|power|all] [--workers N]
"""
import argparse
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

import acceptance_runs  # noqa: E402


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("which", nargs="?", default="all", choices=["size", "power", "all"])
    ap.add_argument("--workers", type=int, default=1)
    a = ap.parse_args()
    if a.which in ("power", "all"):
        res = acceptance_runs.power_run(a.workers)
        print(json.dumps(acceptance_runs.pooled_power(res), sort_keys=True), flush=True)
    if a.which in ("size", "all"):
        print(json.dumps(acceptance_runs.size_run(a.workers)["sizes"], sort_keys=True), flush=True)


if __name__ == "__main__":
    main()
