"""Draw a size/power study result written by ``vinegof power-study``.

Usage: python3 scripts/plot_power.py RESULT.json OUT.png [--alpha 0.05] [--tests ir,ecp2-cvm]
"""
import argparse
import json

from vinegof import plotting


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("result")
    ap.add_argument("out")
    ap.add_argument("--alpha", type=float, default=None)
    ap.add_argument("--tests", default=None, help="comma-separated subset of tests")
    ap.add_argument("--dpi", type=int, default=150)
    a = ap.parse_args()
    with open(a.result, encoding="utf-8") as fh:
        result = json.load(fh)
    tests = a.tests.split(",") if a.tests else None
    plotting.study_figure(result, a.alpha, tests).savefig(a.out, dpi=a.dpi)


if __name__ == "__main__":
    main()
