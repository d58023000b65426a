"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data/model format error,
3 numerical failure.
"""
import argparse
import logging
import sys

from . import battery, bootstrap, io, rvine
from .errors import (ConvergenceError, DomainError, FormatError, NumericalError, StudyError,
                     VineError)

EXIT_OK, EXIT_USAGE, EXIT_FORMAT, EXIT_NUMERICAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _emit(**kv):
    for k, v in kv.items():
        print(f"{k}: {v}")


def _cmd_simulate(a):
    spec = io.read_model(a.model)
    _require(spec)
    u = rvine.simulate(spec, a.n, a.seed)
    io.write_data(u, a.out)
    _emit(rows=u.shape[0], columns=u.shape[1], seed=a.seed, out=a.out)


def _require(spec):
    bad = spec.violations()
    if bad:
        raise FormatError("invalid model: " + "; ".join(bad))


def _cmd_fit(a):
    spec = io.read_model(a.model)
    _require(spec)
    u = io.read_data(a.data, spec.d)
    fitted = rvine.fit_sequential(spec, u, clip_tau=a.method == "mle")
    if a.method == "mle":
        fitted, ll = rvine.fit_mle(fitted, u)
    else:
        ll = rvine.loglik(fitted, u)[0]
    io.write_model(fitted, a.out)
    _emit(method=a.method, n=u.shape[0], loglik=repr(ll), parameters=fitted.nparams, out=a.out)


def _cmd_gof(a):
    tests = battery.check_test_ids(a.test)
    spec = io.read_model(a.model)
    _require(spec)
    u = io.read_data(a.data, spec.d)
    reports = bootstrap.bootstrap_pvalues(tests, spec, u, a.B, a.seed, workers=a.workers)
    dicts = [reports[t].to_dict() for t in tests]
    io.write_json(dicts[0] if len(dicts) == 1 else dicts, a.out)
    for r in dicts:
        _emit(**{f"{r['test']}.statistic": repr(r["statistic"]),
                 f"{r['test']}.p_value": repr(r["p_value"])})
    _emit(B=a.B, seed=a.seed, out=a.out)


def _cmd_power_study(a):
    try:
        cfg = bootstrap.StudyConfig.from_dict(io.read_json(a.config))
    except battery.UnknownTestError:
        raise
    except DomainError as exc:
        raise FormatError(f"{a.config}: {exc}") from exc
    res = bootstrap.size_power_study(cfg, workers=a.workers)
    io.write_json(res.to_dict(), a.out)
    for t in cfg.tests:
        _emit(**{f"{t}.{m}": repr(res.estimates[t][m]) for m in res.models})
    _emit(B=cfg.B, n=cfg.n, alpha=cfg.alpha, out=a.out)


def _cmd_klic(a):
    t, alt = io.read_model(a.true), io.read_model(a.alt)
    _require(t)
    _require(alt)
    est, se = bootstrap.klic_mc(t, alt, a.N, a.seed)
    if a.out:
        io.write_json({"klic": est, "se": se, "N": a.N, "seed": a.seed}, a.out)
    _emit(klic=repr(est), se=repr(se), N=a.N, seed=a.seed)


def _cmd_validate(a):
    spec = io.read_model(a.model)
    bad = spec.violations()
    if bad:
        for b in bad:
            _emit(violation=b)
        raise FormatError(f"{len(bad)} violation(s)")
    _emit(status="ok", d=spec.d, parameters=spec.nparams)


def _positive(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _seed(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def build_parser():
    p = _Parser(prog="vinegof", description="Vine copula goodness-of-fit toolkit")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="draw a sample from a model")
    s.add_argument("--model", required=True)
    s.add_argument("--n", type=_positive, required=True)
    s.add_argument("--seed", type=_seed, required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_simulate)

    s = sub.add_parser("fit", help="estimate the parameters of a model")
    s.add_argument("--model", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--method", choices=("seq", "mle"), default="mle")
    s.set_defaults(func=_cmd_fit)

    s = sub.add_parser("gof", help="bootstrap goodness-of-fit tests")
    s.add_argument("--model", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--test", required=True, help=f"one of {', '.join(battery.TEST_IDS)} or all")
    s.add_argument("--B", type=_positive, required=True)
    s.add_argument("--seed", type=_seed, required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--workers", type=_positive, default=1)
    s.set_defaults(func=_cmd_gof)

    s = sub.add_parser("power-study", help="run a size/power study from a JSON config")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--workers", type=_positive, default=1)
    s.set_defaults(func=_cmd_power_study)

    s = sub.add_parser("klic", help="Monte Carlo Kullback-Leibler divergence")
    s.add_argument("--true", required=True)
    s.add_argument("--alt", required=True)
    s.add_argument("--N", type=_positive, required=True)
    s.add_argument("--seed", type=_seed, required=True)
    s.add_argument("--out")
    s.set_defaults(func=_cmd_klic)

    s = sub.add_parser("validate", help="check a model file")
    s.add_argument("--model", required=True)
    s.set_defaults(func=_cmd_validate)
    return p


def run(argv=None):
    """Run the command line; returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except battery.UnknownTestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except (NumericalError, ConvergenceError, StudyError, DomainError, VineError,
            FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
