"""Command-line front end.

Exit status: 0 when every verdict passes, 1 on a quantitative failure,
2 on usage or configuration errors.  Logs go to stderr, data to files.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from . import dependence, learning, process
from .harness.experiments import run_all, run_experiment
from .harness.report import ConfigError, ExperimentConfig
from .seeding import DEFAULT_SEED, default_workers

log = logging.getLogger("marpac")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

VERIFY_COMMANDS = ("verify-mixture", "verify-exchangeable", "verify-mar-floor", "verify-mar-criterion")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_int_list(text: str) -> List[int]:
    """Parse ``"1..10"``, ``"1,5,20"`` or mixtures such as ``"1..3,10"``."""
    out: List[int] = []
    try:
        for part in text.split(","):
            part = part.strip()
            if ".." in part:
                lo, hi = (int(x) for x in part.split(".."))
                if hi < lo:
                    raise ValueError
                out.extend(range(lo, hi + 1))
            elif part:
                out.append(int(part))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer list or range: {text!r}") from None
    if not out:
        raise argparse.ArgumentTypeError("empty integer list")
    return out


def _probability(text: str) -> float:
    value = float(text)
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError(f"{text} is not in (0, 1)")
    return value


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help="master seed")
    common.add_argument("--workers", type=int, default=default_workers(),
                        help="worker processes; results do not depend on this")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")

    parser = _Parser(prog="marpac", description=__doc__, formatter_class=fmt)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sample", parents=[common], formatter_class=fmt, help="draw one sample path")
    p.add_argument("--law", required=True, help="law or mixture JSON file")
    p.add_argument("--n", type=int, default=100, help="path length")
    p.add_argument("--out", default="sample.json", help="output JSON file")

    p = sub.add_parser("beta", parents=[common], formatter_class=fmt, help="beta-dependence curve as CSV")
    p.add_argument("--law", required=True, help="law or mixture JSON file")
    p.add_argument("--k", type=parse_int_list, default="1..10", help="lags, e.g. 1..10 or 1,5,20")
    p.add_argument("--mode", choices=["exact", "empirical"], default="exact",
                   help="exact: closed form for components, window enumeration for mixtures")
    p.add_argument("--past", type=int, default=1, help="past window length (mixtures, empirical)")
    p.add_argument("--future", type=int, default=1, help="future window length (mixtures, empirical)")
    p.add_argument("--trials", type=int, default=10000, help="independent paths (empirical)")
    p.add_argument("--bootstrap", type=int, default=dependence.DEFAULT_BOOTSTRAP, help="bootstrap resamples")
    p.add_argument("--out", default="beta.csv", help="output CSV file")

    for name, helptext in (("gamma", "uniform deviation of one path"), ("erm", "empirical risk minimizer")):
        p = sub.add_parser(name, parents=[common], formatter_class=fmt, help=helptext)
        p.add_argument("--law", required=True, help="law or mixture JSON file")
        p.add_argument("--class", dest="fclass", default="thresholds",
                       help="thresholds, intervals, or a JSON file with an explicit class")
        p.add_argument("--n", type=int, default=1000, help="path length")
        p.add_argument("--target", choices=learning.TARGETS, default="component",
                       help="score against the generating component or the mixture marginal")
        p.add_argument("--out", default=f"{name}.json", help="output JSON file")

    p = sub.add_parser("complexity", parents=[common], formatter_class=fmt, help="sample-complexity curve")
    p.add_argument("--law", required=True, help="law or mixture JSON file")
    p.add_argument("--class", dest="fclass", default="thresholds",
                   help="thresholds, intervals, or a JSON file with an explicit class")
    p.add_argument("--epsilon", type=_probability, default=0.1, help="accuracy")
    p.add_argument("--delta", type=_probability, default=0.05, help="confidence")
    p.add_argument("--n-grid", type=parse_int_list, default=",".join(map(str, learning.DEFAULT_N_GRID)),
                   help="path lengths")
    p.add_argument("--trials", type=int, default=1000, help="paths per grid point")
    p.add_argument("--target", choices=learning.TARGETS, default="component", help="expectation target")
    p.add_argument("--out", default="complexity.csv", help="output CSV; a JSON sidecar is written beside it")

    for name in VERIFY_COMMANDS:
        p = sub.add_parser(name, parents=[common], formatter_class=fmt, help=f"run the {name} experiment")
        p.add_argument("--config", required=True, help="experiment config JSON")
        p.add_argument("--out", default=None, help="output directory (default: results/<name>)")
        p.add_argument("--trials", type=int, default=None, help="override the configured trial count")

    p = sub.add_parser("all", parents=[common], formatter_class=fmt, help="run the default experiment suite")
    p.add_argument("--out", default="results", help="output directory")
    p.add_argument("--trials", type=int, default=None, help="override every experiment's trial count")
    return parser


def _load_law(path: str) -> process.Law:
    try:
        return process.load_law(path)
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ConfigError(f"cannot load law from {path}: {exc}") from None


def _load_class(source: str, alphabet: int) -> learning.FunctionClass:
    if source in ("thresholds", "intervals"):
        return learning.class_from_dict(source, alphabet)
    try:
        with open(source) as fh:
            return learning.class_from_dict(json.load(fh), alphabet)
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ConfigError(f"cannot load function class from {source}: {exc}") from None


def _draw(law: process.Law, n: int, seed: int) -> process.SamplePath:
    if isinstance(law, process.MixtureLaw):
        return process.sample_mixture(law, n, seed)
    return process.sample_component(law, n, seed)


def _write_json(path, doc) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _target_for(law: process.Law, path: process.SamplePath, target: str) -> process.Law:
    if isinstance(law, process.MixtureLaw) and target == "component":
        return law.components[path.component_index]
    return law


def cmd_sample(args) -> int:
    law = _load_law(args.law)
    path = _draw(law, args.n, args.seed)
    _write_json(args.out, {"symbols": path.symbols.tolist(), "component_index": path.component_index,
                           "seed": args.seed, "law": process.law_to_dict(law)})
    print(f"sample: n={args.n} component={path.component_index} -> {args.out}")
    return EXIT_OK


def cmd_beta(args) -> int:
    law = _load_law(args.law)
    if args.mode == "empirical":
        curve = dependence.beta_empirical_curve(law, args.k, args.past, args.future, args.trials, args.seed,
                                                args.bootstrap, args.workers)
    elif isinstance(law, process.ProcessLaw):
        curve = dependence.beta_exact_curve(law, args.k)
    else:
        values = [dependence.beta_bruteforce_block(law, k, args.past, args.future) for k in args.k]
        try:
            curve = dependence.BetaCurve(tuple(args.k), tuple(values), "exact")
        except ValueError as exc:
            log.error("windowed mixture curve rejected: %s (values %s)", exc, values)
            return EXIT_FAIL
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    curve.to_csv(args.out)
    monotone = curve.is_monotone()
    print(f"beta: {len(curve.lags)} lags, mode={curve.mode}, non-increasing={'yes' if monotone else 'NO'} "
          f"-> {args.out}")
    return EXIT_OK if monotone else EXIT_FAIL


def cmd_gamma(args) -> int:
    law = _load_law(args.law)
    fclass = _load_class(args.fclass, law.alphabet)
    path = _draw(law, args.n, args.seed)
    report = learning.gamma_n(path, fclass, _target_for(law, path, args.target))
    _write_json(args.out, {"gamma": report.gamma, "argmax": report.argmax_label,
                           "empirical_means": report.empirical_means.tolist(), "targets": report.targets.tolist(),
                           "labels": list(fclass.labels), "component_index": path.component_index,
                           "n": args.n, "seed": args.seed, "target": args.target})
    print(f"gamma: {report.gamma:.6g} at {report.argmax_label} -> {args.out}")
    return EXIT_OK


def cmd_erm(args) -> int:
    law = _load_law(args.law)
    fclass = _load_class(args.fclass, law.alphabet)
    path = _draw(law, args.n, args.seed)
    result = learning.erm(path, fclass)
    report = learning.gamma_n(path, fclass, _target_for(law, path, args.target))
    gap = learning.erm_risk_gap(report, result)
    _write_json(args.out, {"f_hat": result.label, "index": result.index, "empirical_risk": result.risk,
                           "risk_gap": gap, "gamma": report.gamma, "component_index": path.component_index,
                           "n": args.n, "seed": args.seed, "target": args.target})
    print(f"erm: {result.label} risk={result.risk:.6g} gap={gap:.6g} 2*gamma={2 * report.gamma:.6g} -> {args.out}")
    return EXIT_OK


def cmd_complexity(args) -> int:
    law = _load_law(args.law)
    fclass = _load_class(args.fclass, law.alphabet)
    est = learning.sample_complexity(law, fclass, args.epsilon, args.delta, args.n_grid, args.trials, args.seed,
                                     args.target, args.workers)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    est.write(args.out)
    print(f"complexity: n_star={est.n_star} (epsilon={args.epsilon}, delta={args.delta}) -> {args.out}")
    return EXIT_OK


def _report_and_exit(reports) -> int:
    for report in reports:
        for line in report.summary_lines():
            print(line)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


def cmd_verify(args) -> int:
    cfg = ExperimentConfig.load(args.config, {"seed": args.seed, "trials": args.trials})
    if cfg.experiment != args.command:
        raise ConfigError(f"config is for {cfg.experiment}, not {args.command}")
    report = run_experiment(cfg, args.workers)
    report.write(args.out or cfg.output or Path("results") / cfg.name)
    return _report_and_exit([report])


def cmd_all(args) -> int:
    out = Path(args.out)
    reports = run_all(args.seed, out, args.workers, {"trials": args.trials})
    _write_json(out / "summary.json", {"seed": args.seed,
                                       "experiments": [{"name": r.name, "experiment": r.experiment,
                                                        "passed": r.passed} for r in reports]})
    return _report_and_exit(reports)


COMMANDS = {"sample": cmd_sample, "beta": cmd_beta, "gamma": cmd_gamma, "erm": cmd_erm,
            "complexity": cmd_complexity, "all": cmd_all, **{name: cmd_verify for name in VERIFY_COMMANDS}}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.workers < 1:
        print("marpac: error: --workers must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ValueError, TypeError, KeyError) as exc:
        print(f"marpac: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
