"""Named experiments checking the mixture-learning and MAR results by simulation.

Every verdict is computed from the emitted tables and the config echo by a
``judge_*`` function, so a written report can be re-judged offline with
:func:`recheck_report`.
"""

from __future__ import annotations

import logging
import math
import time
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np

from ..dependence import ENUMERATION_LIMIT, beta_bruteforce_block, beta_empirical_curve, beta_exact_markov, \
    beta_mixture_infinity
from ..learning import binomial_stderr, exceeds, first_passing, gamma_ensemble, sample_complexity
from ..process import MixtureLaw, ProcessLaw, as_mixture
from ..seeding import STREAM_COMPONENT, STREAM_CONTRAST, STREAM_CRITERION, STREAM_MIXTURE, derive_seed
from .criterion import event_mode, mar_criterion_estimate
from .report import ConfigError, ExperimentConfig, ExperimentReport, verdict

log = logging.getLogger(__name__)


def _finish(cfg: ExperimentConfig, tables: dict, started: float) -> ExperimentReport:
    verdicts = JUDGES[cfg.experiment](tables, cfg.params)
    report = ExperimentReport(cfg.experiment, cfg.name, cfg.echo(), tables, verdicts, time.perf_counter() - started)
    log.info("%s finished in %.2fs: %s", cfg.name, report.duration, "pass" if report.passed else "FAIL")
    return report


# -- mixture theorem --------------------------------------------------------------

def verify_mixture_theorem(cfg: ExperimentConfig, workers: int = 1) -> ExperimentReport:
    """Failure probability of the mixture against the weighted component failure probabilities.

    The mixture run scores each path against its own component.  Each
    component is also run on its own, on independent seeds.
    """
    started = time.perf_counter()
    mix = as_mixture(cfg.law)
    p = cfg.params
    n, trials = int(p["n"]), int(p["trials"])
    g_mix, comps = gamma_ensemble(mix, cfg.function_class, n, trials, derive_seed(cfg.seed, STREAM_MIXTURE),
                                  "component", workers)
    g_comp = [gamma_ensemble(c, cfg.function_class, n, trials, derive_seed(cfg.seed, STREAM_COMPONENT, i),
                             "component", workers)[0] for i, c in enumerate(mix.components)]
    rows = []
    for eps in p["epsilons"]:
        fail = exceeds(g_mix, eps)
        rows.append(_rate_row(eps, "mixture", -1, 1.0, int(fail.sum()), trials))
        for i, w in enumerate(mix.weights):
            rows.append(_rate_row(eps, "component", i, float(w), int(exceeds(g_comp[i], eps).sum()), trials))
        for i, w in enumerate(mix.weights):
            picked = comps == i
            rows.append(_rate_row(eps, "mixture_given_component", i, float(w), int(fail[picked].sum()),
                                  int(picked.sum())))
    return _finish(cfg, {"rates": rows}, started)


def _rate_row(eps, run, component, weight, failures, trials) -> dict:
    rate = failures / trials if trials else 0.0
    return {"epsilon": float(eps), "run": run, "component": component, "weight": weight, "failures": failures,
            "trials": trials, "rate": rate, "stderr": binomial_stderr(rate, trials) if trials else 0.0}


def judge_mixture(tables: dict, params: dict) -> List[dict]:
    tol = params["tolerance_se"]
    out = []
    for eps in params["epsilons"]:
        rows = [r for r in tables["rates"] if r["epsilon"] == float(eps)]
        mix = next(r for r in rows if r["run"] == "mixture")
        comps = [r for r in rows if r["run"] == "component"]
        rate_m = mix["failures"] / mix["trials"]
        se_m = binomial_stderr(rate_m, mix["trials"])
        rates = [r["failures"] / r["trials"] for r in comps]
        ses = [binomial_stderr(r, c["trials"]) for r, c in zip(rates, comps)]
        weighted = sum(c["weight"] * r for c, r in zip(comps, rates))
        se_w = math.sqrt(sum((c["weight"] * s) ** 2 for c, s in zip(comps, ses)))
        gap = abs(rate_m - weighted)
        out.append(verdict(f"total_probability_eps={eps}", gap <= tol * math.hypot(se_m, se_w), gap,
                           tol * math.hypot(se_m, se_w),
                           f"mixture {rate_m:.4f} vs weighted components {weighted:.4f}"))
        worst = int(np.argmax(rates))
        bound = rates[worst] + tol * math.hypot(se_m, ses[worst])
        out.append(verdict(f"no_worse_than_components_eps={eps}", rate_m <= bound, rate_m, bound,
                           f"worst component {worst} rate {rates[worst]:.4f}"))
    return out


# -- exchangeable corollary ---------------------------------------------------------

def verify_exchangeable_corollary(cfg: ExperimentConfig, workers: int = 1) -> ExperimentReport:
    """Sample complexity of an IID mixture against that of its components."""
    started = time.perf_counter()
    mix = as_mixture(cfg.law)
    if any(c.kind not in ("iid", "delta") for c in mix.components):
        raise ConfigError("corollary requires IID components")
    p = cfg.params
    args = dict(epsilon=p["epsilon"], delta=p["delta"], n_grid=p["n_grid"], trials=int(p["trials"]),
                workers=workers)
    runs = [("mixture", sample_complexity(mix, cfg.function_class, seed=derive_seed(cfg.seed, STREAM_MIXTURE),
                                          **args))]
    for i, comp in enumerate(mix.components):
        runs.append((f"component_{i}", sample_complexity(comp, cfg.function_class,
                                                         seed=derive_seed(cfg.seed, STREAM_COMPONENT, i), **args)))
    if p["contrast"]:
        runs.append(("contrast_marginal", sample_complexity(mix, cfg.function_class, target="marginal",
                                                            seed=derive_seed(cfg.seed, STREAM_CONTRAST), **args)))
    curves = [{"run": name, **row} for name, est in runs for row in est.rows()]
    n_star = [{"run": name, "n_star": est.n_star} for name, est in runs]
    return _finish(cfg, {"failure_curves": curves, "n_star": n_star}, started)


def judge_exchangeable(tables: dict, params: dict) -> List[dict]:
    by_run: Dict[str, List[dict]] = {}
    for row in tables["failure_curves"]:
        by_run.setdefault(row["run"], []).append(row)
    n_star = {run: first_passing([r["n"] for r in rows], [r["failures"] / r["trials"] for r in rows],
                                 params["delta"]) for run, rows in by_run.items()}
    inf = math.inf
    comps = [v for k, v in n_star.items() if k.startswith("component_")]
    worst = max((inf if v is None else v) for v in comps)
    mixture = inf if n_star["mixture"] is None else n_star["mixture"]
    out = [verdict("mixture_n_star_le_component_max", mixture <= worst, n_star["mixture"],
                   None if worst == inf else worst, f"component n_star {comps}")]
    if "contrast_marginal" in n_star:
        out.append(verdict("marginal_target_has_no_n_star", n_star["contrast_marginal"] is None,
                           n_star["contrast_marginal"], None,
                           "mixture-marginal targets should never reach the confidence level"))
    return out


# -- MAR floor ----------------------------------------------------------------------

def uniform_delta_mixture(q: int) -> MixtureLaw:
    return MixtureLaw(tuple(ProcessLaw.delta(s, q) for s in range(q)), np.full(q, 1.0 / q))


def verify_mar_floor(cfg: ExperimentConfig, workers: int = 1) -> ExperimentReport:
    """Ensemble beta curve of the mixture against the exact component curves."""
    started = time.perf_counter()
    mix = as_mixture(cfg.law)
    p = cfg.params
    lags = sorted(int(k) for k in p["lags"])
    past, future, trials = int(p["past"]), int(p["future"]), int(p["trials"])
    floor = beta_mixture_infinity(mix.weights)
    curve = beta_empirical_curve(mix, lags, past, future, trials, derive_seed(cfg.seed, STREAM_MIXTURE),
                                 int(p["bootstrap"]), workers)
    exact_ok = mix.alphabet ** (past + future) <= ENUMERATION_LIMIT
    mixture_rows = [{"lag": k, "beta": v, "stderr": se, "floor": floor,
                     "window_exact": beta_bruteforce_block(mix, k, past, future) if exact_ok else None}
                    for k, v, se in zip(curve.lags, curve.values, curve.stderr)]
    component_rows = [{"component": i, "lag": k, "beta": beta_exact_markov(c, k)}
                      for i, c in enumerate(mix.components) for k in lags]
    tables = {"mixture_curve": mixture_rows, "component_curves": component_rows}
    if p["q_sweep"]:
        sweep = []
        for q in sorted(int(q) for q in p["q_sweep"]):
            est = beta_empirical_curve(uniform_delta_mixture(q), [lags[-1]], 1, 1, trials,
                                       derive_seed(cfg.seed, STREAM_MIXTURE, q), int(p["bootstrap"]), workers)
            sweep.append({"q": q, "floor": 1.0 - 1.0 / q, "beta": est.values[0], "stderr": est.stderr[0]})
        tables["atomless_sweep"] = sweep
    return _finish(cfg, tables, started)


def judge_mar_floor(tables: dict, params: dict) -> List[dict]:
    z, slack = params["tolerance_se"], params["floor_slack"]
    mixture = sorted(tables["mixture_curve"], key=lambda r: r["lag"])
    max_lag = mixture[-1]["lag"]
    tail = max(r["beta"] for r in tables["component_curves"] if r["lag"] == max_lag)
    floor = mixture[0]["floor"]
    lowest = min(r["beta"] + z * r["stderr"] for r in mixture)
    last = mixture[-1]
    out = [
        verdict("components_decay", tail < params["decay_threshold"], tail, params["decay_threshold"],
                f"largest exact component beta at lag {max_lag}"),
        verdict("mixture_above_floor", lowest >= floor - slack, lowest, floor - slack,
                "min over lags of estimate + z*stderr"),
        verdict("mixture_at_floor_max_lag", abs(last["beta"] - floor) <= z * last["stderr"] + slack,
                abs(last["beta"] - floor), z * last["stderr"] + slack, f"lag {max_lag}"),
    ]
    sweep = tables.get("atomless_sweep")
    if sweep:
        for r in sweep:
            out.append(verdict(f"atomless_q={r['q']}", abs(r["beta"] - r["floor"]) <= z * r["stderr"] + slack,
                               abs(r["beta"] - r["floor"]), z * r["stderr"] + slack, f"floor 1-1/q = {r['floor']:.4f}"))
        betas = [r["beta"] for r in sweep]
        rising = all(b2 >= b1 for b1, b2 in zip(betas, betas[1:]))
        out.append(verdict("atomless_trend_to_one", rising, betas[-1], 1.0, "estimates non-decreasing in q"))
    return out


# -- MAR criterion ---------------------------------------------------------------

def verify_mar_criterion(cfg: ExperimentConfig, workers: int = 1) -> ExperimentReport:
    """Criterion statistic over a grid of history lengths and lags."""
    started = time.perf_counter()
    mix = as_mixture(cfg.law)
    p = cfg.params
    floor = beta_mixture_infinity(mix.weights)
    rows = []
    for n in sorted(int(n) for n in p["n_grid"]):
        for k in sorted(int(k) for k in p["lags"]):
            envelope = max(beta_exact_markov(c, k) for c in mix.components)
            est = mar_criterion_estimate(mix, n, k, p["l_grid"], int(p["future"]), int(p["trials"]),
                                         derive_seed(cfg.seed, STREAM_CRITERION, n), int(p["max_events"]), workers)
            rows.append({"n": n, "lag": k, "value": est.value, "stderr": est.stderr, "envelope": envelope,
                         "floor": floor})
    truncation = [{"future_window": int(p["future"]),
                   "events": event_mode(mix.alphabet, int(p["future"]), int(p["max_events"])),
                   "l_grid": " ".join(str(l) for l in p["l_grid"]), "trials": int(p["trials"])}]
    return _finish(cfg, {"criterion": rows, "truncation": truncation}, started)


def judge_mar_criterion(tables: dict, params: dict) -> List[dict]:
    rows = tables["criterion"]
    small, large = min(r["n"] for r in rows), max(r["n"] for r in rows)
    frac, z = params["floor_fraction"], params["tolerance_se"]
    at_small = [r for r in rows if r["n"] == small]
    lowest = min(r["value"] for r in at_small)
    need = frac * at_small[0]["floor"]
    out = [verdict(f"bounded_away_at_n={small}", lowest >= need, lowest, need,
                   "min over lags vs fraction of the mixture floor")]
    for r in (r for r in rows if r["n"] == large):
        bound = 2 * r["envelope"] + z * r["stderr"]
        out.append(verdict(f"within_envelope_n={large}_k={r['lag']}", r["value"] <= bound, r["value"], bound,
                           "2 * uniform component beta + z * stderr"))
    return out


EXPERIMENT_RUNNERS: Dict[str, Callable[..., ExperimentReport]] = {
    "verify-mixture": verify_mixture_theorem,
    "verify-exchangeable": verify_exchangeable_corollary,
    "verify-mar-floor": verify_mar_floor,
    "verify-mar-criterion": verify_mar_criterion,
}

JUDGES: Dict[str, Callable[[dict, dict], List[dict]]] = {
    "verify-mixture": judge_mixture,
    "verify-exchangeable": judge_exchangeable,
    "verify-mar-floor": judge_mar_floor,
    "verify-mar-criterion": judge_mar_criterion,
}


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> ExperimentReport:
    return EXPERIMENT_RUNNERS[cfg.experiment](cfg, workers)


def recheck_report(doc: dict) -> bool:
    """True when verdicts recomputed from the tables match the recorded ones."""
    fresh = JUDGES[doc["experiment"]](doc["tables"], doc["config"]["params"])
    return fresh == doc["verdicts"]


# -- the default suite -------------------------------------------------------------

def _delta(s: int, alphabet: int) -> dict:
    return {"alphabet": alphabet, "kind": "delta", "symbol": s}


def _flip(p: float) -> dict:
    return {"alphabet": 2, "kind": "markov", "transition": [[1 - p, p], [p, 1 - p]]}


def _iid(dist) -> dict:
    return {"alphabet": len(dist), "kind": "iid", "dist": list(dist)}


def _mixture(components, weights) -> dict:
    return {"alphabet": components[0]["alphabet"], "kind": "mixture", "weights": list(weights),
            "components": list(components)}


TWO_DELTAS = _mixture([_delta(0, 2), _delta(1, 2)], [0.5, 0.5])
FLIP_PAIR = _mixture([_flip(0.1), _flip(0.9)], [0.5, 0.5])

DEFAULT_SUITE: Dict[str, dict] = {
    "mixture_theorem": {
        "experiment": "verify-mixture",
        "law": _mixture([_iid([0.2, 0.8]), _iid([0.8, 0.2])], [0.5, 0.5]),
        "class": {"kind": "thresholds"},
    },
    "exchangeable_corollary": {
        "experiment": "verify-exchangeable",
        "law": _mixture([_iid([0.1, 0.9]), _iid([0.9, 0.1])], [0.5, 0.5]),
        "class": {"kind": "thresholds"},
    },
    "mar_floor_two_deltas": {
        "experiment": "verify-mar-floor",
        "law": TWO_DELTAS,
        "params": {"lags": [1, 5, 20], "floor_slack": 0.02, "q_sweep": [2, 5, 10, 20]},
    },
    "mar_floor_three_deltas": {
        "experiment": "verify-mar-floor",
        "law": _mixture([_delta(0, 3), _delta(1, 3), _delta(2, 3)], [0.5, 0.3, 0.2]),
        "params": {"lags": [1, 5, 20], "floor_slack": 0.03},
    },
    "mar_floor_markov": {
        "experiment": "verify-mar-floor",
        "law": FLIP_PAIR,
        "params": {"lags": [1, 2, 5, 10, 20, 30], "past": 4, "future": 4, "floor_slack": 0.1},
    },
    "mar_criterion_markov": {
        "experiment": "verify-mar-criterion",
        "law": FLIP_PAIR,
    },
    "mar_criterion_two_deltas": {
        "experiment": "verify-mar-criterion",
        "law": TWO_DELTAS,
        "params": {"n_grid": [0, 1, 4], "lags": [1, 5, 20]},
    },
}


def default_configs(seed: int, overrides: Optional[dict] = None) -> List[ExperimentConfig]:
    configs = []
    for name, doc in DEFAULT_SUITE.items():
        cfg = ExperimentConfig.from_dict({**doc, "name": name, "seed": seed})
        if overrides:
            known = {k: v for k, v in overrides.items() if k in cfg.params and v is not None}
            cfg.params.update(known)
        configs.append(cfg)
    return configs


def run_all(seed: int, out_dir, workers: int = 1, overrides: Optional[dict] = None) -> List[ExperimentReport]:
    """Run the default suite, writing one directory per experiment under ``out_dir``."""
    reports = []
    for cfg in default_configs(seed, overrides):
        report = run_experiment(cfg, workers)
        report.write(Path(out_dir) / cfg.name)
        reports.append(report)
    return reports
