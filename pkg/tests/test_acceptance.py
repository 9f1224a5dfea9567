"""Acceptance criteria, each at its stated tolerance and runtime budget.

Run with ``pytest tests/test_acceptance.py -v``; one PASS/FAIL line per
criterion is printed in the terminal summary.
"""

import math
import time

import numpy as np
import pytest

from marpac.cli import main
from marpac.dependence import (beta_bruteforce_block, beta_empirical_ensemble, beta_exact_curve, beta_exact_markov,
                               beta_mixture_infinity)
from marpac.harness import ExperimentConfig, run_experiment
from marpac.harness.experiments import DEFAULT_SUITE
from marpac.learning import FunctionClass, erm, erm_risk_gap, gamma_ensemble, gamma_n
from marpac.process import MixtureLaw, ProcessLaw, sample_component, stationary_distribution
from marpac.seeding import DEFAULT_SEED, derive_seed

pytestmark = pytest.mark.slow


def suite_config(name, **params):
    doc = DEFAULT_SUITE[name]
    return ExperimentConfig.from_dict({**doc, "name": name, "seed": DEFAULT_SEED,
                                       "params": {**doc.get("params", {}), **params}})


def test_1_two_delta_floor(acceptance_log, two_deltas):
    start = time.perf_counter()
    estimates = {k: beta_empirical_ensemble(two_deltas, k, 1, 1, 10 ** 4, derive_seed(DEFAULT_SEED, k))[0]
                 for k in (1, 5, 20)}
    elapsed = time.perf_counter() - start
    passed = all(abs(v - 0.5) <= 0.02 for v in estimates.values()) and elapsed < 10
    acceptance_log(1, "two-delta mixture floor 0.5 +- 0.02", passed,
                   f"estimates {', '.join(f'k={k}: {v:.4f}' for k, v in estimates.items())}; {elapsed:.1f}s")
    assert passed


def test_2_general_floor(acceptance_log, three_deltas):
    start = time.perf_counter()
    target = beta_mixture_infinity(three_deltas.weights)
    est, se = beta_empirical_ensemble(three_deltas, 20, 1, 1, 10 ** 4, DEFAULT_SEED)
    elapsed = time.perf_counter() - start
    passed = abs(target - 0.62) < 1e-12 and abs(est - 0.62) <= 0.03 and elapsed < 30
    acceptance_log(2, "three-delta floor 0.62 +- 0.03", passed, f"estimate {est:.4f} (se {se:.4f}); {elapsed:.1f}s")
    assert passed


def test_3_component_decay_vs_floor(acceptance_log, flip_pair):
    start = time.perf_counter()
    comp_betas = []
    for comp in flip_pair.components:
        # matrix-power oracle, written out independently of the library
        pi = stationary_distribution(comp)
        step = np.linalg.matrix_power(comp.transition, 30)
        oracle = float(sum(pi[i] * 0.5 * np.abs(step[i] - pi).sum() for i in range(2)))
        assert beta_exact_markov(comp, 30) == pytest.approx(oracle, abs=1e-15)
        comp_betas.append(oracle)
    est, se = beta_empirical_ensemble(flip_pair, 30, 4, 4, 10 ** 4, DEFAULT_SEED)
    elapsed = time.perf_counter() - start
    passed = max(comp_betas) <= 1e-3 and est >= 0.4 and elapsed < 60
    acceptance_log(3, "components decay, mixture stays >= 0.4 at k=30", passed,
                   f"component beta(30) {max(comp_betas):.2e}; mixture {est:.4f} (se {se:.4f}); {elapsed:.1f}s")
    assert passed


CHAINS = {
    "flip 0.25": [[0.75, 0.25], [0.25, 0.75]],
    "flip 0.1": [[0.9, 0.1], [0.1, 0.9]],
    "asymmetric 2": [[0.6, 0.4], [0.15, 0.85]],
    "iid rows 2": [[0.3, 0.7], [0.3, 0.7]],
    "cyclic 3": [[0.1, 0.8, 0.1], [0.1, 0.1, 0.8], [0.8, 0.1, 0.1]],
    "sticky 3": [[0.9, 0.05, 0.05], [0.1, 0.8, 0.1], [0.2, 0.2, 0.6]],
    "sparse 3": [[0.0, 1.0, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]],
}


def test_4_oracle_agreement(acceptance_log):
    worst, monotone = 0.0, True
    for mat in CHAINS.values():
        law = ProcessLaw.markov(mat)
        for k in (1, 2, 3, 5, 8):
            exact = beta_exact_markov(law, k)
            windows = [beta_bruteforce_block(law, k, w, w) for w in (1, 2, 3, 4)]
            worst = max(worst, abs(windows[-1] - exact))
        values = beta_exact_curve(law, range(1, 41)).values
        monotone &= all(b <= a for a, b in zip(values, values[1:]))
    passed = worst <= 1e-9 and monotone
    acceptance_log(4, "window enumeration matches exact beta; exact curve non-increasing", passed,
                   f"{len(CHAINS)} chains, max |window - exact| {worst:.2e}, monotone {monotone}")
    assert passed


def test_5_total_probability(acceptance_log):
    start = time.perf_counter()
    cfg = suite_config("mixture_theorem")
    assert cfg.params["n"] == 500 and cfg.params["trials"] == 10 ** 4
    report = run_experiment(cfg)
    elapsed = time.perf_counter() - start
    details, passed = [], elapsed < 120
    for eps in (0.05, 0.1):
        rows = [r for r in report.tables["rates"] if r["epsilon"] == eps]
        mix = next(r for r in rows if r["run"] == "mixture")
        comps = [r for r in rows if r["run"] == "component"]
        weighted = sum(r["weight"] * r["rate"] for r in comps)
        se = math.hypot(mix["stderr"], math.sqrt(sum((r["weight"] * r["stderr"]) ** 2 for r in comps)))
        gap = abs(mix["rate"] - weighted)
        passed &= gap <= 3 * se
        details.append(f"eps={eps}: |{mix['rate']:.4f} - {weighted:.4f}| = {gap:.4f} <= {3 * se:.4f}")
    acceptance_log(5, "mixture failure rate equals weighted component rates", passed,
                   "; ".join(details) + f"; {elapsed:.1f}s")
    assert passed


def test_6_target_contrast(acceptance_log, two_deltas):
    cls = FunctionClass.thresholds(2)
    exact = True
    for n in (1, 2, 7, 32, 500, 4096):
        comp, _ = gamma_ensemble(two_deltas, cls, n, 200, derive_seed(DEFAULT_SEED, n), "component")
        marg, _ = gamma_ensemble(two_deltas, cls, n, 200, derive_seed(DEFAULT_SEED, n), "marginal")
        exact &= bool(np.all(comp == 0.0)) and bool(np.all(marg == 0.5))
    acceptance_log(6, "component targets give 0, marginal targets give 0.5", exact,
                   "200 paths at each n in 1, 2, 7, 32, 500, 4096")
    assert exact


def test_7_erm_bound(acceptance_log):
    law, cls = ProcessLaw.iid([0.5, 0.5]), FunctionClass.thresholds(2)
    held = 0
    for i in range(1000):
        path = sample_component(law, 500, derive_seed(DEFAULT_SEED, i))
        report = gamma_n(path, cls, law)
        held += erm_risk_gap(report, erm(path, cls)) <= 2 * report.gamma
    acceptance_log(7, "ERM risk gap within 2 Gamma", held == 1000, f"{held}/1000 trials")
    assert held == 1000


def test_8_corollary_parity(acceptance_log):
    start = time.perf_counter()
    cfg = suite_config("exchangeable_corollary")
    assert cfg.params["trials"] == 2000 and cfg.params["epsilon"] == 0.1 and cfg.params["delta"] == 0.05
    report = run_experiment(cfg)
    elapsed = time.perf_counter() - start
    n_star = {r["run"]: r["n_star"] for r in report.tables["n_star"]}
    comps = [v for k, v in n_star.items() if k.startswith("component_")]
    passed = (n_star["mixture"] is not None and None not in comps and n_star["mixture"] <= max(comps)
              and elapsed < 300)
    acceptance_log(8, "exchangeable mixture n_star <= max component n_star", passed,
                   f"mixture {n_star['mixture']}, components {comps}; {elapsed:.1f}s")
    assert passed


def test_9_criterion_trend(acceptance_log):
    start = time.perf_counter()
    cfg = suite_config("mar_criterion_markov")
    report = run_experiment(cfg)
    elapsed = time.perf_counter() - start
    rows = report.tables["criterion"]
    large = max(r["n"] for r in rows)
    floor = beta_mixture_infinity(cfg.law.weights)
    laws = cfg.law.components
    decayed = [(r["lag"], r["value"], 2 * max(beta_exact_markov(c, r["lag"]) for c in laws) + 3 * r["stderr"])
               for r in rows if r["n"] == large]
    at_zero = [r["value"] for r in rows if r["n"] == 0]
    passed = (sorted(k for k, _, _ in decayed) == [5, 10, 20] and all(v <= b for _, v, b in decayed)
              and min(at_zero) >= 0.4 * floor and elapsed < 300)
    acceptance_log(9, "criterion falls under 2 beta envelope at large n, bounded away at n=0", passed,
                   f"n={large}: " + ", ".join(f"k={k} {v:.4f}<={b:.4f}" for k, v, b in decayed)
                   + f"; n=0 min {min(at_zero):.4f} >= {0.4 * floor:.2f}; {elapsed:.1f}s")
    assert passed


def test_10_reproducible_suite(acceptance_log, tmp_path):
    trees, codes = [], []
    for run, workers in (("a", 1), ("b", 2)):
        out = tmp_path / run
        codes.append(main(["all", "--seed", str(DEFAULT_SEED), "--workers", str(workers), "--out", str(out)]))
        trees.append({p.relative_to(out).as_posix(): p.read_bytes() for p in sorted(out.rglob("*")) if p.is_file()})
    identical = trees[0] == trees[1] and len(trees[0]) > 0
    acceptance_log(10, "full suite byte-identical across runs and worker counts", identical,
                   f"{len(trees[0])} files, exit codes {codes}")
    assert identical
