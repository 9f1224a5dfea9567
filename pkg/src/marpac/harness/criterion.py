"""Truncated estimator of the uniform-MAR criterion.

For a history ``h`` of ``n`` symbols, a continuation ``b`` of ``l`` symbols
and a future window starting ``k`` steps after ``b`` ends, the criterion
averages

    sup_l sup_B  rho(B | h, b_1..b_l) - rho(B | h)

over paths.  Both conditional laws of the future window are exact for a
finite mixture: the posterior over components is computed from the path
likelihoods and each component contributes its own forward law.  Only the
outer expectation is Monte Carlo.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from ..dependence import StateSpaceTooLarge, window_table
from ..process import Law, as_mixture, sample_batch
from ..seeding import Seed, map_chunks

DEFAULT_L_GRID = (1, 2, 4, 8)
MAX_EVENT_CELLS = 2 ** 16


@dataclass(frozen=True)
class CriterionEstimate:
    value: float
    stderr: float
    events: str  # "all" or "coordinates"
    trials: int


def _log(x: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(x)


def _cumulative_loglik(paths: np.ndarray, comp) -> np.ndarray:
    """Log-likelihood of every prefix: column t covers the first t symbols."""
    rows, length = paths.shape
    out = np.zeros((rows, length + 1))
    if length == 0:
        return out
    log_init, log_kernel = _log(comp.initial_law), _log(comp.kernel)
    steps = np.empty((rows, length))
    steps[:, 0] = log_init[paths[:, 0]]
    if length > 1:
        steps[:, 1:] = log_kernel[paths[:, :-1], paths[:, 1:]]
    out[:, 1:] = np.cumsum(steps, axis=1)
    return out


def _posterior(log_prior: np.ndarray, loglik: np.ndarray) -> np.ndarray:
    scores = log_prior[None, :] + loglik
    # a prefix impossible under every component keeps the prior
    impossible = np.isneginf(scores).all(axis=1)
    scores[impossible] = log_prior
    top = scores.max(axis=1, keepdims=True)
    w = np.exp(scores - top)
    return w / w.sum(axis=1, keepdims=True)


def _future_laws(comp, starts: np.ndarray, f: int, events: str) -> np.ndarray:
    """Law of the future window (or its coordinate marginals) per start distribution."""
    if events == "all":
        return window_table(comp.kernel, starts, f)
    out, cur = [], np.asarray(starts, dtype=float)
    for _ in range(f):
        out.append(cur)
        cur = cur @ comp.kernel
    return np.concatenate(out, axis=1)


def _sup_events(diff: np.ndarray, f: int, alphabet: int, events: str) -> np.ndarray:
    if events == "all":
        return 0.5 * np.abs(diff).sum(axis=1)
    return 0.5 * np.abs(diff.reshape(len(diff), f, alphabet)).sum(axis=2).max(axis=1)


def event_mode(alphabet: int, f: int, max_events: int = MAX_EVENT_CELLS) -> str:
    """All window events when the window has at most ``max_events`` cells,
    otherwise single-coordinate events only."""
    return "all" if alphabet ** f <= max_events else "coordinates"


def path_values(law: Law, paths: np.ndarray, n: int, k: int, l_grid: Sequence[int], f: int,
                events: str) -> np.ndarray:
    """Criterion integrand for each row of ``paths`` (history then continuation)."""
    mix = as_mixture(law)
    alphabet = mix.alphabet
    l_grid = sorted(set(int(l) for l in l_grid))
    if paths.shape[1] < n + l_grid[-1]:
        raise ValueError("paths are shorter than history plus the longest continuation")
    log_prior = _log(mix.weights)
    cum = np.stack([_cumulative_loglik(paths, c) for c in mix.components], axis=1)  # (N, q, L+1)
    w_hist = _posterior(log_prior, cum[:, :, n])
    best = np.zeros(len(paths))
    for l in l_grid:
        w_more = _posterior(log_prior, cum[:, :, n + l])
        last_b = paths[:, n + l - 1]
        given_more = 0.0
        given_hist = 0.0
        for c, comp in enumerate(mix.components):
            step_k = np.linalg.matrix_power(comp.kernel, k)
            given_more = given_more + w_more[:, c, None] * _future_laws(comp, step_k, f, events)[last_b]
            if n == 0:
                stationary = _future_laws(comp, comp.initial_law[None, :], f, events)[0]
                given_hist = given_hist + mix.weights[c] * stationary[None, :]
            else:
                step_kl = np.linalg.matrix_power(comp.kernel, k + l)
                given_hist = given_hist + w_hist[:, c, None] * _future_laws(comp, step_kl, f, events)[paths[:, n - 1]]
        best = np.maximum(best, _sup_events(given_more - given_hist, f, alphabet, events))
    return best


def _chunk(law: Law, length: int, seed: Seed, n: int, k: int, l_grid, f: int, events: str,
           start: int, stop: int) -> np.ndarray:
    paths, _ = sample_batch(law, length, seed, start, stop)
    return path_values(law, paths.astype(np.int64), n, k, l_grid, f, events)


def mar_criterion_estimate(law: Law, n: int, k: int, l_grid: Sequence[int] = DEFAULT_L_GRID, f: int = 4,
                           trials: int = 2000, seed: Seed = 0, max_events: int = MAX_EVENT_CELLS,
                           workers: int = 1) -> CriterionEstimate:
    """Monte Carlo mean of the criterion integrand over ``trials`` paths."""
    if n < 0 or k < 1 or f < 1 or not l_grid or min(l_grid) < 1:
        raise ValueError("need n >= 0, k >= 1, f >= 1 and continuation lengths >= 1")
    if trials < 2:
        raise ValueError("need at least two trials")
    events = event_mode(law.alphabet, f, max_events)
    if events == "coordinates" and f * law.alphabet > 10 ** 7:
        raise StateSpaceTooLarge("future window too large even for coordinate events")
    length = n + max(l_grid)
    chunks = map_chunks(_chunk, trials, (law, length, seed, n, k, tuple(l_grid), f, events), workers=workers)
    values = np.concatenate(chunks)
    return CriterionEstimate(float(values.mean()), float(values.std(ddof=1) / np.sqrt(trials)), events, trials)


def mar_criterion_exact(law: Law, n: int, k: int, l_grid: Sequence[int] = DEFAULT_L_GRID, f: int = 4,
                        max_events: int = MAX_EVENT_CELLS) -> float:
    """Exact criterion value by enumerating every history and continuation."""
    mix = as_mixture(law)
    alphabet = mix.alphabet
    length = n + max(l_grid)
    if alphabet ** length > 10 ** 6:
        raise StateSpaceTooLarge(f"{alphabet ** length} prefixes exceed the enumeration limit")
    paths = np.array(list(itertools.product(range(alphabet), repeat=length)), dtype=np.int64).reshape(-1, length)
    cum = np.stack([_cumulative_loglik(paths, c)[:, -1] for c in mix.components], axis=1)
    probs = np.exp(cum) @ mix.weights
    keep = probs > 0
    values = path_values(law, paths[keep], n, k, l_grid, f, event_mode(alphabet, f, max_events))
    return float(probs[keep] @ values)
