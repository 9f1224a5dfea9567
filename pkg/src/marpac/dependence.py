"""Beta-dependence coefficients: exact, by window enumeration, and by ensembles.

Total variation is half the L1 distance throughout, so every coefficient
lies in [0, 1].  Windows of ``p`` past and ``f`` future symbols are encoded
as base-``alphabet`` integers with the earliest symbol most significant.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .process import Law, MixtureLaw, ProcessLaw, SamplePath, _probability_vector, as_mixture, sample_batch, \
    stationary_distribution
from .seeding import STREAM_BOOTSTRAP, Seed, derive_seed, make_rng, map_chunks

ENUMERATION_LIMIT = 10 ** 7
DEFAULT_BOOTSTRAP = 200
MIN_ENSEMBLE = 100
MONOTONE_ATOL = 1e-14


class StateSpaceTooLarge(ValueError):
    pass


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


@dataclass(frozen=True)
class BetaCurve:
    lags: Tuple[int, ...]
    values: Tuple[float, ...]
    mode: str = "exact"
    stderr: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if self.mode not in ("exact", "estimated"):
            raise ValueError(f"unknown curve mode {self.mode!r}")
        object.__setattr__(self, "lags", tuple(int(k) for k in self.lags))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if self.stderr is not None:
            object.__setattr__(self, "stderr", tuple(float(s) for s in self.stderr))
        if len(self.values) != len(self.lags) or (self.stderr is not None and len(self.stderr) != len(self.lags)):
            raise ValueError("lags, values and stderr must have equal length")
        if list(self.lags) != sorted(set(self.lags)):
            raise ValueError("lags must be strictly increasing")
        if any(not 0.0 <= v <= 1.0 for v in self.values):
            raise ValueError("beta values must lie in [0, 1]")
        if self.mode == "exact" and not self.is_monotone():
            raise ValueError("exact beta curve is not non-increasing in the lag")

    def is_monotone(self) -> bool:
        """Non-increasing in the lag; estimated curves get two standard errors of slack."""
        v = np.array(self.values)
        if self.mode == "exact" or self.stderr is None:
            return bool(np.all(np.diff(v) <= MONOTONE_ATOL))
        se = np.array(self.stderr)
        for i in range(len(v)):
            for j in range(i + 1, len(v)):
                if v[j] > v[i] + 2 * max(se[i], se[j]) + MONOTONE_ATOL:
                    return False
        return True

    def to_csv(self, path: Union[str, Path]) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["lag", "beta", "stderr", "mode"])
            for i, (k, v) in enumerate(zip(self.lags, self.values)):
                se = "" if self.stderr is None else repr(self.stderr[i])
                writer.writerow([k, repr(v), se, self.mode])

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "BetaCurve":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        modes = {r["mode"] for r in rows}
        if len(modes) > 1:
            raise ValueError(f"mixed modes in {path}: {sorted(modes)}")
        has_se = rows and all(r["stderr"] != "" for r in rows)
        return cls(tuple(int(r["lag"]) for r in rows), tuple(float(r["beta"]) for r in rows),
                   modes.pop() if modes else "exact",
                   tuple(float(r["stderr"]) for r in rows) if has_se else None)


# -- exact --------------------------------------------------------------------

def beta_exact_markov(law: ProcessLaw, k: int) -> float:
    """Exact beta(k) of a stationary ergodic chain.

    Given the whole past, the future depends only on the present state, so
    beta(k) = sum_i pi(i) * TV(P^k(i, .), pi).  IID and delta laws give 0.
    """
    if not isinstance(law, ProcessLaw):
        raise TypeError("beta_exact_markov takes a single component law")
    if k < 1:
        raise ValueError(f"lag must be at least 1, got {k}")
    pi = stationary_distribution(law)
    if law.kind != "markov":
        return 0.0
    step = np.linalg.matrix_power(law.transition, k)
    value = float(pi @ (0.5 * np.abs(step - pi).sum(axis=1)))
    return min(max(value, 0.0), 1.0)


def beta_exact_curve(law: ProcessLaw, lags: Sequence[int]) -> BetaCurve:
    return BetaCurve(tuple(lags), tuple(beta_exact_markov(law, k) for k in lags), "exact")


def window_table(kernel: np.ndarray, starts: np.ndarray, length: int) -> np.ndarray:
    """Laws of length-``length`` windows for each first-symbol distribution.

    ``starts`` has shape ``(S, A)``; the result has shape ``(S, A**length)``.
    """
    alphabet = kernel.shape[0]
    probs = np.asarray(starts, dtype=float)
    for _ in range(length - 1):
        last = np.arange(probs.shape[1]) % alphabet
        probs = (probs[:, :, None] * kernel[last][None, :, :]).reshape(probs.shape[0], -1)
    return probs


def _guard(cells: int) -> None:
    if cells > ENUMERATION_LIMIT:
        raise StateSpaceTooLarge(f"state space too large: {cells} joint states exceed {ENUMERATION_LIMIT}")


def window_joint(law: Law, k: int, p: int, f: int):
    """Exact joint law of (past window, lag-``k`` future window) and its marginals.

    Returns ``(joint, past, future)`` with ``joint`` of shape
    ``(A**p, A**f)``.  Mixtures are handled component by component.
    """
    if k < 1 or p < 1 or f < 1:
        raise ValueError("lag and window lengths must be at least 1")
    mix = as_mixture(law)
    alphabet = mix.alphabet
    _guard(alphabet ** (p + f))
    joint = np.zeros((alphabet ** p, alphabet ** f))
    past = np.zeros(alphabet ** p)
    future = np.zeros(alphabet ** f)
    for w, comp in zip(mix.weights, mix.components):
        if w == 0:
            continue
        K, pi = comp.kernel, comp.initial_law
        past_c = window_table(K, pi[None, :], p)[0]
        ahead = window_table(K, np.linalg.matrix_power(K, k), f)
        joint += w * past_c[:, None] * ahead[np.arange(alphabet ** p) % alphabet]
        past += w * past_c
        future += w * window_table(K, pi[None, :], f)[0]
    return joint, past, future


def beta_bruteforce_block(law: Law, k: int, p: int, f: int) -> float:
    """TV between the joint law of ``X_1..X_p`` and ``X_{p+k}..X_{p+k+f-1}``
    and the product of their marginals, by full enumeration."""
    joint, past, future = window_joint(law, k, p, f)
    return min(total_variation(joint, np.outer(past, future)), 1.0)


# -- mixture tail and blocking ---------------------------------------------------

def beta_mixture_infinity(weights: Sequence[float]) -> float:
    """Limit of beta(k) for a mixture of distinct absolutely regular laws."""
    pi = _probability_vector(weights, "weights")
    return float(np.sum(pi * (1.0 - pi)))


@dataclass(frozen=True)
class BlockScheme:
    m: int
    a: int
    n: int

    def __post_init__(self):
        if self.m < 1 or self.a < 1:
            raise ValueError("block count m and block length a must be at least 1")
        if self.n != 2 * self.m * self.a:
            raise ValueError(f"n={self.n} is not 2*m*a={2 * self.m * self.a}")

    @classmethod
    def of(cls, m: int, a: int) -> "BlockScheme":
        return cls(m, a, 2 * m * a)


def blocking_bound(scheme: BlockScheme, beta_a: float) -> float:
    """Bound (m-1) beta(a) on how far kept blocks are from independent blocks."""
    if not 0.0 <= beta_a <= 1.0:
        raise ValueError(f"beta(a) must lie in [0, 1], got {beta_a}")
    return min((scheme.m - 1) * beta_a, 1.0)


def blocked_resample(path: Union[SamplePath, np.ndarray], scheme: BlockScheme) -> List[np.ndarray]:
    """Keep blocks 1, 3, ..., 2m-1 of a path cut into 2m blocks of length a."""
    symbols = np.asarray(path.symbols if isinstance(path, SamplePath) else path)
    if len(symbols) != scheme.n:
        raise ValueError(f"path length {len(symbols)} does not match scheme length {scheme.n}")
    a = scheme.a
    return [symbols[2 * j * a:(2 * j + 1) * a].copy() for j in range(scheme.m)]


def independent_blocks(law: ProcessLaw, scheme: BlockScheme, seed: Seed) -> List[np.ndarray]:
    """Draw m independent stationary length-a blocks (the blocked law)."""
    symbols, _ = sample_batch(law, scheme.a, seed, 0, scheme.m)
    return [row.copy() for row in symbols]


def kept_blocks_tv(law: Law, scheme: BlockScheme) -> float:
    """Exact TV between the joint law of the kept blocks and the blocked law."""
    mix = as_mixture(law)
    alphabet, a, m = mix.alphabet, scheme.a, scheme.m
    _guard(alphabet ** (a * m))
    joint = np.zeros(alphabet ** (a * m))
    single = np.zeros(alphabet ** a)
    for w, comp in zip(mix.weights, mix.components):
        K, pi = comp.kernel, comp.initial_law
        block = window_table(K, pi[None, :], a)[0]
        after_gap = window_table(K, np.linalg.matrix_power(K, a + 1), a)
        probs = block
        for _ in range(m - 1):
            probs = (probs[:, None] * after_gap[np.arange(probs.size) % alphabet]).ravel()
        joint += w * probs
        single += w * block
    product = single
    for _ in range(m - 1):
        product = np.outer(product, single).ravel()
    return total_variation(joint, product)


# -- ensemble estimation ------------------------------------------------------------

def _window_codes(symbols: np.ndarray, start: int, length: int, alphabet: int) -> np.ndarray:
    codes = np.zeros(symbols.shape[0], dtype=np.int64)
    for j in range(start, start + length):
        codes = codes * alphabet + symbols[:, j]
    return codes


def _plugin_tv(joint_idx, past_idx, fut_idx, cell_past, cell_fut, weights, total) -> float:
    joint = np.bincount(joint_idx, weights=weights, minlength=len(cell_past)) / total
    past = np.bincount(past_idx, weights=weights) / total
    fut = np.bincount(fut_idx, weights=weights) / total
    prod = past[cell_past] * fut[cell_fut]
    return 0.5 * (np.abs(joint - prod).sum() + 1.0 - prod.sum())


def _cell_index(past_codes: np.ndarray, fut_codes: np.ndarray):
    cells, joint_idx = np.unique(np.stack([past_codes, fut_codes], axis=1), axis=0, return_inverse=True)
    past_vals, past_idx = np.unique(past_codes, return_inverse=True)
    fut_vals, fut_idx = np.unique(fut_codes, return_inverse=True)
    cell_past = np.searchsorted(past_vals, cells[:, 0])
    cell_fut = np.searchsorted(fut_vals, cells[:, 1])
    return joint_idx.ravel(), past_idx.ravel(), fut_idx.ravel(), cell_past, cell_fut


def plugin_beta(past_codes: np.ndarray, fut_codes: np.ndarray, weights: Optional[np.ndarray] = None) -> float:
    """Plug-in TV between the empirical joint of paired codes and the product
    of its empirical marginals.  Only observed cells are materialized."""
    w = np.ones(len(past_codes)) if weights is None else np.asarray(weights, dtype=float)
    return float(_plugin_tv(*_cell_index(past_codes, fut_codes), w, w.sum()))


def _ensemble_paths(law: Law, n: int, trials: int, seed: Seed, workers: int) -> np.ndarray:
    chunks = map_chunks(sample_batch, trials, (law, n, seed), workers=workers)
    return np.concatenate([c[0] for c in chunks], axis=0)


def beta_empirical_curve(law: Law, lags: Sequence[int], p: int, f: int, trials: int, seed: Seed,
                         n_boot: int = DEFAULT_BOOTSTRAP, workers: int = 1) -> BetaCurve:
    """Plug-in beta estimates over ``trials`` independent paths, one per lag.

    All lags share the same paths and the same bootstrap weights, and the
    value at a lag does not depend on which other lags are requested.
    """
    lags = sorted(set(int(k) for k in lags))
    if not lags or lags[0] < 1 or p < 1 or f < 1:
        raise ValueError("lags and window lengths must be at least 1")
    if trials < MIN_ENSEMBLE:
        raise ValueError(f"need at least {MIN_ENSEMBLE} paths, got {trials}")
    alphabet = law.alphabet
    _guard(alphabet ** (p + f))
    paths = _ensemble_paths(law, p + lags[-1] + f - 1, trials, seed, workers)
    boot = make_rng(derive_seed(seed, STREAM_BOOTSTRAP)).multinomial(
        trials, np.full(trials, 1.0 / trials), size=n_boot).astype(float) if n_boot > 0 else None
    past_codes = _window_codes(paths, 0, p, alphabet)
    values, errors = [], []
    for k in lags:
        fut_codes = _window_codes(paths, p + k - 1, f, alphabet)
        index = _cell_index(past_codes, fut_codes)
        values.append(min(float(_plugin_tv(*index, np.ones(trials), trials)), 1.0))
        if boot is None:
            errors.append(0.0)
            continue
        reps = [_plugin_tv(*index, w, trials) for w in boot]
        errors.append(float(np.std(reps, ddof=1)) if n_boot > 1 else 0.0)
    return BetaCurve(tuple(lags), tuple(values), "estimated", tuple(errors))


def beta_empirical_ensemble(law: Law, k: int, p: int, f: int, trials: int, seed: Seed,
                            n_boot: int = DEFAULT_BOOTSTRAP, workers: int = 1) -> Tuple[float, float]:
    """Estimate beta(k) from ``trials`` independent paths; returns (estimate, stderr).

    The standard error is the bootstrap standard deviation over paths.
    """
    curve = beta_empirical_curve(law, [k], p, f, trials, seed, n_boot, workers)
    return curve.values[0], curve.stderr[0]
