"""Finite function classes, exact uniform deviations, ERM and sample complexity."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from .process import Law, MixtureLaw, ProcessLaw, SamplePath, law_to_dict, marginal_law, sample_batch
from .seeding import DEFAULT_SEED, Seed, derive_seed, map_chunks

DEFAULT_N_GRID = tuple(2 ** e for e in range(5, 15))

# |mean - target| == epsilon is a failure; the slack absorbs rounding in
# cases that are ties in exact arithmetic.
TIE_ATOL = 1e-12

TARGETS = ("component", "marginal")


@dataclass(frozen=True, eq=False)
class FunctionClass:
    """Finite class of [0, 1]-valued functions, one table row per member."""

    kind: str
    alphabet: int
    table: np.ndarray
    labels: Tuple[str, ...] = field(default=())

    def __post_init__(self):
        table = np.array(self.table, dtype=float)
        if table.ndim != 2 or table.shape[1] != self.alphabet or table.shape[0] == 0:
            raise ValueError(f"class table must be (members, {self.alphabet}), got {table.shape}")
        if np.any(table < 0) or np.any(table > 1):
            raise ValueError("class members must map into [0, 1]")
        table.setflags(write=False)
        object.__setattr__(self, "table", table)
        labels = tuple(self.labels) or tuple(f"f{i}" for i in range(len(table)))
        if len(labels) != len(table):
            raise ValueError("one label per member required")
        object.__setattr__(self, "labels", labels)

    @classmethod
    def thresholds(cls, alphabet: int) -> "FunctionClass":
        """Indicators 1{s >= t} for t = 0..alphabet; the last one is identically 0."""
        s = np.arange(alphabet)
        table = np.array([(s >= t) for t in range(alphabet + 1)], dtype=float)
        return cls("thresholds", alphabet, table, tuple(f"s>={t}" for t in range(alphabet + 1)))

    @classmethod
    def intervals(cls, alphabet: int) -> "FunctionClass":
        """Indicators 1{a <= s <= b} in lexicographic (a, b) order, then the empty interval."""
        s = np.arange(alphabet)
        pairs = [(a, b) for a in range(alphabet) for b in range(a, alphabet)]
        rows = [((s >= a) & (s <= b)) for a, b in pairs] + [np.zeros(alphabet, dtype=bool)]
        labels = tuple(f"[{a},{b}]" for a, b in pairs) + ("empty",)
        return cls("intervals", alphabet, np.array(rows, dtype=float), labels)

    @classmethod
    def explicit(cls, tables, labels: Sequence[str] = ()) -> "FunctionClass":
        tables = np.atleast_2d(np.array(tables, dtype=float))
        return cls("explicit", tables.shape[1], tables, tuple(labels))

    def __len__(self) -> int:
        return len(self.table)

    def to_dict(self) -> dict:
        if self.kind == "explicit":
            return {"kind": "explicit", "tables": self.table.tolist(), "labels": list(self.labels)}
        return {"kind": self.kind}


def class_from_dict(doc: Union[str, dict], alphabet: int) -> FunctionClass:
    kind = doc if isinstance(doc, str) else doc.get("kind")
    if kind == "thresholds":
        return FunctionClass.thresholds(alphabet)
    if kind == "intervals":
        return FunctionClass.intervals(alphabet)
    if kind == "explicit":
        fc = FunctionClass.explicit(doc["tables"], doc.get("labels", ()))
        if fc.alphabet != alphabet:
            raise ValueError(f"explicit class is over {fc.alphabet} symbols, law over {alphabet}")
        return fc
    raise ValueError(f"unknown function class {kind!r}")


@dataclass(frozen=True)
class RiskReport:
    gamma: float
    argmax: int
    argmax_label: str
    empirical_means: np.ndarray
    targets: np.ndarray


class ErmResult(NamedTuple):
    index: int
    label: str
    risk: float


def _symbols(path) -> np.ndarray:
    return np.asarray(path.symbols if isinstance(path, SamplePath) else path)


def _frequencies(symbols: np.ndarray, alphabet: int) -> np.ndarray:
    """Per-row symbol frequencies of a 2-d array of paths."""
    rows, n = symbols.shape
    offsets = symbols.astype(np.int64) + alphabet * np.arange(rows)[:, None]
    return np.bincount(offsets.ravel(), minlength=rows * alphabet).reshape(rows, alphabet) / n


def target_means(cls: FunctionClass, law: Law) -> np.ndarray:
    if law.alphabet != cls.alphabet:
        raise ValueError(f"law alphabet {law.alphabet} does not match class alphabet {cls.alphabet}")
    return cls.table @ marginal_law(law)


def gamma_n(path, cls: FunctionClass, target_law: Law) -> RiskReport:
    """Largest gap over the class between path averages and target expectations.

    Pass the generating component as ``target_law`` for the predictive
    target; passing the mixture gives the mixture-marginal target instead.
    """
    symbols = _symbols(path)
    if symbols.size == 0:
        raise ValueError("empty path")
    if symbols.min() < 0 or symbols.max() >= cls.alphabet:
        raise ValueError(f"path symbols fall outside the class alphabet of size {cls.alphabet}")
    targets = target_means(cls, target_law)
    emp = cls.table @ _frequencies(symbols[None, :], cls.alphabet)[0]
    gaps = np.abs(emp - targets)
    idx = int(np.argmax(gaps))
    return RiskReport(float(gaps[idx]), idx, cls.labels[idx], emp, targets)


def erm(path, cls: FunctionClass) -> ErmResult:
    """Member with the smallest path average; ties go to the lowest index."""
    symbols = _symbols(path)
    if symbols.size == 0 or len(cls) == 0:
        raise ValueError("ERM needs a non-empty path and class")
    if symbols.min() < 0 or symbols.max() >= cls.alphabet:
        raise ValueError(f"path symbols fall outside the class alphabet of size {cls.alphabet}")
    risks = cls.table @ _frequencies(symbols[None, :], cls.alphabet)[0]
    idx = int(np.argmin(risks))
    return ErmResult(idx, cls.labels[idx], float(risks[idx]))


def erm_risk_gap(report: RiskReport, f_hat: Union[int, ErmResult]) -> float:
    """Excess true risk of the chosen member over the best in class.

    At most ``2 * report.gamma`` whenever ``f_hat`` is the ERM on the same path.
    """
    idx = f_hat.index if isinstance(f_hat, ErmResult) else int(f_hat)
    return float(report.targets[idx] - report.targets.min())


def _target_rows(law: Law, cls: FunctionClass, target: str) -> np.ndarray:
    if target not in TARGETS:
        raise ValueError(f"target must be one of {TARGETS}, got {target!r}")
    if target == "marginal" or isinstance(law, ProcessLaw):
        return target_means(cls, law)[None, :]
    return np.stack([target_means(cls, c) for c in law.components])


def _gamma_chunk(law: Law, table: np.ndarray, targets: np.ndarray, n: int, seed: Seed, start: int, stop: int):
    symbols, comps = sample_batch(law, n, seed, start, stop)
    emp = _frequencies(symbols, table.shape[1]) @ table.T
    rows = targets[np.maximum(comps, 0)] if len(targets) > 1 else targets
    return np.abs(emp - rows).max(axis=1), comps


def gamma_ensemble(law: Law, cls: FunctionClass, n: int, trials: int, seed: Seed,
                   target: str = "component", workers: int = 1):
    """Gamma over ``trials`` independent paths of length ``n``.

    Returns ``(gammas, components)``.  With ``target="component"`` each path
    is scored against the component that generated it; ``"marginal"`` scores
    every path against the mixture-marginal expectations.
    """
    targets = _target_rows(law, cls, target)
    chunks = map_chunks(_gamma_chunk, trials, (law, cls.table, targets, n, seed), workers=workers)
    return np.concatenate([c[0] for c in chunks]), np.concatenate([c[1] for c in chunks])


def exceeds(gammas: np.ndarray, epsilon: float) -> np.ndarray:
    return np.asarray(gammas) >= epsilon - TIE_ATOL


def binomial_stderr(rate: float, trials: int) -> float:
    return float(np.sqrt(rate * (1.0 - rate) / trials))


def first_passing(n_grid: Sequence[int], rates: Sequence[float], delta: float) -> Optional[int]:
    for n, r in zip(n_grid, rates):
        if r <= delta:
            return int(n)
    return None


@dataclass
class SampleComplexityEstimate:
    epsilon: float
    delta: float
    n_grid: Tuple[int, ...]
    failures: Tuple[int, ...]
    trials: int
    n_star: Optional[int]
    meta: dict = field(default_factory=dict)

    @property
    def failure_curve(self) -> dict:
        return {n: f / self.trials for n, f in zip(self.n_grid, self.failures)}

    @property
    def stderr(self) -> Tuple[float, ...]:
        return tuple(binomial_stderr(f / self.trials, self.trials) for f in self.failures)

    def rows(self) -> List[dict]:
        return [{"n": n, "failure_rate": f / self.trials, "stderr": se, "failures": f, "trials": self.trials}
                for n, f, se in zip(self.n_grid, self.failures, self.stderr)]

    def sidecar(self) -> dict:
        return {"epsilon": self.epsilon, "delta": self.delta, "trials": self.trials, "n_star": self.n_star,
                "n_grid": list(self.n_grid), **self.meta}

    def write(self, csv_path: Union[str, Path], json_path: Union[str, Path, None] = None) -> None:
        csv_path = Path(csv_path)
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["n", "failure_rate", "stderr"])
            for row in self.rows():
                writer.writerow([row["n"], repr(row["failure_rate"]), repr(row["stderr"])])
        json_path = Path(json_path) if json_path else csv_path.with_suffix(".json")
        json_path.write_text(json.dumps(self.sidecar(), indent=2, sort_keys=True) + "\n")


def sample_complexity(law: Law, cls: FunctionClass, epsilon: float, delta: float,
                      n_grid: Sequence[int] = DEFAULT_N_GRID, trials: int = 1000, seed: Seed = DEFAULT_SEED,
                      target: str = "component", workers: int = 1) -> SampleComplexityEstimate:
    """Monte Carlo failure rate P(Gamma_n >= epsilon) on a grid of n.

    ``n_star`` is the smallest grid point whose empirical rate is at most
    ``delta``, or None when no grid point passes.
    """
    if not (0 < epsilon < 1 and 0 < delta < 1):
        raise ValueError("epsilon and delta must lie in (0, 1)")
    if trials < 1:
        raise ValueError("need at least one trial")
    n_grid = tuple(int(n) for n in n_grid)
    failures = []
    for n in n_grid:
        gammas, _ = gamma_ensemble(law, cls, n, trials, derive_seed(seed, n), target, workers)
        failures.append(int(exceeds(gammas, epsilon).sum()))
    n_star = first_passing(n_grid, [f / trials for f in failures], delta)
    meta = {"class": cls.to_dict(), "law": law_to_dict(law), "seed": list(derive_seed(seed)), "target": target}
    return SampleComplexityEstimate(float(epsilon), float(delta), n_grid, tuple(failures), int(trials), n_star, meta)
