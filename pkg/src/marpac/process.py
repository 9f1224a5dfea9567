"""Component process laws, finite mixtures of them, and exact sampling.

Symbols are the integers ``0..alphabet-1``.  Every law is stored so it can be
read as a stationary Markov chain (``initial_law``, ``kernel``): an IID law
has identical kernel rows and a delta law is IID with a point mass.  That
shared view is what the dependence and criterion code works with.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

from .seeding import Seed, derive_seed, make_rng

PROB_ATOL = 1e-12
LAW_ATOL = 1e-12

KINDS = ("iid", "markov", "delta")


class NotErgodicError(ValueError):
    """Raised when a Markov chain has no unique stationary distribution."""


def _probability_vector(values, name: str, size: Optional[int] = None) -> np.ndarray:
    vec = np.array(values, dtype=float)
    if vec.ndim != 1 or vec.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-d probability vector")
    if size is not None and vec.size != size:
        raise ValueError(f"{name} has length {vec.size}, expected {size}")
    if np.any(~np.isfinite(vec)) or np.any(vec < 0):
        raise ValueError(f"{name} has negative or non-finite entries")
    if abs(vec.sum() - 1.0) > PROB_ATOL:
        raise ValueError(f"{name} sums to {float(vec.sum()):.12g}, not 1")
    vec.setflags(write=False)
    return vec


def _is_primitive(transition: np.ndarray) -> bool:
    # Wielandt: a non-negative s x s matrix is primitive iff its
    # ((s-1)^2 + 1)-th power is strictly positive.
    s = transition.shape[0]
    reach = (transition > 0).astype(np.int64)
    power = np.eye(s, dtype=np.int64)
    exponent = (s - 1) ** 2 + 1
    base = reach
    while exponent:
        if exponent & 1:
            power = np.minimum(power @ base, 1)
        base = np.minimum(base @ base, 1)
        exponent >>= 1
    return bool(np.all(power > 0))


@dataclass(frozen=True, eq=False)
class ProcessLaw:
    """Law of a stationary ergodic component process on a finite alphabet.

    Build instances with :meth:`iid`, :meth:`markov` or :meth:`delta`.
    """

    kind: str
    alphabet: int
    dist: Optional[np.ndarray] = None
    transition: Optional[np.ndarray] = None
    symbol: Optional[int] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown law kind {self.kind!r}")
        if not isinstance(self.alphabet, (int, np.integer)) or self.alphabet < 1:
            raise ValueError(f"alphabet size must be a positive integer, got {self.alphabet!r}")
        object.__setattr__(self, "alphabet", int(self.alphabet))
        if self.kind == "iid":
            object.__setattr__(self, "dist", _probability_vector(self.dist, "dist", self.alphabet))
        elif self.kind == "markov":
            mat = np.array(self.transition, dtype=float)
            if mat.shape != (self.alphabet, self.alphabet):
                raise ValueError(f"transition must be {self.alphabet}x{self.alphabet}, got {mat.shape}")
            for i, row in enumerate(mat):
                _probability_vector(row, f"transition row {i}")
            mat.setflags(write=False)
            object.__setattr__(self, "transition", mat)
        else:
            if self.symbol is None or not 0 <= int(self.symbol) < self.alphabet:
                raise ValueError(f"delta symbol {self.symbol!r} outside alphabet of size {self.alphabet}")
            object.__setattr__(self, "symbol", int(self.symbol))

    @classmethod
    def iid(cls, dist: Sequence[float]) -> "ProcessLaw":
        return cls("iid", len(dist), dist=dist)

    @classmethod
    def markov(cls, transition, initial: Optional[Sequence[float]] = None) -> "ProcessLaw":
        """Stationary Markov chain.  ``initial``, if given, must be stationary."""
        law = cls("markov", len(transition), transition=transition)
        if initial is not None:
            init = _probability_vector(initial, "initial", law.alphabet)
            if np.max(np.abs(init - stationary_distribution(law))) > 1e-9:
                raise ValueError("initial distribution is not stationary; only stationary starts are supported")
        return law

    @classmethod
    def flip(cls, p: float) -> "ProcessLaw":
        """Two-state chain that switches state with probability ``p``."""
        return cls.markov([[1 - p, p], [p, 1 - p]])

    @classmethod
    def delta(cls, symbol: int, alphabet: int) -> "ProcessLaw":
        return cls("delta", alphabet, symbol=symbol)

    @cached_property
    def initial_law(self) -> np.ndarray:
        return stationary_distribution(self)

    @cached_property
    def kernel(self) -> np.ndarray:
        """One-step transition matrix of the law read as a Markov chain."""
        if self.kind == "markov":
            return self.transition
        out = np.tile(self.initial_law, (self.alphabet, 1))
        out.setflags(write=False)
        return out

    def params(self) -> dict:
        if self.kind == "iid":
            return {"dist": self.dist.tolist()}
        if self.kind == "markov":
            return {"transition": self.transition.tolist()}
        return {"symbol": self.symbol}

    def __repr__(self) -> str:
        inner = ", ".join(f"{k}={v}" for k, v in self.params().items())
        return f"ProcessLaw.{self.kind}({inner}, alphabet={self.alphabet})"


def same_law(a: ProcessLaw, b: ProcessLaw, atol: float = LAW_ATOL) -> bool:
    if a.kind != b.kind or a.alphabet != b.alphabet:
        return False
    if a.kind == "delta":
        return a.symbol == b.symbol
    left, right = (a.dist, b.dist) if a.kind == "iid" else (a.transition, b.transition)
    return bool(np.all(np.abs(left - right) <= atol))


@dataclass(frozen=True, eq=False)
class MixtureLaw:
    """Finite convex combination of distinct component laws."""

    components: Tuple[ProcessLaw, ...]
    weights: np.ndarray

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("a mixture needs at least one component")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "weights", _probability_vector(self.weights, "weights", len(comps)))
        sizes = {c.alphabet for c in comps}
        if len(sizes) != 1:
            raise ValueError(f"components disagree on alphabet size: {sorted(sizes)}")
        for i in range(len(comps)):
            for j in range(i):
                if same_law(comps[i], comps[j]):
                    raise ValueError(f"components {j} and {i} are the same law")

    @property
    def alphabet(self) -> int:
        return self.components[0].alphabet

    def __len__(self) -> int:
        return len(self.components)

    def __repr__(self) -> str:
        return f"MixtureLaw(weights={self.weights.tolist()}, components={list(self.components)})"


Law = Union[ProcessLaw, MixtureLaw]


def as_mixture(law: Law) -> MixtureLaw:
    if isinstance(law, MixtureLaw):
        return law
    return MixtureLaw((law,), np.array([1.0]))


@dataclass(frozen=True)
class SamplePath:
    symbols: np.ndarray
    component_index: Optional[int] = None
    seed: Optional[Seed] = None

    def __len__(self) -> int:
        return len(self.symbols)


def stationary_distribution(law: ProcessLaw) -> np.ndarray:
    """Stationary law of a component.

    IID laws return their marginal and delta laws their point mass.  Markov
    chains must be irreducible and aperiodic; otherwise
    :class:`NotErgodicError` is raised.
    """
    if law.kind == "iid":
        return law.dist
    if law.kind == "delta":
        out = np.zeros(law.alphabet)
        out[law.symbol] = 1.0
        out.setflags(write=False)
        return out
    P = law.transition
    if not _is_primitive(P):
        raise NotErgodicError("no unique stationary distribution: chain is reducible or periodic")
    s = P.shape[0]
    system = np.vstack([P.T - np.eye(s), np.ones((1, s))])
    rhs = np.zeros(s + 1)
    rhs[-1] = 1.0
    pi, *_ = np.linalg.lstsq(system, rhs, rcond=None)
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    pi.setflags(write=False)
    return pi


def _cumulative(probs: np.ndarray) -> np.ndarray:
    cum = np.cumsum(probs, axis=-1)
    cum[..., -1] = 1.0
    return cum


def _symbol_dtype(alphabet: int):
    return np.min_scalar_type(max(alphabet - 1, 0))


def symbols_from_uniforms(law: ProcessLaw, u: np.ndarray) -> np.ndarray:
    """Map uniforms of shape ``(..., n)`` to paths of ``law`` by inversion.

    Markov paths start from the stationary law and step through the kernel;
    the recursion is vectorized over the leading axes.
    """
    u = np.asarray(u, dtype=float)
    dtype = _symbol_dtype(law.alphabet)
    if law.kind == "delta":
        return np.full(u.shape, law.symbol, dtype=dtype)
    top = law.alphabet - 1
    first = np.minimum(np.searchsorted(_cumulative(law.initial_law), u[..., :1] if law.kind == "markov" else u,
                                       side="right"), top)
    if law.kind == "iid":
        return first.astype(dtype)
    out = np.empty(u.shape, dtype=dtype)
    out[..., 0] = first[..., 0]
    rows = _cumulative(law.transition)[:, :-1]
    prev = first[..., 0]
    for t in range(1, u.shape[-1]):
        prev = (u[..., t, None] >= rows[prev]).sum(axis=-1)
        out[..., t] = prev
    return out


def _draw_component(mix: MixtureLaw, rng: np.random.Generator) -> int:
    return int(min(np.searchsorted(_cumulative(mix.weights), rng.random(), side="right"), len(mix) - 1))


def sample_component(law: ProcessLaw, n: int, seed: Seed) -> SamplePath:
    """Draw a length-``n`` stationary path of ``law``; deterministic in ``seed``."""
    if n < 1:
        raise ValueError("path length must be at least 1")
    rng = make_rng(seed)
    return SamplePath(symbols_from_uniforms(law, rng.random(n)), None, seed)


def sample_mixture(mix: MixtureLaw, n: int, seed: Seed) -> SamplePath:
    """Pick a component by the mixture weights, then draw a path from it."""
    if n < 1:
        raise ValueError("path length must be at least 1")
    rng = make_rng(seed)
    idx = _draw_component(mix, rng)
    return SamplePath(symbols_from_uniforms(mix.components[idx], rng.random(n)), idx, seed)


def sample_batch(law: Law, n: int, seed: Seed, start: int, stop: int):
    """Paths for trials ``start..stop-1``; trial ``i`` uses ``derive_seed(seed, i)``.

    Row ``i - start`` equals ``sample_mixture(law, n, derive_seed(seed, i))``
    (or ``sample_component`` for a single law).  Returns ``(symbols,
    components)``; components are -1 for a bare component law.
    """
    count = stop - start
    u = np.empty((count, n))
    comps = np.full(count, -1, dtype=np.int64)
    for row, trial in enumerate(range(start, stop)):
        rng = make_rng(derive_seed(seed, trial))
        if isinstance(law, MixtureLaw):
            comps[row] = _draw_component(law, rng)
        u[row] = rng.random(n)
    if isinstance(law, ProcessLaw):
        return symbols_from_uniforms(law, u), comps
    out = np.empty((count, n), dtype=_symbol_dtype(law.alphabet))
    for idx, comp in enumerate(law.components):
        rows = comps == idx
        if rows.any():
            out[rows] = symbols_from_uniforms(comp, u[rows])
    return out, comps


def function_table(f: Union[Callable[[int], float], Sequence[float], np.ndarray], alphabet: int) -> np.ndarray:
    table = np.array([f(s) for s in range(alphabet)] if callable(f) else f, dtype=float)
    if table.shape != (alphabet,):
        raise ValueError(f"function table has shape {table.shape}, expected ({alphabet},)")
    if np.any(table < 0) or np.any(table > 1):
        raise ValueError("function values must lie in [0, 1]")
    return table


def marginal_law(law: Law) -> np.ndarray:
    """One-dimensional stationary marginal (the weighted average for mixtures)."""
    if isinstance(law, ProcessLaw):
        return stationary_distribution(law)
    return sum(w * stationary_distribution(c) for w, c in zip(law.weights, law.components))


def expectation(law: Law, f) -> float:
    """Exact stationary expectation of ``f`` under ``law``.

    For a component this is the target of predictive learning; for a mixture
    it is the mixture-marginal expectation.
    """
    return float(function_table(f, law.alphabet) @ marginal_law(law))


# -- JSON -------------------------------------------------------------------

def law_to_dict(law: Law) -> dict:
    if isinstance(law, MixtureLaw):
        return {"alphabet": law.alphabet, "kind": "mixture", "weights": law.weights.tolist(),
                "components": [law_to_dict(c) for c in law.components]}
    return {"alphabet": law.alphabet, "kind": law.kind, **law.params()}


def law_from_dict(doc: dict) -> Law:
    if not isinstance(doc, dict) or "kind" not in doc:
        raise ValueError("law document must be an object with a 'kind' field")
    kind = doc["kind"]
    alphabet = doc.get("alphabet")
    if kind == "mixture":
        comps = tuple(law_from_dict(c) for c in doc["components"])
        if any(not isinstance(c, ProcessLaw) for c in comps):
            raise ValueError("mixture components must be component laws")
        mix = MixtureLaw(comps, doc["weights"])
        if alphabet is not None and alphabet != mix.alphabet:
            raise ValueError(f"mixture declares alphabet {alphabet} but components use {mix.alphabet}")
        return mix
    if kind == "iid":
        law = ProcessLaw.iid(doc["dist"])
    elif kind == "markov":
        law = ProcessLaw.markov(doc["transition"], doc.get("initial"))
    elif kind == "delta":
        if alphabet is None:
            raise ValueError("delta law needs an explicit 'alphabet'")
        law = ProcessLaw.delta(doc["symbol"], alphabet)
    else:
        raise ValueError(f"unknown law kind {kind!r}")
    if alphabet is not None and alphabet != law.alphabet:
        raise ValueError(f"law declares alphabet {alphabet} but parameters imply {law.alphabet}")
    return law


def load_law(path: Union[str, Path]) -> Law:
    with open(path) as fh:
        return law_from_dict(json.load(fh))


def dump_law(law: Law, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(law_to_dict(law), indent=2) + "\n")
