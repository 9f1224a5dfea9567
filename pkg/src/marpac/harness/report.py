"""Experiment configs and reports, with JSON/CSV round trips."""

from __future__ import annotations

import copy
import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

from ..learning import FunctionClass, class_from_dict
from ..process import Law, law_from_dict
from ..seeding import DEFAULT_SEED

EXPERIMENTS = ("verify-mixture", "verify-exchangeable", "verify-mar-floor", "verify-mar-criterion")

PARAM_DEFAULTS: Dict[str, Dict[str, Any]] = {
    "verify-mixture": {
        "n": 500, "epsilons": [0.05, 0.1], "trials": 10000, "tolerance_se": 3.0,
    },
    "verify-exchangeable": {
        "epsilon": 0.1, "delta": 0.05, "n_grid": [2 ** e for e in range(5, 15)], "trials": 2000,
        "contrast": True,
    },
    "verify-mar-floor": {
        "lags": [1, 2, 5, 10, 20, 30], "past": 1, "future": 1, "trials": 10000, "bootstrap": 200,
        "decay_threshold": 0.01, "floor_slack": 0.0, "tolerance_se": 2.0, "q_sweep": [],
    },
    "verify-mar-criterion": {
        "n_grid": [0, 1, 2, 4, 8, 16, 32], "lags": [5, 10, 20], "l_grid": [1, 2, 4, 8], "future": 4,
        "trials": 2000, "floor_fraction": 0.4, "tolerance_se": 3.0, "max_events": 2 ** 16,
    },
}


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


@dataclass
class ExperimentConfig:
    experiment: str
    name: str
    law: Law
    function_class: Optional[FunctionClass]
    params: Dict[str, Any]
    seed: int = DEFAULT_SEED
    output: Optional[str] = None

    @classmethod
    def from_dict(cls, doc: dict, overrides: Optional[dict] = None) -> "ExperimentConfig":
        """Validate a config document; ``overrides`` (flag values) win over it."""
        doc = copy.deepcopy(doc)
        overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
        for key in ("experiment", "name", "seed", "output"):
            if key in overrides:
                doc[key] = overrides.pop(key)
        experiment = doc.get("experiment")
        if experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {experiment!r}; expected one of {EXPERIMENTS}")
        unknown = set(doc) - {"experiment", "name", "law", "class", "params", "seed", "output"}
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        params = dict(PARAM_DEFAULTS[experiment])
        given = dict(doc.get("params") or {})
        given.update(overrides)
        bad = set(given) - set(params)
        if bad:
            raise ConfigError(f"unknown parameters for {experiment}: {sorted(bad)}")
        params.update(given)
        try:
            law = law_from_dict(doc["law"])
            fclass = class_from_dict(doc.get("class", {"kind": "thresholds"}), law.alphabet)
        except KeyError as exc:
            raise ConfigError(f"missing config field {exc}") from None
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        seed = doc.get("seed", DEFAULT_SEED)
        if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {seed!r}")
        return cls(experiment, doc.get("name") or experiment, law, fclass, params, seed, doc.get("output"))

    @classmethod
    def load(cls, path, overrides: Optional[dict] = None) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(doc, overrides)

    def echo(self) -> dict:
        from ..process import law_to_dict
        return {"experiment": self.experiment, "name": self.name, "law": law_to_dict(self.law),
                "class": self.function_class.to_dict() if self.function_class else None,
                "params": self.params, "seed": self.seed}


@dataclass
class ExperimentReport:
    experiment: str
    name: str
    config: dict
    tables: Dict[str, List[dict]]
    verdicts: List[dict]
    duration: float = field(default=0.0, compare=False)

    @property
    def passed(self) -> bool:
        return all(v["passed"] for v in self.verdicts)

    def to_dict(self) -> dict:
        # wall-clock time is left out so reports are reproducible byte for byte
        return {"experiment": self.experiment, "name": self.name, "config": self.config,
                "tables": self.tables, "verdicts": self.verdicts, "passed": self.passed}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def write(self, directory) -> Path:
        out = Path(directory)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(self.to_json())
        for name, rows in self.tables.items():
            write_table(out / f"{name}.csv", rows)
        return out

    def summary_lines(self) -> List[str]:
        return [f"{self.name}: {v['name']} {'PASS' if v['passed'] else 'FAIL'} "
                f"(value={_fmt(v['value'])}, bound={_fmt(v['bound'])})" for v in self.verdicts]


def _fmt(x) -> str:
    return "none" if x is None else (f"{x:.6g}" if isinstance(x, float) else str(x))


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_table(path, rows: List[dict]) -> None:
    columns: List[str] = []
    for row in rows:
        columns.extend(c for c in row if c not in columns)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(c)) for c in columns])


def verdict(name: str, passed: bool, value, bound, detail: str = "") -> dict:
    return {"name": name, "passed": bool(passed), "value": value, "bound": bound, "detail": detail}
