"""Experiment configuration: loading, defaults, validation and digests."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import yaml

from .ifs import InvalidSystemError, SelfSimilarIFS
from .measure import BernoulliMeasure
from .perturbation import PerturbationDistribution
from .realization import DEFAULT_ATOM_BUDGET


class ConfigError(InvalidSystemError):
    pass


DEFAULTS: dict[str, Any] = {
    "ifs": {"ratios": [0.45, 0.45, 0.45], "translations": [0.0, 1.0, 3.0]},
    "measure": "natural",
    "perturbation": {"kind": "spline", "half_width": 0.1, "order": 3},
    "seeds": {"base": 0, "trials": 50},
    "depth": 12,
    "depths": [8, 9, 10, 11, 12],
    "tol": 1e-8,
    "atom_budget": DEFAULT_ATOM_BUDGET,
    "frequencies": [1.0, 5.0, 20.0],
    "frequency_pairs": [[1.0, 2.0], [5.0, -5.0], [3.0, 7.0]],
    "lq_orders": [2, 4, 8, 16, 32, 64],
    "grid": {"points": 513},
    "density": {"radius_factor": 4.0, "cutoffs": [50.0, 100.0, 200.0]},
    "moments": {"p": 2, "center": 2.0, "separations": {"min": 1e-3, "max": 1e-1, "count": 7},
                "cutoff": 200.0, "bootstrap": 1000},
    "controls": {"ifs": {"ratios": [0.3, 0.3], "translations": [0.0, 1.0]},
                 "depths": [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12],
                 "uniform_half_width": 0.1},
    "output": "out",
    "threads": 1,
}


_EXECUTION_KEYS = ("output", "threads")


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if key not in base:
            raise ConfigError(f"unknown config key {path + key!r}")
        if isinstance(base[key], dict) and isinstance(value, dict):
            out[key] = _merge(base[key], value, path + key + ".")
        else:
            out[key] = copy.deepcopy(value)
    return out


@dataclass
class ExperimentConfig:
    raw: dict[str, Any]

    @classmethod
    def from_dict(cls, data: dict | None = None, **overrides) -> "ExperimentConfig":
        merged = _merge(DEFAULTS, data or {})
        for key, value in overrides.items():
            if value is None:
                continue
            if key == "seed":
                merged["seeds"]["base"] = int(value)
            elif key == "trials":
                merged["seeds"]["trials"] = int(value)
            else:
                merged[key] = value
        cfg = cls(merged)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path, **overrides) -> "ExperimentConfig":
        text = Path(path).read_text()
        data = yaml.safe_load(text) or {}
        if not isinstance(data, dict):
            raise ConfigError("config file must contain a mapping")
        return cls.from_dict(data, **overrides)

    def validate(self) -> None:
        r = self.raw
        try:
            self.ifs
            self.measure
            self.perturbation
            self.control_ifs
        except (TypeError, KeyError) as exc:
            raise ConfigError(f"malformed system specification: {exc}") from exc
        seeds = r["seeds"]
        if not (isinstance(seeds["base"], int) and 0 <= seeds["base"] < 2 ** 64):
            raise ConfigError("seeds.base must be an unsigned 64-bit integer")
        if not (isinstance(seeds["trials"], int) and seeds["trials"] >= 1):
            raise ConfigError("seeds.trials must be a positive integer")
        if not (isinstance(r["depth"], int) and r["depth"] >= 1):
            raise ConfigError("depth must be a positive integer")
        for key in ("depths",):
            d = r[key]
            if not d or any(not isinstance(x, int) or x < 1 for x in d) or sorted(d) != d:
                raise ConfigError(f"{key} must be an increasing list of positive integers")
        if not r["tol"] > 0:
            raise ConfigError("tol must be positive")
        if r["grid"]["points"] < 16:
            raise ConfigError("grid.points must be at least 16")
        if r["density"]["radius_factor"] <= 0 or any(c <= 0 for c in r["density"]["cutoffs"]):
            raise ConfigError("density.radius_factor and cutoffs must be positive")
        m = r["moments"]
        if m["p"] < 2 or m["p"] % 2:
            raise ConfigError("moments.p must be an even integer >= 2")
        sep = m["separations"]
        if not (0 < sep["min"] < sep["max"]) or sep["count"] < 2:
            raise ConfigError("moments.separations needs 0 < min < max and count >= 2")
        if any(q <= 1 for q in r["lq_orders"]):
            raise ConfigError("lq_orders must exceed 1")
        if not (isinstance(r["threads"], int) and r["threads"] >= 1):
            raise ConfigError("threads must be a positive integer")

    @property
    def ifs(self) -> SelfSimilarIFS:
        spec = self.raw["ifs"]
        return SelfSimilarIFS(spec["ratios"], spec["translations"])

    @property
    def control_ifs(self) -> SelfSimilarIFS:
        spec = self.raw["controls"]["ifs"]
        return SelfSimilarIFS(spec["ratios"], spec["translations"])

    @property
    def measure(self) -> BernoulliMeasure:
        spec = self.raw["measure"]
        if spec == "natural":
            return BernoulliMeasure.natural(self.ifs)
        if isinstance(spec, dict) and set(spec) == {"probabilities"}:
            m = BernoulliMeasure(spec["probabilities"])
            if m.n_symbols != self.ifs.n_maps:
                raise ConfigError("measure and IFS alphabets differ")
            return m
        raise ConfigError("measure must be 'natural' or {probabilities: [...]}")

    @property
    def perturbation(self) -> PerturbationDistribution:
        spec = self.raw["perturbation"]
        kind = spec["kind"]
        if kind == "uniform":
            return PerturbationDistribution.uniform(spec["half_width"])
        return PerturbationDistribution(kind, float(spec["half_width"]), int(spec["order"]))

    @property
    def seed(self) -> int:
        return self.raw["seeds"]["base"]

    @property
    def trials(self) -> int:
        return self.raw["seeds"]["trials"]

    def canonical_json(self) -> str:
        return json.dumps(self.raw, sort_keys=True, separators=(",", ":"))

    @property
    def digest(self) -> str:
        """Hash of every setting that can change a result; ``output`` and ``threads`` cannot."""
        keyed = {k: v for k, v in self.raw.items() if k not in _EXECUTION_KEYS}
        text = json.dumps(keyed, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    def write_resolved(self, directory) -> Path:
        path = Path(directory) / "config.resolved.json"
        path.write_text(json.dumps(self.raw, sort_keys=True, indent=2) + "\n")
        return path
