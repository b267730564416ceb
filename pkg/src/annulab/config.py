"""Experiment configuration: a strict JSON record naming one operation."""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from typing import Any

from .core import MapSpec, map_from_record


class ConfigError(ValueError):
    """Invalid configuration (unknown key, unknown operation, bad family)."""


# operation -> default parameters; any key not listed is rejected
OPERATIONS: dict[str, dict[str, Any]] = {
    "rotation": {"n_max": 2000, "tol": 1e-6, "grid": [2, 21], "seeds": None, "radius": 0.05},
    "farey": {"lo": 0.0, "hi": 1.0, "q_max": 5, "n0": 1},
    "orbits": {"target": "1/2", "grid": [4, 21], "seeds": None, "tol": 1e-10},
    "symmetric": {"m_max": 3, "resolution": 512, "tol": 1e-9},
    "scan-coprime": {"n0": 2, "q_max": 7, "tol": 1e-10, "n_max": 2000, "rot_tol": 1e-4},
    "scan-symmetric": {"n0": 2, "q_max": 7, "tol": 1e-9, "resolution": 512, "cross_check": True},
    "hh-levels": {},
    "hh-section": {"c": 0.125, "dt": 1e-3, "crossings": 50, "seeds": [[0.1, 0.0]]},
    "hh-orbits": {"c": 0.125, "dt": 1e-3, "m_max": 4, "resolution": 400, "tol": 1e-7},
    "verify": {"suite": "lift-axioms"},
}

NEEDS_FAMILY = {"rotation", "orbits", "symmetric", "scan-coprime", "scan-symmetric"}
OUTPUT_KEYS = ("records", "plot", "database")
TOP_KEYS = {"operation", "family", "params", "outputs", "seed"}


@dataclass
class ExperimentConfig:
    operation: str
    family: str | dict | None = None
    params: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.operation not in OPERATIONS:
            raise ConfigError(f"unknown operation {self.operation!r}")
        allowed = OPERATIONS[self.operation]
        extra = sorted(set(self.params) - set(allowed))
        if extra:
            raise ConfigError(f"unknown parameter(s) for {self.operation}: {', '.join(extra)}")
        extra = sorted(set(self.outputs) - set(OUTPUT_KEYS))
        if extra:
            raise ConfigError(f"unknown output key(s): {', '.join(extra)}")
        if self.operation in NEEDS_FAMILY and self.family is None:
            raise ConfigError(f"operation {self.operation} needs a family")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ConfigError("seed must be an integer")

    def resolved_params(self) -> dict:
        """Defaults overlaid with the given parameters."""
        out = copy.deepcopy(OPERATIONS[self.operation])
        out.update(self.params)
        return out

    def map_spec(self) -> MapSpec:
        return resolve_family(self.family)

    def to_dict(self) -> dict:
        return {"operation": self.operation, "family": self.family, "params": self.params,
                "outputs": self.outputs, "seed": self.seed}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        extra = sorted(set(d) - TOP_KEYS)
        if extra:
            raise ConfigError(f"unknown config key(s): {', '.join(extra)}")
        if "operation" not in d:
            raise ConfigError("config needs an 'operation'")
        return cls(d["operation"], d.get("family"), dict(d.get("params") or {}),
                   dict(d.get("outputs") or {}), d.get("seed", 0))

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        return cls.from_dict(d)


def resolve_family(family) -> MapSpec:
    """A built-in family name (see :func:`families.builtin_families`) or a family record."""
    from .families import builtin_families

    if isinstance(family, MapSpec):
        return family
    if isinstance(family, str):
        table = builtin_families()
        if family in table:
            return table[family]
        try:
            family = json.loads(family)
        except json.JSONDecodeError:
            raise ConfigError(f"unknown family {family!r}; built-ins: {', '.join(table)}") from None
    if isinstance(family, dict):
        try:
            return map_from_record(family)
        except (KeyError, ValueError, IndexError) as exc:
            raise ConfigError(f"bad family record: {exc}") from exc
    raise ConfigError("family must be a name or a record")
