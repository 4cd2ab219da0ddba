"""Experiment configuration: presets, JSON files, and CLI overrides.

Resolution order, later wins: field defaults, the experiment preset, the
config file, command-line flags. The resolved config is written next to the
outputs so a run can be repeated from it alone.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ..errors import ConfigError

EXPERIMENTS = (
    "sim", "entropy", "chain", "bestresponse", "equilibrium", "ratio", "altruists",
    "fig1", "fig2", "fig3", "fig4", "fig5",
)


@dataclass
class ExperimentConfig:
    experiment: str
    n: int = 1000
    m: float = 2.0
    k: float = 5.0
    alpha: float = 0.1
    beta: float = 1.0
    delta: float = 0.9
    rounds: int = 3000
    seeds: list[int] = field(default_factory=lambda: [1])
    stride: int | None = None
    out: str = "out"
    plot: bool = False
    workers: int = 1
    budget: float = 1e8
    scale: float = 1.0
    epsilon: float = 0.001
    ns: list[int] = field(default_factory=list)
    deltas: list[float] = field(default_factory=list)
    m_grid: list[float] = field(default_factory=list)

    @property
    def money(self) -> int:
        return money_for(self.n, self.m)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def sha256(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()


def money_for(n: int, m: float) -> int:
    money = round(m * n)
    if not math.isclose(money, m * n, rel_tol=0, abs_tol=1e-9):
        raise ConfigError("m", f"m*n = {m * n} is not a whole number of dollars")
    return money


PRESETS: dict[str, dict[str, Any]] = {
    "sim": {},
    "entropy": {"k": 5, "m_grid": []},
    "chain": {"k": 2, "n": 4, "m": 1.0, "beta": 0.5, "rounds": 10**6, "epsilon": 0.05, "ns": [4, 8, 12]},
    "bestresponse": {"m": 3.0, "delta": 0.8},
    "equilibrium": {"m": 3.0, "deltas": [0.5, 0.7, 0.8, 0.9, 0.95, 0.99]},
    "ratio": {"m": 2.0, "deltas": [0.95, 0.99]},
    "altruists": {"n": 10, "m": 2.0, "k": 2.0, "alpha": 0.5, "beta": 0.5, "delta": 0.5,
                  "rounds": 400, "seeds": list(range(1, 201))},
    "fig1": {"n": 1000, "k": 5, "m": 2.0, "rounds": 5000, "stride": 100, "seeds": list(range(1, 11))},
    "fig2": {"k": 5, "m": 2.0, "rounds": 10**6, "ns": [1000, 5000, 25000], "budget": 3e10},
    "fig3": {"k": 5, "m": 2.0, "ns": [1000, 2000, 5000], "epsilon": 0.001, "rounds": 0,
             "seeds": list(range(1, 11)), "budget": 3e10},
    "fig4": {"n": 1000, "m": 3.0, "delta": 0.8},
    "fig5": {"deltas": [0.95, 0.97, 0.99, 0.999]},
}

# Largest n run by the scaling presets at scale 1; scale multiplies it.
SCALE_BASE_N = 5000

_TYPES: dict[str, tuple] = {
    f.name: f.type for f in dataclasses.fields(ExperimentConfig)  # type: ignore[misc]
}


def _coerce(name: str, value: Any) -> Any:
    kind = _TYPES[name]
    path = name

    def num(v, integer: bool):
        if isinstance(v, bool):
            raise ConfigError(path, f"expected a number, got {v!r}")
        if integer:
            if isinstance(v, float) and v.is_integer():
                return int(v)
            if not isinstance(v, int):
                raise ConfigError(path, f"expected an integer, got {v!r}")
            return v
        if not isinstance(v, (int, float)):
            raise ConfigError(path, f"expected a number, got {v!r}")
        return float(v)

    if kind == "str":
        if not isinstance(value, str):
            raise ConfigError(path, f"expected a string, got {value!r}")
        return value
    if kind == "bool":
        if not isinstance(value, bool):
            raise ConfigError(path, f"expected true or false, got {value!r}")
        return value
    if kind == "int":
        return num(value, True)
    if kind == "float":
        return num(value, False)
    if kind == "int | None":
        return None if value is None else num(value, True)
    if kind.startswith("list["):
        if not isinstance(value, list):
            raise ConfigError(path, f"expected a list, got {value!r}")
        integer = kind == "list[int]"
        out = []
        for i, v in enumerate(value):
            try:
                out.append(num(v, integer))
            except ConfigError as e:
                raise ConfigError(f"{path}[{i}]", e.message) from None
        return out
    raise AssertionError(kind)


def _validate(cfg: ExperimentConfig) -> None:
    checks = [
        ("experiment", cfg.experiment in EXPERIMENTS, f"unknown experiment {cfg.experiment!r}"),
        ("n", cfg.n >= 2, "need at least 2 agents"),
        ("m", cfg.m >= 0, "must be non-negative"),
        ("k", cfg.k >= 0, "must be non-negative"),
        ("alpha", 0 < cfg.alpha < 1, "must lie in (0, 1)"),
        ("beta", 0 < cfg.beta <= 1, "must lie in (0, 1]"),
        ("delta", 0 < cfg.delta < 1, "must lie in (0, 1)"),
        ("rounds", cfg.rounds >= 0, "must be non-negative"),
        ("seeds", len(cfg.seeds) > 0, "need at least one seed"),
        ("stride", cfg.stride is None or cfg.stride >= 1, "must be >= 1"),
        ("workers", cfg.workers >= 1, "must be >= 1"),
        ("budget", cfg.budget > 0, "must be positive"),
        ("scale", cfg.scale > 0, "must be positive"),
        ("epsilon", cfg.epsilon >= 0, "must be non-negative"),
    ]
    for path, ok, msg in checks:
        if not ok:
            raise ConfigError(path, msg)
    for i, s in enumerate(cfg.seeds):
        if not 0 <= s < 2**64:
            raise ConfigError(f"seeds[{i}]", "seeds must be 64-bit non-negative integers")
    for i, d in enumerate(cfg.deltas):
        if not 0 < d < 1:
            raise ConfigError(f"deltas[{i}]", "must lie in (0, 1)")
    for i, v in enumerate(cfg.ns):
        if v < 2:
            raise ConfigError(f"ns[{i}]", "need at least 2 agents")
    money_for(cfg.n, cfg.m) if cfg.experiment not in ("entropy", "fig5") else None


def _apply(values: dict[str, Any], layer: dict[str, Any]) -> None:
    for key, v in layer.items():
        if key not in _TYPES:
            raise ConfigError(key, "unknown field")
        values[key] = _coerce(key, v)


def resolve(experiment: str | None, file_values: dict[str, Any] | None = None,
            overrides: dict[str, Any] | None = None) -> ExperimentConfig:
    file_values = dict(file_values or {})
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    exp = overrides.pop("experiment", None) or experiment or file_values.get("experiment")
    if exp is None:
        raise ConfigError("experiment", "no experiment given")
    if exp not in PRESETS:
        raise ConfigError("experiment", f"unknown experiment {exp!r}")
    file_exp = file_values.pop("experiment", exp)
    if file_exp != exp:
        raise ConfigError("experiment", f"config file is for {file_exp!r}, not {exp!r}")
    values: dict[str, Any] = {}
    _apply(values, PRESETS[exp])
    _apply(values, file_values)
    _apply(values, overrides)
    cfg = ExperimentConfig(experiment=exp, **values)
    _validate(cfg)
    return cfg


def load_file(path: str | Path) -> dict[str, Any]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError("config", f"cannot read {path}: {e.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError("config", f"{path} is not valid JSON: {e.msg} at line {e.lineno}") from None
    if not isinstance(data, dict):
        raise ConfigError("config", "top level must be an object")
    return data


def from_json(text: str) -> ExperimentConfig:
    data = json.loads(text)
    return resolve(data.get("experiment"), data)
