"""Run configuration: one versioned defaults table, a flat TOML file, flag overrides."""
from __future__ import annotations

import copy
from dataclasses import asdict, dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import DomainError
from .mollifier import MOLLIFIERS

DEFAULTS = {
    "defaults_version": 1,
    "n": 1,
    "beta": 0.9,
    "delta": 0.5,
    "z_max": 128.0,
    "table_size": 2**17,
    "p_list": [1, 2, 4, 8],
    "seed": 0,
    "extent": 64.0,
    "grid_points": {1: 2**14, 2: 2**10},
    "l_max": 3,
    "max_order": 2,
    "out": "out",
    "mollifier": {
        "build-symbol": "diagonal-envelope",
        "check-class": "diagonal-envelope",
        "blowup": "fast-path-log",
        "crosscheck": "fast-path-log",
    },
}

CONFIG_KEYS = ("n", "beta", "delta", "mollifier", "p_list", "out", "seed", "grid_points",
               "extent", "z_max", "table_size", "l_max", "max_order")


@dataclass
class RunConfig:
    command: str
    n: int = DEFAULTS["n"]
    beta: float = DEFAULTS["beta"]
    delta: float = DEFAULTS["delta"]
    mollifier: str | None = None
    p_list: list[int] = field(default_factory=lambda: list(DEFAULTS["p_list"]))
    out: str = DEFAULTS["out"]
    seed: int = DEFAULTS["seed"]
    grid_points: int | None = None
    extent: float = DEFAULTS["extent"]
    z_max: float = DEFAULTS["z_max"]
    table_size: int = DEFAULTS["table_size"]
    l_max: int = DEFAULTS["l_max"]
    max_order: int = DEFAULTS["max_order"]

    def __post_init__(self):
        if self.mollifier is None:
            self.mollifier = DEFAULTS["mollifier"].get(self.command, "fast-path-log")
        if self.grid_points is None:
            self.grid_points = DEFAULTS["grid_points"].get(self.n, 2**8)
        self.validate()

    def validate(self) -> None:
        if self.n < 1:
            raise DomainError("n must be >= 1")
        if not 0 < self.beta < 1:
            raise DomainError("beta must lie in (0, 1)")
        if not 0 < self.delta < 1:
            raise DomainError("delta must lie in (0, 1)")
        if self.mollifier not in MOLLIFIERS:
            raise DomainError(f"unknown mollifier {self.mollifier!r}; choose from {sorted(MOLLIFIERS)}")
        if not self.p_list or any(p < 1 for p in self.p_list):
            raise DomainError("p_list must hold positive integers")
        if self.grid_points & (self.grid_points - 1) or self.grid_points < 4:
            raise DomainError("grid_points must be a power of two")
        if not 1 <= self.l_max <= 3:
            raise DomainError("l_max must be 1, 2 or 3 (deeper towers overflow)")
        if self.max_order not in (0, 1, 2):
            raise DomainError("max_order must be 0, 1 or 2")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["defaults"] = copy.deepcopy(DEFAULTS)
        d["defaults"]["grid_points"] = {str(k): v for k, v in DEFAULTS["grid_points"].items()}
        return d


def load_config_file(path) -> dict:
    """Read a flat TOML document; only the known keys are accepted."""
    data = tomllib.loads(Path(path).read_text())
    unknown = set(data) - set(CONFIG_KEYS)
    if unknown:
        raise DomainError(f"{path}: unknown config keys {sorted(unknown)}")
    return {k.replace("-", "_"): v for k, v in data.items()}


def build_run_config(command: str, file_values: dict | None = None,
                     overrides: dict | None = None) -> RunConfig:
    """Defaults < config file < flags (``None`` overrides are ignored)."""
    values = dict(file_values or {})
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return RunConfig(command=command, **values)
