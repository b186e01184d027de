"""Run configuration: tolerances, sample sizes and seeds as a flat JSON object."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .streams import default_seed


class ConfigError(ValueError):
    pass


@dataclass
class Config:
    seed: int = field(default_factory=default_seed)
    # tolerances
    width_tol: float = 1e-4
    width_spread_tol: float = 2e-4
    support_tol: float = 1e-9
    diameter_tol: float = 1e-9
    family_band: float = 1e-6
    m0_tol: float = 1e-6
    boundary_band: float = 1e-8
    unit_tol: float = 1e-9
    identity_tol: float = 1e-12
    shadow_band: float = 1e-4
    circle_tol: float = 1e-3
    volume_tol: float = 3e-3
    # sample sizes
    reflection_draws: int = 10_000
    width_directions: int = 1000
    diameter_starts: int = 1000
    case_budget: int = 100_000
    uniqueness_samples: int = 500
    spindle_instances: int = 20
    monotonicity_triples: int = 10_000
    shadow_grid: int = 100
    shadow_samples: int = 100_000
    volume_n: int = 10_000_000
    volume_n_4d: int = 1_000_000
    circle_resolution: int = 6
    threads: int = 1

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name.endswith("_tol") or f.name.endswith("_band"):
                if not isinstance(value, (int, float)) or not value > 0:
                    raise ConfigError(f"{f.name} must be a positive number, got {value!r}")
            elif f.type in ("int", int) and (not isinstance(value, int) or isinstance(value, bool)):
                raise ConfigError(f"{f.name} must be an integer, got {value!r}")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "Config":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        nested = [k for k, v in data.items() if isinstance(v, (dict, list))]
        if nested:
            raise ConfigError(f"config must be flat; nested values for {', '.join(nested)}")
        return cls(**data)


def load_config(path: str | Path | None, overrides: dict | None = None) -> tuple[Config, bool]:
    """Config from a file with ``overrides`` applied on top.

    Returns the config and whether every value is a default."""
    data: dict = {}
    if path is not None:
        text = Path(path).read_text()
        if text.strip():
            try:
                data = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"malformed config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    data = dict(data, **{k: v for k, v in (overrides or {}).items() if v is not None})
    return Config.from_dict(data), not data
