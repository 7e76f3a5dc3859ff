"""Run configuration: config/config.yaml defaults, an optional --config file, then CLI flags."""

from dataclasses import dataclass
from pathlib import Path

import yaml

from indoor_behaviour_ai.analysis.behaviour_report import AnalysisConfig
from indoor_behaviour_ai.errors import ConfigError
from indoor_behaviour_ai.kmm.weights import KmmConfig
from indoor_behaviour_ai.model.training import TrainConfig
from indoor_behaviour_ai.simulate.types import Persona, SimConfig
from indoor_behaviour_ai.transform.windowing import WindowSpec

# Project root: 3 levels up from this file (indoor_behaviour_ai -> src -> root)
PROJECT_ROOT = Path(__file__).resolve().parents[2]
DEFAULT_CONFIG = PROJECT_ROOT / "config" / "config.yaml"


def deep_merge(base: dict, override: dict) -> dict:
    """Recursively merge `override` into a copy of `base`; non-dict values replace."""
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def _read_yaml(path: Path) -> dict:
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        raise ConfigError(f"cannot parse {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must hold a mapping at the top level")
    return data


def load_config(config_path: Path | None = None) -> dict:
    """Defaults from config/config.yaml, deep-merged with `config_path` (YAML or JSON) when given."""
    config = _read_yaml(DEFAULT_CONFIG) if DEFAULT_CONFIG.exists() else {}
    if config_path is not None:
        config = deep_merge(config, _read_yaml(Path(config_path)))
    return config


def resolve_path(value: str | Path) -> Path:
    """Absolute paths as given; relative ones against the working directory, else the project root."""
    path = Path(value)
    if path.is_absolute() or path.exists():
        return path
    candidate = PROJECT_ROOT / path
    return candidate if candidate.exists() else path


@dataclass(frozen=True)
class RunConfig:
    seed: int
    layout_path: Path
    output_dir: Path
    simulation: SimConfig
    free_living_days: int
    horizon_hours: float | None
    residents: tuple[Persona, ...]
    shadowing: bool
    shadow_lag_s: float
    window: WindowSpec
    kmm: KmmConfig
    training: TrainConfig
    analysis: AnalysisConfig
    drift_threshold_pct: float = 20.0

    @classmethod
    def from_dict(cls, raw: dict, seed: int | None = None, output_dir: Path | None = None) -> "RunConfig":
        """Validate the merged config; `seed` and `output_dir` are CLI overrides."""
        try:
            root_seed = int(seed if seed is not None else raw.get("seed", 0))
            paths = raw.get("paths", {})
            sim_raw = raw.get("simulation", {})
            shadowing = sim_raw.get("shadowing", {}) or {}
            residents = tuple(Persona(p) for p in sim_raw.get("residents", ["RESIDENT_A", "RESIDENT_B"]))
            days = int(sim_raw.get("free_living_days", 1))
            horizon = sim_raw.get("horizon_hours")
            config = cls(
                seed=root_seed,
                layout_path=resolve_path(paths.get("layout", "data/layouts/demo_house.json")),
                output_dir=Path(output_dir if output_dir is not None else paths.get("output", "output/")),
                simulation=SimConfig.from_dict(sim_raw, seed=root_seed),
                free_living_days=days,
                horizon_hours=float(horizon) if horizon is not None else None,
                residents=residents,
                shadowing=bool(shadowing.get("enabled", False)),
                shadow_lag_s=float(shadowing.get("lag_seconds", 20.0)),
                window=WindowSpec(**raw.get("windows", {})),
                kmm=KmmConfig(**{**raw.get("kmm", {}), "seed": root_seed}),
                training=TrainConfig.from_dict(raw.get("training", {}), seed=root_seed),
                analysis=AnalysisConfig.from_dict(raw.get("analysis", {})),
                drift_threshold_pct=float(raw.get("monitoring", {}).get("drift_threshold_pct", 20.0)),
            )
        except ConfigError:
            raise
        except (TypeError, ValueError, KeyError) as e:
            raise ConfigError(f"invalid configuration: {e}") from e

        if config.free_living_days < 1:
            raise ConfigError("simulation.free_living_days must be >= 1")
        if config.horizon_hours is not None and config.horizon_hours <= 0:
            raise ConfigError("simulation.horizon_hours must be > 0")
        if any(p is Persona.TECHNICIAN_WALKTHROUGH for p in config.residents):
            raise ConfigError("simulation.residents may only list resident personas")
        if config.shadow_lag_s < 0:
            raise ConfigError("simulation.shadowing.lag_seconds must be >= 0")
        return config
