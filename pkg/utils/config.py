import json
import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from core.constellation import SystemConfig, db_to_linear
from utils.constants import (ALPHA_GRID_POINTS, ATTACKER_MODES, CHANNEL_MODELS, DEFAULT_BETA_GRID,
                             DEFAULT_DELTA_LIST, DEFAULT_KEY_HEX, DEFAULT_SEED, DEFAULT_SIGMA2,
                             DEFAULT_TRIALS)

# Configure logging
logger = logging.getLogger('pla_tag_tool.config')

EMBEDDING_KINDS = ["uniform", "message_based", "optimized"]


class ConfigError(ValueError):
    """Raised for a malformed or invalid run configuration."""


def parse_grid(value: Any, name: str) -> List[float]:
    """
    Parse a numeric grid given as a list or as {"start", "stop", "num"}.

    Args:
        value: List of numbers or a {start, stop, num} mapping
        name: Field name used in error messages

    Returns:
        List of floats in the given order
    """
    if isinstance(value, dict):
        try:
            start, stop, num = float(value["start"]), float(value["stop"]), int(value["num"])
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"{name} needs numeric start, stop and num: {str(e)}")
        if num < 1:
            raise ConfigError(f"{name}.num must be positive, got {num}")
        return np.linspace(start, stop, num).tolist()
    if isinstance(value, (list, tuple)) and value:
        try:
            return [float(v) for v in value]
        except (TypeError, ValueError):
            raise ConfigError(f"{name} must contain numbers only")
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return [float(value)]
    raise ConfigError(f"{name} must be a non-empty list or a {{start, stop, num}} object")


def _require(data: Dict, key: str, kind: type) -> Any:
    if key not in data:
        raise ConfigError(f"Missing required field: {key}")
    value = data[key]
    if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
        raise ConfigError(f"{key} must be an integer, got {value!r}")
    if kind is float and (isinstance(value, bool) or not isinstance(value, (int, float))):
        raise ConfigError(f"{key} must be a number, got {value!r}")
    return value


def _optional_number(data: Dict, key: str, default: Optional[float]) -> Optional[float]:
    if key not in data or data[key] is None:
        return default
    return float(_require(data, key, float))


@dataclass
class RunConfig:
    """Validated run configuration: the base system plus experiment settings."""
    system: SystemConfig
    raw: Dict
    beta_grid: List[float] = field(default_factory=list)
    r_grid: List[float] = field(default_factory=list)
    gamma_m_db_list: List[float] = field(default_factory=list)
    delta: Optional[float] = None
    delta_list: List[float] = field(default_factory=list)
    gamma_tot_db_list: List[float] = field(default_factory=list)
    n_antennas_list: List[int] = field(default_factory=list)
    orders: List[Tuple[int, int]] = field(default_factory=list)
    embedding: Dict = field(default_factory=dict)
    trials: int = DEFAULT_TRIALS
    frames: int = DEFAULT_TRIALS
    seed: int = DEFAULT_SEED
    workers: int = 1
    channel_model: str = "antenna"
    key_hex: str = DEFAULT_KEY_HEX
    attacker: str = "both"
    monte_carlo: bool = False
    alpha_grid_points: int = ALPHA_GRID_POINTS

    @property
    def key(self) -> bytes:
        return bytes.fromhex(self.key_hex)

    def system_for(self, n_antennas: Optional[int] = None, msg_order: Optional[int] = None,
                   tag_order: Optional[int] = None, gamma_tot_db: Optional[float] = None) -> SystemConfig:
        """
        Copy of the base system with selected fields replaced.

        A new gamma_tot keeps the configured power split gamma_m / gamma_tot.
        """
        changes = {}
        if n_antennas is not None:
            changes["n_antennas"] = int(n_antennas)
        if msg_order is not None:
            changes["msg_order"] = int(msg_order)
        if tag_order is not None:
            changes["tag_order"] = int(tag_order)
        if gamma_tot_db is not None:
            gamma_tot = db_to_linear(gamma_tot_db)
            share = self.system.gamma_m / self.system.gamma_tot
            changes.update(gamma_tot=gamma_tot, gamma_m=share * gamma_tot)
        try:
            return replace(self.system, **changes)
        except ValueError as e:
            raise ConfigError(f"Invalid system parameters: {str(e)}")

    def with_overrides(self, seed: Optional[int] = None, trials: Optional[int] = None,
                       workers: Optional[int] = None) -> "RunConfig":
        """Apply command-line overrides."""
        changes = {}
        if seed is not None:
            changes["seed"] = int(seed)
        if trials is not None:
            if trials < 1:
                raise ConfigError(f"trials must be positive, got {trials}")
            changes.update(trials=int(trials), frames=int(trials))
        if workers is not None:
            changes["workers"] = max(1, int(workers))
        return replace(self, **changes)

    def snapshot(self) -> Dict:
        """Effective settings for the run manifest."""
        return {
            "config": self.raw,
            "system": self.system.to_dict(),
            "seed": self.seed,
            "trials": self.trials,
            "frames": self.frames,
            "workers": self.workers,
            "channel_model": self.channel_model,
        }


def _parse_system(data: Dict) -> SystemConfig:
    n_antennas = _require(data, "n_antennas", int)
    msg_order = _require(data, "msg_order", int)
    tag_order = _require(data, "tag_order", int)
    gamma_m_db = _optional_number(data, "gamma_m_db", None)
    gamma_tot_db = _optional_number(data, "gamma_tot_db", None)
    if gamma_m_db is None and gamma_tot_db is None:
        raise ConfigError("Config needs gamma_m_db or gamma_tot_db")
    gamma_m = db_to_linear(gamma_m_db if gamma_m_db is not None else gamma_tot_db)
    gamma_tot = db_to_linear(gamma_tot_db) if gamma_tot_db is not None else gamma_m

    try:
        return SystemConfig(
            n_antennas=n_antennas,
            msg_order=msg_order,
            tag_order=tag_order,
            gamma_m=gamma_m,
            gamma_tot=gamma_tot,
            sigma2=_optional_number(data, "sigma2", DEFAULT_SIGMA2),
            mac_len=int(data.get("mac_len", 32)),
            fa_budget=_optional_number(data, "fa_budget", 0.01),
        )
    except ValueError as e:
        raise ConfigError(f"Invalid system parameters: {str(e)}")


def _parse_embedding(value: Any) -> Dict:
    if value is None:
        return {}
    if not isinstance(value, dict) or value.get("kind") not in EMBEDDING_KINDS:
        raise ConfigError(f"embedding.kind must be one of {EMBEDDING_KINDS}")
    kind = value["kind"]
    required = {"uniform": "beta", "message_based": "r", "optimized": "delta"}[kind]
    if required not in value:
        raise ConfigError(f"embedding of kind {kind} needs field {required}")
    return dict(value)


def parse_config(data: Dict) -> RunConfig:
    """
    Validate a run configuration dictionary.

    Args:
        data: Decoded JSON object

    Returns:
        RunConfig with linear SNRs in the system and parsed grids

    Raises:
        ConfigError: On missing fields, wrong types or invalid values
    """
    try:
        return _parse_config(data)
    except ConfigError:
        raise
    except (TypeError, ValueError, KeyError) as e:
        raise ConfigError(f"Invalid config value: {str(e)}")


def _parse_config(data: Dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("Config must be a JSON object")
    system = _parse_system(data)

    run = RunConfig(system=system, raw=data)
    run.beta_grid = parse_grid(data.get("beta_grid", DEFAULT_BETA_GRID), "beta_grid")
    if "r_grid" in data:
        run.r_grid = parse_grid(data["r_grid"], "r_grid")
    for key in ("gamma_m_db_list", "gamma_tot_db_list"):
        if key in data:
            setattr(run, key, parse_grid(data[key], key))
    run.delta = _optional_number(data, "delta", None)
    run.delta_list = parse_grid(data["delta_list"], "delta_list") if "delta_list" in data else (
        [run.delta] if run.delta is not None else list(DEFAULT_DELTA_LIST)
    )
    if any(not 0 < d < 1 for d in run.delta_list):
        raise ConfigError(f"delta values must lie in (0, 1), got {run.delta_list}")
    if "n_antennas_list" in data:
        run.n_antennas_list = [int(n) for n in parse_grid(data["n_antennas_list"], "n_antennas_list")]
    if "orders" in data:
        try:
            run.orders = [(int(m), int(t)) for m, t in data["orders"]]
        except (TypeError, ValueError):
            raise ConfigError("orders must be a list of [L_m, L_t] pairs")
    run.embedding = _parse_embedding(data.get("embedding"))

    run.trials = int(data.get("trials", DEFAULT_TRIALS))
    run.frames = int(data.get("frames", run.trials))
    run.seed = int(data.get("seed", DEFAULT_SEED))
    run.workers = max(1, int(data.get("workers", 1)))
    run.alpha_grid_points = int(data.get("alpha_grid_points", ALPHA_GRID_POINTS))
    if run.trials < 1 or run.frames < 1 or run.alpha_grid_points < 1:
        raise ConfigError("trials, frames and alpha_grid_points must be positive")

    run.channel_model = data.get("channel_model", "antenna")
    if run.channel_model not in CHANNEL_MODELS:
        raise ConfigError(f"channel_model must be one of {CHANNEL_MODELS}")
    run.attacker = data.get("attacker", "both")
    if run.attacker not in ATTACKER_MODES + ["both"]:
        raise ConfigError(f"attacker must be one of {ATTACKER_MODES + ['both']}")
    run.key_hex = data.get("key_hex", DEFAULT_KEY_HEX)
    try:
        key = bytes.fromhex(run.key_hex)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"key_hex is not valid hex: {str(e)}")
    if not key:
        raise ConfigError("key_hex must not be empty")
    run.monte_carlo = bool(data.get("monte_carlo", False))

    logger.info(
        f"Config parsed: N={system.n_antennas}, L_m={system.msg_order}, L_t={system.tag_order}, "
        f"gamma_m={system.gamma_m:.4g}, gamma_tot={system.gamma_tot:.4g}"
    )
    return run


def config_from_snapshot(snapshot: Dict) -> Dict:
    """
    Rebuild the effective raw config of a run from its manifest snapshot.

    Command-line overrides recorded in the snapshot (seed, trial and frame
    counts, channel model) replace the values of the original file.
    """
    if not isinstance(snapshot, dict) or not isinstance(snapshot.get("config"), dict):
        raise ConfigError("Manifest does not contain a config snapshot")
    data = dict(snapshot["config"])
    for key in ("seed", "trials", "frames", "channel_model"):
        if key in snapshot:
            data[key] = snapshot[key]
    return data


def load_config(path: str) -> RunConfig:
    """
    Read and validate a JSON run configuration.

    A run manifest is accepted as well and reproduces the recorded run.

    Args:
        path: Path to the JSON file

    Returns:
        RunConfig

    Raises:
        ConfigError: If the file is missing, not JSON or invalid
    """
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except FileNotFoundError:
        raise ConfigError(f"Config file not found: {path}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"Config file is not valid JSON: {str(e)}")
    if isinstance(data, dict) and "tool_version" in data and "config" in data:
        logger.info(f"Replaying {data.get('command')} run from manifest {path}")
        data = config_from_snapshot(data["config"])
    return parse_config(data)
