# modules/config.py
"""
RUN CONFIGURATION
Built-in defaults, named presets, JSON config files and command-line
overrides, merged in that order of precedence
"""

from __future__ import annotations

import copy
import json
import logging
import numbers
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .errors import ConfigError
from .flat_model import FlatParams
from .numgrid import GridSpec
from .taubnut_model import TaubNutParams

logger = logging.getLogger(__name__)

PRESETS_PATH = Path(__file__).resolve().parent.parent / "data" / "predefined_models.json"

MODELS = ("flat", "taubnut")

TOLERANCES = {
    "algebra": 1e-10,
    "recurrence": 1e-8,
    "oracle": 1e-6,
    "branch_match": 1e-9,
    "dedup": 1e-9,
    "calibration": 1e-6,
    "convergence": 1e-7,
}

MODEL_PARAMS = {
    "flat": {"omega": 1.0, "Qcharge": 1.0},
    "taubnut": {"a": 0.5, "b": 1.0, "c1": 0.3, "d": 0.25, "c0": 2.0, "c4": 1.0, "r_max": 10.0},
}

BOX = {
    "n_max": 5,
    "l_max": None,  # flat: largest l; None means |Q| + 5
    "lambda_max": 4,
    "p_max": 3,
    "nu_pairs": [[0.0, 0.0], [1.0, 0.0], [1.0, 0.5], [2.0, 1.0]],
    "eps_values": [0.5, 1.0, 2.0],
    "m_values": None,  # flat unirreps: None means m = |Q| ... |Q| + 5
}

GRID = {
    "nodes": 400,
    "r_min": 0.05,
    "r_max_scale": 8.0,
    "theta_margin": 0.05,
    "oracle_intervals": 4000,
    "oracle_r_max_scale": 10.0,
}

TOP_LEVEL_KEYS = ("model", "params", "box", "grid", "tolerances", "jobs", "description")


@dataclass
class RunConfig:
    model: str = "flat"
    params: dict = field(default_factory=lambda: dict(MODEL_PARAMS["flat"]))
    box: dict = field(default_factory=lambda: copy.deepcopy(BOX))
    grid: dict = field(default_factory=lambda: dict(GRID))
    tolerances: dict = field(default_factory=lambda: dict(TOLERANCES))
    jobs: int = 1
    preset: str | None = None

    def flat_params(self) -> FlatParams:
        return FlatParams(omega=self.params["omega"], Qcharge=self.params["Qcharge"])

    def taubnut_params(self) -> TaubNutParams:
        p = self.params
        return TaubNutParams(a=p["a"], b=p["b"], c1=p["c1"], d=p["d"], c0=p["c0"], c4=p["c4"])

    def grid_spec(self) -> GridSpec:
        return GridSpec(convergence_tol=self.tolerances["convergence"], **self.grid)

    def flat_l_max(self) -> float:
        if self.box["l_max"] is not None:
            return float(self.box["l_max"])
        return abs(self.params["Qcharge"]) + 5

    def as_dict(self) -> dict:
        """Config echo for reports; key order is fixed so reports are byte-stable."""
        return {
            "model": self.model,
            "preset": self.preset,
            "params": dict(sorted(self.params.items())),
            "box": dict(sorted(self.box.items())),
            "grid": dict(sorted(self.grid.items())),
            "tolerances": dict(sorted(self.tolerances.items())),
        }


def _is_number(value) -> bool:
    return isinstance(value, numbers.Real) and not isinstance(value, bool)


def _require_number(value, path: str, positive: bool = False, nonnegative: bool = False) -> float:
    if not _is_number(value):
        raise ConfigError(path, f"expected a number, got {value!r}")
    if positive and not value > 0:
        raise ConfigError(path, f"must be > 0, got {value!r}")
    if nonnegative and value < 0:
        raise ConfigError(path, f"must be >= 0, got {value!r}")
    return float(value)


def _require_int(value, path: str, minimum: int = 0) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ConfigError(path, f"expected an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(path, f"must be >= {minimum}, got {value!r}")
    return int(value)


def _require_mapping(value, path: str) -> Mapping:
    if not isinstance(value, Mapping):
        raise ConfigError(path, f"expected an object, got {type(value).__name__}")
    return value


def load_presets(path: Path = PRESETS_PATH) -> dict:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def read_config_file(path) -> dict:
    """Parse a JSON config file; syntax errors carry line and column."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config file: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), exc.msg, line=exc.lineno, column=exc.colno) from exc
    return dict(_require_mapping(data, str(path)))


def _apply_layer(cfg: RunConfig, layer: Mapping[str, Any], origin: str) -> None:
    for key in layer:
        if key not in TOP_LEVEL_KEYS:
            raise ConfigError(key, f"unknown key (from {origin}); expected one of {TOP_LEVEL_KEYS}")

    if layer.get("model") is not None:
        model = layer["model"]
        if model not in MODELS:
            raise ConfigError("model", f"expected one of {MODELS}, got {model!r}")
        if model != cfg.model:
            cfg.params = dict(MODEL_PARAMS[model])
        cfg.model = model

    for key, value in _require_mapping(layer.get("params", {}), "params").items():
        if key not in MODEL_PARAMS[cfg.model]:
            raise ConfigError(f"params.{key}", f"not a {cfg.model} parameter; expected one of "
                                               f"{sorted(MODEL_PARAMS[cfg.model])}")
        cfg.params[key] = _require_number(value, f"params.{key}")

    for key, value in _require_mapping(layer.get("box", {}), "box").items():
        path = f"box.{key}"
        if key in ("n_max", "lambda_max", "p_max"):
            cfg.box[key] = _require_int(value, path)
        elif key == "l_max":
            cfg.box[key] = None if value is None else _require_number(value, path, nonnegative=True)
        elif key == "nu_pairs":
            if not isinstance(value, list):
                raise ConfigError(path, "expected a list of [nu1, nu2] pairs")
            pairs = []
            for i, pair in enumerate(value):
                if not isinstance(pair, list) or len(pair) != 2:
                    raise ConfigError(f"{path}[{i}]", "expected a [nu1, nu2] pair")
                pairs.append([_require_number(pair[0], f"{path}[{i}][0]"), _require_number(pair[1], f"{path}[{i}][1]")])
            cfg.box[key] = pairs
        elif key == "eps_values":
            if not isinstance(value, list):
                raise ConfigError(path, "expected a list of positive numbers")
            cfg.box[key] = [_require_number(v, f"{path}[{i}]", positive=True) for i, v in enumerate(value)]
        elif key == "m_values":
            if value is None:
                cfg.box[key] = None
            elif not isinstance(value, list):
                raise ConfigError(path, "expected a list of numbers or null")
            else:
                cfg.box[key] = [_require_number(v, f"{path}[{i}]") for i, v in enumerate(value)]
        else:
            raise ConfigError(path, f"unknown key; expected one of {sorted(BOX)}")

    for key, value in _require_mapping(layer.get("grid", {}), "grid").items():
        path = f"grid.{key}"
        if key in ("nodes", "oracle_intervals"):
            cfg.grid[key] = _require_int(value, path, minimum=3)
        elif key in GRID:
            cfg.grid[key] = _require_number(value, path, positive=True)
        else:
            raise ConfigError(path, f"unknown key; expected one of {sorted(GRID)}")

    for key, value in _require_mapping(layer.get("tolerances", {}), "tolerances").items():
        if key not in TOLERANCES:
            raise ConfigError(f"tolerances.{key}", f"unknown tolerance; expected one of {sorted(TOLERANCES)}")
        cfg.tolerances[key] = _require_number(value, f"tolerances.{key}", positive=True)

    if layer.get("jobs") is not None:
        cfg.jobs = _require_int(layer["jobs"], "jobs", minimum=1)


def build_config(preset: str | None = None, config_path=None, overrides: Mapping[str, Any] | None = None,
                 presets_path: Path = PRESETS_PATH) -> RunConfig:
    """defaults -> preset -> config file -> command-line overrides."""
    cfg = RunConfig()
    if preset is not None:
        presets = load_presets(presets_path)
        if preset not in presets:
            raise ConfigError("preset", f"unknown preset {preset!r}; available: {sorted(presets)}")
        _apply_layer(cfg, presets[preset], f"preset {preset}")
        cfg.preset = preset
    if config_path is not None:
        _apply_layer(cfg, read_config_file(config_path), str(config_path))
    if overrides:
        _apply_layer(cfg, overrides, "command line")

    try:
        if cfg.model == "flat":
            cfg.flat_params()
        else:
            cfg.taubnut_params().check_window(cfg.params["r_max"])
    except ValueError as exc:
        raise ConfigError("params", str(exc)) from exc
    try:
        cfg.grid_spec()
    except ValueError as exc:
        raise ConfigError("grid", str(exc)) from exc

    logger.debug("resolved config: %s", cfg.as_dict())
    return cfg
