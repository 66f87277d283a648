"""
Run configuration: bundled preset, then YAML file, then command-line overrides.

Every level of the schema is strict. Unknown keys, wrong types and physics
invariants of the cycle parameters raise ConfigError with the dotted path of
the offending field.
"""

import os
import copy
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import yaml

from .atlas import DEFAULT_GRID, DEFAULT_LANDMARKS, SweepSpec, landmark_times
from .errors import ConfigError, DomainError
from .limit_cycle import DEFAULT_SAMPLES_PER_SEGMENT
from .working_medium import SEGMENT_ORDER, CycleParams

logger = logging.getLogger("otto.config")

PRESET_DIR = Path(__file__).resolve().parent.parent / "presets"
MODES = ("cycle", "sweep", "landmarks", "validate")
FORMATS = ("csv", "json")
VERBOSITY = ("debug", "info", "warning", "error")
FRACTION_RENORMALIZE_LIMIT = 1e-4

# Alternate names resolving to a bundled preset file.
PRESET_ALIASES = {"paper-family": "coupled-spin"}

PARAM_KEYS = ("j_coupling", "t_hot", "t_cold", "omega_hot", "omega_cold", "k_down_hot", "k_down_cold", "tau_cycle")

# Nested dicts are sections; leaves name their expected type.
SCHEMA: Dict[str, Any] = {
    "mode": str,
    "params": {**{key: float for key in PARAM_KEYS}, "fractions": {name: float for name in SEGMENT_ORDER}},
    "sweep": {
        "taus": list,
        "tau_min": float,
        "tau_max": float,
        "tau_count": int,
        "tau_spacing": str,
        "landmarks": list,
    },
    "output": {"path": str, "format": str},
    "samples_per_segment": int,
    "workers": int,
    "dephase": bool,
    "verbosity": str,
    "debug": {"flip_eeq_sign": bool},
}


@dataclass(frozen=True)
class RunConfig:
    mode: str
    params: CycleParams
    sweep: SweepSpec
    landmarks: Tuple[float, ...]
    output_path: Optional[str]
    output_format: str
    samples_per_segment: int
    workers: int
    dephase: bool
    verbosity: str
    flip_eeq_sign: bool = False


def load_preset(name: str) -> Dict[str, Any]:
    canonical = PRESET_ALIASES.get(name.replace("_", "-"), name)
    path = PRESET_DIR / f"{canonical.replace('-', '_')}.yaml"
    if not path.is_file():
        known = sorted([p.stem.replace("_", "-") for p in PRESET_DIR.glob("*.yaml")] + list(PRESET_ALIASES))
        raise ConfigError("preset", f"unknown preset {name!r}, available: {known}")
    return _read_yaml(str(path), "preset")


def _read_yaml(path: str, field_path: str) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except OSError as e:
        raise ConfigError(field_path, f"cannot read {path}: {e}") from e
    except yaml.YAMLError as e:
        raise ConfigError(field_path, f"invalid YAML in {path}: {e}") from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(field_path, f"top level of {path} must be a mapping")
    return data


def _merge(base: Dict[str, Any], update: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def _expand_dotted(overrides: Dict[str, Any]) -> Dict[str, Any]:
    nested: Dict[str, Any] = {}
    for dotted, value in overrides.items():
        if value is None:
            continue
        node = nested
        *parents, leaf = dotted.split(".")
        for part in parents:
            node = node.setdefault(part, {})
        node[leaf] = value
    return nested


def _check(data: Dict[str, Any], schema: Dict[str, Any], prefix: str = "") -> Dict[str, Any]:
    checked = {}
    for key, value in data.items():
        path = f"{prefix}{key}"
        if key not in schema:
            raise ConfigError(path, "unknown key")
        expected = schema[key]
        if isinstance(expected, dict):
            if not isinstance(value, dict):
                raise ConfigError(path, "expected a mapping")
            checked[key] = _check(value, expected, f"{path}.")
        elif expected is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(path, f"expected a number, got {value!r}")
            checked[key] = float(value)
        elif expected is int:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(path, f"expected an integer, got {value!r}")
            checked[key] = value
        elif not isinstance(value, expected):
            raise ConfigError(path, f"expected {expected.__name__}, got {value!r}")
        else:
            checked[key] = value
    return checked


def _fractions(section: Dict[str, float]) -> Tuple[float, ...]:
    missing = [name for name in SEGMENT_ORDER if name not in section]
    if missing:
        raise ConfigError(f"params.fractions.{missing[0]}", "required")
    values = tuple(section[name] for name in SEGMENT_ORDER)
    total = sum(values)
    if total <= 0 or abs(total - 1.0) > FRACTION_RENORMALIZE_LIMIT:
        raise ConfigError("params.fractions", f"fractions must sum to 1, got {total:.9f}")
    if total != 1.0:
        logger.info(f"renormalizing fractions that sum to {total:.9f}")
        values = tuple(v / total for v in values)
    return values


def _cycle_params(section: Dict[str, Any], mode: str) -> CycleParams:
    values = dict(section)
    if "tau_cycle" not in values and mode != "cycle":
        values["tau_cycle"] = 1.0
    for key in PARAM_KEYS:
        if key not in values:
            raise ConfigError(f"params.{key}", "required")
    fractions = _fractions(values.get("fractions", {}))
    try:
        return CycleParams(**{key: values[key] for key in PARAM_KEYS}, fractions=fractions)
    except DomainError as e:
        raise ConfigError("params", str(e)) from e


def _choice(value: str, allowed: Tuple[str, ...], path: str) -> str:
    if value not in allowed:
        raise ConfigError(path, f"expected one of {allowed}, got {value!r}")
    return value


def _positive_int(value: int, path: str) -> int:
    if value < 1:
        raise ConfigError(path, f"must be at least 1, got {value}")
    return value


def _landmarks(values: Any, params: CycleParams) -> Tuple[float, ...]:
    """Landmark orders must be numbers whose full turn exceeds the sudden-quench angle."""
    try:
        landmarks = tuple(float(l) for l in values)
        landmark_times(params, landmarks)
    except (DomainError, TypeError, ValueError) as e:
        raise ConfigError("sweep.landmarks", str(e)) from e
    return landmarks


def _sweep_spec(section: Dict[str, Any], params: CycleParams, samples: int, dephase: bool, flip: bool) -> SweepSpec:
    landmarks = _landmarks(section.get("landmarks", DEFAULT_LANDMARKS), params)
    try:
        options = dict(landmarks=landmarks, samples_per_segment=samples, dephase=dephase, flip_eeq_sign=flip)
        if "taus" in section:
            return SweepSpec(params, tuple(float(t) for t in section["taus"]), **options)
        tau_min, tau_max, count, spacing = DEFAULT_GRID
        return SweepSpec.from_range(
            params,
            section.get("tau_min", tau_min),
            section.get("tau_max", tau_max),
            _positive_int(section.get("tau_count", count), "sweep.tau_count"),
            _choice(section.get("tau_spacing", spacing), ("log", "linear"), "sweep.tau_spacing"),
            **options,
        )
    except (DomainError, TypeError, ValueError) as e:
        raise ConfigError("sweep", str(e)) from e


def parse_config(
    config_path: Optional[str] = None,
    overrides: Optional[Dict[str, Any]] = None,
    preset: Optional[str] = None,
) -> RunConfig:
    """
    Resolve a RunConfig from a preset name, a YAML file and dotted-key overrides
    such as {"params.tau_cycle": 0.5}. Later sources win.
    """
    data: Dict[str, Any] = {}
    if preset:
        data = _merge(data, _check(load_preset(preset), SCHEMA))
    if config_path:
        data = _merge(data, _check(_read_yaml(config_path, "config"), SCHEMA))
    if overrides:
        data = _merge(data, _check(_expand_dotted(overrides), SCHEMA))

    mode = _choice(data.get("mode", "cycle"), MODES, "mode")
    if "params" not in data:
        raise ConfigError("params", "required (use a preset or a config file)")
    params = _cycle_params(data["params"], mode)
    if not params.refrigerator_condition():
        logger.warning(
            f"Omega_c/Omega_h = {params.omega_inst_cold / params.omega_inst_hot:.4f} is not below "
            f"T_c/T_h = {params.t_cold / params.t_hot:.4f}: no population-only refrigeration"
        )

    samples = _positive_int(data.get("samples_per_segment", DEFAULT_SAMPLES_PER_SEGMENT), "samples_per_segment")
    workers = data.get("workers")
    if workers is None:
        env_workers = os.getenv("OTTO_WORKERS", "1")
        try:
            workers = int(env_workers)
        except ValueError as e:
            raise ConfigError("workers", f"OTTO_WORKERS must be an integer, got {env_workers!r}") from e
    workers = _positive_int(workers, "workers")
    dephase = data.get("dephase", False)
    flip = data.get("debug", {}).get("flip_eeq_sign", False)
    sweep = _sweep_spec(data.get("sweep", {}), params, samples, dephase, flip)
    output = data.get("output", {})

    return RunConfig(
        mode=mode,
        params=params,
        sweep=sweep,
        landmarks=sweep.landmarks,
        output_path=output.get("path"),
        output_format=_choice(output.get("format", "csv"), FORMATS, "output.format"),
        samples_per_segment=samples,
        workers=workers,
        dephase=dephase,
        verbosity=_choice(data.get("verbosity", "info"), VERBOSITY, "verbosity"),
        flip_eeq_sign=flip,
    )
