"""Engine configuration: file loading, validation, flag overrides."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Mapping

from .calibration import CalibrationMap, CalibrationParams, load_params
from .errors import DataError
from .search import SearchConfig
from .validation import ValidationConfig

__all__ = ["load_config", "build_search_config", "CONFIG_KEYS"]

CONFIG_KEYS = frozenset(
    {
        "lambda",
        "prune_epsilon",
        "max_automaton_layers",
        "invalid_frame_policy",
        "vc_mode",
        "presence_threshold",
        "calibration",
        "calibration_file",
        "calibration_overrides",
        "max_propositions",
        "max_formula_states",
    }
)


def load_config(path: str | Path) -> dict:
    """Read a JSON (or, on Python 3.11+, TOML) config file."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".toml":
        try:
            import tomllib
        except ImportError as exc:
            raise DataError(
                "TOML config files need Python 3.11+; use JSON instead"
            ) from exc
        try:
            obj = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise DataError(f"config {path}: {exc}") from exc
    else:
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DataError(f"config {path}: {exc}") from exc
    if not isinstance(obj, dict):
        raise DataError(f"config {path}: expected an object at top level")
    return obj


def _calibration_map(obj: Mapping[str, Any], base: Path | None) -> CalibrationMap:
    if "calibration" in obj and "calibration_file" in obj:
        raise DataError("config sets both 'calibration' and 'calibration_file'")
    if "calibration_file" in obj:
        ref = Path(obj["calibration_file"])
        if base is not None and not ref.is_absolute():
            ref = base / ref
        default = load_params(str(ref))
    elif "calibration" in obj:
        default = CalibrationParams.from_dict(obj["calibration"])
    else:
        default = CalibrationMap().default
    overrides = {
        prop: CalibrationParams.from_dict(params)
        for prop, params in obj.get("calibration_overrides", {}).items()
    }
    return CalibrationMap(default=default, overrides=overrides)


def build_search_config(
    obj: Mapping[str, Any] | None = None,
    base_dir: str | Path | None = None,
    **overrides: Any,
) -> SearchConfig:
    """Validate config keys and merge flag overrides (overrides win)."""
    merged: dict[str, Any] = dict(obj or {})
    unknown = set(merged) - CONFIG_KEYS
    if unknown:
        raise DataError(f"unknown config keys: {sorted(unknown)}")
    for key, value in overrides.items():
        if value is None:
            continue
        if key not in CONFIG_KEYS:
            raise DataError(f"unknown config override {key!r}")
        merged[key] = value
    base = Path(base_dir) if base_dir is not None else None
    try:
        return SearchConfig(
            lam=float(merged.get("lambda", 0.5)),
            prune_epsilon=float(merged.get("prune_epsilon", 1e-12)),
            max_automaton_layers=int(merged.get("max_automaton_layers", 4096)),
            invalid_frame_policy=str(merged.get("invalid_frame_policy", "skip")),
            calibration=_calibration_map(merged, base),
            validation=ValidationConfig(
                vc_mode=str(merged.get("vc_mode", "any")),
                presence_threshold=float(merged.get("presence_threshold", 0.5)),
            ),
            max_propositions=int(merged.get("max_propositions", 10)),
            max_formula_states=int(merged.get("max_formula_states", 4096)),
        )
    except (TypeError, ValueError) as exc:
        raise DataError(f"bad config value: {exc}") from exc
