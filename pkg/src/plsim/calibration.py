"""Calibration table shared by the device layer, the assay chemistry and the camera classifier."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema

from .errors import ConfigurationError

CALIBRATION_SCHEMA_VERSION = 1

_POS = {"type": "number", "exclusiveMinimum": 0}
_UNIT = {"type": "number", "minimum": 0, "maximum": 1}

CALIBRATION_SCHEMA = {
    "type": "object",
    "required": ["schema_version"],
    "properties": {
        "schema_version": {"const": CALIBRATION_SCHEMA_VERSION},
        "motors": {
            "type": "object",
            "additionalProperties": False,
            "patternProperties": {
                "^(pulley|drill|vacuum|bin)$": {
                    "type": "object",
                    "required": ["max_rpm", "time_constant_s"],
                    "properties": {"max_rpm": _POS, "time_constant_s": _POS},
                    "additionalProperties": False,
                }
            },
        },
        "ranger": {
            "type": "object",
            "properties": {
                "min_range_m": _POS,
                "max_range_m": _POS,
                "noise_sigma_m": {"type": "number", "minimum": 0},
            },
            "additionalProperties": False,
        },
        "encoder_cpr": {"type": "integer", "minimum": 1},
        "hues_deg": {
            "type": "object",
            "properties": {k: {"type": "number", "minimum": 0, "exclusiveMaximum": 360}
                           for k in ("blue", "green", "yellow", "brick_red", "purple")},
            "additionalProperties": False,
        },
        "saturation": _UNIT,
        "base_value": _UNIT,
        "deep_value_shift": {"type": "number", "minimum": -1, "maximum": 1},
        "benedict_bands_gpl": {
            "type": "object",
            "required": ["trace", "green_hi", "yellow_hi"],
            "properties": {"trace": _POS, "green_hi": _POS, "yellow_hi": _POS},
            "additionalProperties": False,
        },
        "biuret_threshold_gpl": _POS,
        "tau_react_s": _POS,
        "tau_decant_s": _POS,
        "readable_min_decant_s": {"type": "number", "minimum": 0},
        "readable_max_turbidity": _UNIT,
        "acceptance_window_deg": _POS,
        "capture_noise": {
            "type": "object",
            "properties": {
                "hue_sigma_deg": {"type": "number", "minimum": 0},
                "sat_sigma": {"type": "number", "minimum": 0},
                "val_sigma": {"type": "number", "minimum": 0},
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}


def _default_motors():
    return {
        "pulley": {"max_rpm": 100.0, "time_constant_s": 0.25},
        "drill": {"max_rpm": 600.0, "time_constant_s": 0.2},
        "vacuum": {"max_rpm": 10000.0, "time_constant_s": 0.15},
        "bin": {"max_rpm": 30.0, "time_constant_s": 0.25},
    }


@dataclass
class Calibration:
    motors: dict = field(default_factory=_default_motors)
    ranger: dict = field(default_factory=lambda: {
        "min_range_m": 0.02, "max_range_m": 4.0, "noise_sigma_m": 0.003})
    encoder_cpr: int = 600
    hues_deg: dict = field(default_factory=lambda: {
        "blue": 210.0, "green": 120.0, "yellow": 55.0, "brick_red": 15.0, "purple": 270.0})
    saturation: float = 0.8
    base_value: float = 0.8
    deep_value_shift: float = -0.2
    benedict_bands_gpl: dict = field(default_factory=lambda: {
        "trace": 0.5, "green_hi": 2.5, "yellow_hi": 10.0})
    biuret_threshold_gpl: float = 10.0
    tau_react_s: float = 30.0
    tau_decant_s: float = 60.0
    readable_min_decant_s: float = 120.0
    readable_max_turbidity: float = 0.2
    acceptance_window_deg: float = 20.0
    capture_noise: dict = field(default_factory=lambda: {
        "hue_sigma_deg": 4.0, "sat_sigma": 0.03, "val_sigma": 0.03})

    def validate(self) -> None:
        b = self.benedict_bands_gpl
        if not 0 < b["trace"] < b["green_hi"] < b["yellow_hi"]:
            raise ConfigurationError("Benedict bands need 0 < trace < green_hi < yellow_hi")
        r = self.ranger
        if not 0 < r["min_range_m"] < r["max_range_m"]:
            raise ConfigurationError("ranger needs 0 < min_range_m < max_range_m")
        if not 0 <= self.base_value + self.deep_value_shift <= 1:
            raise ConfigurationError("deep value shift leaves [0, 1]")

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Calibration":
        try:
            jsonschema.validate(data, CALIBRATION_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise ConfigurationError(f"calibration: {exc.message}") from None
        cal = cls()
        for key, value in data.items():
            if key == "schema_version":
                continue
            current = getattr(cal, key)
            if isinstance(current, dict):
                merged = dict(current)
                merged.update(value)
                value = merged
            setattr(cal, key, value)
        cal.validate()
        return cal

    def to_dict(self) -> dict[str, Any]:
        return {"schema_version": CALIBRATION_SCHEMA_VERSION, **asdict(self)}


def load_calibration(path: str | Path | None = None) -> Calibration:
    """Load a calibration file; ``None`` or ``"default"`` gives the bundled table."""
    if path is None or str(path) == "default":
        text = resources.files("plsim").joinpath("data").joinpath("calibration.json").read_text()
    else:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigurationError(f"cannot read calibration {path}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"calibration {path}: {exc}") from None
    return Calibration.from_dict(data)
