"""Mission configuration file: scenario and calibration references, timing, geometry, faults."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema

from .calibration import Calibration, load_calibration
from .errors import ConfigurationError
from .faults import FaultSchedule
from .world import ScenarioSpec, load_scenario

CONFIG_SCHEMA_VERSION = 1

DEFAULT_TIMEOUTS_S = {
    "Deploying": 60.0,
    "Ranging": 5.0,
    "DrillDescent": 30.0,
    "Excavating": 120.0,
    "DrillRetract": 30.0,
    "Vacuuming": 60.0,
    "Depositing": 30.0,
    "Dispensing": 30.0,
    "Reacting": 300.0,
    "Imaging": 30.0,
    "BinRotating": 30.0,
    "Stowing": 30.0,
    "SiteAdvance": 30.0,
}

_POS = {"type": "number", "exclusiveMinimum": 0}


def _block(props: dict) -> dict:
    return {"type": "object", "properties": props, "additionalProperties": False}


CONFIG_SCHEMA = {
    "type": "object",
    "required": ["schema_version"],
    "properties": {
        "schema_version": {"const": CONFIG_SCHEMA_VERSION},
        "scenario": {"type": "string"},
        "calibration": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "dt_s": _POS,
        "timeouts_s": {
            "type": "object",
            "properties": {k: _POS for k in DEFAULT_TIMEOUTS_S},
            "additionalProperties": False,
        },
        "fault_schedule": {"type": "array"},
        "geometry": _block({
            "spool_radius_m": _POS,
            "rail_travel_m": _POS,
            "servo_rate_mps": _POS,
            "rack_travel_m": _POS,
            "retracted_tip_m": {"type": "number"},
            "excavation_k_g_per_rev": {"type": "number", "minimum": 0},
            "drill_duty": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
            "pulley_duty": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
            "bin_duty": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        }),
        "vacuum": _block({
            "outer_radius_m": _POS,
            "air_density_kgpm3": _POS,
            "min_suction_delta_p_pa": {"type": "number", "minimum": 0},
            "transport_rate_gps": {"type": "number", "minimum": 0},
            "filter_efficiency": {"type": "number", "minimum": 0, "maximum": 1},
            "stop_omega_radps": _POS,
        }),
        "sampling": _block({
            "excavation_target_g": _POS,
            "portion_max_g": _POS,
            "portion_min_g": {"type": "number", "minimum": 0},
            "reagent_volume_ml": _POS,
            "ranging_samples": {"type": "integer", "minimum": 1},
        }),
        "allow_chamber_reuse": {"type": "boolean"},
    },
    "additionalProperties": False,
}


@dataclass
class Geometry:
    spool_radius_m: float = 0.02
    rail_travel_m: float = 0.30
    servo_rate_mps: float = 0.01
    rack_travel_m: float = 0.15
    retracted_tip_m: float = 0.0
    excavation_k_g_per_rev: float = 0.05
    drill_duty: float = 1.0
    pulley_duty: float = 1.0
    bin_duty: float = 1.0


@dataclass
class VacuumSettings:
    outer_radius_m: float = 0.04
    air_density_kgpm3: float = 1.2
    min_suction_delta_p_pa: float = 300.0
    transport_rate_gps: float = 1.0
    filter_efficiency: float = 0.99
    stop_omega_radps: float = 1.0


@dataclass
class Sampling:
    # two 3 g portions per site, one per assay
    excavation_target_g: float = 6.0
    portion_max_g: float = 3.0
    portion_min_g: float = 2.0
    reagent_volume_ml: float = 7.0
    ranging_samples: int = 5


@dataclass
class MissionConfig:
    scenario: ScenarioSpec
    calibration: Calibration = field(default_factory=Calibration)
    seed: int = 42
    dt_s: float = 0.01
    timeouts_s: dict = field(default_factory=lambda: dict(DEFAULT_TIMEOUTS_S))
    fault_schedule: FaultSchedule = field(default_factory=FaultSchedule)
    geometry: Geometry = field(default_factory=Geometry)
    vacuum: VacuumSettings = field(default_factory=VacuumSettings)
    sampling: Sampling = field(default_factory=Sampling)
    allow_chamber_reuse: bool = True
    scenario_ref: str = ""
    calibration_ref: str = "default"

    def validate(self) -> None:
        if not self.dt_s > 0:
            raise ConfigurationError("dt_s must be positive")
        s = self.sampling
        if s.portion_min_g > s.portion_max_g:
            raise ConfigurationError("portion_min_g exceeds portion_max_g")
        if not 0.0 <= self.vacuum.filter_efficiency <= 1.0:
            raise ConfigurationError("filter_efficiency must lie in [0, 1]")
        self.scenario.validate()
        self.calibration.validate()

    @classmethod
    def from_dict(cls, data: dict[str, Any], base_dir: Path | None = None) -> "MissionConfig":
        try:
            jsonschema.validate(data, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path)
            raise ConfigurationError(f"mission config {where}: {exc.message}") from None
        base_dir = base_dir or Path.cwd()
        scenario_ref = data.get("scenario", "urc10")
        calibration_ref = data.get("calibration", "default")
        cfg = cls(
            scenario=load_scenario(_resolve(scenario_ref, base_dir)),
            calibration=load_calibration(calibration_ref if calibration_ref == "default"
                                         else _resolve(calibration_ref, base_dir)),
            scenario_ref=scenario_ref,
            calibration_ref=calibration_ref,
        )
        cfg.seed = data.get("seed", cfg.seed)
        cfg.dt_s = data.get("dt_s", cfg.dt_s)
        cfg.timeouts_s.update(data.get("timeouts_s", {}))
        cfg.fault_schedule = FaultSchedule.from_list(data.get("fault_schedule", []))
        cfg.geometry = Geometry(**data.get("geometry", {}))
        cfg.vacuum = VacuumSettings(**data.get("vacuum", {}))
        cfg.sampling = Sampling(**data.get("sampling", {}))
        cfg.allow_chamber_reuse = data.get("allow_chamber_reuse", True)
        cfg.validate()
        return cfg


def _resolve(ref: str, base_dir: Path) -> Path:
    p = Path(ref)
    if p.suffix == "":
        # bare names such as "urc10" refer to bundled files
        return p
    return base_dir / p


def load_config(path: str | Path | None = None) -> MissionConfig:
    """Read a mission config; ``None`` gives the bundled urc10 mission."""
    if path is None:
        text = resources.files("plsim").joinpath("data").joinpath("mission.json").read_text()
        base_dir = None
    else:
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from None
        base_dir = path.parent
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"mission config: {exc}") from None
    return MissionConfig.from_dict(data, base_dir)
