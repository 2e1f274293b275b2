"""Timed fault windows applied to the simulated devices."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema

from .errors import ConfigurationError
from .hal import DRIVE_MOTORS


class FaultKind(str, enum.Enum):
    ULTRASONIC_DROPOUT = "UltrasonicDropout"
    MOTOR_STALL = "MotorStall"
    FILTER_CLOG = "FilterClog"


FAULT_ENTRY_SCHEMA = {
    "type": "object",
    "required": ["time_s", "fault", "duration_s"],
    "properties": {
        "time_s": {"type": "number", "minimum": 0},
        "fault": {"enum": [k.value for k in FaultKind]},
        "actuator": {"type": "string"},
        "duration_s": {"type": "number", "exclusiveMinimum": 0},
    },
    "additionalProperties": False,
}

FAULT_PROFILE_SCHEMA = {
    "type": "object",
    "required": ["schema_version"],
    "properties": {
        "schema_version": {"const": 1},
        "max_faults": {"type": "integer", "minimum": 0},
        "time_range_s": {"type": "array", "items": {"type": "number", "minimum": 0},
                         "minItems": 2, "maxItems": 2},
        "duration_range_s": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0},
                             "minItems": 2, "maxItems": 2},
        "kinds": {"type": "array", "items": {"enum": [k.value for k in FaultKind]}, "minItems": 1},
        "actuators": {"type": "array", "items": {"enum": list(DRIVE_MOTORS)}, "minItems": 1},
    },
    "additionalProperties": False,
}


@dataclass(frozen=True)
class Fault:
    time_s: float
    kind: FaultKind
    duration_s: float
    actuator: str | None = None

    def __post_init__(self):
        if self.time_s < 0:
            raise ConfigurationError("fault time must be non-negative")
        if not self.duration_s > 0:
            raise ConfigurationError("fault duration must be positive")
        if self.kind is FaultKind.MOTOR_STALL and self.actuator not in DRIVE_MOTORS:
            raise ConfigurationError(
                f"unknown actuator {self.actuator!r}; expected one of {', '.join(DRIVE_MOTORS)}")

    def active(self, t: float) -> bool:
        return self.time_s <= t < self.time_s + self.duration_s

    def to_dict(self) -> dict:
        d = {"time_s": self.time_s, "fault": self.kind.value, "duration_s": self.duration_s}
        if self.actuator is not None:
            d["actuator"] = self.actuator
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "Fault":
        try:
            jsonschema.validate(data, FAULT_ENTRY_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise ConfigurationError(f"fault schedule: {exc.message}") from None
        return cls(float(data["time_s"]), FaultKind(data["fault"]), float(data["duration_s"]),
                   data.get("actuator"))


@dataclass
class FaultSchedule:
    faults: list[Fault] = field(default_factory=list)

    @classmethod
    def from_list(cls, entries: list[dict]) -> "FaultSchedule":
        return cls([Fault.from_dict(e) for e in entries])

    def to_list(self) -> list[dict]:
        return [f.to_dict() for f in self.faults]

    def __len__(self):
        return len(self.faults)


class FaultInjector:
    """Drives the fault flags of a device set from a schedule, one call per step."""

    def __init__(self, schedule: FaultSchedule):
        self.schedule = schedule
        self._active: frozenset[int] = frozenset()

    def apply(self, devices, t: float) -> list[tuple[Fault, bool]]:
        """Update device fault flags for time ``t``; returns (fault, started) edges."""
        if not self.schedule.faults:
            return []
        faults = self.schedule.faults
        # indices, so duplicate entries stay distinct
        active = frozenset(i for i, f in enumerate(faults) if f.active(t))
        if active == self._active:
            return []
        edges = [(faults[i], True) for i in sorted(active - self._active)]
        edges += [(faults[i], False) for i in sorted(self._active - active)]
        self._active = active
        kinds = {faults[i].kind for i in active}
        stalled = {faults[i].actuator for i in active if faults[i].kind is FaultKind.MOTOR_STALL}
        devices.ranger.dropout = FaultKind.ULTRASONIC_DROPOUT in kinds
        for name, motor in devices.motors.items():
            motor.stalled = name in stalled
            if motor.stalled:
                motor.speed_radps = 0.0
        clogged = FaultKind.FILTER_CLOG in kinds
        devices.container.clogged = clogged
        devices.container.filter_efficiency = 0.0 if clogged else devices.nominal_filter_efficiency
        return edges


def inject_faults(schedule: FaultSchedule, devices):
    """Attach ``schedule`` to ``devices``; the mission loop applies it every step."""
    for f in schedule.faults:
        if f.kind is FaultKind.MOTOR_STALL and f.actuator not in devices.motors:
            raise ConfigurationError(f"unknown actuator {f.actuator!r}")
    devices.faults = FaultInjector(schedule)
    return devices


@dataclass
class FaultProfile:
    """Distribution of random fault schedules for Monte Carlo runs."""

    max_faults: int = 3
    time_range_s: tuple[float, float] = (0.0, 200.0)
    duration_range_s: tuple[float, float] = (0.5, 150.0)
    kinds: tuple[FaultKind, ...] = tuple(FaultKind)
    actuators: tuple[str, ...] = DRIVE_MOTORS

    @classmethod
    def from_dict(cls, data: dict) -> "FaultProfile":
        try:
            jsonschema.validate(data, FAULT_PROFILE_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise ConfigurationError(f"fault profile: {exc.message}") from None
        profile = cls()
        if "max_faults" in data:
            profile.max_faults = data["max_faults"]
        for key in ("time_range_s", "duration_range_s"):
            if key in data:
                lo, hi = data[key]
                if lo > hi:
                    raise ConfigurationError(f"fault profile: {key} is not an interval")
                setattr(profile, key, (float(lo), float(hi)))
        if "kinds" in data:
            profile.kinds = tuple(FaultKind(k) for k in data["kinds"])
        if "actuators" in data:
            profile.actuators = tuple(data["actuators"])
        return profile

    @classmethod
    def load(cls, path: str | Path) -> "FaultProfile":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read fault profile {path}: {exc}") from None
        return cls.from_dict(data)


def random_fault_schedule(rng, profile: FaultProfile) -> FaultSchedule:
    faults = []
    for _ in range(int(rng.integers(0, profile.max_faults + 1))):
        kind = profile.kinds[int(rng.integers(len(profile.kinds)))]
        actuator = None
        if kind is FaultKind.MOTOR_STALL:
            actuator = profile.actuators[int(rng.integers(len(profile.actuators)))]
        faults.append(Fault(float(rng.uniform(*profile.time_range_s)), kind,
                            float(rng.uniform(*profile.duration_range_s)), actuator))
    return FaultSchedule(faults)
