"""Vertical deployment by rope spool and gear-rack drill descent/excavation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .hal import MotorState
from .world import SoilSite

INCH = 0.0254


@dataclass
class PulleyRig:
    """Module on its rail. Height 0 is fully lowered, ``rail_travel_m`` is stowed.

    Forward spool rotation pays out rope and lowers the module.
    """

    motor: MotorState
    spool_radius_m: float = 0.02
    rail_travel_m: float = 0.30
    module_height_m: float = 0.30
    _last_angle: float = field(default=None, repr=False)

    def __post_init__(self):
        if not 0.0 <= self.module_height_m <= self.rail_travel_m:
            raise ValueError("module height outside rail travel")
        if self._last_angle is None:
            self._last_angle = self.motor.cumulative_angle_rad


def pulley_step(rig: PulleyRig, dt: float) -> PulleyRig:
    """Apply the spool rotation since the last call to the module height.

    The motor itself is advanced by the caller; this consumes its angle delta.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    angle = rig.motor.cumulative_angle_rad
    delta = angle - rig._last_angle
    rig._last_angle = angle
    if delta:
        h = rig.module_height_m - delta * rig.spool_radius_m
        rig.module_height_m = min(max(h, 0.0), rig.rail_travel_m)
    return rig


def height_from_encoder(ticks: int, cpr: int, spool_radius_m: float, stow_height_m: float) -> float:
    """Raw (unclamped) module height implied by encoder ticks since stow."""
    if cpr <= 0:
        raise ValueError(f"cpr must be positive, got {cpr}")
    return stow_height_m - ticks / cpr * 2.0 * math.pi * spool_radius_m


@dataclass(frozen=True)
class DrillGeometry:
    bit_length_m: float = 3.5 * INCH
    shank_diameter_m: float = 0.25 * INCH
    max_depth_m: float = 1.88 * INCH
    # structural analysis results of the physical carriage; not modelled
    doc_deformation_um: float = 47.563
    doc_factor_of_safety: float = 15.0

    def __post_init__(self):
        if not 0.0 < self.max_depth_m < self.bit_length_m:
            raise ValueError("need 0 < max_depth_m < bit_length_m")


@dataclass
class DrillCarriage:
    """Bit tip position is measured downward from the module base plate."""

    geometry: DrillGeometry = field(default_factory=DrillGeometry)
    retracted_tip_m: float = 0.0
    bit_tip_position_m: float = None
    in_contact: bool = False
    depth_in_soil_m: float = 0.0
    # ground plane used by the last descent, from the ranging phase
    ground_m: float | None = None

    def __post_init__(self):
        if self.bit_tip_position_m is None:
            self.bit_tip_position_m = self.retracted_tip_m

    @property
    def fully_retracted(self) -> bool:
        return self.bit_tip_position_m <= self.retracted_tip_m


def drill_descend_step(c: DrillCarriage, servo_rate_mps: float, dt: float,
                       measured_ground_distance_m: float) -> DrillCarriage:
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    c.ground_m = measured_ground_distance_m
    floor = measured_ground_distance_m + c.geometry.max_depth_m
    c.bit_tip_position_m = min(c.bit_tip_position_m + servo_rate_mps * dt, floor)
    _update_contact(c)
    return c


def drill_retract_step(c: DrillCarriage, servo_rate_mps: float, dt: float) -> DrillCarriage:
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    c.bit_tip_position_m = max(c.bit_tip_position_m - servo_rate_mps * dt, c.retracted_tip_m)
    if c.fully_retracted:
        c.in_contact = False
        c.depth_in_soil_m = 0.0
    elif c.ground_m is not None:
        _update_contact(c)
    return c


def _update_contact(c: DrillCarriage) -> None:
    below = c.bit_tip_position_m - c.ground_m
    c.in_contact = below >= 0.0
    c.depth_in_soil_m = min(max(below, 0.0), c.geometry.max_depth_m)


def excavate_step(c: DrillCarriage, drill_motor: MotorState, site: SoilSite,
                  k_g_per_rev: float, dt: float) -> float:
    """Loosen soil around a spinning bit in contact with the ground; returns grams."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if k_g_per_rev < 0:
        raise ValueError("excavation constant must be non-negative")
    speed = abs(drill_motor.speed_radps)
    if not c.in_contact or speed == 0.0:
        return 0.0
    loosened = k_g_per_rev * speed * dt / (2.0 * math.pi) * (1.0 - site.hardness)
    site.loosened_pile_g += loosened
    return loosened
