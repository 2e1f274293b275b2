"""Simulated electrical layer: H-bridge channels, DC motors, encoders, ranger, servo.

Wiring of the physical module, kept as documentation constants. The
ultrasonic ranger and servo run on 5 V logic from the microcontroller; the
four drive motors run on 12 V through two dual-channel H-bridges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

RPM_TO_RADPS = 2.0 * math.pi / 60.0

LOGIC_VOLTS = 5.0
DRIVE_VOLTS = 12.0
PIN_ULTRASONIC_ECHO = 2
PIN_ULTRASONIC_TRIG = 3
PIN_SERVO_PWM = 4

# actuator -> (H-bridge, channel)
HBRIDGE_WIRING = {
    "pulley": ("A", "A"),
    "drill": ("A", "B"),
    "vacuum": ("B", "A"),
    "bin": ("B", "B"),
}
DRIVE_MOTORS = tuple(HBRIDGE_WIRING)

# an undriven motor below this speed is treated as stopped
REST_SPEED_RADPS = 1e-9

SERVO_MIN_PULSE_MS = 1.0
SERVO_MAX_PULSE_MS = 2.0


def rpm(value: float) -> float:
    return value * RPM_TO_RADPS


@dataclass
class HBridgeChannel:
    in1: bool = False
    in2: bool = False
    enable_duty: float = 0.0

    @property
    def direction(self) -> int:
        """+1 forward, -1 reverse, 0 for brake or open."""
        if self.in1 and not self.in2:
            return 1
        if self.in2 and not self.in1:
            return -1
        return 0

    @property
    def drive(self) -> float:
        return self.direction * self.enable_duty


def hbridge_set(channel: HBridgeChannel, in1: bool, in2: bool, duty: float) -> HBridgeChannel:
    if not 0.0 <= duty <= 1.0:
        raise ValueError(f"duty must lie in [0, 1], got {duty}")
    channel.in1 = bool(in1)
    channel.in2 = bool(in2)
    channel.enable_duty = float(duty)
    return channel


@dataclass
class MotorState:
    """First-order DC motor: speed relaxes toward duty * max speed."""

    max_speed_radps: float
    time_constant_s: float
    supply_volts: float = DRIVE_VOLTS
    speed_radps: float = 0.0
    cumulative_angle_rad: float = 0.0
    stalled: bool = False

    @classmethod
    def from_rpm(cls, max_rpm: float, time_constant_s: float) -> "MotorState":
        return cls(max_speed_radps=rpm(max_rpm), time_constant_s=time_constant_s)


def motor_step(m: MotorState, ch: HBridgeChannel, dt: float) -> MotorState:
    """Advance ``m`` by ``dt`` under the drive of ``ch`` (exact exponential update)."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    old = m.speed_radps
    if m.stalled:
        new = 0.0
    else:
        target = ch.drive * m.max_speed_radps
        if old == target:
            new = target
        else:
            new = target + (old - target) * math.exp(-dt / m.time_constant_s)
            limit = m.max_speed_radps
            new = -limit if new < -limit else limit if new > limit else new
            if target == 0.0 and -REST_SPEED_RADPS < new < REST_SPEED_RADPS:
                new = 0.0
    m.speed_radps = new
    m.cumulative_angle_rad += 0.5 * (old + new) * dt
    return m


def encoder_read(m: MotorState, cpr: int) -> int:
    if cpr <= 0:
        raise ValueError(f"cpr must be positive, got {cpr}")
    # int() truncates toward zero
    return int(m.cumulative_angle_rad / (2.0 * math.pi) * cpr)


class Timeout:
    """No echo received. Compare with ``is TIMEOUT``."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "TIMEOUT"


TIMEOUT = Timeout()


@dataclass
class UltrasonicRanger:
    min_range_m: float = 0.02
    max_range_m: float = 4.0
    noise_sigma_m: float = 0.003
    dropout: bool = False

    def __post_init__(self):
        if not 0.0 < self.min_range_m < self.max_range_m:
            raise ValueError("ranger needs 0 < min_range_m < max_range_m")


def ultrasonic_read(r: UltrasonicRanger, true_distance_m: float, rng):
    """One ranging cycle: a distance in metres, or ``TIMEOUT``."""
    if true_distance_m < 0:
        raise ValueError("true distance must be non-negative")
    if r.dropout or not r.min_range_m <= true_distance_m <= r.max_range_m:
        return TIMEOUT
    reading = true_distance_m
    if r.noise_sigma_m > 0:
        reading += float(rng.normal(0.0, r.noise_sigma_m))
    return max(reading, r.min_range_m)


def servo_command(target_fraction: float) -> float:
    """Pulse width in milliseconds for a rack position fraction in [0, 1]."""
    if not 0.0 <= target_fraction <= 1.0:
        raise ValueError(f"servo target must lie in [0, 1], got {target_fraction}")
    return SERVO_MIN_PULSE_MS + target_fraction * (SERVO_MAX_PULSE_MS - SERVO_MIN_PULSE_MS)
