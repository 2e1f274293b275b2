"""Firmware-style mission sequencer and the plant loop that simulates the module around it.

Each tick the controller reads sensors, runs the control law of the current
phase and may transition; the plant then advances every device by ``dt``
under the issued commands. Drive motors (pulley, drill, vacuum, bin) are
operated one at a time; the rack servo runs on the logic supply and may move
while the drill spins.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field

from . import hal
from .assay import (
    BenedictBands,
    ReactionVessel,
    Reagent,
    ReagentKind,
    canonical_color,
    decant_step,
    is_readable,
    mix_sample,
    react_step,
    target_color,
)
from .calibration import Calibration
from .config import MissionConfig
from .errors import ConfigurationError
from .faults import FaultInjector, FaultSchedule, inject_faults
from .hal import (
    DRIVE_MOTORS,
    TIMEOUT,
    HBridgeChannel,
    MotorState,
    UltrasonicRanger,
    encoder_read,
    hbridge_set,
    motor_step,
    servo_command,
    ultrasonic_read,
)
from .perception import AssayResult, TestKind, Verdict, capture, classify
from .pulley_drill import (
    DrillCarriage,
    PulleyRig,
    drill_descend_step,
    drill_retract_step,
    excavate_step,
    height_from_encoder,
    pulley_step,
)
from .report import MissionReport, result_to_payload
from .rng import stream
from .telemetry import SCHEMA_VERSION, EventKind, Recorder
from .vacuum import (
    ImpellerModel,
    VacuumContainer,
    settle_to_bin,
    suction_active,
    transport_step,
)
from .world import SoilSample, World


class MissionPhase(str, enum.Enum):
    IDLE = "Idle"
    DEPLOYING = "Deploying"
    RANGING = "Ranging"
    DRILL_DESCENT = "DrillDescent"
    EXCAVATING = "Excavating"
    DRILL_RETRACT = "DrillRetract"
    VACUUMING = "Vacuuming"
    DEPOSITING = "Depositing"
    DISPENSING = "Dispensing"
    REACTING = "Reacting"
    IMAGING = "Imaging"
    BIN_ROTATING = "BinRotating"
    STOWING = "Stowing"
    SITE_ADVANCE = "SiteAdvance"
    COMPLETE = "Complete"
    FAULT = "Fault"


P = MissionPhase

NOMINAL_SUCCESSORS = {
    P.IDLE: {P.DEPLOYING},
    P.DEPLOYING: {P.RANGING},
    P.RANGING: {P.DRILL_DESCENT},
    P.DRILL_DESCENT: {P.EXCAVATING},
    P.EXCAVATING: {P.DRILL_RETRACT},
    P.DRILL_RETRACT: {P.VACUUMING},
    P.VACUUMING: {P.DEPOSITING},
    P.DEPOSITING: {P.DISPENSING},
    P.DISPENSING: {P.REACTING},
    P.REACTING: {P.IMAGING},
    P.IMAGING: {P.BIN_ROTATING},
    P.BIN_ROTATING: {P.STOWING},
    P.STOWING: {P.SITE_ADVANCE, P.COMPLETE},
    P.SITE_ADVANCE: {P.DEPLOYING},
    P.COMPLETE: set(),
    P.FAULT: set(),
}

TERMINAL = (P.COMPLETE, P.FAULT)

SITE_SEQUENCE = (
    P.DEPLOYING, P.RANGING, P.DRILL_DESCENT, P.EXCAVATING, P.DRILL_RETRACT, P.VACUUMING,
    P.DEPOSITING, P.DISPENSING, P.REACTING, P.IMAGING, P.BIN_ROTATING, P.STOWING,
)

ASSAYS = ((TestKind.PROTEIN, ReagentKind.BIURET), (TestKind.CARBOHYDRATE, ReagentKind.BENEDICT))

N_CHAMBERS = 3
BIN_INDEX_ANGLE_RAD = 2.0 * math.pi / N_CHAMBERS
SETTLED_RADPS = 1e-3


def is_legal_transition(src: MissionPhase, dst: MissionPhase) -> bool:
    if dst is P.FAULT:
        return src is not P.FAULT and src is not P.COMPLETE
    return dst in NOMINAL_SUCCESSORS[src]


def _spaced(name: str) -> str:
    return re.sub(r"(?<!^)(?=[A-Z])", " ", name).lower()


@dataclass
class ActuatorCommands:
    """Signed drive per motor in [-1, 1]; servo target as a rack fraction or None to hold."""

    pulley: float = 0.0
    drill: float = 0.0
    vacuum: float = 0.0
    bin: float = 0.0
    servo_target: float | None = None
    dispense: bool = False

    def drives(self) -> dict[str, float]:
        return {"pulley": self.pulley, "drill": self.drill, "vacuum": self.vacuum, "bin": self.bin}

    def active_drive_count(self) -> int:
        return (self.pulley != 0.0) + (self.drill != 0.0) + (self.vacuum != 0.0) + (self.bin != 0.0)

    def as_tuple(self):
        return (self.pulley, self.drill, self.vacuum, self.bin, self.servo_target, self.dispense)

    def payload(self) -> dict:
        d = self.drives()
        d["servo_pulse_ms"] = (servo_command(self.servo_target)
                               if self.servo_target is not None else None)
        d["dispense"] = self.dispense
        return d


IDLE_COMMANDS = ActuatorCommands()


@dataclass
class Chamber:
    index: int
    vessels: dict = field(default_factory=dict)  # TestKind -> ReactionVessel | None
    uses: int = 0
    reacting: bool = False


@dataclass
class Devices:
    motors: dict[str, MotorState]
    channels: dict[str, HBridgeChannel]
    ranger: UltrasonicRanger
    pulley: PulleyRig
    carriage: DrillCarriage
    impeller: ImpellerModel
    container: VacuumContainer
    chambers: list[Chamber]
    nominal_filter_efficiency: float
    faults: FaultInjector | None = None
    bin_channel_g: float = 0.0
    # mass ledger
    excavated_g: float = 0.0
    delivered_g: float = 0.0
    purged_g: float = 0.0

    @classmethod
    def build(cls, config: MissionConfig) -> "Devices":
        cal = config.calibration
        motors = {name: MotorState.from_rpm(cal.motors[name]["max_rpm"],
                                            cal.motors[name]["time_constant_s"])
                  for name in DRIVE_MOTORS}
        g, v = config.geometry, config.vacuum
        return cls(
            motors=motors,
            channels={name: HBridgeChannel() for name in DRIVE_MOTORS},
            ranger=UltrasonicRanger(**cal.ranger),
            pulley=PulleyRig(motors["pulley"], g.spool_radius_m, g.rail_travel_m, g.rail_travel_m),
            carriage=DrillCarriage(retracted_tip_m=g.retracted_tip_m),
            impeller=ImpellerModel(v.outer_radius_m, v.air_density_kgpm3, v.min_suction_delta_p_pa),
            container=VacuumContainer(filter_efficiency=v.filter_efficiency),
            chambers=[Chamber(i) for i in range(N_CHAMBERS)],
            nominal_filter_efficiency=v.filter_efficiency,
        )

    def all_duties_zero(self) -> bool:
        return all(ch.enable_duty == 0.0 or ch.direction == 0 for ch in self.channels.values())


@dataclass
class MissionState:
    phase: MissionPhase = P.IDLE
    site_index: int = 0
    chamber_index: int = 0
    phase_elapsed_s: float = 0.0
    t_s: float = 0.0
    measured_ground_m: float | None = None
    timeouts_s: dict = field(default_factory=dict)
    results: list[AssayResult] = field(default_factory=list)
    fault_reason: str | None = None
    start_requested: bool = False
    # controller internals
    range_samples: list = field(default_factory=list)
    pulley_ref_ticks: int = 0
    pulley_ref_height_m: float = 0.0
    last_pulley_ticks: int = 0
    bin_start_ticks: int = 0
    stop_latched: bool = False
    chamber_loaded: bool = False
    chamber_reuse_count: int = 0
    insufficient_count: int = 0


class Controller:
    """Holds the static parameters of the control law; ``step`` is ``controller_step``."""

    def __init__(self, config: MissionConfig, perception_rng=None, ranger_rng=None):
        self.config = config
        cal: Calibration = config.calibration
        self.cal = cal
        self.cpr = cal.encoder_cpr
        self.geometry = config.geometry
        self.sampling = config.sampling
        self.timeouts = config.timeouts_s
        self.perception_rng = perception_rng
        self.ranger_rng = ranger_rng
        self.bin_tau = cal.motors["bin"]["time_constant_s"]

    # sensors -------------------------------------------------------------
    def _pulley_height(self, state: MissionState, devices: Devices) -> tuple[int, float]:
        ticks = encoder_read(devices.motors["pulley"], self.cpr)
        h = height_from_encoder(ticks - state.pulley_ref_ticks, self.cpr,
                                self.geometry.spool_radius_m, state.pulley_ref_height_m)
        return ticks, h

    # transitions ---------------------------------------------------------
    def _enter(self, state: MissionState, devices: Devices, world: World, phase: MissionPhase,
               events: list, **extra) -> None:
        payload = {"phase_from": state.phase.value, "phase_to": phase.value,
                   "site_index": state.site_index, "chamber_index": state.chamber_index}
        payload.update(extra)
        events.append((EventKind.PHASE_CHANGE, payload))
        state.phase = phase
        state.phase_elapsed_s = 0.0
        state.stop_latched = False
        if phase is P.DEPLOYING:
            # module starts each site stowed at the top of the rail
            state.pulley_ref_ticks = encoder_read(devices.motors["pulley"], self.cpr)
            state.pulley_ref_height_m = self.geometry.rail_travel_m
        elif phase is P.STOWING:
            state.pulley_ref_ticks = encoder_read(devices.motors["pulley"], self.cpr)
            state.pulley_ref_height_m = 0.0
        elif phase is P.RANGING:
            state.range_samples = []
            state.last_pulley_ticks = encoder_read(devices.motors["pulley"], self.cpr)
        elif phase is P.BIN_ROTATING:
            state.bin_start_ticks = encoder_read(devices.motors["bin"], self.cpr)
        elif phase is P.DISPENSING:
            state.chamber_loaded = False

    def _fault(self, state, devices, world, reason: str, events: list) -> None:
        events.append((EventKind.FAULT, {"reason": reason, "phase": state.phase.value,
                                         "site_index": state.site_index}))
        self._enter(state, devices, world, P.FAULT, events, reason=reason)
        state.fault_reason = reason

    # control law ---------------------------------------------------------
    def step(self, state: MissionState, devices: Devices, world: World, dt: float):
        """One control tick: returns (state, commands, events).

        ``events`` are (EventKind, payload) pairs, stamped by the caller.
        """
        if not dt > 0:
            raise ValueError(f"dt must be positive, got {dt}")
        events: list = []
        phase = state.phase
        if phase is P.COMPLETE or phase is P.FAULT:
            return state, IDLE_COMMANDS, events
        timeout = self.timeouts.get(phase.value)
        if timeout is not None and phase is not P.IDLE and state.phase_elapsed_s > timeout:
            self._fault(state, devices, world, f"{_spaced(phase.value)} timeout", events)
            return state, IDLE_COMMANDS, events

        law = self._laws[phase]
        cmd = law(self, state, devices, world, events)
        if state.phase is phase:
            state.phase_elapsed_s += dt
        elif state.phase in TERMINAL:
            cmd = IDLE_COMMANDS
        return state, cmd, events

    def _idle(self, state, devices, world, events):
        if state.start_requested:
            self._enter(state, devices, world, P.DEPLOYING, events)
            return ActuatorCommands(pulley=self.geometry.pulley_duty)
        return IDLE_COMMANDS

    def _deploying(self, state, devices, world, events):
        ticks, h = self._pulley_height(state, devices)
        if h <= 0.0:
            events.append((EventKind.SENSOR_READING,
                           {"sensor": "pulley_encoder", "ticks": ticks, "height_est_m": h}))
            self._enter(state, devices, world, P.RANGING, events)
            return IDLE_COMMANDS
        return ActuatorCommands(pulley=self.geometry.pulley_duty)

    def _ranging(self, state, devices, world, events):
        ticks = encoder_read(devices.motors["pulley"], self.cpr)
        moving = ticks != state.last_pulley_ticks
        state.last_pulley_ticks = ticks
        if moving:
            return IDLE_COMMANDS
        site = world.sites[state.site_index]
        true_distance = site.surface_distance_m + devices.pulley.module_height_m
        reading = ultrasonic_read(devices.ranger, true_distance, self.ranger_rng)
        if reading is TIMEOUT:
            events.append((EventKind.SENSOR_READING, {"sensor": "ultrasonic", "timeout": True}))
            return IDLE_COMMANDS
        events.append((EventKind.SENSOR_READING,
                       {"sensor": "ultrasonic", "timeout": False, "distance_m": reading}))
        state.range_samples.append(reading)
        if len(state.range_samples) >= self.sampling.ranging_samples:
            state.measured_ground_m = math.fsum(state.range_samples) / len(state.range_samples)
            self._enter(state, devices, world, P.DRILL_DESCENT, events,
                        measured_ground_m=state.measured_ground_m)
            return ActuatorCommands(servo_target=1.0)
        return IDLE_COMMANDS

    def _drill_descent(self, state, devices, world, events):
        if devices.carriage.in_contact:
            self._enter(state, devices, world, P.EXCAVATING, events)
            return ActuatorCommands(drill=self.geometry.drill_duty, servo_target=1.0)
        return ActuatorCommands(servo_target=1.0)

    def _excavating(self, state, devices, world, events):
        pile = world.sites[state.site_index].loosened_pile_g
        if pile >= self.sampling.excavation_target_g:
            events.append((EventKind.SENSOR_READING, {"sensor": "pile", "mass_g": pile}))
            self._enter(state, devices, world, P.DRILL_RETRACT, events)
            return ActuatorCommands(servo_target=0.0)
        return ActuatorCommands(drill=self.geometry.drill_duty, servo_target=1.0)

    def _drill_retract(self, state, devices, world, events):
        if devices.carriage.fully_retracted:
            self._enter(state, devices, world, P.VACUUMING, events)
            return ActuatorCommands(vacuum=1.0)
        return ActuatorCommands(servo_target=0.0)

    def _vacuuming(self, state, devices, world, events):
        if world.sites[state.site_index].loosened_pile_g <= 0.0:
            self._enter(state, devices, world, P.DEPOSITING, events)
            return IDLE_COMMANDS
        return ActuatorCommands(vacuum=1.0)

    def _depositing(self, state, devices, world, events):
        omega = abs(devices.motors["vacuum"].speed_radps)
        if omega < self.config.vacuum.stop_omega_radps and devices.container.collected_mass_g == 0.0:
            events.append((EventKind.SENSOR_READING,
                           {"sensor": "bin_channel", "mass_g": devices.bin_channel_g}))
            self._enter(state, devices, world, P.DISPENSING, events)
        return IDLE_COMMANDS

    def _dispensing(self, state, devices, world, events):
        if state.chamber_loaded:
            self._enter(state, devices, world, P.REACTING, events)
            return IDLE_COMMANDS
        omega = abs(devices.motors["vacuum"].speed_radps)
        if suction_active(omega, devices.impeller):
            return IDLE_COMMANDS
        chamber = devices.chambers[state.chamber_index]
        if chamber.uses:
            if not self.config.allow_chamber_reuse:
                self._fault(state, devices, world, "no fresh chamber", events)
                return IDLE_COMMANDS
            state.chamber_reuse_count += 1
        state.chamber_loaded = True
        return ActuatorCommands(dispense=True)

    def _reacting(self, state, devices, world, events):
        chamber = devices.chambers[state.chamber_index]
        for v in chamber.vessels.values():
            if v is not None and not is_readable(v, self.cal):
                return IDLE_COMMANDS
        self._enter(state, devices, world, P.IMAGING, events)
        return IDLE_COMMANDS

    def _imaging(self, state, devices, world, events):
        chamber = devices.chambers[state.chamber_index]
        chamber.reacting = False
        site_id = world.sites[state.site_index].site_id
        for test_kind, _ in ASSAYS:
            v = chamber.vessels.get(test_kind)
            if v is None:
                result = AssayResult(test_kind, Verdict.INDETERMINATE, None, None, site_id,
                                     chamber.index, note="insufficient sample")
                state.insufficient_count += 1
            else:
                reading = capture(v, chamber.index, self.cal.capture_noise,
                                  self.perception_rng, self.cal)
                result = classify(reading, test_kind, self.cal, site_id)
            state.results.append(result)
            events.append((EventKind.ASSAY_RESULT, result_to_payload(result)))
        self._enter(state, devices, world, P.BIN_ROTATING, events)
        return ActuatorCommands(bin=self.geometry.bin_duty)

    def _bin_rotating(self, state, devices, world, events):
        motor = devices.motors["bin"]
        ticks = encoder_read(motor, self.cpr)
        advanced = (ticks - state.bin_start_ticks) * 2.0 * math.pi / self.cpr
        if not state.stop_latched:
            # a first-order motor coasts omega * tau further once released
            if advanced + abs(motor.speed_radps) * self.bin_tau >= BIN_INDEX_ANGLE_RAD:
                state.stop_latched = True
            else:
                return ActuatorCommands(bin=self.geometry.bin_duty)
        if abs(motor.speed_radps) < SETTLED_RADPS:
            state.chamber_index = (state.chamber_index + 1) % N_CHAMBERS
            events.append((EventKind.SENSOR_READING,
                           {"sensor": "bin_encoder", "ticks": ticks, "advanced_rad": advanced}))
            self._enter(state, devices, world, P.STOWING, events)
            return ActuatorCommands(pulley=-self.geometry.pulley_duty)
        return IDLE_COMMANDS

    def _stowing(self, state, devices, world, events):
        ticks, h = self._pulley_height(state, devices)
        if not state.stop_latched:
            if h >= self.geometry.rail_travel_m:
                state.stop_latched = True
                state.last_pulley_ticks = ticks
            return IDLE_COMMANDS if state.stop_latched else ActuatorCommands(
                pulley=-self.geometry.pulley_duty)
        moving = ticks != state.last_pulley_ticks
        state.last_pulley_ticks = ticks
        if moving:
            return IDLE_COMMANDS
        events.append((EventKind.SENSOR_READING,
                       {"sensor": "pulley_encoder", "ticks": ticks, "height_est_m": h}))
        if state.site_index + 1 < len(world.sites):
            self._enter(state, devices, world, P.SITE_ADVANCE, events)
        else:
            self._enter(state, devices, world, P.COMPLETE, events)
        return IDLE_COMMANDS

    def _site_advance(self, state, devices, world, events):
        state.site_index += 1
        world.current_site = state.site_index
        self._enter(state, devices, world, P.DEPLOYING, events)
        return ActuatorCommands(pulley=self.geometry.pulley_duty)

    _laws = {
        P.IDLE: _idle,
        P.DEPLOYING: _deploying,
        P.RANGING: _ranging,
        P.DRILL_DESCENT: _drill_descent,
        P.EXCAVATING: _excavating,
        P.DRILL_RETRACT: _drill_retract,
        P.VACUUMING: _vacuuming,
        P.DEPOSITING: _depositing,
        P.DISPENSING: _dispensing,
        P.REACTING: _reacting,
        P.IMAGING: _imaging,
        P.BIN_ROTATING: _bin_rotating,
        P.STOWING: _stowing,
        P.SITE_ADVANCE: _site_advance,
    }


def controller_step(state: MissionState, devices: Devices, world: World, dt: float,
                    controller: Controller):
    return controller.step(state, devices, world, dt)


def _dispense(devices: Devices, world: World, state: MissionState, config: MissionConfig) -> None:
    s = config.sampling
    cal = config.calibration
    site = world.sites[state.site_index]
    chamber = devices.chambers[state.chamber_index]
    chamber.vessels = {}
    for test_kind, reagent_kind in ASSAYS:
        portion = min(devices.bin_channel_g, s.portion_max_g)
        devices.bin_channel_g -= portion
        devices.delivered_g += portion
        if portion >= s.portion_min_g and portion > 0.0:
            reagent = Reagent(reagent_kind, s.reagent_volume_ml, canonical_color("blue", cal))
            sample = SoilSample(portion, site.protein_fraction, site.sugar_fraction)
            chamber.vessels[test_kind] = mix_sample(sample, reagent)
        else:
            chamber.vessels[test_kind] = None
    # leftover soil is flushed out of the channel before the next site
    devices.purged_g += devices.bin_channel_g
    devices.bin_channel_g = 0.0
    chamber.uses += 1
    chamber.reacting = True


class Plant:
    """Physical side of the loop: applies commands and advances every device by ``dt``."""

    def __init__(self, config: MissionConfig):
        self.config = config
        self.cal = config.calibration
        self.bands = BenedictBands.from_calibration(self.cal)
        self.biuret_threshold = self.cal.biuret_threshold_gpl
        g = config.geometry
        self.servo_rate = g.servo_rate_mps
        self.k = g.excavation_k_g_per_rev
        self.q = config.vacuum.transport_rate_gps
        self.stop_omega = config.vacuum.stop_omega_radps
        self._last_drive: dict = {}
        self._targets: dict = {}

    def step(self, devices: Devices, world: World, state: MissionState,
             cmd: ActuatorCommands, dt: float) -> None:
        motors, channels = devices.motors, devices.channels
        last = self._last_drive
        for name, drive in (("pulley", cmd.pulley), ("drill", cmd.drill),
                            ("vacuum", cmd.vacuum), ("bin", cmd.bin)):
            ch = channels[name]
            if last.get(name) != drive:
                hbridge_set(ch, drive > 0.0, drive < 0.0, abs(drive))
                last[name] = drive
            m = motors[name]
            if m.speed_radps != 0.0 or drive != 0.0:
                motor_step(m, ch, dt)
        pulley_step(devices.pulley, dt)

        carriage = devices.carriage
        if cmd.servo_target is not None:
            target = carriage.retracted_tip_m + cmd.servo_target * self.config.geometry.rack_travel_m
            if target > carriage.bit_tip_position_m and state.measured_ground_m is not None:
                drill_descend_step(carriage, self.servo_rate, dt, state.measured_ground_m)
            elif target < carriage.bit_tip_position_m:
                drill_retract_step(carriage, self.servo_rate, dt)

        site = world.sites[state.site_index]
        if carriage.in_contact and motors["drill"].speed_radps != 0.0:
            devices.excavated_g += excavate_step(carriage, motors["drill"], site, self.k, dt)

        omega = abs(motors["vacuum"].speed_radps)
        if omega != 0.0 and suction_active(omega, devices.impeller):
            transport_step(devices.container, site, True, self.q, dt)
        if devices.container.collected_mass_g > 0.0:
            devices.bin_channel_g += settle_to_bin(devices.container, omega, self.stop_omega)

        if cmd.dispense:
            _dispense(devices, world, state, self.config)

        chamber = devices.chambers[state.chamber_index]
        if chamber.reacting:
            targets = self._targets
            for v in chamber.vessels.values():
                if v is not None:
                    target = targets.get(id(v))
                    if target is None or target[0] is not v:
                        target = targets[id(v)] = (v, target_color(
                            v, self.bands, self.biuret_threshold, self.cal))
                    react_step(v, self.bands, self.biuret_threshold, dt, self.cal, target[1])
                    decant_step(v, dt, self.cal)


@dataclass
class MissionRun:
    report: MissionReport
    events: list
    state: MissionState
    devices: Devices


def run_mission(config: MissionConfig, world: World, seed: int,
                fault_schedule: FaultSchedule | None = None, observer=None,
                max_sim_time_s: float | None = None) -> MissionRun:
    """Step the controller and plant at fixed ``dt`` until Complete or Fault.

    ``observer(state, commands, devices)`` is called after every tick, which
    lets tests audit invariants step by step.
    """
    if not world.sites:
        raise ConfigurationError("world has no sites")
    config.validate()
    schedule = fault_schedule if fault_schedule is not None else config.fault_schedule
    devices = inject_faults(schedule, Devices.build(config))
    controller = Controller(config, perception_rng=stream(seed, "perception"),
                            ranger_rng=stream(seed, "ranger"))
    plant = Plant(config)
    recorder = Recorder()
    dt = config.dt_s
    world.current_site = 0
    state = MissionState(timeouts_s=dict(config.timeouts_s), start_requested=True)
    if max_sim_time_s is None:
        max_sim_time_s = len(world.sites) * sum(config.timeouts_s.values()) + 1.0

    recorder.emit(0.0, EventKind.HEADER, {
        "schema_version": SCHEMA_VERSION,
        "scenario": config.scenario.name or config.scenario_ref,
        "seed": seed,
        "world_seed": world.rng_seed,
        "n_sites": len(world.sites),
        "dt_s": dt,
        "faults": len(schedule),
    })
    last_cmd = None
    step_index = 0
    while state.phase not in TERMINAL:
        t = step_index * dt
        state.t_s = t
        if devices.faults is not None:
            for fault, started in devices.faults.apply(devices, t):
                payload = {"fault": fault.kind.value, "active": started}
                if fault.actuator is not None:
                    payload["actuator"] = fault.actuator
                recorder.emit(t, EventKind.FAULT, payload)
        events = []
        if t > max_sim_time_s:
            # backstop only; phase timeouts fire long before this
            controller._fault(state, devices, world, "mission time limit", events)
        _, cmd, step_events = controller.step(state, devices, world, dt)
        for kind, payload in events + step_events:
            recorder.emit(t, kind, payload)
        key = cmd.as_tuple()
        if key != last_cmd:
            recorder.emit(t, EventKind.ACTUATOR_COMMAND, cmd.payload())
            last_cmd = key
        plant.step(devices, world, state, cmd, dt)
        if observer is not None:
            observer(state, cmd, devices)
        step_index += 1

    report = MissionReport.from_results(
        state.results,
        total_sim_time_s=state.t_s,
        end_phase=state.phase.value,
        fault_reason=state.fault_reason,
        chamber_reuse_count=state.chamber_reuse_count,
        insufficient_count=state.insufficient_count,
        excavated_g=devices.excavated_g,
        delivered_g=devices.delivered_g,
        residual_g=(world.total_pile_g() + devices.container.collected_mass_g
                    + devices.container.airborne_mass_g + devices.bin_channel_g
                    + devices.purged_g),
        lost_g=devices.container.lost_mass_g,
    )
    recorder.emit(state.t_s, EventKind.REPORT, report.summary_payload())
    return MissionRun(report, recorder.events, state, devices)
