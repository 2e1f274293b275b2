"""Acceptance criteria 1-9, each logged as one PASS/FAIL line in the pytest summary.

Run on its own with ``pytest tests/test_acceptance.py -v`` (add ``-s`` to see
the lines inline as well).
"""

import io
import math
import sys
import time
from decimal import Decimal, getcontext

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings

from plsim.assay import (
    Band,
    BenedictBands,
    ReactionVessel,
    Reagent,
    ReagentKind,
    canonical_color,
    decant_step,
    is_readable,
    react_step,
)
from plsim.calibration import Calibration
from plsim.cli import main as plsim_main
from plsim.faults import FaultProfile, random_fault_schedule
from plsim.hal import HBridgeChannel, MotorState, encoder_read, hbridge_set, motor_step, rpm
from plsim.mission import run_mission
from plsim.perception import TestKind, Verdict, capture, classify
from plsim.pulley_drill import (
    DrillCarriage,
    PulleyRig,
    drill_descend_step,
    drill_retract_step,
    height_from_encoder,
    pulley_step,
)
from plsim.rng import child_seeds, stream
from plsim.telemetry import EventKind, aggregate_report, decode_event, encode_event, read_stream, write_stream
from plsim.vacuum import ImpellerModel, impeller_delta_p
from plsim.world import World

from conftest import small_config
from strategies import events as telemetry_events

CAL = Calibration()
ZERO_NOISE = {"hue_sigma_deg": 0.0, "sat_sigma": 0.0, "val_sigma": 0.0}


# 1 -------------------------------------------------------------------------
def test_criterion_1_field_result_reproduction(criterion, tmp_path, capsys):
    with criterion(1, "urc10 seed 42 ends Complete with 2 protein / 10 carbohydrate positives in < 5 s") as c:
        out = tmp_path / "urc10.ndjson"
        start = time.perf_counter()
        code = plsim_main(["run", "--seed", "42", "--out", str(out)])
        wall = time.perf_counter() - start
        capsys.readouterr()
        with out.open() as fh:
            report = aggregate_report(read_stream(fh))
        c.detail = (f"exit {code}, {report.end_phase}, protein {report.protein_positive_count}, "
                    f"carb {report.carb_positive_count}, {wall:.2f} s")
        assert code == 0
        assert report.end_phase == "Complete"
        assert report.protein_positive_count == 2
        assert report.carb_positive_count == 10
        assert not report.integrity_mismatches
        assert wall < 5.0


# 2 -------------------------------------------------------------------------
def test_criterion_2_depth_cap(criterion):
    with criterion(2, "drill depth never exceeds 0.047752 m over 1,000 random descent schedules") as c:
        rng = stream(2, "acceptance")
        cap = 0.047752
        deepest, violations = 0.0, 0
        for _ in range(1000):
            carriage = DrillCarriage()
            ground = float(rng.uniform(0.0, 0.12))
            for _ in range(int(rng.integers(1, 12))):
                down = rng.random() < 0.7
                rate = float(rng.uniform(0.001, 0.05))
                dt = float(rng.choice([0.001, 0.01, 0.1, 1.0]))
                for _ in range(int(rng.integers(1, 200))):
                    if down:
                        drill_descend_step(carriage, rate, dt, ground)
                    else:
                        drill_retract_step(carriage, rate, dt)
                    deepest = max(deepest, carriage.depth_in_soil_m)
                    violations += carriage.depth_in_soil_m > cap
        c.detail = f"max depth {deepest:.9f} m, {violations} violations"
        assert violations == 0
        assert deepest <= cap


# 3 -------------------------------------------------------------------------
def hand_delta_p(rho, rpm_value, r):
    """0.5 * rho * omega^2 * r^2 evaluated in 40-digit decimal arithmetic."""
    getcontext().prec = 40
    pi = Decimal("3.141592653589793238462643383279502884197")
    omega = Decimal(rpm_value) * 2 * pi / 60
    return Decimal("0.5") * Decimal(rho) * omega * omega * Decimal(r) * Decimal(r)


def test_criterion_3_impeller_model(criterion):
    with criterion(3, "forced-vortex pressure: zero on axis, monotone in r, quadratic in omega, spot value") as c:
        model = ImpellerModel()
        speeds = [rpm(v) for v in (1000, 2500, 5000, 7500, 10000)]
        grid = np.linspace(0.0, model.outer_radius_m, 1000)
        assert all(impeller_delta_p(0.0, w, model) == 0.0 for w in speeds)
        for w in speeds:
            values = [impeller_delta_p(float(r), w, model) for r in grid]
            assert all(a < b for a, b in zip(values, values[1:]))
        worst = 0.0
        for w in speeds:
            for r in grid[1:]:
                base = impeller_delta_p(float(r), w, model)
                doubled = impeller_delta_p(float(r), 2 * w, model)
                worst = max(worst, abs(doubled - 4 * base) / (4 * base))
        assert worst <= 1e-12
        spot = impeller_delta_p(0.03, rpm(10000), model)
        expected = float(hand_delta_p("1.2", 10000, "0.03"))
        rel = abs(spot - expected) / expected
        c.detail = f"dp(0.03 m, 10000 rpm) = {spot:.6f} Pa, hand {expected:.6f} Pa, scaling err {worst:.1e}"
        assert rel <= 1e-9


# 4 -------------------------------------------------------------------------
def test_criterion_4_mass_conservation(criterion):
    with criterion(4, "mass balance within 1e-9 g on 100 randomized missions") as c:
        profile = FaultProfile()
        worst, outcomes = 0.0, {}
        for i, seed in enumerate(child_seeds(4, 100)):
            rng = stream(seed, "acceptance")
            cfg = small_config(1 + i % 2)
            cfg.sampling.excavation_target_g = float(rng.uniform(2.0, 8.0))
            cfg.vacuum.filter_efficiency = float(rng.uniform(0.8, 1.0))
            cfg.vacuum.transport_rate_gps = float(rng.uniform(0.5, 3.0))
            cfg.geometry.excavation_k_g_per_rev = float(rng.uniform(0.02, 0.1))
            schedule = random_fault_schedule(stream(seed, "faults"), profile) if i % 3 == 0 else None
            run = run_mission(cfg, World.from_scenario(seed, cfg.scenario), seed, fault_schedule=schedule)
            r = run.report
            worst = max(worst, abs(r.mass_balance_error_g))
            outcomes[r.end_phase] = outcomes.get(r.end_phase, 0) + 1
            assert r.excavated_g > 0 or r.end_phase == "Fault"
        c.detail = f"worst |imbalance| {worst:.2e} g, outcomes {outcomes}"
        assert worst <= 1e-9


# 5 -------------------------------------------------------------------------
# Written out independently of the sequencer's own successor table.
LEGAL_NEXT = {
    "Idle": {"Deploying"},
    "Deploying": {"Ranging"},
    "Ranging": {"DrillDescent"},
    "DrillDescent": {"Excavating"},
    "Excavating": {"DrillRetract"},
    "DrillRetract": {"Vacuuming"},
    "Vacuuming": {"Depositing"},
    "Depositing": {"Dispensing"},
    "Dispensing": {"Reacting"},
    "Reacting": {"Imaging"},
    "Imaging": {"BinRotating"},
    "BinRotating": {"Stowing"},
    "Stowing": {"SiteAdvance", "Complete"},
    "SiteAdvance": {"Deploying"},
    "Complete": set(),
    "Fault": set(),
}
DRIVES = ("pulley", "drill", "vacuum", "bin")


def trace_violations(events):
    """Re-check a recorded telemetry stream: phase edges and commanded drives."""
    problems = []
    phase = "Idle"
    commanded = dict.fromkeys(DRIVES, 0.0)
    for e in events:
        if e.kind is EventKind.PHASE_CHANGE:
            src, dst = e.payload["phase_from"], e.payload["phase_to"]
            if src != phase:
                problems.append(f"seq {e.seq}: transition from {src} while in {phase}")
            legal = dst in LEGAL_NEXT[src] or (dst == "Fault" and src not in ("Complete", "Fault"))
            if not legal:
                problems.append(f"seq {e.seq}: illegal {src} -> {dst}")
            phase = dst
        elif e.kind is EventKind.ACTUATOR_COMMAND:
            commanded = {k: e.payload[k] for k in DRIVES}
            if sum(v != 0 for v in commanded.values()) > 1:
                problems.append(f"seq {e.seq}: several drives commanded {commanded}")
    if phase not in ("Complete", "Fault"):
        problems.append(f"stream ends in {phase}")
    if any(commanded.values()):
        problems.append(f"terminal phase {phase} with drives {commanded}")
    return problems


@pytest.mark.slow
def test_criterion_5_sequential_motors(criterion):
    with criterion(5, "1,000 fault-injection missions: one drive motor at a time, safe terminals, legal edges") as c:
        profile = FaultProfile.load(_bundled("faults.json"))
        cfg = small_config(1)
        step_violations, terminal_violations, trace_problems = 0, 0, []
        outcomes = {}
        for seed in child_seeds(5, 1000):
            schedule = random_fault_schedule(stream(seed, "faults"), profile)
            live = [0]

            def observer(state, cmd, devices, live=live):
                energized = sum(ch.enable_duty != 0.0 and ch.direction != 0
                                for ch in devices.channels.values())
                commanded = cmd.active_drive_count()
                if energized > 1 or commanded > 1:
                    live[0] += 1

            run = run_mission(cfg, World.from_scenario(seed, cfg.scenario), seed,
                              fault_schedule=schedule, observer=observer)
            step_violations += live[0]
            if not run.devices.all_duties_zero():
                terminal_violations += 1
            buf = io.StringIO()
            write_stream(run.events, buf)
            buf.seek(0)
            trace_problems += trace_violations(read_stream(buf))
            label = run.report.fault_reason or run.report.end_phase
            outcomes[label] = outcomes.get(label, 0) + 1
        c.detail = (f"step violations {step_violations}, terminal {terminal_violations}, "
                    f"trace {len(trace_problems)}; outcomes {dict(sorted(outcomes.items()))}")
        assert step_violations == 0
        assert terminal_violations == 0
        assert trace_problems == []
        # the sweep must actually exercise the fault path
        assert sum(n for k, n in outcomes.items() if k != "Complete") > 0


def test_trace_oracle_flags_bad_streams():
    from plsim.telemetry import TelemetryEvent as E
    pc = EventKind.PHASE_CHANGE
    skip = [E(0, pc, {"phase_from": "Idle", "phase_to": "Ranging"}, 0)]
    assert any("illegal" in p for p in trace_violations(skip))
    cmd = {"pulley": 1.0, "drill": 1.0, "vacuum": 0.0, "bin": 0.0}
    two = [E(0, EventKind.ACTUATOR_COMMAND, cmd, 0),
           E(1, pc, {"phase_from": "Idle", "phase_to": "Fault"}, 1)]
    problems = trace_violations(two)
    assert any("several drives" in p for p in problems)
    assert any("terminal" in p for p in problems)
    assert trace_violations([E(0, pc, {"phase_from": "Idle", "phase_to": "Deploying"}, 0)]) == [
        "stream ends in Deploying"]


def _bundled(name):
    from importlib import resources
    return resources.files("plsim").joinpath("data").joinpath(name)


# 6 -------------------------------------------------------------------------
def developed(kind, protein=0.0, sugar=0.0, dt=0.01):
    """React and decant the way the mission does: at dt until the vessel is readable."""
    v = ReactionVessel(Reagent(kind), 3.0, protein, sugar, canonical_color("blue"))
    bands = BenedictBands()
    while not is_readable(v):
        react_step(v, bands, CAL.biuret_threshold_gpl, dt)
        decant_step(v, dt)
    return v


BENEDICT_BANDS = {
    Band.BLUE: (0.0, 0.5),
    Band.GREEN: (0.5, 2.5),
    Band.YELLOW: (2.5, 10.0),
    Band.BRICK_RED: (10.0, 30.0),
}


def test_criterion_6_classifier_fidelity(criterion):
    with criterion(6, "noise-free band round trip 100%; >= 99% correct at band centres under default noise") as c:
        rng = stream(6, "perception")
        wrong = 0
        total = 0
        for band, (lo, hi) in BENEDICT_BANDS.items():
            for i in range(1, 101):
                sugar = lo + (hi - lo) * i / 101
                v = developed(ReagentKind.BENEDICT, sugar=sugar, dt=0.5)
                r = classify(capture(v, 0, ZERO_NOISE, rng), TestKind.CARBOHYDRATE)
                total += 1
                wrong += r.band is not band
        for verdict, (lo, hi) in ((Verdict.NEGATIVE, (0.0, 10.0)), (Verdict.POSITIVE, (10.0, 30.0))):
            for i in range(1, 101):
                protein = lo + (hi - lo) * i / 101
                v = developed(ReagentKind.BIURET, protein=protein, dt=0.5)
                total += 1
                wrong += classify(capture(v, 0, ZERO_NOISE, rng), TestKind.PROTEIN).verdict is not verdict
        noise_free = 1 - wrong / total

        centres = [(ReagentKind.BENEDICT, TestKind.CARBOHYDRATE, 0.0, (lo + hi) / 2, band)
                   for band, (lo, hi) in BENEDICT_BANDS.items()]
        centres += [(ReagentKind.BIURET, TestKind.PROTEIN, 5.0, 0.0, Verdict.NEGATIVE),
                    (ReagentKind.BIURET, TestKind.PROTEIN, 20.0, 0.0, Verdict.POSITIVE)]
        rates = {}
        for reagent, test_kind, protein, sugar, expected in centres:
            v = developed(reagent, protein=protein, sugar=sugar)
            hits = 0
            for _ in range(10_000):
                r = classify(capture(v, 0, CAL.capture_noise, rng), test_kind)
                got = r.band if test_kind is TestKind.CARBOHYDRATE else r.verdict
                hits += got is expected
            rates[getattr(expected, "value", expected)] = hits / 10_000
        c.detail = (f"noise-free {noise_free:.0%} of {total}; noisy "
                    + ", ".join(f"{k} {v:.4f}" for k, v in rates.items()))
        assert wrong == 0
        assert min(rates.values()) >= 0.99


# 7 -------------------------------------------------------------------------
def test_criterion_7_sensitivity_ordering(criterion):
    with criterion(7, "Benedict reads Positive where Biuret at the same concentration reads Negative") as c:
        rng = stream(7, "perception")
        concentrations = np.geomspace(0.01, 40.0, 300)
        benedict_on, biuret_on, window = None, None, []
        for conc in concentrations:
            carb = classify(capture(developed(ReagentKind.BENEDICT, sugar=conc, dt=0.5), 0,
                                    ZERO_NOISE, rng), TestKind.CARBOHYDRATE).verdict
            prot = classify(capture(developed(ReagentKind.BIURET, protein=conc, dt=0.5), 0,
                                    ZERO_NOISE, rng), TestKind.PROTEIN).verdict
            if carb is Verdict.POSITIVE and benedict_on is None:
                benedict_on = conc
            if prot is Verdict.POSITIVE and biuret_on is None:
                biuret_on = conc
            if carb is Verdict.POSITIVE and prot is Verdict.NEGATIVE:
                window.append(conc)
        c.detail = (f"Benedict positive from {benedict_on:.3f} g/L, Biuret from {biuret_on:.3f} g/L, "
                    f"{len(window)} of {len(concentrations)} sweep points in between")
        assert window
        assert benedict_on < biuret_on
        assert CAL.benedict_bands_gpl["trace"] <= benedict_on
        assert CAL.biuret_threshold_gpl <= biuret_on


# 8 -------------------------------------------------------------------------
def test_criterion_8_encoder_consistency(criterion):
    with criterion(8, "encoder height estimate within one tick quantum over random pulley schedules") as c:
        rng = stream(8, "acceptance")
        cpr, radius, rail = CAL.encoder_cpr, 0.02, 0.30
        quantum = 2 * math.pi * radius / cpr
        worst, checked, violations = 0.0, 0, 0
        for _ in range(300):
            motor = MotorState.from_rpm(100, 0.25)
            rig = PulleyRig(motor, radius, rail, rail)
            ch = HBridgeChannel()
            clamped = False
            for _ in range(int(rng.integers(1, 10))):
                direction = int(rng.choice([-1, 0, 1, 1]))
                hbridge_set(ch, direction > 0, direction < 0, float(rng.uniform(0.1, 1.0)))
                for _ in range(int(rng.integers(1, 150))):
                    motor_step(motor, ch, 0.01)
                    pulley_step(rig, 0.01)
                    clamped = clamped or not 0.0 <= rail - motor.cumulative_angle_rad * radius <= rail
                    if clamped:
                        break
                    est = height_from_encoder(encoder_read(motor, cpr), cpr, radius, rail)
                    err = abs(est - rig.module_height_m)
                    worst = max(worst, err)
                    checked += 1
                    violations += err > quantum
                if clamped:
                    break
        c.detail = f"worst error {worst * 1e3:.4f} mm vs quantum {quantum * 1e3:.4f} mm over {checked} steps"
        assert checked > 10_000
        assert violations == 0


# 9 -------------------------------------------------------------------------
def test_criterion_9_telemetry(criterion):
    with criterion(9, "10,000-event encode/decode round trip; aggregation matches embedded reports") as c:
        seen = [0]
        failures = []

        @settings(max_examples=10_000, deadline=None, database=None,
                  suppress_health_check=list(HealthCheck))
        @given(telemetry_events)
        def round_trip(e):
            seen[0] += 1
            line = encode_event(e)
            if decode_event(line) != e or encode_event(decode_event(line)) != line:
                failures.append(e)

        round_trip()

        cfg = small_config(2)
        runs = [run_mission(cfg, World.from_scenario(s, cfg.scenario), s) for s in child_seeds(9, 5)]
        from plsim.config import load_config
        bundled = load_config()
        runs.append(run_mission(bundled, World.from_scenario(42, bundled.scenario), 42))
        mismatched = 0
        for run in runs:
            assert run.report.complete
            buf = io.StringIO()
            write_stream(run.events, buf)
            buf.seek(0)
            agg = aggregate_report(read_stream(buf))
            same = (agg.sites_visited, agg.protein_positive_count, agg.carb_positive_count,
                    agg.indeterminate_count) == (run.report.sites_visited,
                                                 run.report.protein_positive_count,
                                                 run.report.carb_positive_count,
                                                 run.report.indeterminate_count)
            mismatched += bool(agg.integrity_mismatches) or not same
        c.detail = (f"{seen[0]} events round-tripped, {len(failures)} failures; "
                    f"{len(runs) - mismatched}/{len(runs)} nominal streams agree")
        assert seen[0] >= 10_000
        assert not failures
        assert mismatched == 0


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
