"""Simulated chamber camera and nearest-hue assay classification."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .assay import (
    DEFAULT_CALIBRATION,
    Band,
    ColorHSV,
    ReactionVessel,
    hue_distance,
    is_readable,
    true_color,
    wrap_hue,
)
from .calibration import Calibration

TIE_TOLERANCE_DEG = 1e-9


class TestKind(str, enum.Enum):
    __test__ = False  # not a pytest class

    PROTEIN = "Protein"
    CARBOHYDRATE = "Carbohydrate"


class Verdict(str, enum.Enum):
    POSITIVE = "Positive"
    NEGATIVE = "Negative"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class ColorReading:
    observed: ColorHSV
    readable: bool
    chamber_id: int

    def __post_init__(self):
        if self.chamber_id not in (0, 1, 2):
            raise ValueError(f"chamber_id must be 0, 1 or 2, got {self.chamber_id}")


@dataclass(frozen=True)
class AssayResult:
    test_kind: TestKind
    verdict: Verdict
    band: Band | None
    hue_distance_deg: float | None
    site_id: int
    chamber_id: int | None = None
    observed: ColorHSV | None = None
    note: str = ""

    @property
    def positive(self) -> bool:
        return self.verdict is Verdict.POSITIVE


def _clamp01(x: float) -> float:
    return 0.0 if x < 0.0 else 1.0 if x > 1.0 else x


def capture(v: ReactionVessel, chamber_id: int, noise: dict, rng,
            table: Calibration = DEFAULT_CALIBRATION) -> ColorReading:
    """Photograph a beaker. ``noise`` holds hue_sigma_deg, sat_sigma and val_sigma."""
    c = true_color(v)
    dh, ds, dv = rng.normal(0.0, 1.0, 3)
    observed = ColorHSV(
        wrap_hue(c.hue_deg + float(dh) * noise.get("hue_sigma_deg", 0.0)),
        _clamp01(c.saturation + float(ds) * noise.get("sat_sigma", 0.0)),
        _clamp01(c.value + float(dv) * noise.get("val_sigma", 0.0)),
    )
    return ColorReading(observed, is_readable(v, table), chamber_id)


def palette(test_kind: TestKind, table: Calibration = DEFAULT_CALIBRATION):
    """(hue, verdict, band) entries the classifier chooses between."""
    hues = table.hues_deg
    if test_kind is TestKind.PROTEIN:
        return [
            (hues["blue"], Verdict.NEGATIVE, None),
            (hues["purple"], Verdict.POSITIVE, None),
        ]
    return [
        (hues["blue"], Verdict.NEGATIVE, Band.BLUE),
        (hues["green"], Verdict.POSITIVE, Band.GREEN),
        (hues["yellow"], Verdict.POSITIVE, Band.YELLOW),
        (hues["brick_red"], Verdict.POSITIVE, Band.BRICK_RED),
    ]


def classify(r: ColorReading, test_kind: TestKind, table: Calibration = DEFAULT_CALIBRATION,
             site_id: int = -1) -> AssayResult:
    if not r.readable:
        return AssayResult(test_kind, Verdict.INDETERMINATE, None, None, site_id,
                           r.chamber_id, r.observed, note="unreadable")
    ranked = sorted([(hue_distance(r.observed.hue_deg, h), verdict, band)
                     for h, verdict, band in palette(test_kind, table)],
                    key=lambda entry: entry[0])
    best, verdict, band = ranked[0]
    if best > table.acceptance_window_deg:
        return AssayResult(test_kind, Verdict.INDETERMINATE, None, best, site_id,
                           r.chamber_id, r.observed, note="outside acceptance window")
    if len(ranked) > 1 and ranked[1][0] - best <= TIE_TOLERANCE_DEG:
        return AssayResult(test_kind, Verdict.INDETERMINATE, None, best, site_id,
                           r.chamber_id, r.observed, note="tie")
    if test_kind is TestKind.PROTEIN:
        band = None
    return AssayResult(test_kind, verdict, band, best, site_id, r.chamber_id, r.observed)
